#include "nsact/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <ostream>
#include <sstream>

namespace nsact::harness {

using nlohmann::json;
namespace fs = std::filesystem;

std::string precision_name(Precision p) { return p == Precision::F32 ? "f32" : "f64"; }

Precision parse_precision(const std::string& name) {
  if (name == "f32") return Precision::F32;
  if (name == "f64") return Precision::F64;
  throw HarnessError("unknown precision '" + name + "' (expected f32 or f64)");
}

// ---------------------------------------------------------------------------
// Formula records

json to_json(const gp::GpConfig& c) {
  return {{"population_size", c.population_size},
          {"generations", c.generations},
          {"parsimony_coefficient", c.parsimony_coefficient},
          {"tournament_size", c.tournament_size},
          {"p_crossover", c.p_crossover},
          {"p_subtree_mutation", c.p_subtree_mutation},
          {"p_point_mutation", c.p_point_mutation},
          {"p_hoist_mutation", c.p_hoist_mutation},
          {"p_reproduction", c.p_reproduction()},
          {"init_min_depth", c.init_min_depth},
          {"init_max_depth", c.init_max_depth},
          {"subtree_mutation_depth", c.subtree_mutation_depth},
          {"max_depth", c.limits.max_depth},
          {"max_nodes", c.limits.max_nodes},
          {"seed", c.seed},
          {"function_set", {"add", "sub", "mul", "sin", "cos", "abs"}},
          {"fitness", "log-loss, probabilities clamped to [1e-7, 1 - 1e-7]"}};
}

gp::GpConfig gp_config_from_json(const json& j) {
  gp::GpConfig c;
  c.population_size = j.at("population_size").get<std::size_t>();
  c.generations = j.at("generations").get<std::size_t>();
  c.parsimony_coefficient = j.at("parsimony_coefficient").get<double>();
  c.tournament_size = j.at("tournament_size").get<std::size_t>();
  c.p_crossover = j.at("p_crossover").get<double>();
  c.p_subtree_mutation = j.at("p_subtree_mutation").get<double>();
  c.p_point_mutation = j.at("p_point_mutation").get<double>();
  c.p_hoist_mutation = j.at("p_hoist_mutation").get<double>();
  c.init_min_depth = j.at("init_min_depth").get<std::size_t>();
  c.init_max_depth = j.at("init_max_depth").get<std::size_t>();
  c.subtree_mutation_depth = j.at("subtree_mutation_depth").get<std::size_t>();
  c.limits.max_depth = j.at("max_depth").get<std::size_t>();
  c.limits.max_nodes = j.at("max_nodes").get<std::size_t>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json to_json(const FormulaRecord& r) {
  json history = json::array();
  for (const auto& g : r.history.generations) {
    history.push_back({{"generation", g.generation},
                       {"best_penalized", g.best_penalized},
                       {"best_raw", g.best_raw},
                       {"mean_raw", g.mean_raw},
                       {"best_nodes", g.best_nodes},
                       {"best_formula", g.best_formula}});
  }
  return {{"raw", r.raw},
          {"generalized", r.generalized},
          {"source", r.source},
          {"discovery_seed", r.discovery_seed},
          {"gp", r.gp ? to_json(*r.gp) : json(nullptr)},
          {"history", history},
          {"pair_collapsed", r.pair_collapsed}};
}

FormulaRecord formula_record_from_json(const json& j) {
  FormulaRecord r;
  r.raw = j.at("raw").get<std::string>();
  r.generalized = j.at("generalized").get<std::string>();
  r.source = j.value("source", "");
  r.discovery_seed = j.value("discovery_seed", static_cast<std::int64_t>(kDiscoverySeed));
  if (j.contains("gp") && !j.at("gp").is_null()) r.gp = gp_config_from_json(j.at("gp"));
  for (const auto& g : j.value("history", json::array())) {
    r.history.generations.push_back({g.at("generation").get<std::size_t>(), g.at("best_penalized").get<double>(),
                                     g.at("best_raw").get<double>(), g.at("mean_raw").get<double>(),
                                     g.at("best_nodes").get<std::size_t>(),
                                     g.at("best_formula").get<std::string>()});
  }
  r.pair_collapsed = j.value("pair_collapsed", false);
  return r;
}

fs::path sidecar_path(const fs::path& formula_file) { return fs::path(formula_file.string() + ".json"); }

void write_formula_file(const fs::path& path, const FormulaRecord& record) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw HarnessError("cannot write " + path.string());
    out << record.raw << '\n';
  }
  std::ofstream side(sidecar_path(path), std::ios::binary);
  if (!side) throw HarnessError("cannot write " + sidecar_path(path).string());
  side << to_json(record).dump(2) << '\n';
}

FormulaRecord read_formula_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw HarnessError("formula file not found: " + path.string());
  std::string line;
  std::getline(in, line);
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();

  FormulaRecord r;
  if (fs::exists(sidecar_path(path))) {
    std::ifstream side(sidecar_path(path));
    try {
      r = formula_record_from_json(json::parse(side));
    } catch (const json::exception& e) {
      throw HarnessError("bad formula metadata " + sidecar_path(path).string() + ": " + e.what());
    }
  } else {
    r.source = path.stem().string();
  }
  try {
    const expr::Formula raw = expr::parse_formula(line);
    const expr::Generalized g = expr::generalize_detailed(raw);
    r.raw = expr::print_formula(raw);
    r.generalized = expr::print_formula(g.activation);
    r.pair_collapsed = g.pair_collapsed;
  } catch (const expr::ParseError& e) {
    throw HarnessError("cannot parse formula in " + path.string() + " at offset " +
                       std::to_string(e.offset()) + ": " + e.what());
  } catch (const expr::ValidationError& e) {
    throw HarnessError("invalid formula in " + path.string() + ": " + e.what());
  }
  return r;
}

// ---------------------------------------------------------------------------
// Specs

ActivationSource ActivationSource::from_builtin(const std::string& name) {
  if (name != "relu" && name != "gelu" && name != "silu") {
    throw HarnessError("unknown activation '" + name + "' (expected relu, gelu, silu or formula:PATH)");
  }
  ActivationSource s;
  s.builtin = name;
  return s;
}

ActivationSource ActivationSource::specialist(const std::string& path) {
  ActivationSource s;
  s.kind = Kind::Specialist;
  s.builtin.clear();
  s.formula_path = path;
  return s;
}

ActivationSource ActivationSource::transfer(const std::string& path, const std::string& source_name) {
  ActivationSource s = specialist(path);
  s.kind = Kind::Transfer;
  s.source_name = source_name;
  return s;
}

std::string ActivationSource::label() const {
  switch (kind) {
    case Kind::Specialist: return "Hybrid (Specialist)";
    case Kind::Transfer: return "Hybrid (Transfer)";
    case Kind::Builtin: break;
  }
  if (builtin == "relu") return "ReLU";
  if (builtin == "gelu") return "GELU";
  if (builtin == "silu") return "SiLU";
  return builtin;
}

void ExperimentSpec::validate() const {
  if (dataset.path.empty()) throw HarnessError("no dataset path given");
  if (seeds.empty()) throw HarnessError("at least one seed is required");
  if (activation.kind != ActivationSource::Kind::Builtin) (void)resolve_activation(activation);
}

namespace {

const char* source_kind_name(ActivationSource::Kind k) {
  switch (k) {
    case ActivationSource::Kind::Specialist: return "specialist";
    case ActivationSource::Kind::Transfer: return "transfer";
    case ActivationSource::Kind::Builtin: break;
  }
  return "builtin";
}

ActivationSource::Kind parse_source_kind(const std::string& s) {
  if (s == "builtin") return ActivationSource::Kind::Builtin;
  if (s == "specialist") return ActivationSource::Kind::Specialist;
  if (s == "transfer") return ActivationSource::Kind::Transfer;
  throw HarnessError("unknown activation source kind '" + s + "'");
}

template <typename T>
json optional_json(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> optional_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

}  // namespace

json to_json(const ExperimentSpec& s) {
  return {{"dataset",
           {{"path", s.dataset.path},
            {"label", s.dataset.label},
            {"name", s.dataset.name},
            {"preparation", s.dataset.preparation}}},
          {"architecture", nn::arch_name(s.arch)},
          {"activation",
           {{"kind", source_kind_name(s.activation.kind)},
            {"builtin", s.activation.builtin},
            {"formula_path", s.activation.formula_path},
            {"source_name", s.activation.source_name},
            {"label", s.activation.label()}}},
          {"seeds", s.seeds},
          {"overrides",
           {{"epochs", optional_json(s.overrides.epochs)},
            {"batch_size", optional_json(s.overrides.batch_size)},
            {"learning_rate", optional_json(s.overrides.learning_rate)}}},
          {"precision", precision_name(s.precision)}};
}

ExperimentSpec experiment_spec_from_json(const json& j) {
  ExperimentSpec s;
  const json& d = j.at("dataset");
  s.dataset = {d.at("path").get<std::string>(), d.at("label").get<std::string>(), d.at("name").get<std::string>(),
               d.value("preparation", "")};
  s.arch = nn::parse_arch(j.at("architecture").get<std::string>());
  const json& a = j.at("activation");
  s.activation.kind = parse_source_kind(a.at("kind").get<std::string>());
  s.activation.builtin = a.at("builtin").get<std::string>();
  s.activation.formula_path = a.at("formula_path").get<std::string>();
  s.activation.source_name = a.at("source_name").get<std::string>();
  s.seeds = j.at("seeds").get<std::vector<std::int64_t>>();
  const json& o = j.at("overrides");
  s.overrides.epochs = optional_from<std::size_t>(o, "epochs");
  s.overrides.batch_size = optional_from<std::size_t>(o, "batch_size");
  s.overrides.learning_rate = optional_from<double>(o, "learning_rate");
  s.precision = parse_precision(j.at("precision").get<std::string>());
  return s;
}

nn::Activation resolve_activation(const ActivationSource& src) {
  if (src.kind == ActivationSource::Kind::Builtin) {
    try {
      return nn::Activation::builtin(src.builtin);
    } catch (const std::exception& e) {
      throw HarnessError(e.what());
    }
  }
  const FormulaRecord r = read_formula_file(src.formula_path);
  return nn::Activation::symbolic(expr::generalize(expr::parse_formula(r.raw)));
}

// ---------------------------------------------------------------------------
// Records

namespace {

json to_json(const metrics::Summary& s) { return {{"mean", s.mean}, {"std", s.std}}; }

metrics::Summary summary_from(const json& j) { return {j.at("mean").get<double>(), j.at("std").get<double>()}; }

json to_json(const metrics::EvalResult& e) {
  return {{"seed", e.seed}, {"accuracy", e.accuracy}, {"auc", e.auc}, {"params", e.params}, {"efficiency", e.efficiency}};
}

metrics::EvalResult eval_from(const json& j) {
  metrics::EvalResult e;
  e.seed = j.at("seed").get<std::int64_t>();
  e.accuracy = j.at("accuracy").get<double>();
  e.auc = j.at("auc").get<double>();
  e.params = j.at("params").get<std::size_t>();
  e.efficiency = j.at("efficiency").get<double>();
  return e;
}

}  // namespace

json to_json(const RunRecord& r) {
  json seeds = json::array();
  for (const auto& s : r.seeds) {
    seeds.push_back({{"result", to_json(s.result)},
                     {"test_rows_hash", s.test_rows_hash},
                     {"train_rows", s.train_rows},
                     {"test_rows", s.test_rows},
                     {"epoch_loss", s.epoch_loss}});
  }
  const auto& a = r.aggregate;
  return {{"schema_version", r.schema_version},
          {"library_version", r.library_version},
          {"spec", to_json(r.spec)},
          {"status", r.status},
          {"error", r.error},
          {"seeds", seeds},
          {"aggregate",
           {{"accuracy", to_json(a.accuracy)},
            {"auc", to_json(a.auc)},
            {"efficiency", to_json(a.efficiency)},
            {"params", a.params},
            {"n_seeds", a.n_seeds}}},
          {"wall_seconds", r.wall_seconds},
          {"resolved", r.resolved},
          {"formula", r.formula ? to_json(*r.formula) : json(nullptr)}};
}

RunRecord run_record_from_json(const json& j) {
  RunRecord r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kSchemaVersion) {
    throw HarnessError("unsupported schema version " + std::to_string(r.schema_version));
  }
  r.library_version = j.at("library_version").get<std::string>();
  r.spec = experiment_spec_from_json(j.at("spec"));
  r.status = j.at("status").get<std::string>();
  r.error = j.at("error").get<std::string>();
  for (const auto& s : j.at("seeds")) {
    SeedRun run;
    run.result = eval_from(s.at("result"));
    run.test_rows_hash = s.at("test_rows_hash").get<std::string>();
    run.train_rows = s.at("train_rows").get<std::size_t>();
    run.test_rows = s.at("test_rows").get<std::size_t>();
    run.epoch_loss = s.at("epoch_loss").get<std::vector<double>>();
    r.seeds.push_back(std::move(run));
  }
  const json& a = j.at("aggregate");
  r.aggregate.accuracy = summary_from(a.at("accuracy"));
  r.aggregate.auc = summary_from(a.at("auc"));
  r.aggregate.efficiency = summary_from(a.at("efficiency"));
  r.aggregate.params = a.at("params").get<std::size_t>();
  r.aggregate.n_seeds = a.at("n_seeds").get<std::size_t>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.resolved = j.at("resolved");
  if (!j.at("formula").is_null()) r.formula = formula_record_from_json(j.at("formula"));
  return r;
}

nn::TrainConfig train_config_for(const TrainOverrides& o, std::int64_t seed) {
  nn::TrainConfig c;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.batch_size) c.batch_size = *o.batch_size;
  if (o.learning_rate) c.adam.learning_rate = *o.learning_rate;
  c.seed = static_cast<std::uint64_t>(seed);
  return c;
}

json resolved_defaults(const nn::TrainConfig& t, Precision precision) {
  return {{"gp", to_json(gp::GpConfig{})},
          {"std_convention", "sample (n - 1); 0 for a single seed"},
          {"accuracy_threshold", 0.5},
          {"auc_ties", "average ranks"},
          {"efficiency", "AUC / log10(params), averaged over seeds"},
          {"discovery", {{"fraction", kDiscoveryFraction},
                         {"seed", kDiscoverySeed},
                         {"stratified", true},
                         {"excluded_from", {"train", "test"}}}},
          {"split", {{"train_fraction", kTrainFraction}, {"stratified", true}, {"seed", "run seed"}}},
          {"scaler", {{"fit_on", "train split"}, {"std", "population (n)"}, {"std_floor", data::Scaler::kStdFloor}}},
          {"batch_norm", {{"momentum", nn::BatchNormStats<double>::kMomentum},
                          {"epsilon", nn::BatchNormStats<double>::kEpsilon},
                          {"variance", "biased (n) for normalization and running estimate"}}},
          {"init", "dense weights and biases U(-1/sqrt(fan_in), 1/sqrt(fan_in)); gamma 1, beta 0"},
          {"gelu", "tanh approximation"},
          {"loss", "binary cross-entropy from logits"},
          {"adam", {{"learning_rate", t.adam.learning_rate},
                    {"beta1", t.adam.beta1},
                    {"beta2", t.adam.beta2},
                    {"epsilon", t.adam.epsilon}}},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"last_batch", "kept; a trailing single row joins the previous batch"},
          {"shuffle", "every epoch"},
          {"precision", precision_name(precision)}};
}

std::string hash_indices(const std::vector<std::size_t>& rows) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t r : rows) {
    auto v = static_cast<std::uint64_t>(r);
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::size_t> protocol_remainder(const data::Dataset& d) {
  return data::stratified_partition(d.y, kDiscoveryFraction, kDiscoverySeed).rest;
}

ProtocolSplit protocol_split(const data::Dataset& d, std::int64_t seed) {
  const auto rest = protocol_remainder(d);
  std::vector<int> labels(rest.size());
  for (std::size_t i = 0; i < rest.size(); ++i) labels[i] = d.y[rest[i]];
  const auto p = data::stratified_partition(labels, kTrainFraction, static_cast<std::uint64_t>(seed));
  ProtocolSplit s;
  for (auto i : p.selected) s.train.push_back(rest[i]);
  for (auto i : p.rest) s.test.push_back(rest[i]);
  return s;
}

namespace {

template <typename Scalar>
SeedRun train_and_evaluate(const data::Dataset& train, const data::Dataset& test, const ExperimentSpec& spec,
                           const nn::Activation& act, std::int64_t seed) {
  const data::Scaler scaler = data::fit_scaler(train);
  const Matrix Xtr = data::transform(scaler, train.X);
  const Matrix Xte = data::transform(scaler, test.X);

  nn::ModelConfig cfg;
  cfg.arch = spec.arch;
  cfg.input_dim = train.features();
  cfg.activation = act;
  nn::Network<Scalar> net(cfg, static_cast<std::uint64_t>(seed));
  const auto history = nn::train(net, Xtr, train.y, train_config_for(spec.overrides, seed));
  const auto probs = nn::predict_proba(net, Xte);

  SeedRun run;
  run.result = metrics::make_result(metrics::accuracy(probs, test.y), metrics::auc(probs, test.y),
                                    net.param_count(), seed);
  run.train_rows = train.rows();
  run.test_rows = test.rows();
  run.epoch_loss = history.epoch_loss;
  return run;
}

}  // namespace

SeedRun run_seed(const data::Dataset& d, const ExperimentSpec& spec, const nn::Activation& act, std::int64_t seed) {
  const ProtocolSplit split = protocol_split(d, seed);
  const data::Dataset train = data::take(d, split.train);
  const data::Dataset test = data::take(d, split.test);
  SeedRun run = spec.precision == Precision::F32 ? train_and_evaluate<float>(train, test, spec, act, seed)
                                                 : train_and_evaluate<double>(train, test, spec, act, seed);
  run.test_rows_hash = hash_indices(split.test);
  return run;
}

RunRecord run_experiment(const data::Dataset& d, const ExperimentSpec& spec) {
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.spec = spec;
  if (rec.spec.dataset.name.empty()) rec.spec.dataset.name = d.name;
  const nn::Activation act = resolve_activation(spec.activation);
  if (spec.activation.kind != ActivationSource::Kind::Builtin) {
    rec.formula = read_formula_file(spec.activation.formula_path);
  }
  std::vector<metrics::EvalResult> results;
  for (auto seed : spec.seeds) {
    rec.seeds.push_back(run_seed(d, spec, act, seed));
    results.push_back(rec.seeds.back().result);
  }
  rec.aggregate = metrics::aggregate(results);
  rec.resolved = resolved_defaults(train_config_for(spec.overrides, spec.seeds.front()), spec.precision);
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

namespace {

data::Dataset load_dataset(const DatasetRef& ref) {
  data::Dataset d = data::load_csv(ref.path, data::parse_label_column(ref.label));
  d.name = ref.name.empty() ? fs::path(ref.path).stem().string() : ref.name;
  return d;
}

void write_json_file(const fs::path& path, const json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw HarnessError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace

RunRecord cmd_train(const ExperimentSpec& spec, const std::string& out) {
  spec.validate();
  const data::Dataset d = load_dataset(spec.dataset);
  RunRecord rec = run_experiment(d, spec);
  if (!out.empty()) write_json_file(out, to_json(rec));
  return rec;
}

// ---------------------------------------------------------------------------
// Discovery

FormulaRecord discover(const data::Dataset& d, const DiscoverOptions& opts) {
  if (d.count(0) == 0 || d.count(1) == 0) {
    throw HarnessError("dataset " + d.name + ": both classes must be present for discovery");
  }
  const auto subset = data::stratified_subset(d, opts.fraction, opts.seed).first;
  const Matrix X = data::transform(data::fit_scaler(subset), subset.X);

  gp::GpConfig cfg = opts.gp;
  cfg.seed = opts.seed;
  const gp::EvolveResult result = [&] {
    try {
      return gp::evolve(cfg, X, subset.y);
    } catch (const std::exception& e) {
      throw HarnessError("dataset " + d.name + ": " + e.what());
    }
  }();

  FormulaRecord r;
  r.raw = expr::print_formula(result.best.genome);
  const expr::Generalized g = expr::generalize_detailed(result.best.genome);
  r.generalized = expr::print_formula(g.activation);
  r.pair_collapsed = g.pair_collapsed;
  r.source = d.name;
  r.discovery_seed = static_cast<std::int64_t>(opts.seed);
  r.gp = cfg;
  r.history = result.history;
  return r;
}

FormulaRecord cmd_discover(const DiscoverOptions& opts) {
  const data::Dataset d = load_dataset(opts.dataset);
  FormulaRecord r = discover(d, opts);
  if (!opts.out.empty()) write_formula_file(opts.out, r);
  return r;
}

// ---------------------------------------------------------------------------
// Benchmark

std::vector<ModelEntry> default_model_grid() {
  return {{"heavy-relu", nn::Arch::Heavy, "relu"},   {"light-relu", nn::Arch::Light, "relu"},
          {"light-gelu", nn::Arch::Light, "gelu"},   {"light-silu", nn::Arch::Light, "silu"},
          {"light-specialist", nn::Arch::Light, "specialist"},
          {"light-transfer", nn::Arch::Light, "transfer"}};
}

namespace {

std::optional<ExperimentSpec> cell_spec(const BenchmarkConfig& cfg, const DatasetEntry& d, const ModelEntry& m) {
  ExperimentSpec s;
  s.dataset = d.ref;
  if (s.dataset.name.empty()) s.dataset.name = d.id;
  s.arch = m.arch;
  s.seeds = cfg.seeds;
  s.overrides = cfg.overrides;
  s.precision = cfg.precision;
  if (m.activation == "specialist") {
    if (d.specialist.empty()) return std::nullopt;
    s.activation = ActivationSource::specialist(d.specialist);
  } else if (m.activation == "transfer") {
    if (d.transfer.empty()) return std::nullopt;
    s.activation = ActivationSource::transfer(d.transfer, d.transfer_source);
  } else {
    s.activation = ActivationSource::from_builtin(m.activation);
  }
  return s;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& cfg) {
  BenchmarkResult out;
  for (const auto& d : cfg.datasets) {
    std::optional<data::Dataset> loaded;
    std::string load_error;
    try {
      loaded = load_dataset(d.ref);
      if (!d.ref.name.empty()) loaded->name = d.ref.name;
      else loaded->name = d.id;
    } catch (const std::exception& e) {
      load_error = e.what();
    }
    for (const auto& m : cfg.models) {
      const auto spec = cell_spec(cfg, d, m);
      if (!spec) {
        ++out.skipped_cells;
        continue;
      }
      RunRecord rec;
      rec.spec = *spec;
      rec.resolved = resolved_defaults(train_config_for(spec->overrides, spec->seeds.front()), spec->precision);
      try {
        if (!loaded) throw HarnessError("cannot load dataset: " + load_error);
        rec = run_experiment(*loaded, *spec);
        out.training_runs += rec.seeds.size();
      } catch (const std::exception& e) {
        rec.status = "failed";
        rec.error = e.what();
      }
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

BenchmarkResult cmd_benchmark(const fs::path& config, const fs::path& out_dir) {
  const BenchmarkConfig cfg = load_benchmark_config(config);
  BenchmarkResult result = run_benchmark(cfg);
  fs::create_directories(out_dir / "runs");
  for (const auto& r : result.records) {
    std::string id = r.spec.dataset.name + "__" + nn::arch_name(r.spec.arch) + "-" +
                     (r.spec.activation.kind == ActivationSource::Kind::Builtin
                          ? r.spec.activation.builtin
                          : source_kind_name(r.spec.activation.kind));
    std::replace_if(id.begin(), id.end(), [](char c) { return c == ' ' || c == '/'; }, '_');
    write_json_file(out_dir / "runs" / (id + ".json"), to_json(r));
  }
  for (auto [name, format] : {std::pair{"report.md", ReportFormat::Markdown},
                              std::pair{"report.csv", ReportFormat::Csv},
                              std::pair{"report.json", ReportFormat::Json}}) {
    std::ofstream out(out_dir / name, std::ios::binary);
    out << render(result.records, format);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Curves

CurveColumn resolve_curve(const std::string& spec) {
  if (spec == "relu" || spec == "gelu" || spec == "silu") return {spec, nn::Activation::builtin(spec)};
  expr::Formula f = expr::parse_formula("x");
  std::string name;
  if (spec.rfind("formula:", 0) == 0) {
    const fs::path path = spec.substr(8);
    const FormulaRecord r = read_formula_file(path);
    f = expr::generalize(expr::parse_formula(r.raw));
    name = path.stem().string();
  } else {
    try {
      f = expr::parse_formula(spec);
    } catch (const expr::ParseError& e) {
      throw HarnessError("cannot parse activation '" + spec + "': " + e.what());
    }
    if (!f.is_activation()) {
      throw HarnessError("'" + spec + "' uses feature leaves; generalize it first (e.g. " +
                         expr::print_formula(expr::generalize(f)) + ")");
    }
    name = expr::print_formula(f);
  }
  return {name, nn::Activation::symbolic(f)};
}

CurveTable curves(const std::vector<CurveColumn>& columns, double lo, double hi, double step) {
  if (!(step > 0.0) || hi < lo) throw HarnessError("invalid curve grid");
  CurveTable t;
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / step)) + 1;
  for (std::size_t i = 0; i < n; ++i) t.x.push_back(lo + static_cast<double>(i) * step);
  for (const auto& c : columns) {
    t.names.push_back(c.name);
    std::vector<double> v, dv;
    for (double x : t.x) {
      v.push_back(c.activation.apply(x));
      dv.push_back(c.activation.derivative(x));
    }
    t.values.push_back(std::move(v));
    t.derivatives.push_back(std::move(dv));
  }
  return t;
}

std::size_t sign_changes(const std::vector<double>& v) {
  std::size_t changes = 0;
  int last = 0;
  for (double x : v) {
    const int s = (x > 0.0) - (x < 0.0);
    if (s == 0) continue;
    if (last != 0 && s != last) ++changes;
    last = s;
  }
  return changes;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

}  // namespace

void write_curves_csv(const CurveTable& t, std::ostream& out) {
  out << "x";
  for (const auto& n : t.names) out << ',' << csv_field(n) << ',' << csv_field("d_" + n);
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < t.x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.2f", t.x[i]);
    out << buf;
    for (std::size_t c = 0; c < t.names.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", t.values[c][i]);
      out << ',' << buf;
      std::snprintf(buf, sizeof buf, "%.17g", t.derivatives[c][i]);
      out << ',' << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Gradient checks

std::vector<std::pair<std::string, expr::Formula>> reference_activations() {
  return {{"sigma_phys", expr::parse_formula("mul(cos(x), x)")},
          {"sigma_forest", expr::parse_formula("add(sin(x), mul(x, x))")},
          {"sigma_spam", expr::parse_formula("add(x, mul(x, cos(x)))")}};
}

std::vector<GradcheckCase> gradcheck_suite(std::int64_t seed, Precision precision, const nn::GradientFn& analytic) {
  constexpr std::size_t kRows = 32;
  constexpr std::size_t kInputs = 5;
  std::vector<std::pair<std::string, nn::Activation>> acts{
      {"relu", nn::Activation::relu()}, {"gelu", nn::Activation::gelu()}, {"silu", nn::Activation::silu()}};
  for (auto& [name, f] : reference_activations()) acts.emplace_back(name, nn::Activation::symbolic(f));

  nn::GradcheckOptions opts;
  nn::GradientFn fn = analytic;
  if (!fn) fn = precision == Precision::F64 ? nn::GradientFn(nn::analytic_gradients)
                                            : nn::GradientFn(nn::analytic_gradients_f32);
  if (precision == Precision::F32) opts.tolerance = 1e-3;

  std::vector<GradcheckCase> cases;
  for (auto arch : {nn::Arch::Heavy, nn::Arch::Light}) {
    for (const auto& [name, act] : acts) {
      Rng rng = make_stream(static_cast<std::uint64_t>(seed), {0x6763, cases.size()});
      std::normal_distribution<double> normal;
      nn::MatrixT<double> X(kRows, kInputs);
      for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
      std::vector<int> y(kRows);
      for (std::size_t i = 0; i < kRows; ++i) y[i] = static_cast<int>(i % 2);
      std::shuffle(y.begin(), y.end(), rng);

      nn::ModelConfig cfg;
      cfg.arch = arch;
      cfg.input_dim = kInputs;
      cfg.activation = act;
      cfg.hidden_override = {8, 4};
      nn::Network<double> net(cfg, static_cast<std::uint64_t>(seed));
      cases.push_back({nn::arch_name(arch), name, seed, nn::gradcheck(net, X, y, opts, fn)});
    }
  }
  return cases;
}

bool cmd_gradcheck(std::int64_t seed, Precision precision, std::ostream& out) {
  bool ok = true;
  char buf[160];
  for (const auto& c : gradcheck_suite(seed, precision)) {
    for (const auto& g : c.report.groups) {
      std::snprintf(buf, sizeof buf, "%-5s %-12s %-14s max_rel_error=%.3e %s\n", c.arch.c_str(),
                    c.activation.c_str(), g.name.c_str(), g.max_rel_error, g.pass ? "ok" : "FAIL");
      out << buf;
    }
    ok = ok && c.report.all_pass();
  }
  out << (ok ? "gradcheck: all groups pass\n" : "gradcheck: FAILED\n");
  return ok;
}

}  // namespace nsact::harness
