#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "nsact/data.hpp"
#include "nsact/harness.hpp"

using namespace nsact;
using namespace nsact::harness;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch() {
  const auto dir = fs::temp_directory_path() / "nsact_test_harness";
  fs::create_directories(dir);
  return dir;
}

fs::path write_text(const fs::path& path, const std::string& body) {
  std::ofstream(path, std::ios::binary) << body;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// Planted data written as a headed CSV.
fs::path planted_csv(std::size_t rows = 500) {
  const auto path = scratch() / ("planted_" + std::to_string(rows) + ".csv");
  const auto d = data::synth_planted(rows, 5, 0.05, 9);
  std::ofstream out(path);
  out.precision(17);
  out << "a,b,c,d,e,target\n";
  for (std::size_t i = 0; i < d.rows(); ++i) {
    for (Eigen::Index j = 0; j < 5; ++j) out << d.X(static_cast<Eigen::Index>(i), j) << ',';
    out << d.y[i] << '\n';
  }
  return path;
}

ExperimentSpec quick_spec(const fs::path& csv) {
  ExperimentSpec s;
  s.dataset.path = csv.string();
  s.dataset.label = "target";
  s.dataset.name = "Planted";
  s.seeds = {42, 43};
  s.overrides.epochs = 2;
  s.overrides.batch_size = 64;
  return s;
}

RunRecord fake_record(const std::string& dataset, nn::Arch arch, const ActivationSource& act, double auc,
                      std::size_t params, std::vector<double> aucs = {}) {
  RunRecord r;
  r.spec.dataset.name = dataset;
  r.spec.dataset.path = dataset + ".csv";
  r.spec.arch = arch;
  r.spec.activation = act;
  if (aucs.empty()) aucs = {auc, auc, auc};
  std::vector<metrics::EvalResult> results;
  for (std::size_t i = 0; i < aucs.size(); ++i) {
    SeedRun s;
    s.result = metrics::make_result(0.8, aucs[i], params, 42 + static_cast<std::int64_t>(i));
    results.push_back(s.result);
    r.seeds.push_back(s);
  }
  r.aggregate = metrics::aggregate(results);
  return r;
}

json without_timing(json j) {
  j.erase("wall_seconds");
  return j;
}

}  // namespace

TEST_CASE("formula files") {
  const auto dir = scratch();
  const auto plain = write_text(dir / "plain.txt", "  mul(cos(X25), sub(X12, X3))  \nignored\n");
  const auto r = read_formula_file(plain);
  CHECK(r.raw == "mul(cos(X25), sub(X12, X3))");
  CHECK(r.generalized == "mul(cos(x), x)");
  CHECK(r.pair_collapsed);

  FormulaRecord full = r;
  full.source = "HIGGS";
  full.gp = gp::GpConfig{};
  full.gp->population_size = 123;
  const auto path = dir / "full.txt";
  write_formula_file(path, full);
  CHECK(fs::exists(sidecar_path(path)));
  CHECK(slurp(path) == "mul(cos(X25), sub(X12, X3))\n");
  const auto back = read_formula_file(path);
  CHECK(back.source == "HIGGS");
  REQUIRE(back.gp.has_value());
  CHECK(back.gp->population_size == 123);

  CHECK_THROWS_AS(read_formula_file(dir / "missing.txt"), HarnessError);
  try {
    read_formula_file(write_text(dir / "bad.txt", "mul(X1 X2)\n"));
    FAIL("expected HarnessError");
  } catch (const HarnessError& e) {
    CHECK(std::string(e.what()).find("offset") != std::string::npos);
  }
}

TEST_CASE("shipped formula files generalize to the reference activations") {
  const fs::path dir = fs::path(NSACT_SOURCE_DIR) / "formulas";
  CHECK(read_formula_file(dir / "higgs.txt").generalized == "mul(cos(x), x)");
  CHECK(read_formula_file(dir / "forest.txt").generalized == "add(sin(x), mul(x, x))");
  CHECK(read_formula_file(dir / "spambase.txt").generalized == "add(x, mul(x, cos(x)))");
}

TEST_CASE("protocol split excludes the discovery subset") {
  const auto d = data::synth_planted(1000, 4, 0.0, 1);
  const auto held = data::stratified_partition(d.y, kDiscoveryFraction, kDiscoverySeed).selected;
  const auto split = protocol_split(d, 43);
  std::set<std::size_t> used(split.train.begin(), split.train.end());
  used.insert(split.test.begin(), split.test.end());
  CHECK(used.size() == split.train.size() + split.test.size());
  CHECK(used.size() == 900);
  for (std::size_t i : held) CHECK(used.count(i) == 0);
  CHECK(split.train.size() == 720);

  CHECK(hash_indices(protocol_split(d, 43).test) == hash_indices(split.test));
  CHECK(hash_indices(protocol_split(d, 44).test) != hash_indices(split.test));
  CHECK(protocol_remainder(d) == protocol_remainder(d));
}

TEST_CASE("spec validation fails before any training") {
  ExperimentSpec s;
  CHECK_THROWS_AS(s.validate(), HarnessError);
  s.dataset.path = "whatever.csv";
  s.activation = ActivationSource::specialist((scratch() / "nope.txt").string());
  CHECK_THROWS_AS(s.validate(), HarnessError);
  s.activation = ActivationSource::from_builtin("relu");
  s.seeds.clear();
  CHECK_THROWS_AS(s.validate(), HarnessError);
  CHECK_THROWS_AS(resolve_activation(ActivationSource::from_builtin("tanh")), HarnessError);
}

TEST_CASE("training runs are deterministic and records round trip") {
  const auto csv = planted_csv();
  auto spec = quick_spec(csv);
  const auto out_a = scratch() / "run_a.json";
  const auto out_b = scratch() / "run_b.json";
  const auto a = cmd_train(spec, out_a.string());
  cmd_train(spec, out_b.string());
  CHECK(without_timing(json::parse(slurp(out_a))) == without_timing(json::parse(slurp(out_b))));

  CHECK(a.status == "ok");
  REQUIRE(a.seeds.size() == 2);
  CHECK(a.seeds[0].train_rows + a.seeds[0].test_rows == 450);
  CHECK(a.aggregate.params == nn::param_count(nn::Arch::Light, 5));
  CHECK(a.aggregate.n_seeds == 2);
  CHECK(a.seeds[0].epoch_loss.size() == 2);
  CHECK(a.resolved.at("epochs") == 2);
  CHECK(a.resolved.contains("discovery"));

  const auto back = run_record_from_json(json::parse(slurp(out_a)));
  CHECK(without_timing(to_json(back)) == without_timing(to_json(a)));
  CHECK(back.aggregate.auc.mean == a.aggregate.auc.mean);

  auto bumped = to_json(a);
  bumped["schema_version"] = kSchemaVersion + 1;
  CHECK_THROWS_AS(run_record_from_json(bumped), HarnessError);
}

TEST_CASE("every model on a dataset shares the test rows") {
  const auto csv = planted_csv();
  const auto d = data::load_csv(csv.string(), data::parse_label_column("target"));
  auto light = quick_spec(csv);
  auto heavy = quick_spec(csv);
  heavy.arch = nn::Arch::Heavy;
  heavy.activation = ActivationSource::specialist((fs::path(NSACT_SOURCE_DIR) / "formulas/higgs.txt").string());
  heavy.overrides.epochs = 1;
  const auto a = run_experiment(d, light);
  const auto b = run_experiment(d, heavy);
  for (std::size_t i = 0; i < a.seeds.size(); ++i) CHECK(a.seeds[i].test_rows_hash == b.seeds[i].test_rows_hash);
  CHECK(a.seeds[0].test_rows_hash != a.seeds[1].test_rows_hash);
  REQUIRE(b.formula.has_value());
  CHECK(b.formula->generalized == "mul(cos(x), x)");
}

TEST_CASE("precision is honored") {
  const auto csv = planted_csv();
  auto spec = quick_spec(csv);
  spec.seeds = {42};
  spec.precision = Precision::F64;
  const auto r = cmd_train(spec, "");
  CHECK(r.resolved.at("precision") == "f64");
  CHECK(parse_precision("f32") == Precision::F32);
  CHECK_THROWS_AS(parse_precision("f16"), HarnessError);
}

TEST_CASE("discovery") {
  const auto d = data::synth_planted(800, 4, 0.0, 3);
  DiscoverOptions opts;
  opts.gp.population_size = 30;
  opts.gp.generations = 2;
  const auto a = discover(d, opts);
  const auto b = discover(d, opts);
  CHECK(a.raw == b.raw);
  CHECK(a.history.generations.size() == 2);
  CHECK(expr::parse_formula(a.generalized).is_activation());
  REQUIRE(a.gp.has_value());
  CHECK(a.discovery_seed == 42);

  data::Dataset one = d;
  std::fill(one.y.begin(), one.y.end(), 1);
  CHECK_THROWS_AS(discover(one, opts), HarnessError);
}

TEST_CASE("benchmark configuration") {
  const std::string ini =
      "[benchmark]\nseeds = 42, 43\nepochs = 2\nbatch_size = 64\nprecision = f32\n\n"
      "[dataset.planted]\npath = planted.csv\nlabel = target\nname = Planted\nspecialist = f.txt\n\n"
      "[model.a]\narch = light\nactivation = relu\n\n[model.b]\narch = heavy\nactivation = specialist\n";
  std::istringstream in(ini);
  const auto cfg = parse_benchmark_config(in, "/base");
  CHECK(cfg.seeds == std::vector<std::int64_t>{42, 43});
  CHECK(cfg.overrides.epochs == 2u);
  REQUIRE(cfg.datasets.size() == 1);
  CHECK(cfg.datasets[0].ref.path == "/base/planted.csv");
  CHECK(cfg.datasets[0].specialist == "/base/f.txt");
  REQUIRE(cfg.models.size() == 2);
  CHECK(cfg.models[1].arch == nn::Arch::Heavy);

  std::istringstream defaults("[dataset.x]\npath = /abs/x.csv\n");
  CHECK(parse_benchmark_config(defaults).models.size() == 6);

  for (const std::string bad : {"[benchmark]\nepoch = 3\n", "[datasets.x]\npath = a\n", "[dataset.x]\nlabel = y\n",
                                "[model.m]\narch = huge\nactivation = relu\n",
                                "[model.m]\narch = light\nactivation = tanh\n"}) {
    std::istringstream s(bad);
    CHECK_THROWS_AS(parse_benchmark_config(s), HarnessError);
  }
}

TEST_CASE("benchmark runs every cell and records failures") {
  const auto csv = planted_csv(300);
  BenchmarkConfig cfg;
  cfg.seeds = {42, 43};
  cfg.overrides.epochs = 1;
  cfg.overrides.batch_size = 64;
  DatasetEntry ok{"planted", {csv.string(), "target", "Planted", ""}, "", "", ""};
  DatasetEntry broken{"broken", {(scratch() / "absent.csv").string(), "last", "Broken", ""}, "", "", ""};
  cfg.datasets = {ok, broken};
  cfg.models = {{"heavy-relu", nn::Arch::Heavy, "relu"},
                {"light-gelu", nn::Arch::Light, "gelu"},
                {"light-specialist", nn::Arch::Light, "specialist"}};
  const auto out = run_benchmark(cfg);
  CHECK(out.training_runs == 2 * cfg.seeds.size());
  CHECK(out.skipped_cells == 2);
  REQUIRE(out.records.size() == 4);
  CHECK(out.records[0].status == "ok");
  CHECK(out.records[1].status == "ok");
  CHECK(out.records[2].status == "failed");
  CHECK(out.records[2].error.find("absent.csv") != std::string::npos);

  const auto md = render_markdown(out.records);
  CHECK(md.find("| Broken | Heavy | ReLU | failed") != std::string::npos);
}

TEST_CASE("benchmark command writes runs and reports") {
  const auto dir = scratch() / "bench";
  fs::remove_all(dir);
  fs::create_directories(dir);
  fs::copy_file(planted_csv(300), dir / "data.csv");
  write_text(dir / "bench.ini",
             "[benchmark]\nseeds = 42\nepochs = 1\n\n[dataset.p]\npath = data.csv\nlabel = target\n\n"
             "[model.a]\narch = light\nactivation = silu\n");
  const auto r = cmd_benchmark(dir / "bench.ini", dir / "out");
  CHECK(r.records.size() == 1);
  CHECK(fs::exists(dir / "out/report.md"));
  CHECK(fs::exists(dir / "out/report.csv"));
  CHECK(fs::exists(dir / "out/runs/p__light-silu.json"));
  const auto loaded = load_records({dir / "out/report.json"});
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].aggregate.auc.mean == r.records[0].aggregate.auc.mean);
}

TEST_CASE("report formatting") {
  CHECK(format_count(26601) == "26,601");
  CHECK(format_count(999) == "999");
  CHECK(format_count(1000000) == "1,000,000");
  CHECK(format_fixed(0.7906) == "0.791");
  CHECK(format_fixed(0.0) == "0.000");
  CHECK(parse_report_format("md") == ReportFormat::Markdown);
  CHECK_THROWS_AS(parse_report_format("xml"), HarnessError);

  std::vector<RunRecord> records{
      fake_record("HIGGS", nn::Arch::Heavy, ActivationSource::from_builtin("relu"), 0.791, 26601),
      fake_record("HIGGS", nn::Arch::Light, ActivationSource::from_builtin("gelu"), 0.790, 4161, {0.78, 0.79, 0.80}),
      fake_record("HIGGS", nn::Arch::Light, ActivationSource::specialist("h.txt"), 0.786, 4161),
  };
  const auto rows = report_rows(records);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].architecture == "Heavy");
  CHECK(rows[2].activation == "GELU");

  const auto md = render_markdown(records);
  CHECK(md.find("26,601") != std::string::npos);
  CHECK(md.find("0.179") != std::string::npos);
  CHECK(md.find("0.791 ± 0.000") != std::string::npos);
  CHECK(md.find("0.790 ± 0.010") != std::string::npos);
  CHECK(md.find("**0.218**") != std::string::npos);
  CHECK(md.find("Hybrid (Specialist)") != std::string::npos);

  const auto summary = summary_rows(records);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].light_label == "GELU");
  CHECK(summary[0].improvement.param_reduction == doctest::Approx(26601.0 / 4161.0));
  CHECK(md.find("6.4×") != std::string::npos);

  const auto csv = render_csv(records);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);

  const auto back = records_from_json(json::parse(render_json(records)));
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].aggregate.auc.mean == records[i].aggregate.auc.mean);
    CHECK(back[i].aggregate.efficiency.std == records[i].aggregate.efficiency.std);
  }
}

TEST_CASE("reports refuse mixed schema versions") {
  const auto dir = scratch();
  auto a = fake_record("D", nn::Arch::Light, ActivationSource::from_builtin("relu"), 0.8, 4161);
  std::ofstream(dir / "v1.json") << to_json(a).dump();
  auto j = to_json(a);
  j["schema_version"] = 2;
  std::ofstream(dir / "v2.json") << j.dump();
  CHECK(load_records({dir / "v1.json"}).size() == 1);
  CHECK_THROWS_AS(load_records({dir / "v1.json", dir / "v2.json"}), HarnessError);
}

TEST_CASE("curves") {
  const auto phys = resolve_curve("mul(cos(x), x)");
  const auto relu = resolve_curve("relu");
  const auto from_file = resolve_curve("formula:" + (fs::path(NSACT_SOURCE_DIR) / "formulas/forest.txt").string());
  const auto t = curves({phys, relu, from_file});
  REQUIRE(t.x.size() == 201);
  CHECK(t.x.front() == -5.0);
  CHECK(t.x.back() == doctest::Approx(5.0));
  const std::size_t zero = 100;
  CHECK(std::fabs(t.x[zero]) < 1e-12);
  CHECK(t.values[0][zero] == doctest::Approx(0.0));
  CHECK(t.derivatives[0][zero] == doctest::Approx(1.0));
  for (std::size_t i = 0; i < t.x.size(); ++i) CHECK(t.values[1][i] == std::max(0.0, t.x[i]));
  CHECK(sign_changes(t.derivatives[0]) >= 1);
  CHECK(sign_changes(t.derivatives[1]) == 0);
  CHECK(sign_changes({1.0, 0.0, 1.0}) == 0);
  CHECK(sign_changes({1.0, 0.0, -1.0, 2.0}) == 2);

  try {
    resolve_curve("mul(cos(X25), sub(X12, X3))");
    FAIL("expected HarnessError");
  } catch (const HarnessError& e) {
    CHECK(std::string(e.what()).find("generalize") != std::string::npos);
  }
  CHECK_THROWS_AS(curves({relu}, 1.0, 0.0, 0.1), HarnessError);

  std::ostringstream csv;
  write_curves_csv(curves({relu}, -1.0, 1.0, 0.5), csv);
  CHECK(csv.str().rfind("x,relu,d_relu\n", 0) == 0);
}

TEST_CASE("gradcheck command") {
  std::ostringstream out;
  CHECK(cmd_gradcheck(42, Precision::F64, out));
  CHECK(out.str().find("FAIL") == std::string::npos);
  std::ostringstream single;
  CHECK(cmd_gradcheck(43, Precision::F32, single));
  const auto suite = gradcheck_suite(44);
  CHECK(suite.size() == 12);
}
