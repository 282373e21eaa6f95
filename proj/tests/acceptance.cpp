// Acceptance checks. Prints one line per criterion and exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "nsact/data.hpp"
#include "nsact/expr.hpp"
#include "nsact/gp.hpp"
#include "nsact/harness.hpp"
#include "nsact/metrics.hpp"
#include "nsact/nn.hpp"
#include "properties.hpp"

using namespace nsact;
namespace fs = std::filesystem;

namespace {

enum class Status { Pass, Fail, Skip };

struct Verdict {
  Status status = Status::Pass;
  std::string detail;
};

struct Check {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

// Reference benchmark rows: dataset, arch, activation, AUC, params, expected efficiency.
struct ReferenceRow {
  const char* dataset;
  nn::Arch arch;
  const char* activation;
  double auc;
  std::size_t params;
  double efficiency;
};

const ReferenceRow kRows[] = {
    {"HIGGS", nn::Arch::Heavy, "ReLU", 0.791, 26601, 0.179},
    {"HIGGS", nn::Arch::Light, "SiLU", 0.770, 4161, 0.213},
    {"HIGGS", nn::Arch::Light, "Hybrid (Specialist)", 0.777, 4161, 0.215},
    {"HIGGS", nn::Arch::Light, "GELU", 0.781, 4161, 0.216},
    {"HIGGS", nn::Arch::Light, "ReLU", 0.784, 4161, 0.217},
    {"Forest", nn::Arch::Heavy, "ReLU", 0.915, 31801, 0.203},
    {"Forest", nn::Arch::Light, "Hybrid (Specialist)", 0.867, 5825, 0.230},
    {"Forest", nn::Arch::Light, "SiLU", 0.883, 5825, 0.235},
    {"Forest", nn::Arch::Light, "GELU", 0.893, 5825, 0.237},
    {"Forest", nn::Arch::Light, "ReLU", 0.894, 5825, 0.237},
    {"Forest", nn::Arch::Light, "Hybrid (Transfer)", 0.904, 5825, 0.240},
    {"Spambase", nn::Arch::Heavy, "ReLU", 0.978, 32401, 0.217},
    {"Spambase", nn::Arch::Light, "Hybrid (Transfer)", 0.898, 6017, 0.238},
    {"Spambase", nn::Arch::Light, "SiLU", 0.959, 6017, 0.254},
    {"Spambase", nn::Arch::Light, "GELU", 0.961, 6017, 0.254},
    {"Spambase", nn::Arch::Light, "ReLU", 0.961, 6017, 0.254},
    {"Spambase", nn::Arch::Light, "Hybrid (Specialist)", 0.967, 6017, 0.256},
};

Verdict param_counts() {
  struct Want {
    nn::Arch arch;
    std::size_t input, params;
  };
  const Want wants[] = {{nn::Arch::Heavy, 28, 26601}, {nn::Arch::Heavy, 54, 31801}, {nn::Arch::Heavy, 57, 32401},
                        {nn::Arch::Light, 28, 4161},  {nn::Arch::Light, 54, 5825},  {nn::Arch::Light, 57, 6017}};
  Verdict v;
  for (const auto& w : wants) {
    nn::ModelConfig cfg;
    cfg.arch = w.arch;
    cfg.input_dim = w.input;
    const auto got = nn::build_network<float>(cfg, 42).param_count();
    if (got != w.params) {
      v.status = Status::Fail;
      v.detail += nn::arch_name(w.arch) + "/" + std::to_string(w.input) + " = " + std::to_string(got) + "; ";
    }
  }
  if (v.detail.empty()) v.detail = "6/6 exact";
  return v;
}

Verdict efficiency_values() {
  Verdict v;
  double worst = 0.0;
  for (const auto& r : kRows) {
    const double e = metrics::efficiency(r.auc, r.params);
    worst = std::max(worst, std::fabs(e - r.efficiency));
    if (std::fabs(e - r.efficiency) > 0.001 + 1e-12) {
      v.status = Status::Fail;
      v.detail += std::string(r.dataset) + " " + r.activation + fmt(" %.4f; ", e);
    }
  }

  // Improvement of the best Light row over Heavy ReLU, from our own efficiencies.
  struct Summary {
    const char* dataset;
    double gain_pct, reduction;
  };
  const Summary expected[] = {{"HIGGS", 21.2, 6.4}, {"Forest", 18.2, 5.5}, {"Spambase", 18.0, 5.4}};
  for (const auto& s : expected) {
    metrics::Aggregate heavy, light;
    heavy.n_seeds = light.n_seeds = 3;
    for (const auto& r : kRows) {
      if (std::string(r.dataset) != s.dataset) continue;
      const double e = metrics::efficiency(r.auc, r.params);
      if (r.arch == nn::Arch::Heavy) {
        heavy.efficiency.mean = e;
        heavy.params = r.params;
      } else if (e > light.efficiency.mean) {
        light.efficiency.mean = e;
        light.params = r.params;
      }
    }
    const auto imp = metrics::improvement(light, heavy);
    if (std::fabs(imp.efficiency_gain_pct - s.gain_pct) > 0.1 || std::fabs(imp.param_reduction - s.reduction) > 0.05) {
      v.status = Status::Fail;
      v.detail += std::string(s.dataset) + fmt(" %+.2f%% %.3fx; ", imp.efficiency_gain_pct, imp.param_reduction);
    }
  }
  if (v.status == Status::Pass) v.detail = fmt("17 rows, max |diff| %.5f; 3 summaries", worst);
  return v;
}

Verdict generalization() {
  const std::pair<const char*, const char*> cases[] = {
      {"mul(cos(X25), sub(X12, X3))", "mul(cos(x), x)"},
      {"add(sin(X13), mul(X8, X22))", "add(sin(x), mul(x, x))"},
      {"add(X6, mul(X52, cos(X51)))", "add(x, mul(x, cos(x)))"},
  };
  Verdict v;
  for (const auto& [raw, want] : cases) {
    const auto got = expr::print_formula(expr::generalize(expr::parse_formula(raw)));
    if (got != want) {
      v.status = Status::Fail;
      v.detail += std::string(raw) + " -> " + got + "; ";
    }
  }
  if (v.detail.empty()) v.detail = "3/3 byte-exact";
  return v;
}

Verdict gradient_suite() {
  Verdict v;
  double worst = 0.0;
  std::size_t cases = 0;
  std::set<std::string> families;
  for (std::int64_t seed : {42, 43, 44}) {
    for (const auto& c : harness::gradcheck_suite(seed)) {
      ++cases;
      families.insert(c.activation);
      worst = std::max(worst, c.report.max_rel_error());
      if (!c.report.all_pass() || c.report.max_rel_error() > 1e-5) {
        v.status = Status::Fail;
        v.detail += c.arch + "/" + c.activation + fmt(" seed %.0f: %.2e; ", static_cast<double>(seed),
                                                       c.report.max_rel_error());
      }
    }
  }
  if (v.status == Status::Pass) {
    v.detail = std::to_string(cases) + " cases over " + std::to_string(families.size()) +
               " activations, max rel error " + fmt("%.2e", worst);
  }
  return v;
}

Verdict planted_oracle() {
  const auto train = data::synth_planted(10000, 5, 0.0, 42);
  const auto held = data::synth_planted(2000, 5, 0.0, 43);
  const gp::GpConfig cfg;
  const auto result = gp::evolve(cfg, train.X, train.y);
  const auto scores = expr::eval_batch(result.best.genome, held.X);
  const double auc = metrics::auc(std::span<const double>(scores.data(), static_cast<std::size_t>(scores.size())), held.y);
  const double raw = result.best.raw_fitness;
  Verdict v;
  v.status = auc >= 0.95 && raw < 0.55 && result.history.generations.size() <= 5 ? Status::Pass : Status::Fail;
  v.detail = expr::print_formula(result.best.genome) + fmt(": held-out AUC %.4f (need >= 0.95), raw log-loss %.4f (need < 0.55)", auc, raw);
  return v;
}

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

harness::ExperimentSpec spec_for(const std::string& path, const std::string& name, nn::Arch arch,
                                 const harness::ActivationSource& act) {
  harness::ExperimentSpec s;
  s.dataset.path = path;
  s.dataset.name = name;
  if (const char* label = env("NSACT_LABEL")) s.dataset.label = label;
  s.arch = arch;
  s.activation = act;
  return s;
}

fs::path formula(const char* file) { return fs::path(NSACT_SOURCE_DIR) / "formulas" / file; }

Verdict spambase() {
  const char* path = env("NSACT_SPAMBASE_CSV");
  if (!path) return {Status::Skip, "set NSACT_SPAMBASE_CSV to the UCI Spambase CSV"};
  const auto d = data::load_csv(path, data::parse_label_column("last"));
  using harness::ActivationSource;
  const auto relu = harness::run_experiment(d, spec_for(path, "Spambase", nn::Arch::Light, ActivationSource::from_builtin("relu")));
  const auto spec = harness::run_experiment(
      d, spec_for(path, "Spambase", nn::Arch::Light, ActivationSource::specialist(formula("spambase.txt").string())));
  const auto transfer = harness::run_experiment(
      d, spec_for(path, "Spambase", nn::Arch::Light, ActivationSource::transfer(formula("higgs.txt").string(), "HIGGS")));
  const double a = relu.aggregate.accuracy.mean, b = spec.aggregate.accuracy.mean, c = transfer.aggregate.accuracy.mean;
  const bool ok = std::fabs(a - 0.919) <= 0.03 && std::fabs(b - 0.920) <= 0.03 && c <= b - 0.04;
  return {ok ? Status::Pass : Status::Fail, fmt("ReLU %.3f, Specialist %.3f, Transfer %.3f", a, b, c)};
}

Verdict higgs_forest() {
  const char* higgs = env("NSACT_HIGGS_CSV");
  const char* forest = env("NSACT_FOREST_CSV");
  if (!higgs || !forest) return {Status::Skip, "set NSACT_HIGGS_CSV and NSACT_FOREST_CSV to the 100,000-row CSVs"};
  using harness::ActivationSource;
  Verdict v;
  std::ostringstream detail;
  // Heavy ReLU must have the highest raw accuracy on each dataset.
  for (const auto& [path, name, specialist] : {std::tuple{higgs, "HIGGS", "higgs.txt"}, std::tuple{forest, "Forest", "forest.txt"}}) {
    const auto d = data::load_csv(path, data::parse_label_column("last"));
    std::vector<std::pair<std::string, harness::ExperimentSpec>> grid{
        {"heavy-relu", spec_for(path, name, nn::Arch::Heavy, ActivationSource::from_builtin("relu"))},
        {"light-relu", spec_for(path, name, nn::Arch::Light, ActivationSource::from_builtin("relu"))},
        {"light-gelu", spec_for(path, name, nn::Arch::Light, ActivationSource::from_builtin("gelu"))},
        {"light-silu", spec_for(path, name, nn::Arch::Light, ActivationSource::from_builtin("silu"))},
        {"light-specialist", spec_for(path, name, nn::Arch::Light, ActivationSource::specialist(formula(specialist).string()))},
    };
    if (std::string(name) == "Forest") {
      grid.emplace_back("light-transfer", spec_for(path, name, nn::Arch::Light,
                                                   ActivationSource::transfer(formula("higgs.txt").string(), "HIGGS")));
    }
    double heavy = 0.0, best_light = 0.0, relu = 0.0, transfer = 0.0;
    for (const auto& [id, s] : grid) {
      const double acc = harness::run_experiment(d, s).aggregate.accuracy.mean;
      if (id == "heavy-relu") heavy = acc;
      else best_light = std::max(best_light, acc);
      if (id == "light-relu") relu = acc;
      if (id == "light-transfer") transfer = acc;
    }
    detail << name << fmt(": heavy %.3f, best light %.3f", heavy, best_light);
    if (heavy <= best_light) v.status = Status::Fail;
    if (std::string(name) == "Forest") {
      detail << fmt(", transfer %.3f vs relu %.3f", transfer, relu);
      if (transfer < relu + 0.005) v.status = Status::Fail;
    }
    detail << "; ";
  }
  v.detail = detail.str();
  return v;
}

Verdict property_suites() {
  const std::vector<props::Outcome> outcomes{
      props::expression_round_trip(1000, 101), props::simplify_soundness(1000, 102),
      props::auc_brute_force(1000, 103),       props::split_partition(1000, 104),
      props::batchnorm_train_statistics(1000, 105), props::elitist_monotonicity(1000, 106),
  };
  Verdict v;
  for (const auto& o : outcomes) {
    if (!o.ok() || o.cases != 1000) {
      v.status = Status::Fail;
      v.detail += o.name + ": " + std::to_string(o.failures) + " failures (" + o.first_failure + "); ";
    }
  }
  if (v.status == Status::Pass) v.detail = "6 properties x 1000 cases";
  return v;
}

}  // namespace

int main() {
  const std::vector<Check> checks{
      {1, "parameter counts", 1.0, param_counts},
      {2, "efficiency and improvement arithmetic", 1.0, efficiency_values},
      {3, "formula generalization", 1.0, generalization},
      {4, "gradient suite", 30.0, gradient_suite},
      {5, "GP planted-formula oracle", 300.0, planted_oracle},
      {6, "Spambase reproduction", 180.0, spambase},
      {7, "HIGGS/Forest reproduction", 1800.0, higgs_forest},
      {8, "property suites", 120.0, property_suites},
  };
  int failures = 0;
  for (const auto& c : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {Status::Fail, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (v.status != Status::Skip && secs > c.budget_seconds) {
      v.status = Status::Fail;
      v.detail += fmt(" (over the %.0f s budget)", c.budget_seconds);
    }
    const char* tag = v.status == Status::Pass ? "PASS" : v.status == Status::Fail ? "FAIL" : "SKIP";
    std::printf("criterion %d %s: %s - %s [%.2f s]\n", c.id, tag, c.name.c_str(), v.detail.c_str(), secs);
    std::fflush(stdout);
    failures += v.status == Status::Fail;
  }
  return failures == 0 ? 0 : 1;
}
