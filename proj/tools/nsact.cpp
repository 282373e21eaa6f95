// nsact: discover symbolic activations, train and benchmark MLPs with them.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nsact/harness.hpp"

namespace h = nsact::harness;

namespace {

std::vector<std::int64_t> parse_seeds(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoll(item));
  }
  if (out.empty()) throw h::HarnessError("empty seed list");
  return out;
}

h::ActivationSource parse_activation(const std::string& activation, const std::string& transfer_from,
                                     const std::string& transfer_source) {
  if (!transfer_from.empty()) return h::ActivationSource::transfer(transfer_from, transfer_source);
  if (activation.rfind("formula:", 0) == 0) return h::ActivationSource::specialist(activation.substr(8));
  return h::ActivationSource::from_builtin(activation);
}

void print_aggregate(const h::RunRecord& r) {
  for (const auto& s : r.seeds) {
    std::printf("seed %lld  accuracy %.4f  auc %.4f  efficiency %.4f  test_rows %zu  hash %s\n",
                static_cast<long long>(s.result.seed), s.result.accuracy, s.result.auc, s.result.efficiency,
                s.test_rows, s.test_rows_hash.c_str());
  }
  const auto& a = r.aggregate;
  std::printf("mean    accuracy %.4f ± %.4f  auc %.4f ± %.4f  efficiency %.4f  params %s\n", a.accuracy.mean,
              a.accuracy.std, a.auc.mean, a.auc.std, a.efficiency.mean, h::format_count(a.params).c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic activation discovery and efficiency benchmarking"};
  app.require_subcommand(1);

  // discover
  std::string data, label = "last", name, preparation, out;
  double fraction = h::kDiscoveryFraction;
  std::uint64_t seed = h::kDiscoverySeed;
  nsact::gp::GpConfig gp;
  auto* discover = app.add_subcommand("discover", "Evolve a formula on the discovery subset");
  discover->add_option("--data", data, "CSV file")->required();
  discover->add_option("--label", label, "Label column name or index")->capture_default_str();
  discover->add_option("--name", name, "Dataset display name");
  discover->add_option("--fraction", fraction, "Discovery subset fraction")->capture_default_str();
  discover->add_option("--seed", seed, "Subset and GP seed")->capture_default_str();
  discover->add_option("--population", gp.population_size)->capture_default_str();
  discover->add_option("--generations", gp.generations)->capture_default_str();
  discover->add_option("--parsimony", gp.parsimony_coefficient)->capture_default_str();
  discover->add_option("--tournament", gp.tournament_size)->capture_default_str();
  discover->add_option("--threads", gp.threads, "Fitness threads")->capture_default_str();
  discover->add_option("--out", out, "Formula file to write");

  // train
  std::string arch = "light", activation = "relu", transfer_from, transfer_source, seeds_text = "42,43,44";
  std::string precision = "f32", train_out;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> lr;
  auto* train = app.add_subcommand("train", "Train one model over several seeds");
  train->add_option("--data", data, "CSV file")->required();
  train->add_option("--label", label, "Label column name or index")->capture_default_str();
  train->add_option("--name", name, "Dataset display name");
  train->add_option("--preparation", preparation, "How the CSV was prepared (recorded in the run)");
  train->add_option("--arch", arch)->check(CLI::IsMember({"heavy", "light"}))->capture_default_str();
  train->add_option("--activation", activation, "relu|gelu|silu|formula:PATH")->capture_default_str();
  train->add_option("--transfer-from", transfer_from, "Formula discovered on another dataset");
  train->add_option("--transfer-source", transfer_source, "Display name of that dataset");
  train->add_option("--seeds", seeds_text, "Comma-separated seeds")->capture_default_str();
  train->add_option("--epochs", epochs);
  train->add_option("--batch-size", batch_size);
  train->add_option("--lr", lr);
  train->add_option("--precision", precision)->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();
  train->add_option("--out", train_out, "RunRecord JSON to write");

  // benchmark
  std::string config, out_dir = "results";
  auto* bench = app.add_subcommand("benchmark", "Run the dataset x model x seed matrix");
  bench->add_option("--config", config, "INI config")->required();
  bench->add_option("--out", out_dir, "Output directory")->capture_default_str();

  // curves
  std::vector<std::string> curve_specs;
  double lo = -5.0, hi = 5.0, step = 0.05;
  std::string curves_out;
  auto* curves = app.add_subcommand("curves", "Export activation values and derivatives as CSV");
  curves->add_option("--activation", curve_specs, "relu|gelu|silu|formula:PATH|inline formula")->required();
  curves->add_option("--from", lo)->capture_default_str();
  curves->add_option("--to", hi)->capture_default_str();
  curves->add_option("--step", step)->capture_default_str();
  curves->add_option("--out", curves_out, "CSV path (stdout if omitted)");

  // gradcheck
  std::int64_t gc_seed = 42;
  std::string gc_precision = "f64";
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
  gradcheck->add_option("--seed", gc_seed)->capture_default_str();
  gradcheck->add_option("--precision", gc_precision)->check(CLI::IsMember({"f32", "f64"}))->capture_default_str();

  // report
  std::vector<std::string> inputs;
  std::string format = "md", report_out;
  auto* report = app.add_subcommand("report", "Render run records as tables");
  report->add_option("records", inputs, "RunRecord or report JSON files")->required();
  report->add_option("--format", format)->check(CLI::IsMember({"md", "csv", "json"}))->capture_default_str();
  report->add_option("--out", report_out, "Output path (stdout if omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*discover) {
      h::DiscoverOptions opts;
      opts.dataset = {data, label, name, ""};
      opts.fraction = fraction;
      opts.seed = seed;
      opts.gp = gp;
      opts.out = out;
      const auto r = h::cmd_discover(opts);
      for (const auto& g : r.history.generations) {
        std::printf("gen %zu  best %.5f  raw %.5f  mean %.5f  nodes %zu  %s\n", g.generation, g.best_penalized,
                    g.best_raw, g.mean_raw, g.best_nodes, g.best_formula.c_str());
      }
      std::printf("raw:         %s\ngeneralized: %s%s\n", r.raw.c_str(), r.generalized.c_str(),
                  r.pair_collapsed ? "  (pair collapse applied)" : "");
    } else if (*train) {
      h::ExperimentSpec spec;
      spec.dataset = {data, label, name, preparation};
      spec.arch = nsact::nn::parse_arch(arch);
      spec.activation = parse_activation(activation, transfer_from, transfer_source);
      spec.seeds = parse_seeds(seeds_text);
      spec.overrides = {epochs, batch_size, lr};
      spec.precision = h::parse_precision(precision);
      print_aggregate(h::cmd_train(spec, train_out));
    } else if (*bench) {
      const auto r = h::cmd_benchmark(config, out_dir);
      std::size_t failed = 0;
      for (const auto& rec : r.records) {
        if (rec.status != "ok") {
          ++failed;
          std::fprintf(stderr, "failed: %s %s %s: %s\n", rec.spec.dataset.name.c_str(),
                       nsact::nn::arch_name(rec.spec.arch).c_str(), rec.spec.activation.label().c_str(),
                       rec.error.c_str());
        }
      }
      std::printf("%zu cells, %zu training runs, %zu skipped, %zu failed; reports in %s\n", r.records.size(),
                  r.training_runs, r.skipped_cells, failed, out_dir.c_str());
      std::printf("%s", h::render_markdown(r.records).c_str());
      if (failed > 0) return 1;
    } else if (*curves) {
      std::vector<h::CurveColumn> cols;
      for (const auto& s : curve_specs) cols.push_back(h::resolve_curve(s));
      const auto t = h::curves(cols, lo, hi, step);
      if (curves_out.empty()) {
        h::write_curves_csv(t, std::cout);
      } else {
        std::ofstream f(curves_out);
        if (!f) throw h::HarnessError("cannot write " + curves_out);
        h::write_curves_csv(t, f);
      }
      for (std::size_t c = 0; c < t.names.size(); ++c) {
        const auto n = h::sign_changes(t.derivatives[c]);
        std::fprintf(stderr, "%s: %zu derivative sign change(s)%s\n", t.names[c].c_str(), n,
                     n > 0 ? ", non-monotonic" : "");
      }
    } else if (*gradcheck) {
      return h::cmd_gradcheck(gc_seed, h::parse_precision(gc_precision), std::cout) ? 0 : 1;
    } else if (*report) {
      std::vector<std::filesystem::path> paths(inputs.begin(), inputs.end());
      h::cmd_report(paths, h::parse_report_format(format), report_out);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
