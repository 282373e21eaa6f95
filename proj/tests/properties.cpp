#include "properties.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "nsact/data.hpp"
#include "nsact/expr.hpp"
#include "nsact/gp.hpp"
#include "nsact/metrics.hpp"
#include "nsact/nn.hpp"
#include "oracles.hpp"

namespace props {

namespace {

void fail(Outcome& o, const std::string& what) {
  if (o.failures++ == 0) o.first_failure = what;
}

bool close(double a, double b, double tol) {
  return std::fabs(a - b) <= tol * std::max(1.0, std::max(std::fabs(a), std::fabs(b)));
}

}  // namespace

Outcome expression_round_trip(std::size_t cases, std::uint64_t seed) {
  Outcome o{"expression round-trip"};
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++o.cases) {
    const bool variable = c % 2 == 1;
    const std::string text = oracle::random_text(rng, 1 + static_cast<int>(c % 7), 30, variable);
    const auto f = nsact::expr::parse_formula(text);
    const std::string printed = nsact::expr::print_formula(f);
    const auto again = nsact::expr::parse_formula(printed);
    if (!(again == f) || nsact::expr::print_formula(again) != printed || printed != text) {
      fail(o, text + " -> " + printed);
    }
  }
  return o;
}

Outcome simplify_soundness(std::size_t cases, std::uint64_t seed) {
  Outcome o{"simplify soundness"};
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> point(-3.0, 3.0);
  for (std::size_t c = 0; c < cases; ++c, ++o.cases) {
    std::string text = oracle::random_text(rng, 2 + static_cast<int>(c % 5), 1, true);
    // Seed deliberate redundancy so the rewrite rules actually fire.
    if (c % 3 == 0) text = "add(" + text + ", sub(" + text + ", " + text + "))";
    if (c % 3 == 1) text = "mul(abs(abs(" + text + ")), sub(add(x, x), x))";
    const auto f = nsact::expr::parse_formula(text);
    const auto s = nsact::expr::simplify(f);
    if (s.node_count() > f.node_count()) fail(o, "simplify grew " + text);
    for (int k = 0; k < 20; ++k) {
      const double x = point(rng);
      const double want = oracle::eval_text_at(text, x);
      const double got = nsact::expr::eval_scalar(s, x);
      if (!close(got, want, 1e-12)) {
        std::ostringstream msg;
        msg << text << " at " << x << ": " << got << " vs " << want;
        fail(o, msg.str());
        break;
      }
    }
  }
  return o;
}

Outcome auc_brute_force(std::size_t cases, std::uint64_t seed) {
  Outcome o{"AUC brute-force equivalence"};
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++o.cases) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(2, 200)(rng);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    // Coarse scores on odd cases so ties are common.
    const int levels = c % 2 ? 5 : 1000000;
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] = std::uniform_int_distribution<int>(0, levels)(rng) / static_cast<double>(levels);
      labels[i] = std::bernoulli_distribution(0.4)(rng);
    }
    labels[0] = 0;
    labels[1] = 1;
    const double want = oracle::brute_force_auc(scores, labels);
    const double got = nsact::metrics::auc(scores, labels);
    if (std::fabs(got - want) > 1e-12) fail(o, "n=" + std::to_string(n));
  }
  return o;
}

Outcome split_partition(std::size_t cases, std::uint64_t seed) {
  Outcome o{"split partition and determinism"};
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++o.cases) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 400)(rng);
    std::vector<int> labels(n);
    const double p = std::uniform_real_distribution<double>(0.2, 0.8)(rng);
    for (auto& l : labels) l = std::bernoulli_distribution(p)(rng);
    labels[0] = 0;
    labels[1] = 1;
    for (int k = 2; k < 12; ++k) labels[static_cast<std::size_t>(k)] = k % 2;
    const double fraction = c % 2 ? 0.8 : 0.1;
    const std::uint64_t s = rng();
    const auto a = nsact::data::stratified_partition(labels, fraction, s);
    const auto b = nsact::data::stratified_partition(labels, fraction, s);
    if (a.selected != b.selected || a.rest != b.rest) {
      fail(o, "non-deterministic");
      continue;
    }
    std::vector<std::size_t> all(a.selected);
    all.insert(all.end(), a.rest.begin(), a.rest.end());
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expect(n);
    std::iota(expect.begin(), expect.end(), 0);
    if (all != expect) {
      fail(o, "not a partition, n=" + std::to_string(n));
      continue;
    }
    for (int cls : {0, 1}) {
      const auto n_cls = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), cls));
      const auto picked = static_cast<std::size_t>(std::count_if(
          a.selected.begin(), a.selected.end(), [&](std::size_t i) { return labels[i] == cls; }));
      const double ideal = fraction * static_cast<double>(n_cls);
      if (std::fabs(static_cast<double>(picked) - ideal) > 0.5 + 1e-9) fail(o, "class count off");
    }
  }
  return o;
}

Outcome batchnorm_train_statistics(std::size_t cases, std::uint64_t seed) {
  Outcome o{"BN train-mode statistics"};
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++o.cases) {
    const std::size_t rows = std::uniform_int_distribution<std::size_t>(2, 64)(rng);
    const std::size_t dim = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    nsact::nn::ModelConfig cfg;
    cfg.input_dim = dim;
    cfg.hidden_override = {std::uniform_int_distribution<std::size_t>(1, 9)(rng),
                           std::uniform_int_distribution<std::size_t>(1, 5)(rng)};
    cfg.activation = c % 2 ? nsact::nn::Activation::silu() : nsact::nn::Activation::relu();
    nsact::nn::Network<double> net(cfg, rng());
    nsact::nn::MatrixT<double> X(rows, dim);
    std::normal_distribution<double> normal(1.5, 3.0);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);

    const auto before = net.bn_stats();
    nsact::nn::ForwardCache<double> cache;
    net.forward(X, nsact::nn::Mode::Train, &cache);
    for (std::size_t layer = 0; layer < 2; ++layer) {
      const auto& z = cache.hidden[layer].normalized;
      for (Eigen::Index j = 0; j < z.cols(); ++j) {
        // Features that are constant across the batch normalize to 0, not unit variance.
        double mean = 0.0, var = 0.0;
        for (Eigen::Index i = 0; i < z.rows(); ++i) mean += z(i, j);
        mean /= static_cast<double>(rows);
        for (Eigen::Index i = 0; i < z.rows(); ++i) var += (z(i, j) - mean) * (z(i, j) - mean);
        var /= static_cast<double>(rows);
        if (std::fabs(mean) > 1e-6) fail(o, "normalized mean " + std::to_string(mean));
        // With eps = 1e-5 the normalized variance is v / (v + eps); check against that.
        const auto& inv_std = cache.hidden[layer].inv_std;
        const double raw_var = 1.0 / (inv_std(j) * inv_std(j)) - 1e-5;
        const double expected = raw_var / (raw_var + 1e-5);
        if (std::fabs(var - expected) > 1e-4) fail(o, "normalized variance " + std::to_string(var));
        if (raw_var > 1.0 && std::fabs(var - 1.0) > 1e-4) fail(o, "variance not unit");
      }
      // running <- 0.9 running + 0.1 batch (biased variance).
      const auto& after = net.bn_stats()[layer];
      for (Eigen::Index j = 0; j < after.running_var.size(); ++j) {
        if (after.running_var(j) < 0.0) fail(o, "negative running variance");
        const double inv = cache.hidden[layer].inv_std(j);
        const double batch_var = 1.0 / (inv * inv) - 1e-5;
        const double want = 0.9 * before[layer].running_var(j) + 0.1 * batch_var;
        if (!close(after.running_var(j), want, 1e-9)) fail(o, "running variance update");
      }
    }
  }
  return o;
}

Outcome elitist_monotonicity(std::size_t cases, std::uint64_t seed) {
  Outcome o{"elitist monotonicity"};
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < cases; ++c, ++o.cases) {
    const std::size_t rows = 40;
    const std::size_t features = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
    nsact::Matrix X(rows, features);
    std::vector<int> y(rows);
    std::normal_distribution<double> normal;
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(rng);
    for (std::size_t i = 0; i < rows; ++i) y[i] = static_cast<int>((X(i, 0) + 0.5 * normal(rng)) > 0);
    y[0] = 0;
    y[1] = 1;
    nsact::gp::GpConfig cfg;
    cfg.population_size = std::uniform_int_distribution<std::size_t>(2, 16)(rng);
    cfg.generations = std::uniform_int_distribution<std::size_t>(1, 6)(rng);
    cfg.tournament_size = std::uniform_int_distribution<std::size_t>(1, 8)(rng);
    cfg.init_max_depth = 4;
    cfg.seed = rng();
    const auto result = nsact::gp::evolve(cfg, X, y);
    const auto& gens = result.history.generations;
    if (gens.size() != cfg.generations) fail(o, "history length");
    for (std::size_t g = 1; g < gens.size(); ++g) {
      if (gens[g].best_penalized > gens[g - 1].best_penalized) {
        fail(o, "best penalized fitness increased at generation " + std::to_string(g));
      }
    }
    if (!gens.empty() && result.best.penalized_fitness != gens.back().best_penalized) fail(o, "best mismatch");
  }
  return o;
}

}  // namespace props
