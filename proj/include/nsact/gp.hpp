#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nsact/expr.hpp"
#include "nsact/matrix.hpp"
#include "nsact/rng.hpp"

namespace nsact::gp {

struct GpConfig {
  std::size_t population_size = 500;
  std::size_t generations = 5;
  double parsimony_coefficient = 0.01;
  std::size_t tournament_size = 20;
  double p_crossover = 0.90;
  double p_subtree_mutation = 0.05;
  double p_point_mutation = 0.03;
  double p_hoist_mutation = 0.01;
  std::size_t init_min_depth = 2;
  std::size_t init_max_depth = 6;
  std::size_t subtree_mutation_depth = 4;
  expr::Limits limits{};
  std::uint64_t seed = 42;
  /// Fitness evaluation threads; results do not depend on this value.
  unsigned threads = 1;

  double p_reproduction() const {
    return 1.0 - (p_crossover + p_subtree_mutation + p_point_mutation + p_hoist_mutation);
  }
  /// Throws std::invalid_argument on an inconsistent configuration.
  void validate() const;
};

struct Individual {
  expr::Formula genome;
  double raw_fitness = 0.0;        // mean log-loss, lower is better
  double penalized_fitness = 0.0;  // raw + parsimony * node_count
};

using Population = std::vector<Individual>;

struct GenerationRecord {
  std::size_t generation = 0;
  double best_penalized = 0.0;
  double best_raw = 0.0;
  double mean_raw = 0.0;
  std::size_t best_nodes = 0;
  std::string best_formula;
};

struct EvolutionHistory {
  std::vector<GenerationRecord> generations;
};

struct EvolveResult {
  Individual best;
  EvolutionHistory history;
};

/// Random genome of the given depth; `full` trees reach the depth on every branch,
/// `grow` trees stop early at random. The root is always an operator.
expr::Formula random_tree(std::size_t n_features, std::size_t depth, bool full, Rng& rng);

/// Ramped half-and-half over [init_min_depth, init_max_depth]. Slot i uses its own
/// derived stream, so the population depends only on (cfg.seed, n_features).
std::vector<expr::Formula> init_population(const GpConfig& cfg, std::size_t n_features);

/// Mean binary log-loss of logistic(f(X)) with probabilities clamped to [1e-7, 1 - 1e-7].
double raw_fitness(const expr::Formula& f, const Matrix& X, std::span<const int> y);

double penalized(double raw, std::size_t nodes, double coefficient);

Population evaluate(const std::vector<expr::Formula>& genomes, const Matrix& X,
                    std::span<const int> y, const GpConfig& cfg);

/// Orders individuals by penalized fitness, then node count; returns true if a beats b.
bool fitter(const Individual& a, const Individual& b);

/// Index of the best of `k` uniform draws (with replacement). Ties go to fewer
/// nodes, then to the earlier population index.
std::size_t tournament_select(const Population& pop, std::size_t k, Rng& rng);

/// Replaces a uniformly chosen subtree of `a` by a uniformly chosen subtree of `b`.
/// Returns `a` unchanged if the child would exceed `limits`.
expr::Formula crossover(const expr::Formula& a, const expr::Formula& b,
                        const expr::Limits& limits, Rng& rng);

enum class MutationKind { Subtree, Point, Hoist };
MutationKind parse_mutation_kind(const std::string& name);

expr::Formula mutate(const expr::Formula& f, MutationKind kind, const GpConfig& cfg,
                     std::size_t n_features, Rng& rng);

/// Full run: evaluate, keep the best unchanged, refill from tournament winners.
EvolveResult evolve(const GpConfig& cfg, const Matrix& X, std::span<const int> y);

// Subtree addressing in preorder, exposed for tests.
expr::NodePtr subtree_at(const expr::NodePtr& root, std::size_t index);
expr::NodePtr replace_at(const expr::NodePtr& root, std::size_t index,
                         const expr::NodePtr& replacement);

}  // namespace nsact::gp
