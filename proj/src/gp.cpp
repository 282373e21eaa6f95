#include "nsact/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace nsact::gp {

using expr::Formula;
using expr::NodeKind;
using expr::NodePtr;

void GpConfig::validate() const {
  if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
  if (generations < 1) throw std::invalid_argument("generations must be >= 1");
  if (tournament_size < 1) throw std::invalid_argument("tournament_size must be >= 1");
  if (!(parsimony_coefficient >= 0.0)) throw std::invalid_argument("parsimony must be >= 0");
  for (double p : {p_crossover, p_subtree_mutation, p_point_mutation, p_hoist_mutation}) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("probabilities must be in [0, 1]");
  }
  if (p_reproduction() < -1e-12) throw std::invalid_argument("operator probabilities exceed 1");
  if (init_min_depth < 2 || init_max_depth < init_min_depth) {
    throw std::invalid_argument("init depth range must satisfy 2 <= min <= max");
  }
  if (init_max_depth > limits.max_depth) {
    throw std::invalid_argument("init_max_depth exceeds the depth cap");
  }
}

namespace {

constexpr std::array<NodeKind, 6> kOperators = {NodeKind::Add, NodeKind::Sub, NodeKind::Mul,
                                                NodeKind::Sin, NodeKind::Cos, NodeKind::Abs};

NodePtr random_leaf(std::size_t n_features, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n_features - 1);
  return expr::make_feature(static_cast<int>(pick(rng)));
}

NodePtr grow_node(std::size_t n_features, std::size_t remaining, bool full, bool root, Rng& rng) {
  if (remaining <= 1) return random_leaf(n_features, rng);
  bool pick_operator = root || full;
  if (!pick_operator) {
    // gplearn-style grow: uniform over operators and terminals.
    std::uniform_int_distribution<std::size_t> pick(0, kOperators.size() + n_features - 1);
    pick_operator = pick(rng) < kOperators.size();
  }
  if (!pick_operator) return random_leaf(n_features, rng);
  std::uniform_int_distribution<std::size_t> op_pick(0, kOperators.size() - 1);
  const NodeKind kind = kOperators[op_pick(rng)];
  NodePtr lhs = grow_node(n_features, remaining - 1, full, false, rng);
  if (expr::arity(kind) == 1) return expr::make_unary(kind, std::move(lhs));
  NodePtr rhs = grow_node(n_features, remaining - 1, full, false, rng);
  return expr::make_binary(kind, std::move(lhs), std::move(rhs));
}

NodePtr subtree_impl(const NodePtr& n, std::size_t& index) {
  if (index == 0) return n;
  --index;
  if (!n->lhs) return nullptr;
  if (NodePtr hit = subtree_impl(n->lhs, index)) return hit;
  if (n->rhs) return subtree_impl(n->rhs, index);
  return nullptr;
}

NodePtr replace_impl(const NodePtr& n, std::size_t& index, const NodePtr& replacement,
                     bool& done) {
  if (index == 0) {
    done = true;
    return replacement;
  }
  --index;
  if (!n->lhs) return n;
  NodePtr lhs = replace_impl(n->lhs, index, replacement, done);
  if (done) {
    return n->rhs ? expr::make_binary(n->kind, lhs, n->rhs) : expr::make_unary(n->kind, lhs);
  }
  if (!n->rhs) return n;
  NodePtr rhs = replace_impl(n->rhs, index, replacement, done);
  if (done) return expr::make_binary(n->kind, n->lhs, rhs);
  return n;
}

std::size_t random_node(const Formula& f, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, f.node_count() - 1);
  return pick(rng);
}

Formula guarded(const Formula& original, NodePtr candidate, const expr::Limits& limits) {
  Formula child(std::move(candidate));
  return child.within(limits) ? child : original;
}

}  // namespace

NodePtr subtree_at(const NodePtr& root, std::size_t index) {
  NodePtr hit = subtree_impl(root, index);
  if (!hit) throw std::out_of_range("subtree index out of range");
  return hit;
}

NodePtr replace_at(const NodePtr& root, std::size_t index, const NodePtr& replacement) {
  bool done = false;
  NodePtr out = replace_impl(root, index, replacement, done);
  if (!done) throw std::out_of_range("subtree index out of range");
  return out;
}

Formula random_tree(std::size_t n_features, std::size_t depth, bool full, Rng& rng) {
  if (n_features == 0) throw std::invalid_argument("random_tree needs at least one feature");
  return Formula(grow_node(n_features, depth, full, depth > 1, rng));
}

std::vector<Formula> init_population(const GpConfig& cfg, std::size_t n_features) {
  cfg.validate();
  if (n_features == 0) throw std::invalid_argument("init_population needs at least one feature");
  const std::size_t n_depths = cfg.init_max_depth - cfg.init_min_depth + 1;
  std::vector<Formula> genomes;
  genomes.reserve(cfg.population_size);
  for (std::size_t slot = 0; slot < cfg.population_size; ++slot) {
    Rng rng = make_stream(cfg.seed, {0, slot});
    const bool full = slot % 2 == 0;
    const std::size_t depth = cfg.init_min_depth + (slot / 2) % n_depths;
    genomes.push_back(random_tree(n_features, depth, full, rng));
  }
  return genomes;
}

double raw_fitness(const Formula& f, const Matrix& X, std::span<const int> y) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw std::invalid_argument("raw_fitness: " + std::to_string(X.rows()) + " rows vs " +
                                std::to_string(y.size()) + " labels");
  }
  if (y.empty()) throw std::invalid_argument("raw_fitness: no rows");
  constexpr double kClamp = 1e-7;
  const double worst = -std::log(kClamp);
  const Vector z = expr::eval_batch(f, X);
  double total = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double zi = z(static_cast<Eigen::Index>(i));
    if (std::isnan(zi)) {
      total += worst;
      continue;
    }
    const double p = std::clamp(1.0 / (1.0 + std::exp(-zi)), kClamp, 1.0 - kClamp);
    total += y[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(y.size());
}

double penalized(double raw, std::size_t nodes, double coefficient) {
  return raw + coefficient * static_cast<double>(nodes);
}

Population evaluate(const std::vector<Formula>& genomes, const Matrix& X, std::span<const int> y,
                    const GpConfig& cfg) {
  std::vector<double> raw(genomes.size());
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) raw[i] = raw_fitness(genomes[i], X, y);
  };
  const std::size_t n_threads = std::clamp<std::size_t>(cfg.threads, 1, genomes.size());
  if (n_threads <= 1) {
    work(0, genomes.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (genomes.size() + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t) {
      const std::size_t b = t * chunk, e = std::min(genomes.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  Population pop;
  pop.reserve(genomes.size());
  for (std::size_t i = 0; i < genomes.size(); ++i) {
    pop.push_back({genomes[i], raw[i],
                   penalized(raw[i], genomes[i].node_count(), cfg.parsimony_coefficient)});
  }
  return pop;
}

bool fitter(const Individual& a, const Individual& b) {
  if (a.penalized_fitness != b.penalized_fitness) return a.penalized_fitness < b.penalized_fitness;
  return a.genome.node_count() < b.genome.node_count();
}

std::size_t tournament_select(const Population& pop, std::size_t k, Rng& rng) {
  if (pop.empty()) throw std::invalid_argument("tournament over an empty population");
  if (k == 0 || k > pop.size()) throw std::invalid_argument("tournament size out of range");
  std::uniform_int_distribution<std::size_t> pick(0, pop.size() - 1);
  std::size_t best = pick(rng);
  for (std::size_t i = 1; i < k; ++i) {
    const std::size_t c = pick(rng);
    if (fitter(pop[c], pop[best]) || (!fitter(pop[best], pop[c]) && c < best)) best = c;
  }
  return best;
}

Formula crossover(const Formula& a, const Formula& b, const expr::Limits& limits, Rng& rng) {
  const NodePtr donor = subtree_at(b.root_ptr(), random_node(b, rng));
  const std::size_t target = random_node(a, rng);
  return guarded(a, replace_at(a.root_ptr(), target, donor), limits);
}

MutationKind parse_mutation_kind(const std::string& name) {
  if (name == "subtree") return MutationKind::Subtree;
  if (name == "point") return MutationKind::Point;
  if (name == "hoist") return MutationKind::Hoist;
  throw std::invalid_argument("unknown mutation kind '" + name + "'");
}

Formula mutate(const Formula& f, MutationKind kind, const GpConfig& cfg, std::size_t n_features,
               Rng& rng) {
  if (n_features == 0) throw std::invalid_argument("mutate needs at least one feature");
  switch (kind) {
    case MutationKind::Subtree: {
      std::uniform_int_distribution<std::size_t> depth_pick(1, cfg.subtree_mutation_depth);
      const std::size_t depth = depth_pick(rng);
      NodePtr fresh = grow_node(n_features, depth, false, depth > 1, rng);
      return guarded(f, replace_at(f.root_ptr(), random_node(f, rng), fresh), cfg.limits);
    }
    case MutationKind::Point: {
      const std::size_t target = random_node(f, rng);
      const NodePtr old = subtree_at(f.root_ptr(), target);
      NodePtr repl;
      if (old->kind == NodeKind::Feature) {
        int idx = old->feature;
        if (n_features > 1) {
          std::uniform_int_distribution<int> pick(0, static_cast<int>(n_features) - 2);
          idx = pick(rng);
          if (idx >= old->feature) ++idx;
        }
        repl = expr::make_feature(idx);
      } else {
        std::vector<NodeKind> same;
        for (NodeKind k : kOperators) {
          if (k != old->kind && expr::arity(k) == expr::arity(old->kind)) same.push_back(k);
        }
        std::uniform_int_distribution<std::size_t> pick(0, same.size() - 1);
        const NodeKind k = same[pick(rng)];
        repl = expr::arity(k) == 1 ? expr::make_unary(k, old->lhs)
                                   : expr::make_binary(k, old->lhs, old->rhs);
      }
      return guarded(f, replace_at(f.root_ptr(), target, repl), cfg.limits);
    }
    case MutationKind::Hoist: {
      const std::size_t target = random_node(f, rng);
      const Formula sub(subtree_at(f.root_ptr(), target));
      const NodePtr hoisted = subtree_at(sub.root_ptr(), random_node(sub, rng));
      return guarded(f, replace_at(f.root_ptr(), target, hoisted), cfg.limits);
    }
  }
  throw std::invalid_argument("unknown mutation kind");
}

namespace {

std::size_t best_index(const Population& pop) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < pop.size(); ++i) {
    if (fitter(pop[i], pop[best])) best = i;
  }
  return best;
}

GenerationRecord record(std::size_t generation, const Population& pop) {
  const Individual& best = pop[best_index(pop)];
  double mean = 0.0;
  for (const auto& ind : pop) mean += ind.raw_fitness;
  mean /= static_cast<double>(pop.size());
  return {generation,     best.penalized_fitness,        best.raw_fitness, mean,
          best.genome.node_count(), expr::print_formula(best.genome)};
}

}  // namespace

EvolveResult evolve(const GpConfig& cfg, const Matrix& X, std::span<const int> y) {
  cfg.validate();
  if (X.rows() == 0 || X.cols() == 0) throw std::invalid_argument("evolve: empty data");
  if (static_cast<std::size_t>(X.rows()) != y.size()) {
    throw std::invalid_argument("evolve: row/label count mismatch");
  }
  std::size_t positives = 0;
  for (int label : y) {
    if (label != 0 && label != 1) throw std::invalid_argument("evolve: labels must be 0 or 1");
    positives += label;
  }
  if (positives == 0 || positives == y.size()) {
    throw std::invalid_argument("evolve: labels contain a single class; fitness is degenerate");
  }

  const auto n_features = static_cast<std::size_t>(X.cols());
  const std::size_t k = std::min(cfg.tournament_size, cfg.population_size);
  const double c_sub = cfg.p_crossover + cfg.p_subtree_mutation;
  const double c_point = c_sub + cfg.p_point_mutation;
  const double c_hoist = c_point + cfg.p_hoist_mutation;

  EvolveResult result{Individual{Formula(expr::make_feature(0)), 0.0, 0.0}, {}};
  Population pop = evaluate(init_population(cfg, n_features), X, y, cfg);
  result.history.generations.push_back(record(0, pop));

  for (std::size_t gen = 1; gen < cfg.generations; ++gen) {
    std::vector<Formula> children;
    children.reserve(cfg.population_size - 1);
    for (std::size_t slot = 1; slot < cfg.population_size; ++slot) {
      Rng rng = make_stream(cfg.seed, {gen, slot});
      std::uniform_real_distribution<double> roulette(0.0, 1.0);
      const double r = roulette(rng);
      const Formula& parent = pop[tournament_select(pop, k, rng)].genome;
      if (r < cfg.p_crossover) {
        const Formula& donor = pop[tournament_select(pop, k, rng)].genome;
        children.push_back(crossover(parent, donor, cfg.limits, rng));
      } else if (r < c_sub) {
        children.push_back(mutate(parent, MutationKind::Subtree, cfg, n_features, rng));
      } else if (r < c_point) {
        children.push_back(mutate(parent, MutationKind::Point, cfg, n_features, rng));
      } else if (r < c_hoist) {
        children.push_back(mutate(parent, MutationKind::Hoist, cfg, n_features, rng));
      } else {
        children.push_back(parent);
      }
    }
    Population next;
    next.reserve(cfg.population_size);
    next.push_back(pop[best_index(pop)]);
    for (auto& ind : evaluate(children, X, y, cfg)) next.push_back(std::move(ind));
    pop = std::move(next);
    result.history.generations.push_back(record(gen, pop));
  }

  result.best = pop[best_index(pop)];
  return result;
}

}  // namespace nsact::gp
