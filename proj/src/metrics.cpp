#include "nsact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace nsact::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
  if (a != b) {
    throw std::invalid_argument("length mismatch: " + std::to_string(a) + " vs " +
                                std::to_string(b));
  }
}

}  // namespace

double accuracy(std::span<const double> probs, std::span<const int> labels, double threshold) {
  check_lengths(probs.size(), labels.size());
  if (probs.empty()) throw std::invalid_argument("accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const int predicted = probs[i] >= threshold ? 1 : 0;
    correct += predicted == labels[i];
  }
  return static_cast<double>(correct) / static_cast<double>(probs.size());
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores.size(), labels.size());
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of (1-based, tie-averaged) ranks of the positives.
  double positive_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        positive_rank_sum += avg_rank;
        ++n_pos;
      } else if (labels[order[k]] != 0) {
        throw std::invalid_argument("labels must be 0 or 1");
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("AUC requires both classes");
  const double np = static_cast<double>(n_pos);
  const double u = positive_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

double efficiency(double auc_value, std::size_t params) {
  if (params < 2) throw std::invalid_argument("efficiency requires at least 2 parameters");
  return auc_value / std::log10(static_cast<double>(params));
}

EvalResult make_result(double acc, double auc_value, std::size_t params, std::int64_t seed) {
  return {acc, auc_value, params, efficiency(auc_value, params), seed};
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summary of an empty set");
  const double n = static_cast<double>(values.size());
  // Shifted by the first value so identical inputs give an exact mean and zero spread.
  const double shift = values.front();
  double offset = 0.0;
  for (double v : values) offset += v - shift;
  const double mean = shift + offset / n;
  if (values.size() == 1) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0))};
}

Aggregate aggregate(std::span<const EvalResult> results) {
  if (results.empty()) throw std::invalid_argument("aggregate of no results");
  std::vector<double> acc, auc_values, eff;
  for (const auto& r : results) {
    if (r.params != results.front().params) {
      throw std::invalid_argument("cannot aggregate results with different parameter counts");
    }
    acc.push_back(r.accuracy);
    auc_values.push_back(r.auc);
    eff.push_back(r.efficiency);
  }
  Aggregate a;
  a.accuracy = summarize(acc);
  a.auc = summarize(auc_values);
  a.efficiency = summarize(eff);
  a.params = results.front().params;
  a.n_seeds = results.size();
  return a;
}

Improvement improvement(const Aggregate& light, const Aggregate& heavy) {
  if (light.n_seeds == 0 || heavy.n_seeds == 0) {
    throw std::invalid_argument("improvement requires nonempty aggregates");
  }
  if (heavy.efficiency.mean == 0.0) throw std::invalid_argument("heavy efficiency is zero");
  if (light.params == 0) throw std::invalid_argument("light parameter count is zero");
  return {(light.efficiency.mean - heavy.efficiency.mean) / heavy.efficiency.mean * 100.0,
          static_cast<double>(heavy.params) / static_cast<double>(light.params)};
}

}  // namespace nsact::metrics
