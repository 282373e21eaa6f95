#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nsact::metrics {

/// Per-seed evaluation of one trained model on its test split.
struct EvalResult {
  double accuracy = 0.0;
  double auc = 0.0;
  std::size_t params = 0;
  double efficiency = 0.0;
  std::int64_t seed = 0;
};

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1); 0 for a single value
};

struct Aggregate {
  Summary accuracy;
  Summary auc;
  Summary efficiency;
  std::size_t params = 0;
  std::size_t n_seeds = 0;
};

struct Improvement {
  double efficiency_gain_pct = 0.0;
  double param_reduction = 0.0;
};

/// Fraction of rows where (prob >= threshold) matches the label.
double accuracy(std::span<const double> probs, std::span<const int> labels,
                double threshold = 0.5);

/// ROC AUC via average ranks (Mann-Whitney U); ties get half credit.
double auc(std::span<const double> scores, std::span<const int> labels);

/// AUC / log10(params). Requires params >= 2.
double efficiency(double auc, std::size_t params);

EvalResult make_result(double accuracy, double auc, std::size_t params, std::int64_t seed);

Summary summarize(std::span<const double> values);

/// Mean and sample std of each metric; efficiency is the mean of per-seed efficiencies.
Aggregate aggregate(std::span<const EvalResult> results);

/// Relative efficiency gain of `light` over `heavy` and heavy/light parameter ratio.
Improvement improvement(const Aggregate& light, const Aggregate& heavy);

}  // namespace nsact::metrics
