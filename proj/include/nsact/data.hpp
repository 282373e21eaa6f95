#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nsact/matrix.hpp"

namespace nsact::data {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  Matrix X;
  std::vector<int> y;
  std::vector<std::string> feature_names;
  std::string name;

  std::size_t rows() const { return y.size(); }
  std::size_t features() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t count(int label) const;
};

/// Label column by header name or by index (negative indices count from the end).
using LabelColumn = std::variant<std::string, long>;

/// "57" and "-1" are indices, "last" is -1, anything else is a column name.
LabelColumn parse_label_column(const std::string& text);

/// Reads a numeric CSV. A first row containing any non-numeric cell is a header;
/// otherwise features are named `f0, f1, ...`.
Dataset load_csv(const std::string& path, const LabelColumn& label);

/// Row indices of a partition; both lists are sorted ascending.
struct Partition {
  std::vector<std::size_t> selected;
  std::vector<std::size_t> rest;
};

/// Per class, round(fraction * n_class) rows are selected without replacement.
Partition stratified_partition(std::span<const int> labels, double fraction, std::uint64_t seed);

Dataset take(const Dataset& d, std::span<const std::size_t> rows);

/// Returns (subset, remainder).
std::pair<Dataset, Dataset> stratified_subset(const Dataset& d, double fraction,
                                              std::uint64_t seed);

/// Stratified split; returns (train, test).
std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double train_fraction,
                                             std::uint64_t seed);

/// Per-feature standardization. Standard deviations use the population formula.
struct Scaler {
  static constexpr double kStdFloor = 1e-8;
  Vector mean;
  Vector std;
};

Scaler fit_scaler(const Matrix& X);
inline Scaler fit_scaler(const Dataset& train) { return fit_scaler(train.X); }

/// (X - mean) / std per column; columns whose std is below the floor map to 0.
Matrix transform(const Scaler& s, const Matrix& X);

/// X ~ U[-2, 2]; y = 1[sin(X0) + X1 * X2 > 0] with each label flipped w.p. noise_rate.
Dataset synth_planted(std::size_t n_rows, std::size_t n_features, double noise_rate,
                      std::uint64_t seed);

/// The noiseless planted rule for a single row.
int planted_rule(double x0, double x1, double x2);

}  // namespace nsact::data
