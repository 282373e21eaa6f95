#include "nsact/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>

#include "nsact/rng.hpp"

namespace nsact::data {

std::size_t Dataset::count(int label) const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), label));
}

LabelColumn parse_label_column(const std::string& text) {
  if (text == "last") return -1L;
  long value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec == std::errc() && ptr == end && !text.empty()) return value;
  return text;
}

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  if (e - b >= 2 && s[b] == '"' && s[e - 1] == '"') {
    ++b;
    --e;
  }
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell.empty()) return false;
  const char* begin = cell.data();
  if (*begin == '+') ++begin;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

Dataset load_csv(const std::string& path, const LabelColumn& label) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!blank(line)) rows.push_back(split_row(line));
  }
  if (rows.empty()) throw DataError(path + ": empty file");

  double scratch = 0.0;
  const bool has_header =
      std::any_of(rows[0].begin(), rows[0].end(),
                  [&](const std::string& c) { return !parse_number(c, scratch); });
  const std::size_t n_cols = rows[0].size();
  std::vector<std::string> names;
  if (has_header) {
    names = rows[0];
  } else {
    for (std::size_t c = 0; c < n_cols; ++c) names.push_back("f" + std::to_string(c));
  }
  const std::size_t first = has_header ? 1 : 0;
  if (rows.size() <= first) throw DataError(path + ": no data rows");
  if (n_cols < 2) throw DataError(path + ": need at least one feature and a label column");

  std::size_t label_idx = 0;
  if (const auto* name = std::get_if<std::string>(&label)) {
    auto it = std::find(names.begin(), names.end(), *name);
    if (it == names.end()) throw DataError(path + ": no column named '" + *name + "'");
    label_idx = static_cast<std::size_t>(it - names.begin());
  } else {
    const long idx = std::get<long>(label);
    const long resolved = idx < 0 ? static_cast<long>(n_cols) + idx : idx;
    if (resolved < 0 || resolved >= static_cast<long>(n_cols)) {
      throw DataError(path + ": label column index " + std::to_string(idx) + " out of range");
    }
    label_idx = static_cast<std::size_t>(resolved);
  }

  Dataset d;
  d.name = path;
  for (std::size_t c = 0; c < n_cols; ++c) {
    if (c != label_idx) d.feature_names.push_back(names[c]);
  }
  const std::size_t n_rows = rows.size() - first;
  d.X.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols - 1));
  d.y.reserve(n_rows);
  for (std::size_t r = first; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    const std::size_t line_no = r + 1;
    if (cells.size() != n_cols) {
      throw DataError(path + ": row " + std::to_string(line_no) + " has " +
                      std::to_string(cells.size()) + " cells, expected " + std::to_string(n_cols));
    }
    Eigen::Index out_col = 0;
    for (std::size_t c = 0; c < n_cols; ++c) {
      double v = 0.0;
      if (!parse_number(cells[c], v)) {
        throw DataError(path + ": non-numeric cell '" + cells[c] + "' at row " +
                        std::to_string(line_no) + ", column " + std::to_string(c + 1));
      }
      if (c == label_idx) {
        if (v != 0.0 && v != 1.0) {
          throw DataError(path + ": label column '" + names[c] + "' contains non-binary value " +
                          cells[c] + " at row " + std::to_string(line_no));
        }
        d.y.push_back(static_cast<int>(v));
      } else {
        d.X(static_cast<Eigen::Index>(r - first), out_col++) = v;
      }
    }
  }
  return d;
}

Partition stratified_partition(std::span<const int> labels, double fraction,
                               std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw DataError("fraction must lie strictly between 0 and 1");
  }
  Partition p;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.empty()) throw DataError("class " + std::to_string(cls) + " has no rows");
    const auto take_n = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(members.size())));
    if (take_n == 0) {
      throw DataError("fraction " + std::to_string(fraction) + " selects no rows of class " +
                      std::to_string(cls));
    }
    Rng rng = make_stream(seed, {static_cast<std::uint64_t>(cls)});
    std::shuffle(members.begin(), members.end(), rng);
    p.selected.insert(p.selected.end(), members.begin(), members.begin() + take_n);
    p.rest.insert(p.rest.end(), members.begin() + take_n, members.end());
  }
  std::sort(p.selected.begin(), p.selected.end());
  std::sort(p.rest.begin(), p.rest.end());
  return p;
}

Dataset take(const Dataset& d, std::span<const std::size_t> rows) {
  Dataset out;
  out.name = d.name;
  out.feature_names = d.feature_names;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), d.X.cols());
  out.y.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= d.rows()) throw DataError("row index out of range");
    out.X.row(static_cast<Eigen::Index>(i)) = d.X.row(static_cast<Eigen::Index>(rows[i]));
    out.y.push_back(d.y[rows[i]]);
  }
  return out;
}

std::pair<Dataset, Dataset> stratified_subset(const Dataset& d, double fraction,
                                              std::uint64_t seed) {
  const Partition p = stratified_partition(d.y, fraction, seed);
  return {take(d, p.selected), take(d, p.rest)};
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& d, double train_fraction,
                                             std::uint64_t seed) {
  return stratified_subset(d, train_fraction, seed);
}

Scaler fit_scaler(const Matrix& X) {
  if (X.rows() == 0) throw DataError("cannot fit a scaler on zero rows");
  Scaler s;
  s.mean = X.colwise().mean().transpose();
  s.std.resize(X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const double var = (X.col(c).array() - s.mean(c)).square().mean();
    s.std(c) = std::max(std::sqrt(var), Scaler::kStdFloor);
  }
  return s;
}

Matrix transform(const Scaler& s, const Matrix& X) {
  if (X.cols() != s.mean.size()) {
    throw DataError("scaler fitted on " + std::to_string(s.mean.size()) +
                    " features, input has " + std::to_string(X.cols()));
  }
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    if (s.std(c) <= Scaler::kStdFloor) {
      out.col(c).setZero();
    } else {
      out.col(c) = (X.col(c).array() - s.mean(c)) / s.std(c);
    }
  }
  return out;
}

int planted_rule(double x0, double x1, double x2) {
  return std::sin(x0) + x1 * x2 > 0.0 ? 1 : 0;
}

Dataset synth_planted(std::size_t n_rows, std::size_t n_features, double noise_rate,
                      std::uint64_t seed) {
  if (n_features < 3) throw DataError("planted data needs at least 3 features");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) throw DataError("noise_rate must be in [0, 0.5)");
  Rng rng = make_stream(seed, {0x706c616e74ULL});
  std::uniform_real_distribution<double> uniform(-2.0, 2.0);
  std::bernoulli_distribution flip(noise_rate);

  Dataset d;
  d.name = "planted";
  for (std::size_t c = 0; c < n_features; ++c) d.feature_names.push_back("f" + std::to_string(c));
  d.X.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_features));
  d.y.resize(n_rows);
  for (std::size_t r = 0; r < n_rows; ++r) {
    const auto ri = static_cast<Eigen::Index>(r);
    for (std::size_t c = 0; c < n_features; ++c) d.X(ri, static_cast<Eigen::Index>(c)) = uniform(rng);
    int label = planted_rule(d.X(ri, 0), d.X(ri, 1), d.X(ri, 2));
    if (noise_rate > 0.0 && flip(rng)) label = 1 - label;
    d.y[r] = label;
  }
  return d;
}

}  // namespace nsact::data
