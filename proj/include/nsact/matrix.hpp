#pragma once

#include <Eigen/Dense>

namespace nsact {

/// Row-major dense matrix used for datasets and GP evaluation (rows = samples).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace nsact
