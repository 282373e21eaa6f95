#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nsact/expr.hpp"
#include "nsact/matrix.hpp"

namespace nsact::nn {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Arch { Heavy, Light };
enum class Mode { Train, Eval };
enum class ActivationKind { Relu, Gelu, Silu, Symbolic };

std::string arch_name(Arch arch);
Arch parse_arch(const std::string& name);

/// Elementwise nonlinearity. Symbolic activations carry their derivative
/// formula, computed once at construction.
class Activation {
 public:
  static Activation relu();
  static Activation gelu();  // tanh approximation
  static Activation silu();
  /// Throws expr::ValidationError unless `f` is variable-only.
  static Activation symbolic(expr::Formula f);
  /// "relu", "gelu" or "silu".
  static Activation builtin(const std::string& name);

  ActivationKind kind() const { return kind_; }
  std::string name() const;
  const expr::Formula* formula() const { return formula_.get(); }
  const expr::Formula* derivative_formula() const { return derivative_.get(); }

  template <typename Scalar>
  Eigen::Array<Scalar, Eigen::Dynamic, 1> apply(const Eigen::Array<Scalar, Eigen::Dynamic, 1>& x) const;
  template <typename Scalar>
  Eigen::Array<Scalar, Eigen::Dynamic, 1> derivative(
      const Eigen::Array<Scalar, Eigen::Dynamic, 1>& x) const;

  double apply(double x) const;
  double derivative(double x) const;

 private:
  ActivationKind kind_ = ActivationKind::Relu;
  std::shared_ptr<const expr::Formula> formula_;
  std::shared_ptr<const expr::Formula> derivative_;
};

struct ModelConfig {
  Arch arch = Arch::Light;
  std::size_t input_dim = 1;
  Activation activation = Activation::relu();
  /// Overrides the architecture's hidden widths when non-empty (exactly two entries).
  std::vector<std::size_t> hidden_override;

  std::array<std::size_t, 2> hidden_widths() const;
};

/// Closed-form trainable parameter count for the standard widths.
std::size_t param_count(Arch arch, std::size_t input_dim);

template <typename Scalar>
using MatrixT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorT = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct Tensor {
  std::string name;
  MatrixT<Scalar> value;
};

/// Slots in Network::params(). Dense weights are (out x in); vectors are (n x 1).
enum ParamSlot : std::size_t {
  kDense1Weight, kDense1Bias, kBn1Gamma, kBn1Beta,
  kDense2Weight, kDense2Bias, kBn2Gamma, kBn2Beta,
  kHeadWeight, kHeadBias, kParamSlots
};

template <typename Scalar>
struct BatchNormStats {
  static constexpr double kMomentum = 0.1;
  static constexpr double kEpsilon = 1e-5;
  VectorT<Scalar> running_mean;
  VectorT<Scalar> running_var;
};

template <typename Scalar>
struct HiddenCache {
  MatrixT<Scalar> normalized;    // before gamma/beta
  VectorT<Scalar> inv_std;
  MatrixT<Scalar> preactivation; // gamma * normalized + beta
  MatrixT<Scalar> output;        // activation(preactivation)
};

template <typename Scalar>
struct ForwardCache {
  MatrixT<Scalar> input;
  std::array<HiddenCache<Scalar>, 2> hidden;
  Mode mode = Mode::Train;
};

/// Dense -> BatchNorm -> activation, twice, then Dense(1).
template <typename Scalar>
class Network {
 public:
  using Mat = MatrixT<Scalar>;
  using Vec = VectorT<Scalar>;
  using Gradients = std::vector<Tensor<Scalar>>;

  /// Dense weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); BN at identity.
  Network(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  std::size_t param_count() const;

  std::vector<Tensor<Scalar>>& params() { return params_; }
  const std::vector<Tensor<Scalar>>& params() const { return params_; }
  std::array<BatchNormStats<Scalar>, 2>& bn_stats() { return bn_; }
  const std::array<BatchNormStats<Scalar>, 2>& bn_stats() const { return bn_; }

  Mode mode() const { return mode_; }
  void set_mode(Mode m) { mode_ = m; }

  /// Pre-sigmoid logits. Train mode normalizes with batch statistics
  /// (denominator n) and, if `update_running_stats`, folds them into the
  /// running estimates; eval mode uses the running estimates.
  Vec forward(const Mat& batch, Mode mode, ForwardCache<Scalar>* cache = nullptr,
              bool update_running_stats = true);
  /// Eval-mode logits; never modifies the network.
  Vec infer(const Mat& batch) const;

  /// Exact gradients of the loss w.r.t. every trainable tensor, given
  /// dloss/dlogits and the cache of a train-mode forward on the same parameters.
  Gradients backward(const ForwardCache<Scalar>& cache, const Vec& dloss_dlogits) const;

  Gradients zero_gradients() const;

 private:
  Vec run(const Mat& batch, Mode mode, ForwardCache<Scalar>* cache,
          std::array<BatchNormStats<Scalar>, 2>* stats_out) const;

  ModelConfig cfg_;
  std::vector<Tensor<Scalar>> params_;
  std::array<BatchNormStats<Scalar>, 2> bn_;
  Mode mode_ = Mode::Train;
};

template <typename Scalar>
Network<Scalar> build_network(const ModelConfig& cfg, std::uint64_t seed) {
  return Network<Scalar>(cfg, seed);
}

struct LossResult {
  double loss = 0.0;
  Eigen::VectorXd dloss_dlogits;
};

/// Mean of max(z, 0) - z*y + log(1 + exp(-|z|)); gradient (sigmoid(z) - y) / n.
template <typename Scalar>
LossResult bce_loss(const VectorT<Scalar>& logits, std::span<const int> labels);

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Scalar>
struct AdamState {
  std::vector<MatrixT<Scalar>> first_moment;
  std::vector<MatrixT<Scalar>> second_moment;
};

/// One bias-corrected Adam update; `t` is the 1-based step index.
template <typename Scalar>
void adam_step(std::vector<Tensor<Scalar>>& params, const std::vector<Tensor<Scalar>>& grads,
               AdamState<Scalar>& state, std::size_t t, const AdamConfig& cfg);

struct TrainConfig {
  AdamConfig adam{};
  std::size_t batch_size = 1024;
  std::size_t epochs = 15;
  std::uint64_t seed = 42;
};

struct TrainHistory {
  std::vector<double> epoch_loss;  // row-weighted mean training loss per epoch
  std::size_t steps = 0;
};

/// Shuffled minibatch Adam. A trailing batch of a single row is merged into
/// the previous batch (batch statistics need at least two rows). Leaves the
/// network in eval mode. Throws TrainingError on a non-finite loss.
template <typename Scalar>
TrainHistory train(Network<Scalar>& net, const Matrix& X, std::span<const int> y,
                   const TrainConfig& cfg);

/// logistic(eval-mode logits). Requires the network to be in eval mode.
template <typename Scalar>
std::vector<double> predict_proba(const Network<Scalar>& net, const Matrix& X);

template <typename Scalar>
MatrixT<Scalar> to_compute(const Matrix& X);

// ---------------------------------------------------------------------------
// Gradient checking

/// Defaults are tuned for double precision: at step 1e-3 the two-point
/// truncation error alone is ~1e-4 relative, and pre-BN biases (true gradient
/// zero) need a floor well above roundoff / step.
struct GradcheckOptions {
  double step = 1e-5;
  double tolerance = 1e-5;
  /// Denominator floor for the relative error |a - n| / max(|a|, |n|, floor).
  double floor = 1e-4;
};

struct GradcheckGroup {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  bool pass = true;
};

struct GradcheckReport {
  std::vector<GradcheckGroup> groups;
  bool all_pass() const;
  double max_rel_error() const;
};

using GradientFn = std::function<std::vector<Tensor<double>>(
    Network<double>&, const MatrixT<double>&, std::span<const int>)>;

/// Analytic gradients from a train-mode forward followed by backward.
std::vector<Tensor<double>> analytic_gradients(Network<double>& net, const MatrixT<double>& X,
                                               std::span<const int> y);

/// Same, but computed by a single-precision copy of the network.
std::vector<Tensor<double>> analytic_gradients_f32(Network<double>& net, const MatrixT<double>& X,
                                                   std::span<const int> y);

/// Central differences on the mean BCE loss, one group per parameter tensor.
/// Running statistics are left untouched.
GradcheckReport gradcheck(Network<double>& net, const MatrixT<double>& X, std::span<const int> y,
                          const GradcheckOptions& opts = {},
                          const GradientFn& analytic = analytic_gradients);

}  // namespace nsact::nn
