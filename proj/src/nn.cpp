#include "nsact/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "nsact/rng.hpp"

namespace nsact::nn {

std::string arch_name(Arch arch) { return arch == Arch::Heavy ? "heavy" : "light"; }

Arch parse_arch(const std::string& name) {
  if (name == "heavy" || name == "Heavy") return Arch::Heavy;
  if (name == "light" || name == "Light") return Arch::Light;
  throw std::invalid_argument("unknown architecture '" + name + "' (expected heavy|light)");
}

// ---------------------------------------------------------------------------
// Activations

namespace {

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2 / pi)
constexpr double kGeluA = 0.044715;

template <typename Scalar>
using Col = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Col<Scalar> logistic(const Col<Scalar>& x) {
  return x.unaryExpr([](Scalar v) {
    if (v >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-v));
    const Scalar e = std::exp(v);
    return e / (Scalar(1) + e);
  });
}

double logistic(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

}  // namespace

Activation Activation::relu() { return Activation{}; }

Activation Activation::gelu() {
  Activation a;
  a.kind_ = ActivationKind::Gelu;
  return a;
}

Activation Activation::silu() {
  Activation a;
  a.kind_ = ActivationKind::Silu;
  return a;
}

Activation Activation::symbolic(expr::Formula f) {
  if (!f.is_activation()) {
    throw expr::ValidationError("symbolic activation must be variable-only; generalize it first");
  }
  Activation a;
  a.kind_ = ActivationKind::Symbolic;
  a.derivative_ = std::make_shared<const expr::Formula>(expr::differentiate(f));
  a.formula_ = std::make_shared<const expr::Formula>(std::move(f));
  return a;
}

Activation Activation::builtin(const std::string& name) {
  if (name == "relu") return relu();
  if (name == "gelu") return gelu();
  if (name == "silu") return silu();
  throw std::invalid_argument("unknown activation '" + name + "' (expected relu|gelu|silu)");
}

std::string Activation::name() const {
  switch (kind_) {
    case ActivationKind::Relu: return "relu";
    case ActivationKind::Gelu: return "gelu";
    case ActivationKind::Silu: return "silu";
    case ActivationKind::Symbolic: return expr::print_formula(*formula_);
  }
  return "?";
}

template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> Activation::apply(const Col<Scalar>& x) const {
  switch (kind_) {
    case ActivationKind::Relu:
      return x.max(Scalar(0));
    case ActivationKind::Gelu: {
      const Col<Scalar> t = (Scalar(kGeluC) * (x + Scalar(kGeluA) * x.cube())).tanh();
      return Scalar(0.5) * x * (Scalar(1) + t);
    }
    case ActivationKind::Silu:
      return x * logistic<Scalar>(x);
    case ActivationKind::Symbolic:
      return expr::eval_array<Scalar>(*formula_, x);
  }
  return x;
}

template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> Activation::derivative(const Col<Scalar>& x) const {
  switch (kind_) {
    case ActivationKind::Relu:
      return (x > Scalar(0)).template cast<Scalar>();
    case ActivationKind::Gelu: {
      const Col<Scalar> t = (Scalar(kGeluC) * (x + Scalar(kGeluA) * x.cube())).tanh();
      const Col<Scalar> du = Scalar(kGeluC) * (Scalar(1) + Scalar(3 * kGeluA) * x.square());
      return Scalar(0.5) * (Scalar(1) + t) + Scalar(0.5) * x * (Scalar(1) - t.square()) * du;
    }
    case ActivationKind::Silu: {
      const Col<Scalar> s = logistic<Scalar>(x);
      return s * (Scalar(1) + x * (Scalar(1) - s));
    }
    case ActivationKind::Symbolic:
      return expr::eval_array<Scalar>(*derivative_, x);
  }
  return x;
}

double Activation::apply(double x) const {
  Col<double> a(1);
  a << x;
  return apply<double>(a)(0);
}

double Activation::derivative(double x) const {
  Col<double> a(1);
  a << x;
  return derivative<double>(a)(0);
}

template Col<float> Activation::apply<float>(const Col<float>&) const;
template Col<double> Activation::apply<double>(const Col<double>&) const;
template Col<float> Activation::derivative<float>(const Col<float>&) const;
template Col<double> Activation::derivative<double>(const Col<double>&) const;

// ---------------------------------------------------------------------------
// Network

std::array<std::size_t, 2> ModelConfig::hidden_widths() const {
  if (!hidden_override.empty()) {
    if (hidden_override.size() != 2 || hidden_override[0] == 0 || hidden_override[1] == 0) {
      throw std::invalid_argument("hidden_override needs exactly two positive widths");
    }
    return {hidden_override[0], hidden_override[1]};
  }
  return arch == Arch::Heavy ? std::array<std::size_t, 2>{200, 100}
                             : std::array<std::size_t, 2>{64, 32};
}

std::size_t param_count(Arch arch, std::size_t input_dim) {
  return arch == Arch::Heavy ? 200 * input_dim + 21001 : 64 * input_dim + 2369;
}

namespace {

template <typename Scalar>
MatrixT<Scalar> uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  MatrixT<Scalar> m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = static_cast<Scalar>(u(rng));
  return m;
}

template <typename Scalar>
MatrixT<Scalar> apply_matrix(const Activation& act, const MatrixT<Scalar>& m) {
  const Col<Scalar> flat = Eigen::Map<const Col<Scalar>>(m.data(), m.size());
  const Col<Scalar> out = act.apply<Scalar>(flat);
  return Eigen::Map<const MatrixT<Scalar>>(out.data(), m.rows(), m.cols());
}

template <typename Scalar>
MatrixT<Scalar> derivative_matrix(const Activation& act, const MatrixT<Scalar>& m) {
  const Col<Scalar> flat = Eigen::Map<const Col<Scalar>>(m.data(), m.size());
  const Col<Scalar> out = act.derivative<Scalar>(flat);
  return Eigen::Map<const MatrixT<Scalar>>(out.data(), m.rows(), m.cols());
}

}  // namespace

template <typename Scalar>
Network<Scalar>::Network(ModelConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)) {
  if (cfg_.input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
  const auto [h1, h2] = cfg_.hidden_widths();
  const std::array<std::size_t, 3> fan_in{cfg_.input_dim, h1, h2};
  const std::array<std::size_t, 3> fan_out{h1, h2, 1};
  const std::array<const char*, 3> dense_names{"dense1", "dense2", "head"};

  params_.resize(kParamSlots);
  const std::array<std::size_t, 3> weight_slot{kDense1Weight, kDense2Weight, kHeadWeight};
  for (std::size_t l = 0; l < 3; ++l) {
    Rng rng = make_stream(seed, {0x6e6e, l});
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in[l]));
    const auto out = static_cast<Eigen::Index>(fan_out[l]);
    const auto in = static_cast<Eigen::Index>(fan_in[l]);
    params_[weight_slot[l]] = {std::string(dense_names[l]) + ".weight",
                               uniform_matrix<Scalar>(out, in, bound, rng)};
    params_[weight_slot[l] + 1] = {std::string(dense_names[l]) + ".bias",
                                   uniform_matrix<Scalar>(out, 1, bound, rng)};
  }
  const std::array<std::size_t, 2> widths{h1, h2};
  for (std::size_t b = 0; b < 2; ++b) {
    const auto w = static_cast<Eigen::Index>(widths[b]);
    const std::string prefix = "bn" + std::to_string(b + 1);
    const std::size_t gamma_slot = b == 0 ? kBn1Gamma : kBn2Gamma;
    params_[gamma_slot] = {prefix + ".gamma", Mat::Ones(w, 1)};
    params_[gamma_slot + 1] = {prefix + ".beta", Mat::Zero(w, 1)};
    bn_[b].running_mean = Vec::Zero(w);
    bn_[b].running_var = Vec::Ones(w);
  }
}

template <typename Scalar>
std::size_t Network<Scalar>::param_count() const {
  std::size_t n = 0;
  for (const auto& t : params_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

template <typename Scalar>
typename Network<Scalar>::Vec Network<Scalar>::forward(const Mat& batch, Mode mode,
                                                       ForwardCache<Scalar>* cache,
                                                       bool update_running_stats) {
  return run(batch, mode, cache, update_running_stats && mode == Mode::Train ? &bn_ : nullptr);
}

template <typename Scalar>
typename Network<Scalar>::Vec Network<Scalar>::infer(const Mat& batch) const {
  return run(batch, Mode::Eval, nullptr, nullptr);
}

template <typename Scalar>
typename Network<Scalar>::Vec Network<Scalar>::run(
    const Mat& batch, Mode mode, ForwardCache<Scalar>* cache,
    std::array<BatchNormStats<Scalar>, 2>* stats_out) const {
  if (batch.cols() != static_cast<Eigen::Index>(cfg_.input_dim)) {
    throw std::invalid_argument("batch has " + std::to_string(batch.cols()) +
                                " columns, network expects " + std::to_string(cfg_.input_dim));
  }
  const Eigen::Index n = batch.rows();
  if (mode == Mode::Train && n < 2) {
    throw std::invalid_argument("train-mode forward needs at least 2 rows for batch statistics");
  }
  if (cache) {
    cache->input = batch;
    cache->mode = mode;
  }

  const Scalar eps = static_cast<Scalar>(BatchNormStats<Scalar>::kEpsilon);
  const Scalar momentum = static_cast<Scalar>(BatchNormStats<Scalar>::kMomentum);
  const std::array<std::size_t, 2> weight{kDense1Weight, kDense2Weight};
  const std::array<std::size_t, 2> gamma{kBn1Gamma, kBn2Gamma};

  Mat h = batch;
  for (std::size_t l = 0; l < 2; ++l) {
    Mat z = h * params_[weight[l]].value.transpose();
    z.rowwise() += params_[weight[l] + 1].value.col(0).transpose();

    Vec mean, var;
    if (mode == Mode::Train) {
      mean = z.colwise().mean().transpose();
      var = (z.rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
      if (stats_out) {
        auto& s = (*stats_out)[l];
        s.running_mean = (Scalar(1) - momentum) * s.running_mean + momentum * mean;
        s.running_var = (Scalar(1) - momentum) * s.running_var + momentum * var;
      }
    } else {
      mean = bn_[l].running_mean;
      var = bn_[l].running_var;
    }
    const Vec inv_std = (var.array() + eps).rsqrt().matrix();
    Mat normalized = (z.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array();
    Mat pre = (normalized.array().rowwise() * params_[gamma[l]].value.col(0).transpose().array())
                  .matrix();
    pre.rowwise() += params_[gamma[l] + 1].value.col(0).transpose();
    h = apply_matrix<Scalar>(cfg_.activation, pre);
    if (cache) {
      cache->hidden[l].normalized = std::move(normalized);
      cache->hidden[l].inv_std = inv_std;
      cache->hidden[l].preactivation = std::move(pre);
      cache->hidden[l].output = h;
    }
  }
  Vec logits = h * params_[kHeadWeight].value.row(0).transpose();
  logits.array() += params_[kHeadBias].value(0, 0);
  return logits;
}

template <typename Scalar>
typename Network<Scalar>::Gradients Network<Scalar>::zero_gradients() const {
  Gradients g;
  g.reserve(params_.size());
  for (const auto& t : params_) g.push_back({t.name, Mat::Zero(t.value.rows(), t.value.cols())});
  return g;
}

template <typename Scalar>
typename Network<Scalar>::Gradients Network<Scalar>::backward(const ForwardCache<Scalar>& cache,
                                                              const Vec& dlogits) const {
  if (cache.mode != Mode::Train) throw std::invalid_argument("backward needs a train-mode cache");
  const Eigen::Index n = cache.input.rows();
  if (dlogits.size() != n) throw std::invalid_argument("upstream gradient length mismatch");

  Gradients g = zero_gradients();
  const Mat& h2 = cache.hidden[1].output;
  g[kHeadWeight].value = dlogits.transpose() * h2;
  g[kHeadBias].value(0, 0) = dlogits.sum();
  Mat upstream = dlogits * params_[kHeadWeight].value;  // n x h2

  const std::array<std::size_t, 2> weight{kDense1Weight, kDense2Weight};
  const std::array<std::size_t, 2> gamma{kBn1Gamma, kBn2Gamma};
  const Scalar inv_n = Scalar(1) / static_cast<Scalar>(n);
  for (int l = 1; l >= 0; --l) {
    const HiddenCache<Scalar>& hc = cache.hidden[static_cast<std::size_t>(l)];
    const Mat dpre = (upstream.array() * derivative_matrix<Scalar>(cfg_.activation, hc.preactivation).array()).matrix();
    g[gamma[l]].value = (dpre.array() * hc.normalized.array()).colwise().sum().transpose().matrix();
    g[gamma[l] + 1].value = dpre.colwise().sum().transpose();

    // Batch-norm backward including the batch mean/variance terms.
    const Mat dnorm = (dpre.array().rowwise() * params_[gamma[l]].value.col(0).transpose().array()).matrix();
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> sum_d = dnorm.colwise().sum().array();
    const Eigen::Array<Scalar, 1, Eigen::Dynamic> sum_dx =
        (dnorm.array() * hc.normalized.array()).colwise().sum();
    Mat dz = ((dnorm.array() * static_cast<Scalar>(n)).rowwise() - sum_d).matrix();
    dz.array() -= hc.normalized.array().rowwise() * sum_dx;
    dz.array().rowwise() *= hc.inv_std.transpose().array() * inv_n;

    const Mat& input = l == 0 ? cache.input : cache.hidden[0].output;
    g[weight[l]].value = dz.transpose() * input;
    g[weight[l] + 1].value = dz.colwise().sum().transpose();
    if (l > 0) upstream = dz * params_[weight[l]].value;
  }
  return g;
}

template class Network<float>;
template class Network<double>;

// ---------------------------------------------------------------------------
// Loss and optimizer

template <typename Scalar>
LossResult bce_loss(const VectorT<Scalar>& logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.size()) != labels.size() || labels.empty()) {
    throw std::invalid_argument("bce_loss: logits and labels need equal nonzero length");
  }
  const double n = static_cast<double>(labels.size());
  LossResult r;
  r.dloss_dlogits.resize(logits.size());
  double total = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y != 0 && y != 1) throw std::invalid_argument("bce_loss: labels must be 0 or 1");
    const double z = static_cast<double>(logits(i));
    total += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
    r.dloss_dlogits(i) = (logistic(z) - y) / n;
  }
  r.loss = total / n;
  return r;
}

template LossResult bce_loss<float>(const VectorT<float>&, std::span<const int>);
template LossResult bce_loss<double>(const VectorT<double>&, std::span<const int>);

template <typename Scalar>
void adam_step(std::vector<Tensor<Scalar>>& params, const std::vector<Tensor<Scalar>>& grads,
               AdamState<Scalar>& state, std::size_t t, const AdamConfig& cfg) {
  if (t < 1) throw std::invalid_argument("adam_step: t must be >= 1");
  if (grads.size() != params.size()) throw std::invalid_argument("adam_step: tensor count mismatch");
  if (state.first_moment.empty()) {
    for (const auto& p : params) {
      state.first_moment.push_back(MatrixT<Scalar>::Zero(p.value.rows(), p.value.cols()));
      state.second_moment.push_back(MatrixT<Scalar>::Zero(p.value.rows(), p.value.cols()));
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match parameters");
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(t));
  const auto b1 = static_cast<Scalar>(cfg.beta1);
  const auto b2 = static_cast<Scalar>(cfg.beta2);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].value;
    const auto& g = grads[i].value;
    if (g.rows() != p.rows() || g.cols() != p.cols() ||
        state.first_moment[i].rows() != p.rows() || state.first_moment[i].cols() != p.cols()) {
      throw std::invalid_argument("adam_step: shape mismatch for " + params[i].name);
    }
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    const auto m_hat = m.array() / static_cast<Scalar>(bc1);
    const auto v_hat = v.array() / static_cast<Scalar>(bc2);
    p.array() -= static_cast<Scalar>(cfg.learning_rate) * m_hat /
                 (v_hat.sqrt() + static_cast<Scalar>(cfg.epsilon));
  }
}

template void adam_step<float>(std::vector<Tensor<float>>&, const std::vector<Tensor<float>>&,
                               AdamState<float>&, std::size_t, const AdamConfig&);
template void adam_step<double>(std::vector<Tensor<double>>&, const std::vector<Tensor<double>>&,
                                AdamState<double>&, std::size_t, const AdamConfig&);

// ---------------------------------------------------------------------------
// Training and inference

template <typename Scalar>
MatrixT<Scalar> to_compute(const Matrix& X) {
  return X.template cast<Scalar>();
}

template MatrixT<float> to_compute<float>(const Matrix&);
template MatrixT<double> to_compute<double>(const Matrix&);

template <typename Scalar>
TrainHistory train(Network<Scalar>& net, const Matrix& X, std::span<const int> y,
                   const TrainConfig& cfg) {
  if (cfg.batch_size < 1 || cfg.epochs < 1) throw std::invalid_argument("batch_size and epochs must be >= 1");
  const auto n = static_cast<std::size_t>(X.rows());
  if (n != y.size()) throw std::invalid_argument("train: row/label count mismatch");
  if (n < 2) throw std::invalid_argument("train: need at least two rows");

  const MatrixT<Scalar> data = to_compute<Scalar>(X);
  const auto d = data.cols();
  std::vector<std::size_t> order(n);
  AdamState<Scalar> adam;
  TrainHistory history;
  net.set_mode(Mode::Train);

  std::vector<std::pair<std::size_t, std::size_t>> batches;
  for (std::size_t b = 0; b < n; b += cfg.batch_size) batches.emplace_back(b, std::min(n, b + cfg.batch_size));
  if (batches.size() > 1 && batches.back().second - batches.back().first == 1) {
    batches.pop_back();
    batches.back().second = n;
  }

  MatrixT<Scalar> batch;
  std::vector<int> labels;
  ForwardCache<Scalar> cache;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = make_stream(cfg.seed, {0x7368, epoch});
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_total = 0.0;
    for (const auto& [begin, end] : batches) {
      const auto rows = static_cast<Eigen::Index>(end - begin);
      batch.resize(rows, d);
      labels.resize(end - begin);
      for (std::size_t i = begin; i < end; ++i) {
        batch.row(static_cast<Eigen::Index>(i - begin)) = data.row(static_cast<Eigen::Index>(order[i]));
        labels[i - begin] = y[order[i]];
      }
      const auto logits = net.forward(batch, Mode::Train, &cache);
      const LossResult loss = bce_loss<Scalar>(logits, labels);
      if (!std::isfinite(loss.loss)) {
        throw TrainingError("non-finite training loss at epoch " + std::to_string(epoch + 1) +
                            ", step " + std::to_string(history.steps + 1) + " (activation " +
                            net.config().activation.name() + ")");
      }
      const auto grads = net.backward(cache, loss.dloss_dlogits.template cast<Scalar>());
      adam_step<Scalar>(net.params(), grads, adam, ++history.steps, cfg.adam);
      epoch_total += loss.loss * static_cast<double>(end - begin);
    }
    history.epoch_loss.push_back(epoch_total / static_cast<double>(n));
  }
  net.set_mode(Mode::Eval);
  return history;
}

template TrainHistory train<float>(Network<float>&, const Matrix&, std::span<const int>, const TrainConfig&);
template TrainHistory train<double>(Network<double>&, const Matrix&, std::span<const int>, const TrainConfig&);

template <typename Scalar>
std::vector<double> predict_proba(const Network<Scalar>& net, const Matrix& X) {
  if (net.mode() != Mode::Eval) throw std::logic_error("predict_proba requires eval mode");
  const auto logits = net.infer(to_compute<Scalar>(X));
  std::vector<double> p(static_cast<std::size_t>(logits.size()));
  for (Eigen::Index i = 0; i < logits.size(); ++i) p[static_cast<std::size_t>(i)] = logistic(static_cast<double>(logits(i)));
  return p;
}

template std::vector<double> predict_proba<float>(const Network<float>&, const Matrix&);
template std::vector<double> predict_proba<double>(const Network<double>&, const Matrix&);

// ---------------------------------------------------------------------------
// Gradient checking

bool GradcheckReport::all_pass() const {
  return std::all_of(groups.begin(), groups.end(), [](const GradcheckGroup& g) { return g.pass; });
}

double GradcheckReport::max_rel_error() const {
  double m = 0.0;
  for (const auto& g : groups) m = std::max(m, g.max_rel_error);
  return m;
}

std::vector<Tensor<double>> analytic_gradients(Network<double>& net, const MatrixT<double>& X,
                                               std::span<const int> y) {
  ForwardCache<double> cache;
  const auto logits = net.forward(X, Mode::Train, &cache, false);
  const LossResult loss = bce_loss<double>(logits, y);
  return net.backward(cache, loss.dloss_dlogits);
}

std::vector<Tensor<double>> analytic_gradients_f32(Network<double>& net, const MatrixT<double>& X,
                                                   std::span<const int> y) {
  Network<float> single(net.config(), 0);
  for (std::size_t t = 0; t < net.params().size(); ++t) {
    single.params()[t].value = net.params()[t].value.cast<float>();
  }
  ForwardCache<float> cache;
  const auto logits = single.forward(X.cast<float>(), Mode::Train, &cache, false);
  const LossResult loss = bce_loss<float>(logits, y);
  const auto grads = single.backward(cache, loss.dloss_dlogits.cast<float>());
  std::vector<Tensor<double>> out;
  out.reserve(grads.size());
  for (const auto& g : grads) out.push_back({g.name, g.value.cast<double>()});
  return out;
}

GradcheckReport gradcheck(Network<double>& net, const MatrixT<double>& X, std::span<const int> y,
                          const GradcheckOptions& opts, const GradientFn& analytic) {
  const auto grads = analytic(net, X, y);
  auto loss_at = [&]() { return bce_loss<double>(net.forward(X, Mode::Train, nullptr, false), y).loss; };

  GradcheckReport report;
  for (std::size_t t = 0; t < net.params().size(); ++t) {
    auto& value = net.params()[t].value;
    GradcheckGroup group{net.params()[t].name, 0.0, 0, true};
    for (Eigen::Index i = 0; i < value.size(); ++i) {
      double& p = value.data()[i];
      const double saved = p;
      p = saved + opts.step;
      const double plus = loss_at();
      p = saved - opts.step;
      const double minus = loss_at();
      p = saved;
      const double numeric = (plus - minus) / (2.0 * opts.step);
      const double a = grads[t].value.data()[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), opts.floor});
      group.max_rel_error = std::max(group.max_rel_error, rel);
      ++group.checked;
    }
    group.pass = group.max_rel_error <= opts.tolerance;
    report.groups.push_back(group);
  }
  return report;
}

}  // namespace nsact::nn
