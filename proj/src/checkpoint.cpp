#include "nsact/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace nsact::nn {

using nlohmann::json;

namespace {

template <typename Scalar>
json matrix_to_json(const MatrixT<Scalar>& m) {
  std::vector<double> flat(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.size(); ++i) flat[static_cast<std::size_t>(i)] = m.data()[i];
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", flat}};
}

template <typename Scalar>
void matrix_from_json(const json& j, MatrixT<Scalar>& out, const std::string& name) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto flat = j.at("data").get<std::vector<double>>();
  if (rows != out.rows() || cols != out.cols() || static_cast<Eigen::Index>(flat.size()) != rows * cols) {
    throw std::runtime_error("checkpoint tensor " + name + " has the wrong shape");
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = static_cast<Scalar>(flat[static_cast<std::size_t>(i)]);
}

// Trees are stored structurally: simplified activations may contain constants
// and sign nodes, which the text parser does not accept.
json node_to_json(const expr::Node& n) {
  switch (n.kind) {
    case expr::NodeKind::Variable: return "x";
    case expr::NodeKind::Constant: return {{"const", n.value}};
    case expr::NodeKind::Feature: return {{"feature", n.feature}};
    default: break;
  }
  json args = json::array({node_to_json(*n.lhs)});
  if (n.rhs) args.push_back(node_to_json(*n.rhs));
  return {{"op", std::string(expr::kind_name(n.kind))}, {"args", args}};
}

expr::NodePtr node_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() != "x") throw std::runtime_error("bad checkpoint formula leaf");
    return expr::make_variable();
  }
  if (j.contains("const")) return expr::make_constant(j.at("const").get<double>());
  if (j.contains("feature")) return expr::make_feature(j.at("feature").get<int>());
  static const std::pair<const char*, expr::NodeKind> kOps[] = {
      {"add", expr::NodeKind::Add}, {"sub", expr::NodeKind::Sub}, {"mul", expr::NodeKind::Mul},
      {"sin", expr::NodeKind::Sin}, {"cos", expr::NodeKind::Cos}, {"abs", expr::NodeKind::Abs},
      {"sign", expr::NodeKind::Sign}};
  const auto op = j.at("op").get<std::string>();
  const json& args = j.at("args");
  for (const auto& [name, kind] : kOps) {
    if (op != name) continue;
    if (args.size() != static_cast<std::size_t>(expr::arity(kind))) {
      throw std::runtime_error("wrong arity for " + op + " in checkpoint formula");
    }
    if (args.size() == 1) return expr::make_unary(kind, node_from_json(args[0]));
    return expr::make_binary(kind, node_from_json(args[0]), node_from_json(args[1]));
  }
  throw std::runtime_error("unknown operator " + op + " in checkpoint formula");
}

template <typename Scalar>
constexpr const char* scalar_name() {
  return sizeof(Scalar) == sizeof(float) ? "f32" : "f64";
}

}  // namespace

template <typename Scalar>
json checkpoint_to_json(const Network<Scalar>& net) {
  const ModelConfig& cfg = net.config();
  const auto widths = cfg.hidden_widths();
  json act{{"kind", cfg.activation.name()}};
  if (cfg.activation.kind() == ActivationKind::Symbolic) {
    const expr::Formula& f = *cfg.activation.formula();
    act = {{"kind", "symbolic"}, {"text", expr::print_formula(f)}, {"tree", node_to_json(f.root())}};
  }
  json j{{"format", "nsact-checkpoint"},
         {"version", kCheckpointVersion},
         {"scalar", scalar_name<Scalar>()},
         {"config",
          {{"arch", arch_name(cfg.arch)},
           {"input_dim", cfg.input_dim},
           {"hidden", {widths[0], widths[1]}},
           {"hidden_override", !cfg.hidden_override.empty()},
           {"activation", act}}}};
  json params = json::object();
  for (const auto& t : net.params()) params[t.name] = matrix_to_json<Scalar>(t.value);
  j["params"] = params;
  json bn = json::array();
  for (const auto& s : net.bn_stats()) {
    bn.push_back({{"running_mean", matrix_to_json<Scalar>(s.running_mean)},
                  {"running_var", matrix_to_json<Scalar>(s.running_var)}});
  }
  j["batch_norm"] = bn;
  return j;
}

template <typename Scalar>
Network<Scalar> checkpoint_from_json(const json& j) {
  if (j.value("format", "") != "nsact-checkpoint") throw std::runtime_error("not a checkpoint");
  if (j.at("version").get<int>() != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + j.at("version").dump());
  }
  const json& c = j.at("config");
  ModelConfig cfg;
  cfg.arch = parse_arch(c.at("arch").get<std::string>());
  cfg.input_dim = c.at("input_dim").get<std::size_t>();
  if (c.value("hidden_override", false)) cfg.hidden_override = c.at("hidden").get<std::vector<std::size_t>>();
  const json& act = c.at("activation");
  const auto kind = act.at("kind").get<std::string>();
  cfg.activation = kind == "symbolic"
                       ? Activation::symbolic(expr::Formula(node_from_json(act.at("tree"))))
                       : Activation::builtin(kind);

  Network<Scalar> net(cfg, 0);
  for (auto& t : net.params()) matrix_from_json<Scalar>(j.at("params").at(t.name), t.value, t.name);
  const json& bn = j.at("batch_norm");
  if (bn.size() != 2) throw std::runtime_error("checkpoint needs two batch-norm entries");
  for (std::size_t b = 0; b < 2; ++b) {
    MatrixT<Scalar> mean = net.bn_stats()[b].running_mean;
    MatrixT<Scalar> var = net.bn_stats()[b].running_var;
    matrix_from_json<Scalar>(bn[b].at("running_mean"), mean, "running_mean");
    matrix_from_json<Scalar>(bn[b].at("running_var"), var, "running_var");
    net.bn_stats()[b].running_mean = mean.col(0);
    net.bn_stats()[b].running_var = var.col(0);
  }
  net.set_mode(Mode::Eval);
  return net;
}

template <typename Scalar>
void save_checkpoint(const Network<Scalar>& net, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << checkpoint_to_json(net).dump(1) << '\n';
}

template <typename Scalar>
Network<Scalar> load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return checkpoint_from_json<Scalar>(json::parse(in));
}

template json checkpoint_to_json<float>(const Network<float>&);
template json checkpoint_to_json<double>(const Network<double>&);
template Network<float> checkpoint_from_json<float>(const json&);
template Network<double> checkpoint_from_json<double>(const json&);
template void save_checkpoint<float>(const Network<float>&, const std::string&);
template void save_checkpoint<double>(const Network<double>&, const std::string&);
template Network<float> load_checkpoint<float>(const std::string&);
template Network<double> load_checkpoint<double>(const std::string&);

}  // namespace nsact::nn
