#include "nsact/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <utility>

namespace nsact::expr {

int arity(NodeKind kind) {
  switch (kind) {
    case NodeKind::Add:
    case NodeKind::Sub:
    case NodeKind::Mul:
      return 2;
    case NodeKind::Sin:
    case NodeKind::Cos:
    case NodeKind::Abs:
    case NodeKind::Sign:
      return 1;
    default:
      return 0;
  }
}

bool is_operator(NodeKind kind) { return arity(kind) > 0; }

std::string_view kind_name(NodeKind kind) {
  switch (kind) {
    case NodeKind::Add: return "add";
    case NodeKind::Sub: return "sub";
    case NodeKind::Mul: return "mul";
    case NodeKind::Sin: return "sin";
    case NodeKind::Cos: return "cos";
    case NodeKind::Abs: return "abs";
    case NodeKind::Sign: return "sign";
    case NodeKind::Feature: return "feature";
    case NodeKind::Variable: return "x";
    case NodeKind::Constant: return "constant";
  }
  return "?";
}

NodePtr make_feature(int index) {
  if (index < 0) throw ValidationError("negative feature index " + std::to_string(index));
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Feature;
  n->feature = index;
  return n;
}

NodePtr make_variable() {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Variable;
  return n;
}

NodePtr make_constant(double value) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::Constant;
  n->value = value;
  return n;
}

NodePtr make_unary(NodeKind kind, NodePtr child) {
  if (arity(kind) != 1) throw ValidationError(std::string(kind_name(kind)) + " is not unary");
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(child);
  return n;
}

NodePtr make_binary(NodeKind kind, NodePtr lhs, NodePtr rhs) {
  if (arity(kind) != 2) throw ValidationError(std::string(kind_name(kind)) + " is not binary");
  auto n = std::make_shared<Node>();
  n->kind = kind;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  return n;
}

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error(what + " at byte " + std::to_string(offset)), offset_(offset) {}

UnknownOperatorError::UnknownOperatorError(const std::string& name, std::size_t offset)
    : ParseError("unknown operator '" + name + "'", offset), name_(name) {}

namespace {

struct Stats {
  std::size_t nodes = 0;
  std::size_t depth = 0;
  std::set<int> features;
  bool variable = false;
  bool internal = false;
};

std::size_t collect(const Node& n, Stats& s) {
  ++s.nodes;
  switch (n.kind) {
    case NodeKind::Feature:
      s.features.insert(n.feature);
      return 1;
    case NodeKind::Variable:
      s.variable = true;
      return 1;
    case NodeKind::Constant:
      s.internal = true;
      return 1;
    default:
      break;
  }
  if (n.kind == NodeKind::Sign) s.internal = true;
  if (!n.lhs || (arity(n.kind) == 2 && !n.rhs)) {
    throw ValidationError(std::string(kind_name(n.kind)) + " node is missing a child");
  }
  std::size_t d = collect(*n.lhs, s);
  if (arity(n.kind) == 2) d = std::max(d, collect(*n.rhs, s));
  return d + 1;
}

}  // namespace

Formula::Formula(NodePtr root) : root_(std::move(root)) {
  if (!root_) throw ValidationError("empty formula");
  Stats s;
  depth_ = collect(*root_, s);
  node_count_ = s.nodes;
  used_features_ = std::move(s.features);
  has_variable_ = s.variable;
  has_internal_ = s.internal;
  if (has_variable_ && !used_features_.empty()) {
    throw ValidationError("formula mixes the variable x with feature leaves");
  }
}

bool structurally_equal(const Node& a, const Node& b) {
  if (&a == &b) return true;
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::Feature: return a.feature == b.feature;
    case NodeKind::Variable: return true;
    case NodeKind::Constant: return a.value == b.value;
    default: break;
  }
  if (!structurally_equal(*a.lhs, *b.lhs)) return false;
  return arity(a.kind) == 1 || structurally_equal(*a.rhs, *b.rhs);
}

bool operator==(const Formula& a, const Formula& b) {
  return structurally_equal(*a.root_, *b.root_);
}

// ---------------------------------------------------------------------------
// Parsing and printing

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  NodePtr parse_all() {
    NodePtr root = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) throw ParseError("unexpected trailing input", pos_);
    return root;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) {
      throw ParseError(std::string("expected '") + c + "'", pos_);
    }
    ++pos_;
  }

  NodePtr parse_expr() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    const std::string_view word = text_.substr(start, pos_ - start);
    if (word.empty()) {
      if (pos_ >= text_.size()) throw ParseError("unexpected end of input", pos_);
      throw ParseError(std::string("unexpected character '") + text_[pos_] + "'", pos_);
    }
    if (word == "x") return make_variable();
    if (word[0] == 'X' && word.size() > 1 &&
        std::all_of(word.begin() + 1, word.end(),
                    [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      if (word.size() > 10) throw ParseError("feature index too large", start);
      return make_feature(std::stoi(std::string(word.substr(1))));
    }

    NodeKind kind;
    if (word == "add") kind = NodeKind::Add;
    else if (word == "sub") kind = NodeKind::Sub;
    else if (word == "mul") kind = NodeKind::Mul;
    else if (word == "sin") kind = NodeKind::Sin;
    else if (word == "cos") kind = NodeKind::Cos;
    else if (word == "abs") kind = NodeKind::Abs;
    else {
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == '(') {
        throw UnknownOperatorError(std::string(word), start);
      }
      throw ParseError("invalid leaf '" + std::string(word) + "'", start);
    }

    expect('(');
    NodePtr lhs = parse_expr();
    if (arity(kind) == 1) {
      expect(')');
      return make_unary(kind, std::move(lhs));
    }
    expect(',');
    NodePtr rhs = parse_expr();
    expect(')');
    return make_binary(kind, std::move(lhs), std::move(rhs));
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

void print_node(const Node& n, std::ostream& os) {
  switch (n.kind) {
    case NodeKind::Feature:
      os << 'X' << n.feature;
      return;
    case NodeKind::Variable:
      os << 'x';
      return;
    case NodeKind::Constant: {
      std::ostringstream c;
      c.precision(17);
      c << n.value;
      os << c.str();
      return;
    }
    default:
      break;
  }
  os << kind_name(n.kind) << '(';
  print_node(*n.lhs, os);
  if (arity(n.kind) == 2) {
    os << ", ";
    print_node(*n.rhs, os);
  }
  os << ')';
}

}  // namespace

Formula parse_formula(std::string_view text) {
  Parser p(text);
  NodePtr root = p.parse_all();
  return Formula(std::move(root));
}

std::string print_formula(const Formula& f) {
  std::ostringstream os;
  print_node(f.root(), os);
  return os.str();
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

inline double sign_of(double v) { return static_cast<double>((0.0 < v) - (v < 0.0)); }

Eigen::ArrayXd eval_rows(const Node& n, const Matrix& X) {
  switch (n.kind) {
    case NodeKind::Feature:
      return X.col(n.feature).array();
    case NodeKind::Constant:
      return Eigen::ArrayXd::Constant(X.rows(), n.value);
    case NodeKind::Variable:
      throw ValidationError("genome evaluation encountered the variable x");
    case NodeKind::Add: return eval_rows(*n.lhs, X) + eval_rows(*n.rhs, X);
    case NodeKind::Sub: return eval_rows(*n.lhs, X) - eval_rows(*n.rhs, X);
    case NodeKind::Mul: return eval_rows(*n.lhs, X) * eval_rows(*n.rhs, X);
    case NodeKind::Sin: return eval_rows(*n.lhs, X).sin();
    case NodeKind::Cos: return eval_rows(*n.lhs, X).cos();
    case NodeKind::Abs: return eval_rows(*n.lhs, X).abs();
    case NodeKind::Sign: return eval_rows(*n.lhs, X).unaryExpr(&sign_of);
  }
  throw ValidationError("corrupt node");
}

double eval_point(const Node& n, double x) {
  switch (n.kind) {
    case NodeKind::Variable: return x;
    case NodeKind::Constant: return n.value;
    case NodeKind::Feature:
      throw ValidationError("activation evaluation encountered feature X" +
                            std::to_string(n.feature));
    case NodeKind::Add: return eval_point(*n.lhs, x) + eval_point(*n.rhs, x);
    case NodeKind::Sub: return eval_point(*n.lhs, x) - eval_point(*n.rhs, x);
    case NodeKind::Mul: return eval_point(*n.lhs, x) * eval_point(*n.rhs, x);
    case NodeKind::Sin: return std::sin(eval_point(*n.lhs, x));
    case NodeKind::Cos: return std::cos(eval_point(*n.lhs, x));
    case NodeKind::Abs: return std::abs(eval_point(*n.lhs, x));
    case NodeKind::Sign: return sign_of(eval_point(*n.lhs, x));
  }
  throw ValidationError("corrupt node");
}

template <typename Scalar>
using Column = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
Column<Scalar> eval_elementwise(const Node& n, const Column<Scalar>& x) {
  switch (n.kind) {
    case NodeKind::Variable: return x;
    case NodeKind::Constant: return Column<Scalar>::Constant(x.size(), static_cast<Scalar>(n.value));
    case NodeKind::Feature:
      throw ValidationError("activation evaluation encountered feature X" +
                            std::to_string(n.feature));
    case NodeKind::Add: return eval_elementwise(*n.lhs, x) + eval_elementwise(*n.rhs, x);
    case NodeKind::Sub: return eval_elementwise(*n.lhs, x) - eval_elementwise(*n.rhs, x);
    case NodeKind::Mul: return eval_elementwise(*n.lhs, x) * eval_elementwise(*n.rhs, x);
    case NodeKind::Sin: return eval_elementwise(*n.lhs, x).sin();
    case NodeKind::Cos: return eval_elementwise(*n.lhs, x).cos();
    case NodeKind::Abs: return eval_elementwise(*n.lhs, x).abs();
    case NodeKind::Sign:
      return eval_elementwise(*n.lhs, x).unaryExpr(
          [](Scalar v) { return static_cast<Scalar>((Scalar(0) < v) - (v < Scalar(0))); });
  }
  throw ValidationError("corrupt node");
}

void require_activation(const Formula& f, const char* op) {
  if (!f.is_activation()) {
    throw ValidationError(std::string(op) + " requires a variable-only formula; got feature X" +
                          std::to_string(*f.used_features().begin()));
  }
}

}  // namespace

Vector eval_batch(const Formula& f, const Matrix& X) {
  if (f.has_variable()) throw ValidationError("eval_batch requires a feature-indexed genome");
  if (!f.used_features().empty() && *f.used_features().rbegin() >= X.cols()) {
    throw ValidationError("feature index X" + std::to_string(*f.used_features().rbegin()) +
                          " out of range for " + std::to_string(X.cols()) + " features");
  }
  return eval_rows(f.root(), X).matrix();
}

double eval_scalar(const Formula& f, double x) {
  require_activation(f, "eval_scalar");
  return eval_point(f.root(), x);
}

template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> eval_array(
    const Formula& f, const Eigen::Array<Scalar, Eigen::Dynamic, 1>& x) {
  require_activation(f, "eval_array");
  return eval_elementwise<Scalar>(f.root(), x);
}

template Eigen::Array<float, Eigen::Dynamic, 1> eval_array<float>(
    const Formula&, const Eigen::Array<float, Eigen::Dynamic, 1>&);
template Eigen::Array<double, Eigen::Dynamic, 1> eval_array<double>(
    const Formula&, const Eigen::Array<double, Eigen::Dynamic, 1>&);

// ---------------------------------------------------------------------------
// Simplification

namespace {

bool is_const(const NodePtr& n, double v) {
  return n->kind == NodeKind::Constant && n->value == v;
}

double fold(NodeKind kind, double a, double b) {
  switch (kind) {
    case NodeKind::Add: return a + b;
    case NodeKind::Sub: return a - b;
    case NodeKind::Mul: return a * b;
    case NodeKind::Sin: return std::sin(a);
    case NodeKind::Cos: return std::cos(a);
    case NodeKind::Abs: return std::abs(a);
    case NodeKind::Sign: return sign_of(a);
    default: return a;
  }
}

NodePtr simplify_node(const NodePtr& n) {
  if (!is_operator(n->kind)) return n;

  NodePtr a = simplify_node(n->lhs);
  if (arity(n->kind) == 1) {
    if (a->kind == NodeKind::Constant) return make_constant(fold(n->kind, a->value, 0.0));
    if (n->kind == NodeKind::Abs && a->kind == NodeKind::Abs) return a;
    if (n->kind == NodeKind::Sign && a->kind == NodeKind::Sign) return a;
    return a == n->lhs ? n : make_unary(n->kind, a);
  }

  NodePtr b = simplify_node(n->rhs);
  if (a->kind == NodeKind::Constant && b->kind == NodeKind::Constant) {
    return make_constant(fold(n->kind, a->value, b->value));
  }
  switch (n->kind) {
    case NodeKind::Add:
      if (is_const(a, 0.0)) return b;
      if (is_const(b, 0.0)) return a;
      break;
    case NodeKind::Sub:
      if (is_const(b, 0.0)) return a;
      if (structurally_equal(*a, *b)) return make_constant(0.0);
      break;
    case NodeKind::Mul:
      if (is_const(a, 0.0) || is_const(b, 0.0)) return make_constant(0.0);
      if (is_const(a, 1.0)) return b;
      if (is_const(b, 1.0)) return a;
      break;
    default:
      break;
  }
  if (a == n->lhs && b == n->rhs) return n;
  return make_binary(n->kind, a, b);
}

}  // namespace

Formula simplify(const Formula& f) {
  NodePtr cur = f.root_ptr();
  for (;;) {
    NodePtr next = simplify_node(cur);
    if (next == cur || structurally_equal(*next, *cur)) return Formula(next);
    cur = next;
  }
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

// A derivative term together with its sign: value = negated ? -node : node.
// Tracking the sign keeps results in add/sub/mul form without a negation node.
struct Term {
  NodePtr node;
  bool negated = false;
};

Term combine(NodeKind op, const Term& a, Term b) {
  if (op == NodeKind::Sub) b.negated = !b.negated;
  if (a.negated == b.negated) return {make_binary(NodeKind::Add, a.node, b.node), a.negated};
  if (b.negated) return {make_binary(NodeKind::Sub, a.node, b.node), false};
  return {make_binary(NodeKind::Sub, b.node, a.node), false};
}

Term derive(const NodePtr& n) {
  switch (n->kind) {
    case NodeKind::Variable: return {make_constant(1.0), false};
    case NodeKind::Constant: return {make_constant(0.0), false};
    case NodeKind::Feature:
      throw ValidationError("cannot differentiate feature X" + std::to_string(n->feature));
    case NodeKind::Add:
    case NodeKind::Sub:
      return combine(n->kind, derive(n->lhs), derive(n->rhs));
    case NodeKind::Mul: {
      Term da = derive(n->lhs);
      Term db = derive(n->rhs);
      Term left{make_binary(NodeKind::Mul, da.node, n->rhs), da.negated};
      Term right{make_binary(NodeKind::Mul, n->lhs, db.node), db.negated};
      return combine(NodeKind::Add, left, right);
    }
    case NodeKind::Sin: {
      Term du = derive(n->lhs);
      return {make_binary(NodeKind::Mul, make_unary(NodeKind::Cos, n->lhs), du.node), du.negated};
    }
    case NodeKind::Cos: {
      Term du = derive(n->lhs);
      return {make_binary(NodeKind::Mul, make_unary(NodeKind::Sin, n->lhs), du.node), !du.negated};
    }
    case NodeKind::Abs: {
      Term du = derive(n->lhs);
      return {make_binary(NodeKind::Mul, make_unary(NodeKind::Sign, n->lhs), du.node), du.negated};
    }
    case NodeKind::Sign:
      // Piecewise constant; the derivative is zero away from 0.
      return {make_constant(0.0), false};
  }
  throw ValidationError("corrupt node");
}

}  // namespace

Formula differentiate(const Formula& f) {
  require_activation(f, "differentiate");
  Term t = derive(f.root_ptr());
  NodePtr root = t.negated ? make_binary(NodeKind::Sub, make_constant(0.0), t.node) : t.node;
  return simplify(Formula(root));
}

// ---------------------------------------------------------------------------
// Generalization

namespace {

NodePtr collapse_pairs(const NodePtr& n, bool& fired) {
  if (!is_operator(n->kind)) return n;
  if ((n->kind == NodeKind::Add || n->kind == NodeKind::Sub) &&
      n->lhs->kind == NodeKind::Feature && n->rhs->kind == NodeKind::Feature &&
      n->lhs->feature != n->rhs->feature) {
    fired = true;
    return make_variable();
  }
  NodePtr a = collapse_pairs(n->lhs, fired);
  if (arity(n->kind) == 1) return make_unary(n->kind, a);
  return make_binary(n->kind, a, collapse_pairs(n->rhs, fired));
}

NodePtr features_to_variable(const NodePtr& n) {
  if (n->kind == NodeKind::Feature) return make_variable();
  if (!is_operator(n->kind)) return n;
  NodePtr a = features_to_variable(n->lhs);
  if (arity(n->kind) == 1) return make_unary(n->kind, a);
  return make_binary(n->kind, a, features_to_variable(n->rhs));
}

}  // namespace

Generalized generalize_detailed(const Formula& genome) {
  if (genome.has_variable()) {
    // Already an activation; only simplification applies.
    return {simplify(genome), false};
  }
  bool fired = false;
  NodePtr collapsed = collapse_pairs(genome.root_ptr(), fired);
  Formula substituted(features_to_variable(collapsed));
  Formula simplified = simplify(substituted);
  if (substituted.has_variable() && !simplified.has_variable()) {
    return {substituted, fired};
  }
  return {simplified, fired};
}

Formula generalize(const Formula& genome) { return generalize_detailed(genome).activation; }

}  // namespace nsact::expr
