#pragma once

#include <cstddef>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "nsact/matrix.hpp"

namespace nsact::expr {

// The six operators of the function set come first. Sign and Constant only
// appear in trees produced by differentiate()/simplify(); they are never
// parsed and never produced by the GP engine.
enum class NodeKind { Add, Sub, Mul, Sin, Cos, Abs, Sign, Feature, Variable, Constant };

int arity(NodeKind kind);
bool is_operator(NodeKind kind);
std::string_view kind_name(NodeKind kind);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind = NodeKind::Variable;
  int feature = -1;   // Feature leaves only
  double value = 0.0; // Constant leaves only
  NodePtr lhs;        // first (or only) child
  NodePtr rhs;        // second child of binary operators
};

NodePtr make_feature(int index);
NodePtr make_variable();
NodePtr make_constant(double value);
NodePtr make_unary(NodeKind kind, NodePtr child);
NodePtr make_binary(NodeKind kind, NodePtr lhs, NodePtr rhs);

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownOperatorError : public ParseError {
 public:
  UnknownOperatorError(const std::string& name, std::size_t offset);
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

/// Raised when a tree is used in the wrong role (mixed leaves, a feature leaf
/// in an activation, a variable leaf in a genome, an out-of-range index).
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Size caps applied to GP genomes.
struct Limits {
  std::size_t max_depth = 17;
  std::size_t max_nodes = 64;
};

/// Immutable expression tree plus cached structural statistics.
///
/// A formula is either a GP genome (feature leaves `Xi`, no variable) or an
/// activation (variable leaves `x`, no features). Trees mixing both are
/// rejected at construction. Subtrees are shared, so copies are cheap and
/// formulas can be evaluated concurrently.
class Formula {
 public:
  explicit Formula(NodePtr root);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }

  std::size_t node_count() const { return node_count_; }
  /// Number of levels; a single leaf has depth 1.
  std::size_t depth() const { return depth_; }
  const std::set<int>& used_features() const { return used_features_; }
  bool has_variable() const { return has_variable_; }
  /// True if the tree contains Sign or Constant nodes.
  bool has_internal_nodes() const { return has_internal_; }

  bool is_genome() const { return !has_variable_; }
  bool is_activation() const { return used_features_.empty(); }
  bool within(const Limits& limits) const {
    return depth_ <= limits.max_depth && node_count_ <= limits.max_nodes;
  }

  friend bool operator==(const Formula& a, const Formula& b);

 private:
  NodePtr root_;
  std::size_t node_count_ = 0;
  std::size_t depth_ = 0;
  std::set<int> used_features_;
  bool has_variable_ = false;
  bool has_internal_ = false;
};

bool structurally_equal(const Node& a, const Node& b);

/// Parses prefix notation such as `mul(cos(X25), sub(X12, X3))`.
/// Whitespace is ignored; leaves are `X<digits>` or `x`.
Formula parse_formula(std::string_view text);

/// Canonical text: lowercase operators, `", "` between arguments.
std::string print_formula(const Formula& f);

/// Evaluates a genome on every row of `X`.
Vector eval_batch(const Formula& f, const Matrix& X);

/// Evaluates an activation at a single point.
double eval_scalar(const Formula& f, double x);

/// Elementwise evaluation of an activation over an array.
template <typename Scalar>
Eigen::Array<Scalar, Eigen::Dynamic, 1> eval_array(
    const Formula& f, const Eigen::Array<Scalar, Eigen::Dynamic, 1>& x);

/// d/dx of an activation, simplified. d|u|/du is sign(u) with sign(0) = 0.
Formula differentiate(const Formula& f);

/// Result of generalize(): the activation plus whether the pair-collapse rule fired.
struct Generalized {
  Formula activation;
  bool pair_collapsed = false;
};

/// Turns a feature-indexed genome into a single-variable activation.
///
/// 1. add/sub of two distinct bare feature leaves collapses to `x`
///    (so `sub(X12, X3)` becomes `x` rather than `sub(x, x) = 0`).
/// 2. Every remaining feature leaf becomes `x`.
/// 3. simplify(). If simplification removes every variable leaf the
///    unsimplified tree from step 2 is kept, so the result always depends
///    syntactically on `x`.
Generalized generalize_detailed(const Formula& genome);
Formula generalize(const Formula& genome);

/// Local rewrites to a fixpoint; preserves pointwise values on finite inputs.
Formula simplify(const Formula& f);

}  // namespace nsact::expr
