#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace missoc::expr {

enum class Op { Const, Var, Add, Sub, Mul, Div, Pow, Neg, Exp, Log, Sqrt, Sin, Cos, Abs, Min, Max };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // Const
  int var = -1;        // Var
  std::vector<NodePtr> args;
};

/// Immutable expression tree handle; copies share structure.
class Expr {
 public:
  Expr() : Expr(0.0) {}
  Expr(double c);  // NOLINT: implicit constants keep builder code readable
  explicit Expr(NodePtr node) : node_(std::move(node)) {}

  static Expr variable(int index);
  static Expr apply(Op op, std::vector<Expr> args);

  const Node& node() const { return *node_; }
  const NodePtr& ptr() const { return node_; }
  Op op() const { return node_->op; }

 private:
  NodePtr node_;
};

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
Expr pow(const Expr& a, const Expr& b);

/// Name of a unary or n-ary function node ("exp", "min", ...), empty for
/// operators.
std::string function_name(Op op);
std::optional<Op> function_from_name(const std::string& name);

double evaluate(const Expr& e, std::span<const double> x);

/// Value and dense gradient (size x.size()) by forward-mode differentiation.
double evaluate_gradient(const Expr& e, std::span<const double> x, Eigen::Ref<Eigen::VectorXd> grad);

/// Infix text that parses back to an equivalent tree; constants use 17
/// significant digits.
std::string unparse(const Expr& e, const std::vector<std::string>& names);

std::set<int> variables(const Expr& e);
bool is_constant(const Expr& e);

/// constant + sum coeffs[i] x_i
struct Affine {
  double constant = 0.0;
  std::map<int, double> coeffs;

  double operator()(std::span<const double> x) const;
};

/// The affine form of e, or nothing when e is not affine.
std::optional<Affine> as_affine(const Expr& e);

/// Splits e = linear + nonlinear by walking its top-level sum: affine terms
/// go to the linear part, everything else to the nonlinear remainder.
struct Split {
  Affine linear;
  Expr nonlinear;
  bool has_nonlinear = false;
};
Split split_linear(const Expr& e);

/// Replaces every variable index i by map[i] (a variable renumbering).
Expr remap_variables(const Expr& e, const std::vector<int>& map);

}  // namespace missoc::expr
