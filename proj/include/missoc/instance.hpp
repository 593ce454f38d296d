#pragma once

#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "missoc/expression.hpp"
#include "missoc/shapecon.hpp"

namespace missoc {

struct Variable {
  std::string name;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
  bool integer = false;
};

enum class ConstraintSense { LessEqual, Equal };

/// body <= 0 or body == 0.
struct Constraint {
  expr::Expr body;
  ConstraintSense sense = ConstraintSense::LessEqual;
};

/// Shape directives keyed by instance variable index. They apply to the
/// fitted part of the objective (g_0 without its variable-linear terms).
struct ShapeDirectives {
  std::optional<double> lower;
  std::optional<double> upper;
  std::map<int, Monotonicity> monotone;
  std::map<int, Curvature> curvature;
  std::vector<PointwiseSet> points;  // 0-based training rows

  bool empty() const;
  /// Spec for a fit whose covariate j is instance variable covariates[j].
  ShapeSpec for_covariates(const std::vector<int>& covariates) const;
};

/// min g_0(x) s.t. g_m(x) <= 0 (or = 0), x in a box, x_j integer for j in I.
struct ProblemInstance {
  std::string name;
  std::vector<Variable> variables;
  expr::Expr objective;
  std::vector<Constraint> constraints;
  ShapeDirectives shape;
  std::optional<double> best_known;
  /// Indices of the functions replaced by surrogates (0 = objective).
  std::set<int> complicating{0};

  int dimension() const { return static_cast<int>(variables.size()); }
  std::vector<std::string> names() const;
  /// Index of a variable by name, or -1.
  int index_of(const std::string& name) const;
  std::vector<double> lower() const;
  std::vector<double> upper() const;
  std::vector<int> integers() const;

  double objective_value(std::span<const double> x) const;
  /// max(0, max_m violation) over all constraints (|body| for equalities).
  double max_violation(std::span<const double> x) const;

  std::vector<int> objective_covariates() const;

  /// Enforces finite bounds on variables entering a complicating function
  /// nonlinearly and finite evaluation at the box midpoint.
  void validate() const;

  /// Instance grammar text that parses back to an equivalent instance.
  std::string to_text() const;
};

/// Parses the line-oriented instance grammar. Throws SyntaxError with a
/// 1-based line/column and ValidationError for undeclared variables.
ProblemInstance parse_instance(std::string_view text, std::string name = {});
ProblemInstance load_instance(const std::string& path);

}  // namespace missoc
