#pragma once

#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "missoc/instance.hpp"
#include "missoc/regression.hpp"
#include "missoc/splines.hpp"

namespace missoc {

enum class VarRole { Original, Selector, Offset, Piece, Component };

struct SurrogateVariable {
  std::string name;
  double lower = 0.0;
  double upper = 0.0;
  bool integer = false;
  VarRole role = VarRole::Original;
};

/// sum terms (sense) rhs.
struct LinearConstraint {
  std::vector<std::pair<int, double>> terms;
  ConstraintSense sense = ConstraintSense::LessEqual;
  double rhs = 0.0;
  std::string tag;

  double activity(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// Amount by which z violates the row (0 when satisfied).
  double violation(const Eigen::Ref<const Eigen::VectorXd>& z) const;
};

/// piece = coeffs[0] * selector + sum_{r >= 1} coeffs[r] * offset^r, the
/// lifted value of interval q of covariate j. When selector = 1 the original
/// variable equals knot + offset with offset in [0, width].
struct PolynomialLink {
  int covariate = 0;
  int interval = 0;
  int selector = -1;
  int offset = -1;
  int piece = -1;
  int original = -1;
  double knot = 0.0;
  double width = 0.0;
  std::vector<double> coeffs;

  double polynomial(double offset_value) const;
};

/// The multiple-choice surrogate of a problem instance: g_0 is replaced by
/// alpha + sum_j sigma_j plus the variable-linear terms of g_0, while every other
/// constraint is retained. Variables are ordered originals first, then per
/// covariate the selectors, offsets and pieces of each interval, with the
/// component sum sigma_j last.
struct SurrogateMINLP {
  ProblemInstance original;
  bool substituted = false;

  double intercept = 0.0;
  std::vector<int> covariates;  // instance variable index of covariate j
  std::vector<PiecewisePoly> components;
  std::vector<std::vector<int>> selectors;  // [j][q]
  std::vector<std::vector<int>> offsets;
  std::vector<std::vector<int>> pieces;
  std::vector<int> sigma;

  std::vector<SurrogateVariable> variables;
  std::vector<LinearConstraint> linear;
  std::vector<PolynomialLink> links;
  /// Retained constraints of the instance that are not affine.
  std::vector<Constraint> nonlinear;

  double objective_constant = 0.0;
  std::vector<std::pair<int, double>> objective_terms;

  int size() const { return static_cast<int>(variables.size()); }
  int binaries() const;
  /// Continuous variables added on top of the originals.
  int added_continuous() const;

  double objective_value(const Eigen::Ref<const Eigen::VectorXd>& z) const;
  /// Largest violation over bounds, integrality, linear rows, polynomial
  /// links and retained nonlinear constraints.
  double max_violation(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  /// The canonical completion of an original-space point: the selector of
  /// the interval holding x_j is 1 (ties to the left) and the auxiliaries
  /// follow from it.
  Eigen::VectorXd lift(std::span<const double> x) const;
  /// Original-space coordinates of a surrogate point.
  std::vector<double> project(const Eigen::Ref<const Eigen::VectorXd>& z) const;

  /// Plain-text algebraic listing. Without substitution this is the
  /// instance text itself.
  std::string to_text() const;
};

/// Assembles the surrogate for the complicating set C. The fit approximates
/// g_0 minus its top-level variable-linear terms (constants stay in the
/// fitted part); its component j corresponds to the
/// instance variable with the component's label, or to the j-th variable of
/// that remainder when labels are absent. C = {} returns the instance
/// untouched; any other set besides {0} throws UnsupportedScopeError.
SurrogateMINLP build_surrogate(const AdditiveModelFit& fit, const ProblemInstance& instance,
                               const std::set<int>& complicating = {0});

/// Instance variable index for each fitted component.
std::vector<int> resolve_covariates(const AdditiveModelFit& fit, const ProblemInstance& instance);

struct LiftedPoint {
  std::vector<int> interval;
  std::vector<double> offset;
  std::vector<double> piece;
};

/// alpha + sum_j S_j(x_j) through the multiple-choice lifting; x holds one
/// value per fitted covariate.
double eval_surrogate_at(const AdditiveModelFit& fit, std::span<const double> x, LiftedPoint* lifted = nullptr);

}  // namespace missoc
