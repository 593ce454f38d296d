#pragma once

#include <span>
#include <utility>
#include <vector>

namespace missoc {

/// Bernstein coefficients of p(x) = sum_r a_r x^r over [lo, hi], degree
/// a.size() - 1. Coefficient i is attached to the abscissa lo + i (hi-lo)/n.
std::vector<double> bernstein_coefficients(std::span<const double> a, double lo, double hi);

/// Enclosure [min b_i, max b_i] of the range of p on [lo, hi].
std::pair<double, double> bernstein_bounds(std::span<const double> a, double lo, double hi);

/// A line value(x) = intercept + slope * x.
struct Line {
  double intercept = 0.0;
  double slope = 0.0;

  double operator()(double x) const { return intercept + slope * x; }
};

/// Edges of the lower convex hull of the Bernstein control points of p on
/// [lo, hi]; each is a valid affine underestimator of p there.
std::vector<Line> bernstein_lower_hull(std::span<const double> a, double lo, double hi);

/// Coefficients of p' for p = sum_r a_r x^r.
std::vector<double> poly_derivative(std::span<const double> a);

/// Affine underestimators of p on [lo, hi]. The tangent at x0 is used as is
/// when p is certified convex on the interval and otherwise lowered by the
/// Bernstein lower bound of p minus the tangent.
Line tangent_underestimator(std::span<const double> a, double lo, double hi, double x0);

/// True when the Bernstein enclosure of p'' on [lo, hi] is nonnegative.
bool certified_convex(std::span<const double> a, double lo, double hi);

/// Minimizer of p over [lo, hi] for a certified-convex p (bisection on p').
double convex_argmin(std::span<const double> a, double lo, double hi);

}  // namespace missoc
