#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "missoc/errors.hpp"

namespace missoc {

/// Internal knots t_0 < ... < t_k over [x_min, x_max] together with the
/// extended sequence of k + 2d + 1 knots used to build a degree-d basis.
///
/// Indices into the extended sequence are 0-based, so the internal domain is
/// [extended[d], extended[d+k]] and basis function l (0 <= l < k+d) is
/// supported on [extended[l], extended[l+d+1]].
class KnotVector {
 public:
  KnotVector() = default;

  /// Builds the extended sequence by replicating the first and last internal
  /// interval widths d times outward.
  static KnotVector extend(std::span<const double> internal, int degree);

  /// Equidistant internal knots on [lo, hi].
  static KnotVector uniform(double lo, double hi, int intervals, int degree);

  int degree() const { return degree_; }
  int intervals() const { return static_cast<int>(internal_.size()) - 1; }
  int basis_size() const { return intervals() + degree_; }

  const std::vector<double>& internal() const { return internal_; }
  const std::vector<double>& extended() const { return extended_; }
  double operator[](int i) const { return extended_[static_cast<std::size_t>(i)]; }

  double lower() const { return internal_.front(); }
  double upper() const { return internal_.back(); }
  bool contains(double x) const { return x >= lower() && x <= upper(); }

  /// Knot span of x in the extended sequence: the index s with
  /// t_s <= x < t_{s+1}; the last internal interval is closed on the right,
  /// so x == upper() yields d + k - 1.
  int span(double x) const;

  /// Internal interval q in [0, k) holding x under the half-open convention.
  int interval_of(double x) const { return span(x) - degree_; }

  /// Internal interval for x with ties at interior knots going to the left.
  int interval_of_left(double x) const;

 private:
  int degree_ = 0;
  std::vector<double> internal_;
  std::vector<double> extended_;
};

/// extend_knots: free-function spelling of KnotVector::extend.
KnotVector extend_knots(std::span<const double> internal, int degree);

/// B_{l,d,t}(x) by the Cox-de Boor recursion, 0/0 terms taken as 0.
/// l is 0-based; d may be lower than the knot vector's own degree (used to
/// evaluate lower-degree members of the same sequence).
double bspline_value(int l, int d, const KnotVector& t, double x);

/// Power-basis coefficients of basis function l (degree t.degree())
/// restricted to extended interval [t_q, t_{q+1}), expressed in the variable
/// u = (x - origin) / scale. With origin = 0 and scale = 1 these are the
/// coefficients in x. Returns zeros when q is outside the support of l.
std::vector<double> segment_poly_coeffs(int l, const KnotVector& t, int q,
                                        double origin = 0.0, double scale = 1.0);

/// Rewrites p(x) = sum a_i x^i as sum c_i (x - shift)^i by repeated
/// synthetic division.
std::vector<double> taylor_shift(std::span<const double> coeffs, double shift);

/// Horner evaluation of sum c_i u^i.
double horner(std::span<const double> coeffs, double u);

/// Piecewise polynomial over the internal knots: on interval q the value is
/// sum_r coeffs[q][r] * (x - breakpoints[q])^r.
class PiecewisePoly {
 public:
  PiecewisePoly() = default;
  PiecewisePoly(std::vector<double> breakpoints, std::vector<std::vector<double>> coeffs);

  int intervals() const { return static_cast<int>(coeffs_.size()); }
  int degree() const;
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<std::vector<double>>& coeffs() const { return coeffs_; }
  const std::vector<double>& coeffs(int q) const { return coeffs_[static_cast<std::size_t>(q)]; }
  double width(int q) const;

  /// Value at x; ties at interior breakpoints use the right interval and the
  /// last interval is closed.
  double operator()(double x) const;
  /// Value of piece q at local offset dx = x - breakpoints[q].
  double piece_value(int q, double dx) const;

  PiecewisePoly derivative() const;

 private:
  std::vector<double> breakpoints_;
  std::vector<std::vector<double>> coeffs_;
};

/// Degree, knots and evaluation machinery for one covariate.
class BSplineBasis {
 public:
  BSplineBasis() = default;
  BSplineBasis(KnotVector knots, std::string label = {});

  const KnotVector& knots() const { return knots_; }
  const std::string& label() const { return label_; }
  int degree() const { return knots_.degree(); }
  int intervals() const { return knots_.intervals(); }
  int size() const { return knots_.basis_size(); }

  /// Values of the d+1 basis functions that are nonzero at x, starting at
  /// index span(x) - d. Triangular de Boor scheme.
  int nonzero(double x, std::span<double> values) const;

  /// Full row of k+d basis values at x (x must lie in the internal range).
  Eigen::VectorXd row(double x) const;

  /// Sum_l theta_l B_l(x).
  double evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta, double x) const;

  /// Coefficients of the active segments on internal interval q in the local
  /// variable u = (x - t_q) / (t_{q+1} - t_q): column c holds basis function
  /// q + c (0-based, c in [0, d]); row r is the u^r coefficient.
  Eigen::MatrixXd local_segments(int q) const;

 private:
  KnotVector knots_;
  std::string label_;
};

/// Converts spline coefficients on a basis into shifted power form.
PiecewisePoly to_piecewise_poly(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const BSplineBasis& basis);

/// Design matrix [1 : B_1 : ... : B_p] for n samples (rows of `samples`).
Eigen::MatrixXd design_matrix(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                              std::span<const BSplineBasis> bases);

}  // namespace missoc
