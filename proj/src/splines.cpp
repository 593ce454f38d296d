#include "missoc/splines.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace missoc {

OutOfDomainError::OutOfDomainError(std::string covariate, double value, double lo, double hi)
    : Error([&] {
        std::ostringstream os;
        os.precision(17);
        os << "covariate '" << covariate << "' value " << value << " outside [" << lo << ", "
           << hi << "]";
        return os.str();
      }()),
      covariate_(std::move(covariate)),
      value_(value) {}

KnotVector KnotVector::extend(std::span<const double> internal, int degree) {
  if (internal.size() < 2) {
    throw DegenerateDomainError("at least two internal knots are required");
  }
  if (degree < 0) throw InvalidKnotsError("negative spline degree");
  for (std::size_t i = 0; i < internal.size(); ++i) {
    if (!std::isfinite(internal[i])) throw InvalidKnotsError("non-finite internal knot");
    if (i > 0 && !(internal[i] > internal[i - 1])) {
      throw InvalidKnotsError("internal knots must be strictly increasing");
    }
  }

  KnotVector kv;
  kv.degree_ = degree;
  kv.internal_.assign(internal.begin(), internal.end());

  const double left_width = internal[1] - internal[0];
  const double right_width = internal[internal.size() - 1] - internal[internal.size() - 2];
  kv.extended_.reserve(internal.size() + 2 * static_cast<std::size_t>(degree));
  for (int i = degree; i >= 1; --i) kv.extended_.push_back(internal.front() - i * left_width);
  kv.extended_.insert(kv.extended_.end(), internal.begin(), internal.end());
  for (int i = 1; i <= degree; ++i) kv.extended_.push_back(internal.back() + i * right_width);
  return kv;
}

KnotVector KnotVector::uniform(double lo, double hi, int intervals, int degree) {
  if (intervals < 1) throw DegenerateDomainError("at least one interval is required");
  if (!(hi > lo)) throw DegenerateDomainError("empty covariate range");
  std::vector<double> knots(static_cast<std::size_t>(intervals) + 1);
  for (int i = 0; i <= intervals; ++i) {
    knots[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / intervals;
  }
  knots.back() = hi;
  return extend(knots, degree);
}

KnotVector extend_knots(std::span<const double> internal, int degree) {
  return KnotVector::extend(internal, degree);
}

int KnotVector::span(double x) const {
  const int m = static_cast<int>(extended_.size());
  if (x == upper()) return degree_ + intervals() - 1;
  if (x >= extended_.back()) return m - 2;
  if (x < extended_.front()) return 0;
  const auto it = std::upper_bound(extended_.begin(), extended_.end(), x);
  return static_cast<int>(it - extended_.begin()) - 1;
}

int KnotVector::interval_of_left(double x) const {
  const auto& t = internal_;
  if (x <= t.front()) return 0;
  const auto it = std::lower_bound(t.begin(), t.end(), x);
  int q = static_cast<int>(it - t.begin()) - 1;
  return std::clamp(q, 0, intervals() - 1);
}

double bspline_value(int l, int d, const KnotVector& t, double x) {
  const int m = static_cast<int>(t.extended().size());
  if (d < 0 || l < 0 || l >= m - d - 1) {
    throw IndexError("basis index " + std::to_string(l) + " out of range for degree " +
                     std::to_string(d));
  }
  if (d == 0) return t.span(x) == l ? 1.0 : 0.0;

  double value = 0.0;
  const double den_left = t[l + d] - t[l];
  if (den_left != 0.0) value += (x - t[l]) / den_left * bspline_value(l, d - 1, t, x);
  const double den_right = t[l + d + 1] - t[l + 1];
  if (den_right != 0.0) {
    value += (t[l + d + 1] - x) / den_right * bspline_value(l + 1, d - 1, t, x);
  }
  return value;
}

std::vector<double> segment_poly_coeffs(int l, const KnotVector& t, int q, double origin,
                                        double scale) {
  const int d = t.degree();
  const int m = static_cast<int>(t.extended().size());
  if (l < 0 || l >= t.basis_size()) {
    throw IndexError("basis index " + std::to_string(l) + " out of range");
  }
  std::vector<double> out(static_cast<std::size_t>(d) + 1, 0.0);
  if (q < l || q > l + d || q >= m - 1) return out;

  // table[i] holds the polynomial of B_{l+i, r} on interval q, grown one
  // degree per pass.
  std::vector<std::vector<double>> table(static_cast<std::size_t>(d) + 1);
  for (int i = 0; i <= d; ++i) {
    table[static_cast<std::size_t>(i)] = {l + i == q ? 1.0 : 0.0};
  }
  for (int r = 1; r <= d; ++r) {
    for (int i = 0; i + r <= d; ++i) {
      const int li = l + i;
      const auto& lo = table[static_cast<std::size_t>(i)];
      const auto& hi = table[static_cast<std::size_t>(i) + 1];
      std::vector<double> next(static_cast<std::size_t>(r) + 1, 0.0);
      const double den_left = t[li + r] - t[li];
      if (den_left != 0.0) {
        // (x - t_l) / den = (origin - t_l)/den + (scale/den) u
        const double c0 = (origin - t[li]) / den_left;
        const double c1 = scale / den_left;
        for (std::size_t k = 0; k < lo.size(); ++k) {
          next[k] += c0 * lo[k];
          next[k + 1] += c1 * lo[k];
        }
      }
      const double den_right = t[li + r + 1] - t[li + 1];
      if (den_right != 0.0) {
        const double c0 = (t[li + r + 1] - origin) / den_right;
        const double c1 = -scale / den_right;
        for (std::size_t k = 0; k < hi.size(); ++k) {
          next[k] += c0 * hi[k];
          next[k + 1] += c1 * hi[k];
        }
      }
      table[static_cast<std::size_t>(i)] = std::move(next);
    }
  }
  out = table[0];
  return out;
}

std::vector<double> taylor_shift(std::span<const double> coeffs, double shift) {
  std::vector<double> c(coeffs.begin(), coeffs.end());
  const std::size_t n = c.size();
  // Each pass divides by (x - shift); the remainders are the new coefficients.
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t k = n - 1; k > i; --k) c[k - 1] += shift * c[k];
  }
  return c;
}

double horner(std::span<const double> coeffs, double u) {
  double v = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) v = v * u + coeffs[i];
  return v;
}

PiecewisePoly::PiecewisePoly(std::vector<double> breakpoints,
                             std::vector<std::vector<double>> coeffs)
    : breakpoints_(std::move(breakpoints)), coeffs_(std::move(coeffs)) {
  if (breakpoints_.size() != coeffs_.size() + 1) {
    throw SizeMismatchError("piecewise polynomial needs one more breakpoint than pieces");
  }
}

int PiecewisePoly::degree() const {
  return coeffs_.empty() ? 0 : static_cast<int>(coeffs_.front().size()) - 1;
}

double PiecewisePoly::width(int q) const {
  return breakpoints_[static_cast<std::size_t>(q) + 1] - breakpoints_[static_cast<std::size_t>(q)];
}

double PiecewisePoly::operator()(double x) const {
  if (!(x >= breakpoints_.front() && x <= breakpoints_.back())) {
    throw OutOfDomainError("", x, breakpoints_.front(), breakpoints_.back());
  }
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), x);
  int q = static_cast<int>(it - breakpoints_.begin()) - 1;
  q = std::clamp(q, 0, intervals() - 1);
  return piece_value(q, x - breakpoints_[static_cast<std::size_t>(q)]);
}

double PiecewisePoly::piece_value(int q, double dx) const {
  return horner(coeffs_[static_cast<std::size_t>(q)], dx);
}

PiecewisePoly PiecewisePoly::derivative() const {
  std::vector<std::vector<double>> out;
  out.reserve(coeffs_.size());
  for (const auto& c : coeffs_) {
    std::vector<double> dc(c.size() > 1 ? c.size() - 1 : 1, 0.0);
    for (std::size_t r = 1; r < c.size(); ++r) dc[r - 1] = static_cast<double>(r) * c[r];
    out.push_back(std::move(dc));
  }
  return PiecewisePoly(breakpoints_, std::move(out));
}

BSplineBasis::BSplineBasis(KnotVector knots, std::string label)
    : knots_(std::move(knots)), label_(std::move(label)) {}

int BSplineBasis::nonzero(double x, std::span<double> values) const {
  if (!knots_.contains(x)) throw OutOfDomainError(label_, x, knots_.lower(), knots_.upper());
  const int d = degree();
  const int s = knots_.span(x);
  std::vector<double> left(static_cast<std::size_t>(d) + 1), right(static_cast<std::size_t>(d) + 1);
  values[0] = 1.0;
  for (int j = 1; j <= d; ++j) {
    left[static_cast<std::size_t>(j)] = x - knots_[s + 1 - j];
    right[static_cast<std::size_t>(j)] = knots_[s + j] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      const double temp = values[static_cast<std::size_t>(r)] /
                          (right[static_cast<std::size_t>(r) + 1] + left[static_cast<std::size_t>(j - r)]);
      values[static_cast<std::size_t>(r)] = saved + right[static_cast<std::size_t>(r) + 1] * temp;
      saved = left[static_cast<std::size_t>(j - r)] * temp;
    }
    values[static_cast<std::size_t>(j)] = saved;
  }
  return s - d;
}

Eigen::VectorXd BSplineBasis::row(double x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
  std::vector<double> vals(static_cast<std::size_t>(degree()) + 1);
  const int first = nonzero(x, vals);
  for (int c = 0; c <= degree(); ++c) out[first + c] = vals[static_cast<std::size_t>(c)];
  return out;
}

double BSplineBasis::evaluate(const Eigen::Ref<const Eigen::VectorXd>& theta, double x) const {
  if (theta.size() != size()) throw SizeMismatchError("coefficient vector size mismatch");
  std::vector<double> vals(static_cast<std::size_t>(degree()) + 1);
  const int first = nonzero(x, vals);
  double v = 0.0;
  for (int c = 0; c <= degree(); ++c) v += theta[first + c] * vals[static_cast<std::size_t>(c)];
  return v;
}

Eigen::MatrixXd BSplineBasis::local_segments(int q) const {
  if (q < 0 || q >= intervals()) throw IndexError("internal interval out of range");
  const int d = degree();
  const int s = q + d;
  const double origin = knots_[s];
  const double scale = knots_[s + 1] - knots_[s];
  Eigen::MatrixXd g(d + 1, d + 1);
  for (int c = 0; c <= d; ++c) {
    const auto coeffs = segment_poly_coeffs(q + c, knots_, s, origin, scale);
    for (int r = 0; r <= d; ++r) g(r, c) = coeffs[static_cast<std::size_t>(r)];
  }
  return g;
}

PiecewisePoly to_piecewise_poly(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                const BSplineBasis& basis) {
  if (theta.size() != basis.size()) throw SizeMismatchError("coefficient vector size mismatch");
  const int d = basis.degree();
  const auto& t = basis.knots().internal();
  std::vector<std::vector<double>> pieces;
  pieces.reserve(static_cast<std::size_t>(basis.intervals()));
  for (int q = 0; q < basis.intervals(); ++q) {
    const Eigen::VectorXd local = basis.local_segments(q) * theta.segment(q, d + 1);
    const double h = t[static_cast<std::size_t>(q) + 1] - t[static_cast<std::size_t>(q)];
    std::vector<double> c(static_cast<std::size_t>(d) + 1);
    double hp = 1.0;
    for (int r = 0; r <= d; ++r) {
      c[static_cast<std::size_t>(r)] = local[r] / hp;
      hp *= h;
    }
    pieces.push_back(std::move(c));
  }
  return PiecewisePoly(t, std::move(pieces));
}

Eigen::MatrixXd design_matrix(const Eigen::Ref<const Eigen::MatrixXd>& samples,
                              std::span<const BSplineBasis> bases) {
  if (samples.cols() != static_cast<Eigen::Index>(bases.size())) {
    throw SizeMismatchError("sample columns do not match the number of bases");
  }
  Eigen::Index cols = 1;
  for (const auto& b : bases) cols += b.size();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(samples.rows(), cols);
  out.col(0).setOnes();
  std::vector<double> vals;
  Eigen::Index offset = 1;
  for (std::size_t j = 0; j < bases.size(); ++j) {
    const auto& b = bases[j];
    vals.resize(static_cast<std::size_t>(b.degree()) + 1);
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
      const int first = b.nonzero(samples(i, static_cast<Eigen::Index>(j)), vals);
      for (int c = 0; c <= b.degree(); ++c) {
        out(i, offset + first + c) = vals[static_cast<std::size_t>(c)];
      }
    }
    offset += b.size();
  }
  return out;
}

}  // namespace missoc
