#include "missoc/bernstein.hpp"

#include <algorithm>
#include <cmath>

#include "missoc/splines.hpp"

namespace missoc {

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

std::vector<double> bernstein_coefficients(std::span<const double> a, double lo, double hi) {
  if (a.empty()) return {0.0};
  const int n = static_cast<int>(a.size()) - 1;
  // p(lo + w u) = sum_r s_r w^r u^r with s the Taylor coefficients at lo.
  std::vector<double> s = taylor_shift(a, lo);
  const double w = hi - lo;
  double wr = 1.0;
  for (int r = 0; r <= n; ++r) {
    s[static_cast<std::size_t>(r)] *= wr;
    wr *= w;
  }
  std::vector<double> b(static_cast<std::size_t>(n + 1), 0.0);
  for (int i = 0; i <= n; ++i) {
    double v = 0.0;
    for (int r = 0; r <= i; ++r) v += binom(i, r) / binom(n, r) * s[static_cast<std::size_t>(r)];
    b[static_cast<std::size_t>(i)] = v;
  }
  return b;
}

std::pair<double, double> bernstein_bounds(std::span<const double> a, double lo, double hi) {
  const auto b = bernstein_coefficients(a, lo, hi);
  const auto [mn, mx] = std::minmax_element(b.begin(), b.end());
  return {*mn, *mx};
}

std::vector<Line> bernstein_lower_hull(std::span<const double> a, double lo, double hi) {
  const auto b = bernstein_coefficients(a, lo, hi);
  const int n = static_cast<int>(b.size()) - 1;
  if (n == 0 || hi <= lo) return {Line{b[0], 0.0}};
  std::vector<std::pair<double, double>> pts;
  for (int i = 0; i <= n; ++i) pts.emplace_back(lo + (hi - lo) * i / n, b[static_cast<std::size_t>(i)]);
  std::vector<std::pair<double, double>> hull;
  for (const auto& pt : pts) {
    while (hull.size() >= 2) {
      const auto& p1 = hull[hull.size() - 2];
      const auto& p2 = hull.back();
      const double cross = (p2.first - p1.first) * (pt.second - p1.second) -
                           (p2.second - p1.second) * (pt.first - p1.first);
      if (cross <= 0.0) {
        hull.pop_back();
      } else {
        break;
      }
    }
    hull.push_back(pt);
  }
  std::vector<Line> lines;
  for (std::size_t i = 0; i + 1 < hull.size(); ++i) {
    const double slope = (hull[i + 1].second - hull[i].second) / (hull[i + 1].first - hull[i].first);
    lines.push_back({hull[i].second - slope * hull[i].first, slope});
  }
  return lines;
}

std::vector<double> poly_derivative(std::span<const double> a) {
  if (a.size() <= 1) return {0.0};
  std::vector<double> d(a.size() - 1);
  for (std::size_t r = 1; r < a.size(); ++r) d[r - 1] = static_cast<double>(r) * a[r];
  return d;
}

bool certified_convex(std::span<const double> a, double lo, double hi) {
  const auto d2 = poly_derivative(poly_derivative(a));
  return bernstein_bounds(d2, lo, hi).first >= 0.0;
}

Line tangent_underestimator(std::span<const double> a, double lo, double hi, double x0) {
  const auto d1 = poly_derivative(a);
  const double slope = horner(d1, x0);
  Line t{horner(a, x0) - slope * x0, slope};
  if (!certified_convex(a, lo, hi)) {
    std::vector<double> diff(a.begin(), a.end());
    if (diff.size() < 2) diff.resize(2, 0.0);
    diff[0] -= t.intercept;
    diff[1] -= t.slope;
    const double gap = bernstein_bounds(diff, lo, hi).first;
    if (gap < 0.0) t.intercept += gap;
  }
  return t;
}

double convex_argmin(std::span<const double> a, double lo, double hi) {
  const auto d1 = poly_derivative(a);
  if (horner(d1, lo) >= 0.0) return lo;
  if (horner(d1, hi) <= 0.0) return hi;
  double l = lo, h = hi;
  for (int it = 0; it < 200 && h - l > 1e-15 * (1.0 + std::abs(l)); ++it) {
    const double m = 0.5 * (l + h);
    if (horner(d1, m) < 0.0) {
      l = m;
    } else {
      h = m;
    }
  }
  return 0.5 * (l + h);
}

}  // namespace missoc
