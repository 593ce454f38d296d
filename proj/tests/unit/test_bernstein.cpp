#include <cmath>
#include <random>

#include "doctest.h"
#include "missoc/bernstein.hpp"
#include "missoc/splines.hpp"

using namespace missoc;

namespace {

std::pair<double, double> grid_range(const std::vector<double>& a, double lo, double hi, int n) {
  double mn = INFINITY, mx = -INFINITY;
  for (int i = 0; i <= n; ++i) {
    const double v = horner(a, lo + (hi - lo) * i / n);
    mn = std::min(mn, v);
    mx = std::max(mx, v);
  }
  return {mn, mx};
}

}  // namespace

TEST_CASE("bernstein bounds of constants and lines are exact") {
  const std::vector<double> c{2.5};
  CHECK(bernstein_bounds(c, -1.0, 3.0) == std::pair{2.5, 2.5});
  const std::vector<double> x{0.0, 1.0};
  const auto [lo, hi] = bernstein_bounds(x, 0.0, 1.0);
  CHECK(lo == doctest::Approx(0.0));
  CHECK(hi == doctest::Approx(1.0));
  const std::vector<double> l{1.0, -2.0};
  const auto b = bernstein_bounds(l, 0.5, 2.0);
  CHECK(b.first == doctest::Approx(-3.0));
  CHECK(b.second == doctest::Approx(0.0));
}

TEST_CASE("bernstein endpoint coefficients equal endpoint values") {
  const std::vector<double> a{0.3, -1.2, 0.7, 2.0, -0.4};
  const auto b = bernstein_coefficients(a, -0.7, 1.3);
  CHECK(b.front() == doctest::Approx(horner(a, -0.7)).epsilon(1e-12));
  CHECK(b.back() == doctest::Approx(horner(a, 1.3)).epsilon(1e-12));
}

TEST_CASE("bernstein bounds enclose a dense grid for random quartics") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(5);
    for (auto& v : a) v = g(rng);
    double lo = u(rng), hi = u(rng);
    if (lo > hi) std::swap(lo, hi);
    const auto [bl, bu] = bernstein_bounds(a, lo, hi);
    const auto [gl, gu] = grid_range(a, lo, hi, 100000);
    CHECK(bl <= gl + 1e-12);
    CHECK(bu >= gu - 1e-12);
  }
}

TEST_CASE("subdivision never loosens and shrinks quadratically") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 30; ++trial) {
    const int deg = 1 + trial % 7;
    std::vector<double> a(static_cast<std::size_t>(deg + 1));
    for (auto& v : a) v = g(rng);
    const double lo = -1.0, hi = 1.0;
    const auto [pl, pu] = bernstein_bounds(a, lo, hi);
    const double m = 0.5 * (lo + hi);
    const auto [l1, u1] = bernstein_bounds(a, lo, m);
    const auto [l2, u2] = bernstein_bounds(a, m, hi);
    CHECK(std::min(l1, l2) >= pl - 1e-12);
    CHECK(std::max(u1, u2) <= pu + 1e-12);

    // Excess width over the true range after 4 bisections around a point.
    auto excess = [&](double l, double h) {
      const auto [bl, bu] = bernstein_bounds(a, l, h);
      const auto [gl, gu] = grid_range(a, l, h, 2000);
      return (bu - bl) - (gu - gl);
    };
    const double c = 0.3;
    const double w0 = 0.25, w4 = w0 / 16.0;
    const double e0 = excess(c - w0, c + w0);
    const double e4 = excess(c - w4, c + w4);
    if (e0 > 1e-9) CHECK(e4 / e0 <= 0.3);
  }
}

TEST_CASE("lower hull lines underestimate") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(4);
    for (auto& v : a) v = g(rng);
    const double lo = -0.5, hi = 1.5;
    const auto lines = bernstein_lower_hull(a, lo, hi);
    REQUIRE_FALSE(lines.empty());
    for (int i = 0; i <= 1000; ++i) {
      const double x = lo + (hi - lo) * i / 1000.0;
      for (const auto& l : lines) CHECK(l(x) <= horner(a, x) + 1e-12);
    }
  }
}

TEST_CASE("tangent underestimators are valid and tight for convex pieces") {
  const std::vector<double> q{1.0, -2.0, 3.0};  // 3x^2 - 2x + 1, vertex at 1/3
  CHECK(certified_convex(q, -1.0, 1.0));
  const double xs = convex_argmin(q, -1.0, 1.0);
  CHECK(xs == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const Line t = tangent_underestimator(q, -1.0, 1.0, xs);
  CHECK(t.slope == doctest::Approx(0.0).scale(1.0));
  CHECK(t.intercept == doctest::Approx(horner(q, xs)).epsilon(1e-12));

  const std::vector<double> cub{0.0, -1.0, 0.0, 1.0};  // x^3 - x
  CHECK_FALSE(certified_convex(cub, -1.0, 1.0));
  for (double x0 : {-1.0, -0.2, 0.5, 1.0}) {
    const Line l = tangent_underestimator(cub, -1.0, 1.0, x0);
    for (int i = 0; i <= 1000; ++i) {
      const double x = -1.0 + 2.0 * i / 1000.0;
      CHECK(l(x) <= horner(cub, x) + 1e-12);
    }
  }
}
