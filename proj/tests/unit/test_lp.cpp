#include <functional>
#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "missoc/lp_simplex.hpp"

using namespace missoc;
using lp::RowSense;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Minimum over all vertices of a bounded LP: every choice of n active
// constraints among rows and finite bounds.
double vertex_oracle(const lp::Problem& p, bool& feasible) {
  const int n = p.variables();
  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  for (int i = 0; i < p.rows(); ++i) {
    rows.push_back(p.A.row(i));
    rhs.push_back(p.b[i]);
  }
  for (int j = 0; j < n; ++j) {
    Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(n);
    e[j] = 1.0;
    if (std::isfinite(p.lower[j])) {
      rows.push_back(e);
      rhs.push_back(p.lower[j]);
    }
    if (std::isfinite(p.upper[j])) {
      rows.push_back(e);
      rhs.push_back(p.upper[j]);
    }
  }
  const int r = static_cast<int>(rows.size());
  double best = kInf;
  feasible = false;
  std::vector<int> pick(static_cast<std::size_t>(n));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd M(n, n);
      Eigen::VectorXd v(n);
      for (int k = 0; k < n; ++k) {
        M.row(k) = rows[pick[k]];
        v[k] = rhs[pick[k]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (lu.rank() < n) return;
      const Eigen::VectorXd x = lu.solve(v);
      for (int j = 0; j < n; ++j) {
        if (x[j] < p.lower[j] - 1e-9 || x[j] > p.upper[j] + 1e-9) return;
      }
      for (int i = 0; i < p.rows(); ++i) {
        const double ax = p.A.row(i).dot(x);
        if (p.sense[i] == RowSense::LessEqual && ax > p.b[i] + 1e-9) return;
        if (p.sense[i] == RowSense::GreaterEqual && ax < p.b[i] - 1e-9) return;
        if (p.sense[i] == RowSense::Equal && std::abs(ax - p.b[i]) > 1e-9) return;
      }
      feasible = true;
      best = std::min(best, p.c.dot(x));
      return;
    }
    for (int k = start; k < r; ++k) {
      pick[depth] = k;
      rec(k + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

lp::Problem empty_problem(int n) {
  lp::Problem p;
  p.c = Eigen::VectorXd::Zero(n);
  p.A.resize(0, n);
  p.lower = Eigen::VectorXd::Zero(n);
  p.upper = Eigen::VectorXd::Constant(n, kInf);
  return p;
}

}  // namespace

TEST_CASE("textbook LP") {
  // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  -> (2, 6), value 36.
  auto p = empty_problem(2);
  p.c << -3, -5;
  p.add_row(Eigen::Vector2d(1, 0), RowSense::LessEqual, 4);
  p.add_row(Eigen::Vector2d(0, 2), RowSense::LessEqual, 12);
  p.add_row(Eigen::Vector2d(3, 2), RowSense::LessEqual, 18);
  const auto r = lp::solve(p);
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.objective == doctest::Approx(-36.0));
  CHECK(r.x[0] == doctest::Approx(2.0));
  CHECK(r.x[1] == doctest::Approx(6.0));
}

TEST_CASE("equalities, free variables, bound flips") {
  auto p = empty_problem(3);
  p.lower << -kInf, -1, 0;
  p.upper << kInf, 1, 2;
  p.c << 1, 1, -1;
  p.add_row(Eigen::Vector3d(1, 0, 0), RowSense::GreaterEqual, -5);
  p.add_row(Eigen::Vector3d(1, 1, 1), RowSense::Equal, 0.5);
  const auto r = lp::solve(p);
  REQUIRE(r.status == lp::Status::Optimal);
  // x0 = 0.5 - x1 - x2; objective = 0.5 - 2 x2  -> x2 = 2.
  CHECK(r.objective == doctest::Approx(-3.5));
}

TEST_CASE("infeasible and unbounded detection") {
  auto p = empty_problem(1);
  p.c << 1;
  p.add_row(Eigen::VectorXd::Constant(1, 1.0), RowSense::LessEqual, -1);
  CHECK(lp::solve(p).status == lp::Status::Infeasible);

  auto q = empty_problem(2);
  q.c << -1, 0;
  q.add_row(Eigen::Vector2d(1, -1), RowSense::LessEqual, 1);
  CHECK(lp::solve(q).status == lp::Status::Unbounded);
}

TEST_CASE("random bounded LPs match vertex enumeration") {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> sense(0, 2);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 3;
    const int m = 2 + trial % 4;
    auto p = empty_problem(n);
    for (int j = 0; j < n; ++j) {
      p.lower[j] = -1.0 - std::abs(g(rng));
      p.upper[j] = 1.0 + std::abs(g(rng));
      p.c[j] = g(rng);
    }
    for (int i = 0; i < m; ++i) {
      Eigen::VectorXd a(n);
      for (auto& v : a) v = g(rng);
      const int s = sense(rng);
      p.add_row(a, s == 0 ? RowSense::LessEqual : s == 1 ? RowSense::GreaterEqual : RowSense::Equal,
                0.5 * g(rng));
    }
    bool feasible = false;
    const double oracle = vertex_oracle(p, feasible);
    const auto r = lp::solve(p);
    if (!feasible) {
      CHECK(r.status == lp::Status::Infeasible);
      continue;
    }
    REQUIRE(r.status == lp::Status::Optimal);
    CHECK(r.objective == doctest::Approx(oracle).epsilon(1e-8).scale(1.0));
    ++checked;
  }
  CHECK(checked > 50);
}

TEST_CASE("degenerate problem terminates") {
  // Many constraints through the origin.
  auto p = empty_problem(3);
  p.c << -1, -1, -1;
  p.upper.setConstant(1.0);
  for (int i = 0; i < 30; ++i) {
    const double t = i * 0.2;
    p.add_row(Eigen::Vector3d(std::cos(t), std::sin(t), 1.0), RowSense::LessEqual, 0.0);
  }
  const auto r = lp::solve(p);
  CHECK(r.status == lp::Status::Optimal);
  for (int i = 0; i < p.rows(); ++i) CHECK(p.A.row(i).dot(r.x) <= 1e-9);
}
