#include <cmath>
#include <random>

#include "doctest.h"
#include "missoc/errors.hpp"
#include "missoc/localsearch.hpp"

using namespace missoc;

TEST_CASE("linear program vertex is kept") {
  const auto inst = parse_instance("var x in [0, 2]; var y in [0, 2]; min -x - y; st x + y <= 3;");
  const std::vector<double> start{1.0, 2.0};
  const auto r = refine(inst, start);
  CHECK(r.max_violation <= 1e-6);
  CHECK(r.objective <= -3.0 + 1e-6);
  CHECK(r.objective >= -3.0 - 1e-5);
}

TEST_CASE("convex quadratic reaches the projection optimum") {
  // min (x-2)^2 + (y-2)^2 s.t. x + y <= 2: optimum (1, 1), value 2.
  const auto inst = parse_instance("var x in [-5, 5]; var y in [-5, 5]; min (x - 2)^2 + (y - 2)^2; st x + y - 2 <= 0;");
  const std::vector<double> start{-1.0, 0.5};
  const auto r = refine(inst, start);
  CHECK(r.converged);
  CHECK(std::abs(r.x[0] - 1.0) <= 1e-6);
  CHECK(std::abs(r.x[1] - 1.0) <= 1e-6);
  CHECK(std::abs(r.objective - 2.0) <= 1e-6);
  CHECK_FALSE(r.fallback);
}

TEST_CASE("feasible starts never get worse") {
  const auto inst = parse_instance(
      "var x in [-2, 2]; var y in [-2, 2]; min sin(3*x) + 0.3*x^3 + y*cos(2*y); st x + y >= 1.3; st x^2 + y^2 - 3 <= 0;");
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  int tried = 0;
  while (tried < 50) {
    const std::vector<double> x0{u(rng), u(rng)};
    if (inst.max_violation(x0) > 0) continue;
    ++tried;
    const auto r = refine(inst, x0);
    CHECK(r.max_violation <= 1e-6);
    CHECK(r.objective <= inst.objective_value(x0) + 1e-9);
    for (int i = 0; i < 2; ++i) {
      CHECK(r.x[i] >= -2.0);
      CHECK(r.x[i] <= 2.0);
    }
  }
}

TEST_CASE("integer coordinates stay fixed and the merit decreases") {
  const auto inst = parse_instance("var k in [0, 5] integer; var x in [-3, 3]; min (k - 2.4)^2 + (x - 0.7)^4 + k*x;");
  const std::vector<double> start{3.0, -2.0};
  RefineOptions o;
  o.trace = true;
  const auto r = refine(inst, start, o);
  CHECK(r.x[0] == 3.0);
  // d/dx: 4 (x - 0.7)^3 + 3 = 0.
  CHECK(std::abs(r.x[1] - (0.7 - std::cbrt(0.75))) <= 1e-5);
  REQUIRE_FALSE(r.merit_trace.empty());
  for (const auto& outer : r.merit_trace) {
    for (std::size_t i = 1; i < outer.size(); ++i) CHECK(outer[i] <= outer[i - 1] + 1e-12);
  }

  CHECK_THROWS_AS(refine(inst, std::vector<double>{2.5, 0.0}), ValidationError);
  CHECK_THROWS_AS(refine(inst, std::vector<double>{2.0, 4.0}), ValidationError);
}

TEST_CASE("infeasible region returns the least violated iterate") {
  const auto inst = parse_instance("var x in [0, 1]; var y in [0, 1]; min x + y; st 3 - x - y <= 0;");
  const auto r = refine(inst, std::vector<double>{0.2, 0.2});
  CHECK_FALSE(r.converged);
  CHECK(r.max_violation == doctest::Approx(1.0).epsilon(1e-4));
}
