#include <cmath>
#include <random>

#include "doctest.h"
#include "missoc/errors.hpp"
#include "missoc/instance.hpp"

using namespace missoc;

TEST_CASE("small quadratic instance") {
  const auto inst = parse_instance("min x1^2; s.t. x1 >= 0; var x1 in [0, 2]");
  REQUIRE(inst.dimension() == 1);
  CHECK(inst.constraints.size() == 1);
  CHECK(inst.variables[0].lower == 0.0);
  CHECK(inst.variables[0].upper == 2.0);
  const std::vector<double> p{1.5};
  CHECK(inst.objective_value(p) == doctest::Approx(2.25));
  CHECK(inst.max_violation(p) == 0.0);
  CHECK(inst.max_violation(std::vector<double>{-1.0}) == doctest::Approx(1.0));
}

TEST_CASE("full grammar round trip") {
  const char* text = R"(# comment line
name demo;
var x in [-1, 2];
var y in [0, 5] integer;
var z in [0.5, 3];
min exp(x) * sin(y) + log(z) / sqrt(z + 1) - 2*x + cos(x*z)^2 + abs(x - 1) + max(x, z, 0.25);
st x + y <= 4;
st x^2 + z^2 <= 9;
st y - 2*z = min(y, 1);
shape bounds [-10, 30];
shape monotone z up;
shape monotone x down;
shape convex x;
shape concave z;
point interp 1, 3:5;
point under 7;
bestknown -1.25;
)";
  const auto inst = parse_instance(text);
  CHECK(inst.name == "demo");
  CHECK(inst.integers() == std::vector<int>{1});
  CHECK(inst.constraints.size() == 3);
  CHECK(inst.constraints[2].sense == ConstraintSense::Equal);
  CHECK(*inst.shape.lower == -10.0);
  CHECK(inst.shape.monotone.at(2) == Monotonicity::Increasing);
  CHECK(inst.shape.monotone.at(0) == Monotonicity::Decreasing);
  CHECK(inst.shape.curvature.at(2) == Curvature::Concave);
  REQUIRE(inst.shape.points.size() == 2);
  CHECK(inst.shape.points[0].indices == std::vector<int>{0, 2, 3, 4});
  CHECK(inst.shape.points[1].relation == PointRelation::Under);
  CHECK(*inst.best_known == -1.25);

  const auto again = parse_instance(inst.to_text());
  CHECK(again.to_text() == inst.to_text());
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> p(3);
    for (int j = 0; j < 3; ++j) {
      const auto& v = inst.variables[j];
      p[j] = v.lower + u(rng) * (v.upper - v.lower);
    }
    CHECK(std::abs(again.objective_value(p) - inst.objective_value(p)) <= 1e-12);
    for (std::size_t m = 0; m < 3; ++m) {
      CHECK(std::abs(expr::evaluate(again.constraints[m].body, p) - expr::evaluate(inst.constraints[m].body, p)) <=
            1e-12);
    }
  }
}

TEST_CASE("shape directives map to fitted covariates") {
  const auto inst = parse_instance(
      "var a in [0,1]; var b in [0,1]; min a^3 + b^2; shape bounds [0, inf]; shape monotone b up;");
  CHECK(inst.shape.lower);
  CHECK_FALSE(inst.shape.upper);
  const auto spec = inst.shape.for_covariates({1});
  REQUIRE(spec.monotone.size() == 1);
  CHECK(spec.monotone[0] == Monotonicity::Increasing);
}

TEST_CASE("positioned syntax errors") {
  try {
    parse_instance("var x in [0, 1];\nmin x $ 2;");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 7);
  }
  try {
    parse_instance("var x in [0, 1];\nmin foo(x);");
    FAIL("expected a syntax error");
  } catch (const SyntaxError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 5);
    CHECK(std::string(e.what()).find("unknown function 'foo'") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_instance("var x in [0, 1]; min x + q;"), SyntaxError);
  CHECK_THROWS_AS(parse_instance("var x in [0, 1];"), SyntaxError);
  CHECK_THROWS_AS(parse_instance("var x in [0, 1]; min x; st x < 1;"), SyntaxError);
  CHECK_THROWS_AS(parse_instance("var x in [2, 1]; min x;"), SyntaxError);
}

TEST_CASE("validation of bounds and midpoint evaluation") {
  CHECK_THROWS_AS(parse_instance("var x in [0, inf]; min x^2;"), ValidationError);
  // Linear appearances may be unbounded.
  CHECK_NOTHROW(parse_instance("var x in [0, 1]; var w in [-inf, inf]; min x^2 + w; st w >= 0;"));
  CHECK_THROWS_AS(parse_instance("var x in [-1, 1]; min log(x);"), ValidationError);
}
