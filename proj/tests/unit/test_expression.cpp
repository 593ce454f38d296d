#include <cmath>
#include <random>

#include "doctest.h"
#include "missoc/errors.hpp"
#include "missoc/expression.hpp"

using namespace missoc::expr;

namespace {

Expr x(int i) { return Expr::variable(i); }

double fd(const Expr& e, std::vector<double> p, int i) {
  const double h = 1e-6 * (1.0 + std::abs(p[i]));
  p[i] += h;
  const double up = evaluate(e, p);
  p[i] -= 2 * h;
  const double dn = evaluate(e, p);
  return (up - dn) / (2 * h);
}

}  // namespace

TEST_CASE("expression evaluation of each operator") {
  const std::vector<double> p{1.5, -0.5, 2.0};
  CHECK(evaluate(x(0) + x(1), p) == doctest::Approx(1.0));
  CHECK(evaluate(x(0) - x(1), p) == doctest::Approx(2.0));
  CHECK(evaluate(x(0) * x(2), p) == doctest::Approx(3.0));
  CHECK(evaluate(x(0) / x(2), p) == doctest::Approx(0.75));
  CHECK(evaluate(pow(x(2), 3.0), p) == doctest::Approx(8.0));
  CHECK(evaluate(-x(1), p) == doctest::Approx(0.5));
  CHECK(evaluate(Expr::apply(Op::Exp, {x(1)}), p) == doctest::Approx(std::exp(-0.5)));
  CHECK(evaluate(Expr::apply(Op::Log, {x(2)}), p) == doctest::Approx(std::log(2.0)));
  CHECK(evaluate(Expr::apply(Op::Sqrt, {x(2)}), p) == doctest::Approx(std::sqrt(2.0)));
  CHECK(evaluate(Expr::apply(Op::Sin, {x(0)}), p) == doctest::Approx(std::sin(1.5)));
  CHECK(evaluate(Expr::apply(Op::Cos, {x(0)}), p) == doctest::Approx(std::cos(1.5)));
  CHECK(evaluate(Expr::apply(Op::Abs, {x(1)}), p) == doctest::Approx(0.5));
  CHECK(evaluate(Expr::apply(Op::Min, {x(0), x(1), x(2)}), p) == doctest::Approx(-0.5));
  CHECK(evaluate(Expr::apply(Op::Max, {x(0), x(1), x(2)}), p) == doctest::Approx(2.0));
}

TEST_CASE("forward-mode gradient matches central differences") {
  const Expr e = x(0) * Expr::apply(Op::Log, {x(1) + 2.0}) + pow(x(2), 3.0) / (1.0 + x(0) * x(0)) -
                 Expr::apply(Op::Exp, {Expr::apply(Op::Sin, {x(1) * x(2)})}) +
                 Expr::apply(Op::Sqrt, {x(0) * x(0) + 1.0}) * Expr::apply(Op::Cos, {x(2)});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> p{u(rng), u(rng), u(rng)};
    Eigen::VectorXd g(3);
    const double v = evaluate_gradient(e, p, g);
    CHECK(v == doctest::Approx(evaluate(e, p)).epsilon(1e-14));
    for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(fd(e, p, i)).epsilon(1e-6));
  }
}

TEST_CASE("affine detection and linear split") {
  const Expr lin = 2.0 * x(0) - 3.0 * (x(1) - 1.0) + x(0) / 4.0;
  const auto a = as_affine(lin);
  REQUIRE(a);
  CHECK(a->constant == doctest::Approx(3.0));
  CHECK(a->coeffs.at(0) == doctest::Approx(2.25));
  CHECK(a->coeffs.at(1) == doctest::Approx(-3.0));
  CHECK_FALSE(as_affine(x(0) * x(1)));

  const Expr e = 5.0 * x(0) + pow(x(1), 2.0) - x(2) + Expr::apply(Op::Exp, {x(0)});
  const Split s = split_linear(e);
  CHECK(s.has_nonlinear);
  CHECK(s.linear.coeffs.at(0) == doctest::Approx(5.0));
  CHECK(s.linear.coeffs.at(2) == doctest::Approx(-1.0));
  CHECK(variables(s.nonlinear) == std::set<int>{0, 1});
  const std::vector<double> p{0.3, -0.7, 1.1};
  CHECK(s.linear(p) + evaluate(s.nonlinear, p) == doctest::Approx(evaluate(e, p)).epsilon(1e-14));
}

TEST_CASE("unparse keeps precedence and constants") {
  const std::vector<std::string> names{"a", "b"};
  CHECK(unparse(x(0) - (x(1) - 1.0), names) == "a - (b - 1)");
  CHECK(unparse(pow(-x(0), 2.0), names) == "(-a)^2");
  const Expr c(0.1);
  CHECK(unparse(c, names) == "0.10000000000000001");
}

TEST_CASE("arity is checked") {
  CHECK_THROWS(Expr::apply(Op::Exp, {x(0), x(1)}));
  CHECK_THROWS(Expr::apply(Op::Min, {x(0)}));
}

TEST_CASE("remapping variables") {
  const Expr e = x(0) * x(1);
  const Expr r = remap_variables(e, {2, 0});
  CHECK(variables(r) == std::set<int>{0, 2});
  CHECK(evaluate(r, std::vector<double>{3.0, 0.0, 5.0}) == doctest::Approx(15.0));
}
