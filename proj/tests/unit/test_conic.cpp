#include <cmath>

#include "doctest.h"
#include "missoc/conic_solver.hpp"
#include "missoc/errors.hpp"
#include "missoc/shapecon.hpp"

using namespace missoc;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

conic::ConeBlock scalar_row(double coeff, double h) {
  conic::ConeBlock b;
  b.order = 1;
  b.A = {MatrixXd::Ones(1, 1)};
  b.cols = {0};
  b.M = MatrixXd::Constant(1, 1, coeff);
  b.h = VectorXd::Constant(1, h);
  return b;
}

}  // namespace

TEST_CASE("scalar bound via an order-one block") {
  // min (theta - 2)^2 s.t. z = 1 - theta >= 0
  conic::Program p;
  p.Q = MatrixXd::Constant(1, 1, 2.0);
  p.c = VectorXd::Constant(1, -4.0);
  p.constant = 4.0;
  p.blocks.push_back(scalar_row(-1.0, 1.0));
  const auto r = conic::solve(p);
  REQUIRE(r.status == conic::Status::Optimal);
  CHECK(r.theta[0] == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(r.primal_objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r.relative_gap <= 1e-7);
}

TEST_CASE("polynomial nonnegativity certificate on the unit interval") {
  // u^2 - u + 1 - theta >= 0 on [0,1] holds iff theta <= 3/4.
  const auto H = build_H(2);
  const MatrixXd W = build_W(2, 0.0, 1.0);
  conic::ConeBlock b;
  b.order = 3;
  b.A = H;
  b.cols = {0};
  b.M = MatrixXd::Zero(5, 1);
  b.h = VectorXd::Zero(5);
  const Eigen::Vector3d shift(1.0, -1.0, 1.0);
  const Eigen::Vector3d slope(-1.0, 0.0, 0.0);
  b.M.bottomRows(3) = W * slope;
  b.h.tail(3) = W * shift;

  conic::Program p;
  p.Q = MatrixXd::Constant(1, 1, 2.0);
  p.c = VectorXd::Constant(1, -10.0);
  p.blocks.push_back(b);
  const auto r = conic::solve(p);
  REQUIRE(r.status == conic::Status::Optimal);
  CHECK(r.theta[0] == doctest::Approx(0.75).epsilon(1e-6));
  const Eigen::SelfAdjointEigenSolver<MatrixXd> es(r.Z[0]);
  CHECK(es.eigenvalues().minCoeff() >= -1e-8);
}

TEST_CASE("equality rows") {
  conic::Program p;
  p.Q = MatrixXd::Identity(2, 2);
  p.c = VectorXd::Zero(2);
  p.E = MatrixXd::Ones(1, 2);
  p.e = VectorXd::Constant(1, 2.0);
  const auto r = conic::solve(p);
  REQUIRE(r.status == conic::Status::Optimal);
  CHECK(r.theta[0] == doctest::Approx(1.0));
  CHECK(r.theta[1] == doctest::Approx(1.0));
}

TEST_CASE("infeasible rows are certified") {
  // theta <= 0 and theta >= 1
  conic::Program p;
  p.Q = MatrixXd::Constant(1, 1, 2.0);
  p.c = VectorXd::Zero(1);
  p.blocks.push_back(scalar_row(-1.0, 0.0));
  p.blocks.push_back(scalar_row(1.0, -1.0));
  const auto r = conic::solve(p);
  CHECK(r.status == conic::Status::Infeasible);
}

TEST_CASE("shape validation") {
  conic::Program p;
  p.Q = MatrixXd::Identity(2, 2);
  p.c = VectorXd::Zero(3);
  CHECK_THROWS_AS(conic::solve(p), SizeMismatchError);
}

TEST_CASE("status names") {
  CHECK(conic::to_string(conic::Status::Optimal) == "optimal");
  CHECK(conic::to_string(conic::Status::Infeasible) == "infeasible");
}
