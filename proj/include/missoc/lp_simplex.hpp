#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace missoc::lp {

enum class RowSense { LessEqual, GreaterEqual, Equal };

/// min c^T x  s.t.  A x (sense) b,  lower <= x <= upper.
/// Bounds may be infinite; free variables are allowed.
struct Problem {
  Eigen::VectorXd c;
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  std::vector<RowSense> sense;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int variables() const { return static_cast<int>(c.size()); }
  int rows() const { return static_cast<int>(b.size()); }

  /// Appends a row and returns its index.
  int add_row(const Eigen::Ref<const Eigen::VectorXd>& a, RowSense s, double rhs);
};

enum class Status { Optimal, Infeasible, Unbounded, IterationLimit };
std::string to_string(Status s);

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-10;
  int max_iterations = 50000;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int degenerate_switch = 50;
};

struct Result {
  Status status = Status::IterationLimit;
  Eigen::VectorXd x;
  double objective = 0.0;
  int iterations = 0;
  bool used_bland = false;
};

/// Dense bounded-variable two-phase primal simplex. Dantzig pricing with a
/// Bland fallback on stalls; deterministic for identical input.
Result solve(const Problem& problem, const Options& options = {});

}  // namespace missoc::lp
