#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace missoc::conic {

/// One positive semidefinite block Z of small order together with the rows
/// that tie it to the free vector theta:
///
///     <A_i, Z> - (M theta[cols])_i = h_i,   i = 0..rows-1.
struct ConeBlock {
  int order = 1;
  std::vector<Eigen::MatrixXd> A;  // symmetric order x order, one per row
  std::vector<int> cols;           // theta indices touched by M
  Eigen::MatrixXd M;               // rows x cols.size()
  Eigen::VectorXd h;               // rows
  std::string tag;                 // diagnostic label

  int rows() const { return static_cast<int>(A.size()); }
};

/// min 0.5 theta^T Q theta + c^T theta + constant
/// s.t. every ConeBlock row, E theta = e, all Z psd.
struct Program {
  Eigen::MatrixXd Q;
  Eigen::VectorXd c;
  double constant = 0.0;
  std::vector<ConeBlock> blocks;
  Eigen::MatrixXd E;
  Eigen::VectorXd e;

  Eigen::Index dimension() const { return Q.rows(); }
  /// Throws SizeMismatchError on inconsistent shapes.
  void validate() const;
};

struct Options {
  double gap_tol = 1e-7;
  double feasibility_tol = 1e-8;
  /// Residual accepted for an iterate within gap_tol when progress stalls
  /// before reaching feasibility_tol.
  double near_feasibility_tol = 1e-6;
  int max_iterations = 200;
  /// Worker threads for per-block assembly; results do not depend on it.
  int threads = 1;
  double step_fraction = 0.98;
};

enum class Status { Optimal, Infeasible, IterationLimit, NumericalFailure };

std::string to_string(Status s);

struct Result {
  Status status = Status::NumericalFailure;
  Eigen::VectorXd theta;
  std::vector<Eigen::MatrixXd> Z;  // primal psd blocks
  std::vector<Eigen::MatrixXd> S;  // dual slack blocks
  std::vector<Eigen::VectorXd> y;  // row multipliers per block
  Eigen::VectorXd z;               // multipliers of E theta = e
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  int iterations = 0;
};

/// Infeasible-start primal-dual path following with the HKM search
/// direction and Mehrotra predictor-corrector steps. The Newton system is
/// reduced to the theta space because every row belongs to exactly one block
/// (per-block Schur complements are small and dense).
Result solve(const Program& program, const Options& options = {});

}  // namespace missoc::conic
