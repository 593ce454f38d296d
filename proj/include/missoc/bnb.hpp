#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "missoc/surrogate.hpp"

namespace missoc::bnb {

enum class Status { Optimal, TimeLimit, NodeLimit, Infeasible, NoIncumbent, Unbounded };
std::string to_string(Status s);

/// 100 |ub - lb| / |ub|; +inf when ub = 0 != lb and 0 when ub = lb.
double optimality_gap(double ub, double lb);

/// Read-only view of an explored node, for logging and bound audits.
struct NodeView {
  long id = 0;
  int depth = 0;
  double lower_bound = 0.0;
  std::vector<double> lower;  // surrogate variable bounds
  std::vector<double> upper;
  /// Offset range of each link when its selector is 1.
  std::vector<std::pair<double, double>> link_range;
};

struct Options {
  /// Relative gap tolerance, |ub - lb| / |ub|.
  double gap_tol = 1e-4;
  /// Absolute tolerance used when |ub| is tiny.
  double abs_tol = 1e-9;
  double time_limit = 600.0;
  long max_nodes = 1000000;
  double feasibility_tol = 1e-6;
  /// Cutting-plane rounds per node before branching.
  int cut_rounds = 4;
  int root_cut_rounds = 25;
  /// CSV log lines "node,depth,lb,ub,gap%" (header included) when set.
  std::ostream* log = nullptr;
  std::function<void(const NodeView&)> on_node;
};

struct SolveReport {
  Status status = Status::NoIncumbent;
  bool has_incumbent = false;
  Eigen::VectorXd z;       // surrogate point
  std::vector<double> x;   // original coordinates
  double objective = 0.0;  // upper bound
  double lower_bound = -std::numeric_limits<double>::infinity();
  double gap_pct = std::numeric_limits<double>::infinity();
  long nodes = 0;
  int max_depth = 0;
  double wall_time = 0.0;
  double max_violation = 0.0;
  std::string reason;

  static std::string csv_header();
  std::string csv_row() const;
};

/// Global branch-and-bound over the multiple-choice surrogate. Single
/// threaded and deterministic for identical input.
SolveReport solve(const SurrogateMINLP& surrogate, const Options& options = {});

}  // namespace missoc::bnb
