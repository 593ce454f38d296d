#pragma once

#include <span>
#include <vector>

#include "missoc/instance.hpp"

namespace missoc {

struct RefineOptions {
  double stationarity_tol = 1e-6;
  double feasibility_tol = 1e-6;
  int max_outer = 50;
  int max_inner = 500;
  int memory = 8;
  double initial_penalty = 10.0;
  /// Records the merit after every accepted inner step, one list per outer
  /// iteration.
  bool trace = false;
};

struct RefineResult {
  std::vector<double> x;
  double objective = 0.0;
  double max_violation = 0.0;
  int iterations = 0;
  bool converged = false;
  /// True when x is the start point returned unchanged.
  bool fallback = false;
  std::vector<std::vector<double>> merit_trace;
};

/// Local NLP refinement from start with the integer variables fixed to
/// their start values: augmented Lagrangian outer loop, projected L-BFGS
/// inner solves on the box. Returns the start point when no feasible
/// improvement is found from a feasible start.
RefineResult refine(const ProblemInstance& instance, std::span<const double> start,
                    const RefineOptions& options = {});

}  // namespace missoc
