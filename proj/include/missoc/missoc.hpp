#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "missoc/bnb.hpp"
#include "missoc/conic_solver.hpp"
#include "missoc/instance.hpp"
#include "missoc/localsearch.hpp"
#include "missoc/regression.hpp"
#include "missoc/shapecon.hpp"
#include "missoc/surrogate.hpp"

namespace missoc {

struct MissocConfig {
  /// Per-covariate degrees and interval counts; a single entry applies to
  /// every covariate and an empty list means the default.
  std::vector<int> degrees;
  std::vector<int> intervals;
  int default_degree = 3;
  int default_intervals = 10;
  int samples_per_param = 15;
  std::uint64_t seed = 1;
  double time_limit = 600.0;
  double gap_tol = 1e-4;
  bool use_shape = true;
  bool refine = true;
  int resample_cap = 1000;
  conic::Options conic;
  RefineOptions local;
  /// Receives the solver's node log when set.
  std::ostream* solver_log = nullptr;

  std::vector<int> degrees_for(std::size_t p) const;
  std::vector<int> intervals_for(std::size_t p) const;
};

/// Uniform samples of the objective minus its variable-linear terms over the box of
/// its variables: n = s (1 + sum_j (d_j + k_j)) rows, columns ordered as
/// ProblemInstance::objective_covariates(). The declared domain is the box.
TrainingSet sample_training(const ProblemInstance& instance, const MissocConfig& config);

/// Number of training rows for the given per-covariate degrees/intervals.
int training_size(int samples_per_param, std::span<const int> degrees, std::span<const int> intervals);

struct StageTime {
  std::string stage;
  double seconds = 0.0;
};

struct MissocReport {
  std::string instance;
  AdditiveModelFit fit;
  std::vector<std::string> warnings;
  bool constrained = false;
  bnb::SolveReport solve;
  std::vector<double> x_tilde;
  double surrogate_objective = 0.0;  // surrogate value at x_tilde
  std::vector<double> x_star;
  double objective = 0.0;            // g_0(x_star)
  double max_violation = 0.0;
  std::optional<RefineResult> refinement;
  std::vector<StageTime> stages;
  double total_time = 0.0;

  static std::string csv_header();
  /// One row per stage plus a "total" row.
  std::string csv_rows() const;
};

/// Sample, fit (shape-constrained when the instance carries directives),
/// build the surrogate, solve it globally and refine on the original
/// problem. Failures are rethrown as StageError tagged with the stage.
MissocReport run_missoc(const ProblemInstance& instance, const MissocConfig& config);

}  // namespace missoc
