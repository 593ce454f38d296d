#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "missoc/conic_solver.hpp"
#include "missoc/regression.hpp"

namespace missoc {

enum class Monotonicity { None, Increasing, Decreasing };
enum class Curvature { None, Convex, Concave };

/// Relation of the fitted prediction to the observed response.
enum class PointRelation { Interpolate, Under, Over };

struct PointwiseSet {
  std::vector<int> indices;  // 0-based training rows
  PointRelation relation = PointRelation::Interpolate;
};

/// Bound and shape requirements for an additive fit. Empty per-covariate
/// vectors mean "no requirement"; empty weight vectors are estimated from
/// the unconstrained fit.
struct ShapeSpec {
  std::optional<double> lower;
  std::optional<double> upper;
  std::vector<double> lower_weights;
  std::vector<double> upper_weights;
  std::vector<Monotonicity> monotone;
  std::vector<Curvature> curvature;
  std::vector<PointwiseSet> points;

  bool has_shape() const;
  /// Throws InvalidSpecError when the spec is inconsistent for p covariates.
  void validate(std::size_t p) const;
};

/// The 2d+1 anti-diagonal indicator matrices of order d+1. Entry (i, j)
/// (1-based) of H_l is 1 when i + j = 2(d+1-l)+1 for l <= d and when
/// i + j = 2(2d+2-l) for l > d. Index 0 of the result is H_1.
std::vector<Eigen::MatrixXd> build_H(int d);

/// Coefficient map of p(x)(1+s)^d under x = (t_q + t_{q1} s)/(1+s); row i
/// collects the s^{i-1} coefficient. Throws InvalidIntervalError unless
/// t_q < t_{q1}.
Eigen::MatrixXd build_W(int d, double t_q, double t_q1);

/// (d+1) x (k+d) map from spline coefficients to the power-basis
/// coefficients (in x) of the spline on internal interval q (0-based).
Eigen::MatrixXd build_G(int q, const BSplineBasis& basis);

struct WeightEstimate {
  std::vector<double> lower;
  std::vector<double> upper;
  bool lower_fallback = false;
  bool upper_fallback = false;
  std::vector<std::string> warnings;
};

/// Normalized per-covariate minima and maxima of the fitted components over
/// the training rows. A side falls back to uniform 1/p when its denominator
/// vanishes or some weight leaves (0, 1).
WeightEstimate estimate_weights(const AdditiveModelFit& fit, const TrainingSet& data);

enum class BlockKind { Lower, Upper, Monotone, Curvature, Pointwise };

struct BlockInfo {
  BlockKind kind;
  int covariate = -1;  // -1 for pointwise rows
  int interval = -1;   // internal interval, or training row for pointwise
};

/// The conic fitting program with alpha frozen at the response mean. Decision
/// vector theta = (theta_1, ..., theta_p) without the intercept.
struct ShapeProgram {
  conic::Program program;
  std::vector<BlockInfo> info;  // parallel to program.blocks
  Eigen::MatrixXd design;       // n x sum(k_j+d_j), intercept column removed
  Eigen::VectorXd response;
  double alpha = 0.0;
  std::vector<BSplineBasis> bases;
  std::vector<double> lower_weights;
  std::vector<double> upper_weights;
};

/// Unconstrained objective ||y - alpha - B theta||^2 + theta^T P theta as a
/// conic program without cone blocks.
ShapeProgram base_program(const TrainingSet& data, std::vector<BSplineBasis> bases);

/// Appends bound, monotonicity and curvature blocks for every covariate.
void add_shape_blocks(ShapeProgram& sp, const ShapeSpec& spec, const std::vector<double>& lower_w,
                      const std::vector<double>& upper_w);

/// Appends rows B_A theta {=, <=, >=} y_A - alpha for the training rows in
/// `indices`. Inequalities become order-1 blocks, equalities join E theta = e.
/// An empty index set is a no-op.
void add_pointwise_rows(ShapeProgram& sp, std::span<const int> indices, PointRelation relation);

struct ConstrainedFit {
  AdditiveModelFit fit;
  conic::Result solver;
  std::vector<BlockInfo> blocks;
  std::vector<double> lower_weights;
  std::vector<double> upper_weights;
  std::vector<std::string> warnings;
  /// Objective ||y - B theta||^2 + theta^T P theta of the returned fit.
  double objective = 0.0;
};

/// Shape-constrained additive fit. Throws InfeasibleError when the solver
/// certifies infeasibility and ConvergenceError (carrying theta) when it
/// stops without converging.
ConstrainedFit fit_constrained(const TrainingSet& data, std::span<const int> degrees,
                               std::span<const int> intervals, const ShapeSpec& spec,
                               const conic::Options& options = {});

ConstrainedFit fit_constrained(const TrainingSet& data, std::vector<BSplineBasis> bases,
                               const ShapeSpec& spec, const conic::Options& options = {});

}  // namespace missoc
