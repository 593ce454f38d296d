#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "missoc/splines.hpp"

namespace missoc {

/// Sampled covariate rows and responses.
///
/// The per-covariate domain [lower_j, upper_j] defaults to the observed range
/// but may be widened (the driver sets it to the variable box so the fitted
/// surrogate covers the whole feasible box).
struct TrainingSet {
  Eigen::MatrixXd X;  // n x p
  Eigen::VectorXd y;  // n
  std::vector<std::string> names;
  std::vector<double> lower;
  std::vector<double> upper;

  TrainingSet() = default;
  TrainingSet(Eigen::MatrixXd X, Eigen::VectorXd y, std::vector<std::string> names = {});

  Eigen::Index samples() const { return X.rows(); }
  Eigen::Index covariates() const { return X.cols(); }

  /// Throws ValidationError on size mismatches, non-finite entries or rows
  /// outside the declared domain.
  void validate() const;
};

struct FitDiagnostics {
  double residual_norm = 0.0;           // ||y - B theta||
  double normal_equation_residual = 0.0;  // relative, see fit_additive
  std::vector<double> zero_mean_defects;  // |1^T B_j theta_j| per covariate
  double smallest_pivot = 0.0;
};

/// One additive component S_j(x) = sum_l theta_jl B_l(x).
struct AdditiveComponent {
  BSplineBasis basis;
  Eigen::VectorXd theta;

  double operator()(double x) const { return basis.evaluate(theta, x); }
  const std::string& name() const { return basis.label(); }
};

/// Intercept plus per-covariate spline components: the surrogate
/// g(x) = alpha + sum_j S_j(x_j).
struct AdditiveModelFit {
  double intercept = 0.0;
  std::vector<AdditiveComponent> components;
  FitDiagnostics diagnostics;

  std::size_t covariates() const { return components.size(); }
  /// Full coefficient vector (alpha, theta_1, ..., theta_p).
  Eigen::VectorXd coefficients() const;
  std::vector<BSplineBasis> bases() const;
};

/// Block-diagonal identifiability penalty for the column partition
/// [1 | B_1 | ... | B_p] of `design` given each block's width.
Eigen::MatrixXd identifiability_penalty(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                        std::span<const int> block_sizes);

/// Bases with equidistant internal knots over each covariate's domain.
std::vector<BSplineBasis> make_bases(const TrainingSet& data, std::span<const int> degrees,
                                     std::span<const int> intervals);

/// Penalized least-squares additive fit, solving
/// (B^T B + P^I) theta = B^T y with a pivot-checked LDL^T factorization.
AdditiveModelFit fit_additive(const TrainingSet& data, std::span<const int> degrees,
                              std::span<const int> intervals);

/// Same fit on prebuilt bases.
AdditiveModelFit fit_additive(const TrainingSet& data, std::vector<BSplineBasis> bases);

/// alpha + sum_j S_j(x_j); out-of-domain covariates throw OutOfDomainError.
double predict(const AdditiveModelFit& fit, std::span<const double> x);

/// Penalized least-squares objective ||y - B theta||^2 + theta^T P^I theta.
double penalized_objective(const Eigen::Ref<const Eigen::MatrixXd>& design,
                           const Eigen::Ref<const Eigen::MatrixXd>& penalty,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& theta);

/// Versioned text serialization; doubles are written with 17 significant
/// digits so a round trip is exact.
std::string serialize_model(const AdditiveModelFit& fit);
AdditiveModelFit deserialize_model(const std::string& text);
void save_model(const AdditiveModelFit& fit, const std::string& path);
AdditiveModelFit load_model(const std::string& path);

}  // namespace missoc
