#include "missoc/regression.hpp"

#include <cmath>

namespace missoc {

TrainingSet::TrainingSet(Eigen::MatrixXd X_, Eigen::VectorXd y_, std::vector<std::string> names_)
    : X(std::move(X_)), y(std::move(y_)), names(std::move(names_)) {
  const auto p = static_cast<std::size_t>(X.cols());
  if (names.empty()) {
    for (std::size_t j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
  }
  lower.resize(p);
  upper.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = X.col(static_cast<Eigen::Index>(j));
    lower[j] = X.rows() > 0 ? col.minCoeff() : 0.0;
    upper[j] = X.rows() > 0 ? col.maxCoeff() : 0.0;
  }
}

void TrainingSet::validate() const {
  if (X.rows() != y.size()) throw ValidationError("X and y have different row counts");
  const auto p = static_cast<std::size_t>(X.cols());
  if (names.size() != p || lower.size() != p || upper.size() != p) {
    throw ValidationError("covariate metadata does not match the number of columns");
  }
  if (!X.allFinite() || !y.allFinite()) throw ValidationError("training data has non-finite entries");
  for (std::size_t j = 0; j < p; ++j) {
    if (!(upper[j] > lower[j])) {
      throw ValidationError("covariate '" + names[j] + "' has an empty domain");
    }
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const double v = X(i, static_cast<Eigen::Index>(j));
      if (v < lower[j] || v > upper[j]) throw OutOfDomainError(names[j], v, lower[j], upper[j]);
    }
  }
}

Eigen::VectorXd AdditiveModelFit::coefficients() const {
  Eigen::Index n = 1;
  for (const auto& c : components) n += c.theta.size();
  Eigen::VectorXd out(n);
  out[0] = intercept;
  Eigen::Index offset = 1;
  for (const auto& c : components) {
    out.segment(offset, c.theta.size()) = c.theta;
    offset += c.theta.size();
  }
  return out;
}

std::vector<BSplineBasis> AdditiveModelFit::bases() const {
  std::vector<BSplineBasis> out;
  out.reserve(components.size());
  for (const auto& c : components) out.push_back(c.basis);
  return out;
}

Eigen::MatrixXd identifiability_penalty(const Eigen::Ref<const Eigen::MatrixXd>& design,
                                        std::span<const int> block_sizes) {
  Eigen::Index total = 1;
  for (int s : block_sizes) total += s;
  if (total != design.cols()) throw SizeMismatchError("penalty blocks do not match design columns");
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(total, total);
  Eigen::Index offset = 1;
  for (int s : block_sizes) {
    const Eigen::VectorXd colsum = design.middleCols(offset, s).colwise().sum().transpose();
    P.block(offset, offset, s, s) = colsum * colsum.transpose();
    offset += s;
  }
  return P;
}

std::vector<BSplineBasis> make_bases(const TrainingSet& data, std::span<const int> degrees,
                                     std::span<const int> intervals) {
  const auto p = static_cast<std::size_t>(data.covariates());
  if (degrees.size() != p || intervals.size() != p) {
    throw SizeMismatchError("need one degree and one interval count per covariate");
  }
  std::vector<BSplineBasis> bases;
  bases.reserve(p);
  for (std::size_t j = 0; j < p; ++j) {
    if (degrees[j] < 0) throw InvalidSpecError("spline degree must be nonnegative");
    bases.emplace_back(KnotVector::uniform(data.lower[j], data.upper[j], intervals[j], degrees[j]),
                       data.names[j]);
  }
  return bases;
}

AdditiveModelFit fit_additive(const TrainingSet& data, std::span<const int> degrees,
                              std::span<const int> intervals) {
  for (int d : degrees) {
    if (d < 1) throw InvalidSpecError("unconstrained fits need degree >= 1");
  }
  for (int k : intervals) {
    if (k < 1) throw InvalidSpecError("unconstrained fits need at least one interval");
  }
  return fit_additive(data, make_bases(data, degrees, intervals));
}

AdditiveModelFit fit_additive(const TrainingSet& data, std::vector<BSplineBasis> bases) {
  data.validate();
  std::vector<int> sizes;
  Eigen::Index params = 1;
  for (const auto& b : bases) {
    sizes.push_back(b.size());
    params += b.size();
  }
  if (data.samples() < params) {
    throw ValidationError("training set has " + std::to_string(data.samples()) +
                          " rows but the model has " + std::to_string(params) + " parameters");
  }

  const Eigen::MatrixXd B = design_matrix(data.X, bases);
  const Eigen::MatrixXd P = identifiability_penalty(B, sizes);
  const Eigen::MatrixXd Q = B.transpose() * B + P;
  const Eigen::VectorXd rhs = B.transpose() * data.y;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(Q);
  const Eigen::VectorXd D = ldlt.vectorD();
  const double smallest = D.cwiseAbs().minCoeff();
  if (ldlt.info() != Eigen::Success || !(smallest > 1e-12 * Q.trace())) {
    throw IllPosedFitError("normal equations are numerically singular", smallest);
  }
  Eigen::VectorXd theta = ldlt.solve(rhs);
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd r = rhs - Q * theta;
    theta += ldlt.solve(r);
  }

  AdditiveModelFit fit;
  fit.intercept = theta[0];
  Eigen::Index offset = 1;
  for (auto& b : bases) {
    const int s = b.size();
    fit.components.push_back({std::move(b), theta.segment(offset, s)});
    offset += s;
  }

  auto& diag = fit.diagnostics;
  diag.residual_norm = (data.y - B * theta).norm();
  const double scale = rhs.norm();
  diag.normal_equation_residual = (Q * theta - rhs).norm() / (scale > 0 ? scale : 1.0);
  diag.smallest_pivot = smallest;
  offset = 1;
  for (int s : sizes) {
    diag.zero_mean_defects.push_back(std::abs((B.middleCols(offset, s) * theta.segment(offset, s)).sum()));
    offset += s;
  }
  return fit;
}

double predict(const AdditiveModelFit& fit, std::span<const double> x) {
  if (x.size() != fit.components.size()) throw SizeMismatchError("point dimension mismatch");
  double v = fit.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) v += fit.components[j](x[j]);
  return v;
}

double penalized_objective(const Eigen::Ref<const Eigen::MatrixXd>& design,
                           const Eigen::Ref<const Eigen::MatrixXd>& penalty,
                           const Eigen::Ref<const Eigen::VectorXd>& y,
                           const Eigen::Ref<const Eigen::VectorXd>& theta) {
  return (y - design * theta).squaredNorm() + theta.dot(penalty * theta);
}

}  // namespace missoc
