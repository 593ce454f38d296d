#include "missoc/shapecon.hpp"

#include <cmath>
#include <limits>

namespace missoc {

namespace {

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * (n - k + i) / i;
  return v;
}

// Coefficient map of the r-th derivative in u: (d+1-r) x (d+1).
Eigen::MatrixXd derivative_map(int d, int r) {
  Eigen::MatrixXd D = Eigen::MatrixXd::Identity(d + 1, d + 1);
  for (int pass = 0; pass < r; ++pass) {
    const int m = static_cast<int>(D.rows()) - 1;  // current degree
    Eigen::MatrixXd step = Eigen::MatrixXd::Zero(m, m + 1);
    for (int i = 0; i < m; ++i) step(i, i + 1) = i + 1;
    D = step * D;
  }
  return D;
}

std::vector<int> block_cols(int offset, int first, int count) {
  std::vector<int> cols(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) cols[static_cast<std::size_t>(c)] = offset + first + c;
  return cols;
}

// Requires the degree-e polynomial with u-coefficients (poly * theta[cols] +
// shift) to be nonnegative on u in [0, 1].
void add_nonneg_block(ShapeProgram& sp, int e, const Eigen::MatrixXd& poly, std::vector<int> cols,
                      const Eigen::VectorXd& shift, BlockInfo info, std::string tag) {
  const auto H = build_H(e);
  const Eigen::MatrixXd W = build_W(e, 0.0, 1.0);
  conic::ConeBlock blk;
  blk.order = e + 1;
  blk.A = H;
  blk.cols = std::move(cols);
  blk.M = Eigen::MatrixXd::Zero(2 * e + 1, poly.cols());
  blk.h = Eigen::VectorXd::Zero(2 * e + 1);
  blk.M.bottomRows(e + 1) = W * poly;
  blk.h.tail(e + 1) = W * shift;
  blk.tag = std::move(tag);
  sp.program.blocks.push_back(std::move(blk));
  sp.info.push_back(info);
}

void add_scalar_row(ShapeProgram& sp, Eigen::RowVectorXd coeffs, std::vector<int> cols, double shift,
                    BlockInfo info, std::string tag) {
  conic::ConeBlock blk;
  blk.order = 1;
  blk.A = {Eigen::MatrixXd::Ones(1, 1)};
  blk.cols = std::move(cols);
  blk.M = coeffs;
  blk.h = Eigen::VectorXd::Constant(1, shift);
  blk.tag = std::move(tag);
  sp.program.blocks.push_back(std::move(blk));
  sp.info.push_back(info);
}

bool weights_ok(const std::vector<double>& w) {
  if (w.size() == 1) return w[0] == 1.0;
  for (double v : w) {
    if (!(v > 0.0 && v < 1.0)) return false;
  }
  return true;
}

}  // namespace

bool ShapeSpec::has_shape() const {
  if (lower || upper || !points.empty()) return true;
  for (auto m : monotone) {
    if (m != Monotonicity::None) return true;
  }
  for (auto c : curvature) {
    if (c != Curvature::None) return true;
  }
  return false;
}

void ShapeSpec::validate(std::size_t p) const {
  if (lower && upper && !(*lower < *upper)) throw InvalidSpecError("shape bounds need L < U");
  if ((lower && !std::isfinite(*lower)) || (upper && !std::isfinite(*upper))) {
    throw InvalidSpecError("shape bounds must be finite; omit a side to drop it");
  }
  auto check_weights = [&](const std::vector<double>& w, const char* side) {
    if (w.empty()) return;
    if (w.size() != p) throw InvalidSpecError(std::string(side) + " weights need one entry per covariate");
    double sum = 0.0;
    for (double v : w) sum += v;
    if (std::abs(sum - 1.0) > 1e-10 || !weights_ok(w)) {
      throw InvalidSpecError(std::string(side) + " weights must lie in (0,1) and sum to 1");
    }
  };
  check_weights(lower_weights, "lower");
  check_weights(upper_weights, "upper");
  if (!monotone.empty() && monotone.size() != p) {
    throw InvalidSpecError("monotonicity flags need one entry per covariate");
  }
  if (!curvature.empty() && curvature.size() != p) {
    throw InvalidSpecError("curvature flags need one entry per covariate");
  }
  for (const auto& set : points) {
    for (int i : set.indices) {
      if (i < 0) throw InvalidSpecError("negative pointwise index");
    }
  }
}

std::vector<Eigen::MatrixXd> build_H(int d) {
  if (d < 0) throw InvalidSpecError("certificate degree must be nonnegative");
  std::vector<Eigen::MatrixXd> H;
  H.reserve(static_cast<std::size_t>(2 * d + 1));
  for (int l = 1; l <= 2 * d + 1; ++l) {
    const int target = l <= d ? 2 * (d + 1 - l) + 1 : 2 * (2 * d + 2 - l);
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(d + 1, d + 1);
    for (int i = 1; i <= d + 1; ++i) {
      const int j = target - i;
      if (j >= 1 && j <= d + 1) m(i - 1, j - 1) = 1.0;
    }
    H.push_back(std::move(m));
  }
  return H;
}

Eigen::MatrixXd build_W(int d, double t_q, double t_q1) {
  if (!(t_q < t_q1)) throw InvalidIntervalError("certificate interval needs t_q < t_{q+1}");
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(d + 1, d + 1);
  for (int i = 1; i <= d + 1; ++i) {
    for (int j = 1; j <= d + 1; ++j) {
      double v = 0.0;
      for (int m = std::max(0, i + j - 2 - d); m <= std::min(i - 1, j - 1); ++m) {
        v += binomial(j - 1, m) * binomial(d - j + 1, i - 1 - m) * std::pow(t_q, j - 1 - m) *
             std::pow(t_q1, m);
      }
      W(i - 1, j - 1) = v;
    }
  }
  return W;
}

Eigen::MatrixXd build_G(int q, const BSplineBasis& basis) {
  if (q < 0 || q >= basis.intervals()) throw IndexError("internal interval out of range");
  const int d = basis.degree();
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d + 1, basis.size());
  for (int c = 0; c <= d; ++c) {
    const auto coeffs = segment_poly_coeffs(q + c, basis.knots(), q + d);
    for (int r = 0; r <= d; ++r) G(r, q + c) = coeffs[static_cast<std::size_t>(r)];
  }
  return G;
}

WeightEstimate estimate_weights(const AdditiveModelFit& fit, const TrainingSet& data) {
  const std::size_t p = fit.components.size();
  if (static_cast<std::size_t>(data.covariates()) != p) {
    throw SizeMismatchError("training set and fit disagree on the covariate count");
  }
  std::vector<double> mins(p, std::numeric_limits<double>::infinity());
  std::vector<double> maxs(p, -std::numeric_limits<double>::infinity());
  for (std::size_t j = 0; j < p; ++j) {
    for (Eigen::Index i = 0; i < data.samples(); ++i) {
      const double v = fit.components[j](data.X(i, static_cast<Eigen::Index>(j)));
      mins[j] = std::min(mins[j], v);
      maxs[j] = std::max(maxs[j], v);
    }
  }
  WeightEstimate out;
  auto normalize = [&](const std::vector<double>& ext, std::vector<double>& w, bool& fallback,
                       const char* side) {
    double sum = 0.0;
    for (double v : ext) sum += v;
    w.assign(p, 1.0 / static_cast<double>(p));
    if (p == 1) return;
    if (sum != 0.0 && std::isfinite(sum)) {
      for (std::size_t j = 0; j < p; ++j) w[j] = ext[j] / sum;
      if (weights_ok(w)) return;
    }
    w.assign(p, 1.0 / static_cast<double>(p));
    fallback = true;
    out.warnings.push_back(std::string(side) +
                           " weights fall outside (0,1); using uniform weights instead");
  };
  normalize(mins, out.lower, out.lower_fallback, "lower");
  normalize(maxs, out.upper, out.upper_fallback, "upper");
  return out;
}

ShapeProgram base_program(const TrainingSet& data, std::vector<BSplineBasis> bases) {
  ShapeProgram sp;
  std::vector<int> sizes;
  for (const auto& b : bases) sizes.push_back(b.size());
  const Eigen::MatrixXd B = design_matrix(data.X, bases);
  const Eigen::MatrixXd P = identifiability_penalty(B, sizes);
  const Eigen::Index n = B.cols() - 1;

  sp.alpha = data.y.size() ? data.y.mean() : 0.0;
  sp.design = B.rightCols(n);
  sp.response = data.y;
  sp.bases = std::move(bases);
  const Eigen::VectorXd r = data.y.array() - sp.alpha;
  sp.program.Q = 2.0 * (sp.design.transpose() * sp.design + P.bottomRightCorner(n, n));
  sp.program.c = -2.0 * sp.design.transpose() * r;
  sp.program.constant = r.squaredNorm();
  sp.program.E.resize(0, n);
  sp.program.e.resize(0);
  return sp;
}

void add_shape_blocks(ShapeProgram& sp, const ShapeSpec& spec, const std::vector<double>& lower_w,
                      const std::vector<double>& upper_w) {
  int offset = 0;
  for (std::size_t j = 0; j < sp.bases.size(); ++j) {
    const auto& basis = sp.bases[j];
    const int d = basis.degree();
    const int k = basis.intervals();
    const int jj = static_cast<int>(j);
    const Monotonicity mono = spec.monotone.empty() ? Monotonicity::None : spec.monotone[j];
    const Curvature curv = spec.curvature.empty() ? Curvature::None : spec.curvature[j];
    if (mono != Monotonicity::None && d < 1) {
      throw InvalidSpecError("monotonicity needs spline degree >= 1");
    }
    if (curv != Curvature::None && d < 1) {
      throw InvalidSpecError("curvature constraints need spline degree >= 1");
    }
    const std::string name = basis.label().empty() ? "x" + std::to_string(j + 1) : basis.label();

    for (int q = 0; q < k; ++q) {
      const Eigen::MatrixXd local = basis.local_segments(q);
      const auto cols = block_cols(offset, q, d + 1);
      const std::string where = name + "[" + std::to_string(q) + "]";
      if (spec.lower) {
        Eigen::VectorXd shift = Eigen::VectorXd::Zero(d + 1);
        shift[0] = -lower_w[j] * (*spec.lower - sp.alpha);
        add_nonneg_block(sp, d, local, cols, shift, {BlockKind::Lower, jj, q}, "lower " + where);
      }
      if (spec.upper) {
        Eigen::VectorXd shift = Eigen::VectorXd::Zero(d + 1);
        shift[0] = upper_w[j] * (*spec.upper - sp.alpha);
        add_nonneg_block(sp, d, -local, cols, shift, {BlockKind::Upper, jj, q}, "upper " + where);
      }
      if (mono != Monotonicity::None) {
        const double sign = mono == Monotonicity::Increasing ? 1.0 : -1.0;
        add_nonneg_block(sp, d - 1, sign * derivative_map(d, 1) * local, cols, Eigen::VectorXd::Zero(d),
                         {BlockKind::Monotone, jj, q}, "monotone " + where);
      }
      if (curv != Curvature::None && d >= 2) {
        const double sign = curv == Curvature::Convex ? 1.0 : -1.0;
        add_nonneg_block(sp, d - 2, sign * derivative_map(d, 2) * local, cols,
                         Eigen::VectorXd::Zero(d - 1), {BlockKind::Curvature, jj, q}, "curvature " + where);
      }
    }

    // Piecewise-linear components: slopes must not decrease across knots.
    if (curv != Curvature::None && d == 1) {
      const double sign = curv == Curvature::Convex ? 1.0 : -1.0;
      const auto& t = basis.knots().internal();
      for (int q = 0; q + 1 < k; ++q) {
        const double h0 = t[static_cast<std::size_t>(q) + 1] - t[static_cast<std::size_t>(q)];
        const double h1 = t[static_cast<std::size_t>(q) + 2] - t[static_cast<std::size_t>(q) + 1];
        const Eigen::MatrixXd l0 = basis.local_segments(q);
        const Eigen::MatrixXd l1 = basis.local_segments(q + 1);
        Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(3);
        row.head(2) -= l0.row(1) / h0;
        row.tail(2) += l1.row(1) / h1;
        add_scalar_row(sp, sign * row, block_cols(offset, q, 3), 0.0,
                       {BlockKind::Curvature, jj, q}, "curvature " + name + "[" + std::to_string(q) + "|" +
                                                          std::to_string(q + 1) + "]");
      }
    }
    offset += basis.size();
  }
}

void add_pointwise_rows(ShapeProgram& sp, std::span<const int> indices, PointRelation relation) {
  if (indices.empty()) return;
  const Eigen::Index n = sp.design.cols();
  std::vector<int> all(static_cast<std::size_t>(n));
  for (Eigen::Index c = 0; c < n; ++c) all[static_cast<std::size_t>(c)] = static_cast<int>(c);

  for (int i : indices) {
    if (i < 0 || i >= sp.design.rows()) {
      throw IndexError("pointwise index " + std::to_string(i) + " outside the training set");
    }
    const Eigen::RowVectorXd b = sp.design.row(i);
    const double target = sp.response[i] - sp.alpha;
    switch (relation) {
      case PointRelation::Interpolate: {
        auto& E = sp.program.E;
        auto& e = sp.program.e;
        E.conservativeResize(E.rows() + 1, n);
        e.conservativeResize(e.size() + 1);
        E.row(E.rows() - 1) = b;
        e[e.size() - 1] = target;
        break;
      }
      case PointRelation::Under:
        // slack = target - b theta >= 0
        add_scalar_row(sp, -b, all, target, {BlockKind::Pointwise, -1, i}, "under " + std::to_string(i));
        break;
      case PointRelation::Over:
        add_scalar_row(sp, b, all, -target, {BlockKind::Pointwise, -1, i}, "over " + std::to_string(i));
        break;
    }
  }
}

ConstrainedFit fit_constrained(const TrainingSet& data, std::span<const int> degrees,
                               std::span<const int> intervals, const ShapeSpec& spec,
                               const conic::Options& options) {
  for (int d : degrees) {
    if (d < 0) throw InvalidSpecError("spline degree must be nonnegative");
  }
  return fit_constrained(data, make_bases(data, degrees, intervals), spec, options);
}

ConstrainedFit fit_constrained(const TrainingSet& data, std::vector<BSplineBasis> bases,
                               const ShapeSpec& spec, const conic::Options& options) {
  data.validate();
  const std::size_t p = bases.size();
  if (static_cast<std::size_t>(data.covariates()) != p) {
    throw SizeMismatchError("need one basis per covariate");
  }
  spec.validate(p);
  Eigen::Index params = 0;
  for (const auto& b : bases) params += b.size();
  if (data.samples() < params) {
    throw ValidationError("training set has " + std::to_string(data.samples()) +
                          " rows but the constrained model has " + std::to_string(params) +
                          " free coefficients");
  }

  ConstrainedFit out;
  out.lower_weights = spec.lower_weights;
  out.upper_weights = spec.upper_weights;
  const bool need_lower = spec.lower && out.lower_weights.empty();
  const bool need_upper = spec.upper && out.upper_weights.empty();
  if (need_lower || need_upper) {
    const auto est = estimate_weights(fit_additive(data, bases), data);
    if (need_lower) {
      out.lower_weights = est.lower;
      if (est.lower_fallback) out.warnings.push_back(est.warnings.front());
    }
    if (need_upper) {
      out.upper_weights = est.upper;
      if (est.upper_fallback) out.warnings.push_back(est.warnings.back());
    }
  }

  ShapeProgram sp = base_program(data, std::move(bases));
  add_shape_blocks(sp, spec, out.lower_weights, out.upper_weights);
  for (const auto& set : spec.points) add_pointwise_rows(sp, set.indices, set.relation);

  out.solver = conic::solve(sp.program, options);
  const auto& theta = out.solver.theta;
  if (out.solver.status == conic::Status::Infeasible) {
    throw InfeasibleError("shape constraints admit no feasible fit (infeasibility certificate found)");
  }
  if (out.solver.status != conic::Status::Optimal) {
    throw ConvergenceError("conic solver stopped with status " + conic::to_string(out.solver.status) +
                               " after " + std::to_string(out.solver.iterations) + " iterations",
                           std::vector<double>(theta.data(), theta.data() + theta.size()));
  }

  out.fit.intercept = sp.alpha;
  Eigen::Index offset = 0;
  for (auto& b : sp.bases) {
    const int s = b.size();
    out.fit.components.push_back({b, theta.segment(offset, s)});
    offset += s;
  }
  const Eigen::VectorXd fitted = sp.design * theta;
  auto& diag = out.fit.diagnostics;
  diag.residual_norm = (sp.response.array() - sp.alpha - fitted.array()).matrix().norm();
  diag.normal_equation_residual = out.solver.dual_residual;
  offset = 0;
  for (const auto& b : sp.bases) {
    diag.zero_mean_defects.push_back(std::abs((sp.design.middleCols(offset, b.size()) *
                                               theta.segment(offset, b.size())).sum()));
    offset += b.size();
  }
  out.objective = 0.5 * theta.dot(sp.program.Q * theta) + sp.program.c.dot(theta) + sp.program.constant;
  out.blocks = std::move(sp.info);
  return out;
}

}  // namespace missoc
