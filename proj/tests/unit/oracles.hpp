#pragma once

// Independent reference computations shared by the unit and acceptance
// suites. Nothing here calls into the library's numerical kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// Extended knots by explicit replication of the boundary widths.
inline std::vector<double> extended_knots(const std::vector<double>& internal, int d) {
  std::vector<double> t;
  const double wl = internal[1] - internal[0];
  const double wr = internal.back() - internal[internal.size() - 2];
  for (int i = d; i >= 1; --i) t.push_back(internal.front() - i * wl);
  for (double v : internal) t.push_back(v);
  for (int i = 1; i <= d; ++i) t.push_back(internal.back() + i * wr);
  return t;
}

/// Plain Cox-de Boor from the degree-0 indicators; `last` is the index of
/// the closed final internal interval.
inline double cox_de_boor(const std::vector<double>& t, int l, int d, double x, int last) {
  if (d == 0) {
    if (l == last) return (x >= t[l] && x <= t[l + 1]) ? 1.0 : 0.0;
    if (x == t[last + 1]) return 0.0;
    return (x >= t[l] && x < t[l + 1]) ? 1.0 : 0.0;
  }
  double a = 0.0, b = 0.0;
  if (t[l + d] != t[l]) a = (x - t[l]) / (t[l + d] - t[l]) * cox_de_boor(t, l, d - 1, x, last);
  if (t[l + d + 1] != t[l + 1]) {
    b = (t[l + d + 1] - x) / (t[l + d + 1] - t[l + 1]) * cox_de_boor(t, l + 1, d - 1, x, last);
  }
  return a + b;
}

/// r-th derivative of B_{l,d} by the standard degree-lowering identity.
inline double cox_de_boor_derivative(const std::vector<double>& t, int l, int d, double x, int last,
                                     int r) {
  if (r == 0) return cox_de_boor(t, l, d, x, last);
  if (d == 0) return 0.0;
  double v = 0.0;
  if (t[l + d] != t[l]) v += d / (t[l + d] - t[l]) * cox_de_boor_derivative(t, l, d - 1, x, last, r - 1);
  if (t[l + d + 1] != t[l + 1]) {
    v -= d / (t[l + d + 1] - t[l + 1]) * cox_de_boor_derivative(t, l + 1, d - 1, x, last, r - 1);
  }
  return v;
}

/// Row of r-th derivatives of all k+d basis functions at x.
inline Eigen::RowVectorXd basis_row(const std::vector<double>& internal, int d, double x, int r = 0) {
  const auto t = extended_knots(internal, d);
  const int k = static_cast<int>(internal.size()) - 1;
  Eigen::RowVectorXd row(k + d);
  for (int l = 0; l < k + d; ++l) row[l] = cox_de_boor_derivative(t, l, d, x, d + k - 1, r);
  return row;
}

/// Power-basis coefficients of (c0 + c1 s)^a (1 + s)^b by repeated
/// polynomial multiplication.
inline std::vector<double> binomial_product(double c0, double c1, int a, int b) {
  std::vector<double> p{1.0};
  auto mul = [&](double u0, double u1) {
    std::vector<double> out(p.size() + 1, 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
      out[i] += u0 * p[i];
      out[i + 1] += u1 * p[i];
    }
    p = out;
  };
  for (int i = 0; i < a; ++i) mul(c0, c1);
  for (int i = 0; i < b; ++i) mul(1.0, 1.0);
  return p;
}

/// Value of sum_l theta_l B_l at x for the uniform-extension knot rule.
inline double spline_eval(const std::vector<double>& internal, int d, const Eigen::VectorXd& theta,
                          double x) {
  const auto t = extended_knots(internal, d);
  const int k = static_cast<int>(internal.size()) - 1;
  double v = 0.0;
  for (int l = 0; l < k + d; ++l) v += theta[l] * cox_de_boor(t, l, d, x, d + k - 1);
  return v;
}

/// Minimizes 0.5 x^T A x - b^T x for symmetric positive definite A by
/// conjugate gradients.
inline Eigen::VectorXd conjugate_gradient(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                                          int max_iter = 20000, double tol = 1e-15) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(b.size());
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rr = r.squaredNorm();
  const double stop = tol * tol * std::max(1.0, b.squaredNorm());
  for (int it = 0; it < max_iter && rr > stop; ++it) {
    const Eigen::VectorXd Ap = A * p;
    const double alpha = rr / p.dot(Ap);
    x += alpha * p;
    r -= alpha * Ap;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return x;
}

/// Minimizes 0.5 x^T Q x + c^T x subject to G x >= g (rows) and F x = f by a
/// method of multipliers; inner problems are convex piecewise quadratics
/// solved by damped semismooth Newton.
inline Eigen::VectorXd augmented_lagrangian_qp(const Eigen::MatrixXd& Q, const Eigen::VectorXd& c,
                                               const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                                               const Eigen::MatrixXd& F = {},
                                               const Eigen::VectorXd& f = {}) {
  const double scale = std::max(1.0, Q.diagonal().cwiseAbs().maxCoeff());
  const double rho = 10.0 * scale;
  Eigen::VectorXd lam = Eigen::VectorXd::Zero(G.rows());
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(F.rows());
  Eigen::VectorXd x = Eigen::LDLT<Eigen::MatrixXd>(Q).solve(-c);
  auto merit = [&](const Eigen::VectorXd& z) {
    double v = 0.5 * z.dot(Q * z) + c.dot(z);
    if (G.rows()) v += 0.5 / rho * (lam - rho * (G * z - g)).cwiseMax(0.0).squaredNorm();
    if (F.rows()) {
      const Eigen::VectorXd r = F * z - f;
      v += mu.dot(r) + 0.5 * rho * r.squaredNorm();
    }
    return v;
  };
  for (int outer = 0; outer < 500; ++outer) {
    for (int inner = 0; inner < 200; ++inner) {
      const Eigen::VectorXd viol = G.rows() ? Eigen::VectorXd(lam - rho * (G * x - g)) : Eigen::VectorXd();
      Eigen::MatrixXd H = Q;
      Eigen::VectorXd grad = Q * x + c;
      for (Eigen::Index i = 0; i < G.rows(); ++i) {
        if (viol[i] > 0) {
          H.noalias() += rho * G.row(i).transpose() * G.row(i);
          grad -= viol[i] * G.row(i).transpose();
        }
      }
      if (F.rows() > 0) {
        H += rho * F.transpose() * F;
        grad += F.transpose() * (mu + rho * (F * x - f));
      }
      const Eigen::VectorXd step = H.ldlt().solve(-grad);
      const double m0 = merit(x);
      const double slope = grad.dot(step);
      double t = 1.0;
      while (t > 1e-12 && merit(x + t * step) > m0 + 1e-4 * t * slope) t *= 0.5;
      x += t * step;
      if (t * step.norm() <= 1e-15 * (1.0 + x.norm()) || std::abs(slope) <= 1e-28 * scale) break;
    }
    double change = 0.0;
    if (G.rows()) {
      const Eigen::VectorXd lam_new = (lam - rho * (G * x - g)).cwiseMax(0.0);
      change = (lam_new - lam).norm();
      lam = lam_new;
    }
    if (F.rows() > 0) {
      const Eigen::VectorXd r = F * x - f;
      mu += rho * r;
      change = std::max(change, rho * r.norm());
    }
    const double worst = G.rows() ? (g - G * x).maxCoeff() : 0.0;
    if (change <= 1e-6 * (1.0 + lam.norm() + mu.norm()) && worst <= 1e-9) break;
  }
  return x;
}

/// Grid-discretized shape-constrained fit with the intercept frozen at the
/// response mean, solved by the multiplier method above.
struct GridShape {
  bool has_lower = false, has_upper = false;
  double lower = 0.0, upper = 0.0;
  std::vector<double> lower_weights, upper_weights;
  std::vector<int> monotone;   // +1, -1 or 0 per covariate
  std::vector<int> curvature;  // +1 convex, -1 concave, 0 none
  std::vector<std::pair<int, int>> points;  // (row, relation: 0 eq, -1 under, +1 over)
};

struct GridFit {
  Eigen::VectorXd theta;
  double objective = 0.0;
};

inline GridFit grid_constrained_fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                    const std::vector<std::vector<double>>& internals,
                                    const std::vector<int>& degrees, const GridShape& shape,
                                    int grid = 1000) {
  const int p = static_cast<int>(degrees.size());
  const int n = static_cast<int>(X.rows());
  std::vector<int> size(p), offset(p);
  int total = 0;
  for (int j = 0; j < p; ++j) {
    size[j] = static_cast<int>(internals[j].size()) - 1 + degrees[j];
    offset[j] = total;
    total += size[j];
  }
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, total);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) B.row(i).segment(offset[j], size[j]) = basis_row(internals[j], degrees[j], X(i, j));
  }
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(total, total);
  for (int j = 0; j < p; ++j) {
    const Eigen::VectorXd s = B.middleCols(offset[j], size[j]).colwise().sum().transpose();
    P.block(offset[j], offset[j], size[j], size[j]) = s * s.transpose();
  }
  const double alpha = y.mean();
  const Eigen::VectorXd r = y.array() - alpha;
  const Eigen::MatrixXd Q = 2.0 * (B.transpose() * B + P);
  const Eigen::VectorXd c = -2.0 * B.transpose() * r;

  std::vector<Eigen::RowVectorXd> rows;
  std::vector<double> rhs;
  auto add = [&](int j, const Eigen::RowVectorXd& local, double bound) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(total);
    row.segment(offset[j], size[j]) = local;
    rows.push_back(row);
    rhs.push_back(bound);
  };
  for (int j = 0; j < p; ++j) {
    const auto& t = internals[j];
    for (int g = 0; g < grid; ++g) {
      const double x = t.front() + (t.back() - t.front()) * g / (grid - 1);
      const Eigen::RowVectorXd b0 = basis_row(t, degrees[j], x);
      if (shape.has_lower) add(j, b0, shape.lower_weights[j] * (shape.lower - alpha));
      if (shape.has_upper) add(j, -b0, -shape.upper_weights[j] * (shape.upper - alpha));
      if (!shape.monotone.empty() && shape.monotone[j] != 0) {
        add(j, shape.monotone[j] * basis_row(t, degrees[j], x, 1), 0.0);
      }
      if (!shape.curvature.empty() && shape.curvature[j] != 0) {
        add(j, shape.curvature[j] * basis_row(t, degrees[j], x, 2), 0.0);
      }
    }
  }
  std::vector<Eigen::RowVectorXd> eq;
  std::vector<double> eq_rhs;
  for (auto [i, rel] : shape.points) {
    if (rel == 0) {
      eq.push_back(B.row(i));
      eq_rhs.push_back(r[i]);
    } else if (rel < 0) {
      rows.push_back(-B.row(i));
      rhs.push_back(-r[i]);
    } else {
      rows.push_back(B.row(i));
      rhs.push_back(r[i]);
    }
  }
  Eigen::MatrixXd G(static_cast<Eigen::Index>(rows.size()), total);
  Eigen::VectorXd g(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    G.row(static_cast<Eigen::Index>(i)) = rows[i];
    g[static_cast<Eigen::Index>(i)] = rhs[i];
  }
  Eigen::MatrixXd F(static_cast<Eigen::Index>(eq.size()), total);
  Eigen::VectorXd f(static_cast<Eigen::Index>(eq.size()));
  for (std::size_t i = 0; i < eq.size(); ++i) {
    F.row(static_cast<Eigen::Index>(i)) = eq[i];
    f[static_cast<Eigen::Index>(i)] = eq_rhs[i];
  }
  GridFit out;
  out.theta = augmented_lagrangian_qp(Q, c, G, g, F, f);
  out.objective = 0.5 * out.theta.dot(Q * out.theta) + c.dot(out.theta) + r.squaredNorm();
  return out;
}

}  // namespace oracle
