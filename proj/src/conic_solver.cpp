#include "missoc/conic_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <thread>

#include "missoc/errors.hpp"

namespace missoc::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

double frob(const MatrixXd& a, const MatrixXd& b) { return (a.array() * b.array()).sum(); }

VectorXd apply_op(const ConeBlock& b, const MatrixXd& X) {
  VectorXd out(b.rows());
  for (int i = 0; i < b.rows(); ++i) out[i] = frob(b.A[static_cast<std::size_t>(i)], X);
  return out;
}

MatrixXd adjoint(const ConeBlock& b, const VectorXd& y) {
  MatrixXd out = MatrixXd::Zero(b.order, b.order);
  for (int i = 0; i < b.rows(); ++i) out += y[i] * b.A[static_cast<std::size_t>(i)];
  return out;
}

VectorXd gather(const VectorXd& theta, const std::vector<int>& cols) {
  VectorXd out(static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out[static_cast<Eigen::Index>(k)] = theta[cols[k]];
  return out;
}

// Largest step a with X + a dX still positive semidefinite.
double max_step(const MatrixXd& X, const MatrixXd& dX) {
  if (X.rows() == 1) return dX(0, 0) >= 0 ? kInf : -X(0, 0) / dX(0, 0);
  Eigen::LLT<MatrixXd> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  const MatrixXd L = llt.matrixL();
  MatrixXd T = L.triangularView<Eigen::Lower>().solve(dX);
  T = L.triangularView<Eigen::Lower>().solve(T.transpose()).transpose();
  T = 0.5 * (T + T.transpose());
  const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(T, Eigen::EigenvaluesOnly).eigenvalues()[0];
  return lmin >= 0 ? kInf : -1.0 / lmin;
}

double min_eig(const MatrixXd& X) {
  if (X.rows() == 1) return X(0, 0);
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(X, Eigen::EigenvaluesOnly).eigenvalues()[0];
}

template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

// Per-block quantities fixed within one interior-point iteration.
struct BlockFactor {
  MatrixXd Sinv;
  MatrixXd schur_r;      // upper triangular, Schur = R^T R
  MatrixXd schur_inv_M;  // Schur^{-1} M
  bool ok = true;

  MatrixXd schur_solve(const MatrixXd& rhs) const {
    const MatrixXd t = schur_r.transpose().triangularView<Eigen::Lower>().solve(rhs);
    return schur_r.triangularView<Eigen::Upper>().solve(t);
  }
};

struct Iterate {
  VectorXd theta;
  std::vector<MatrixXd> X, S;
  std::vector<VectorXd> y;
  VectorXd z;
};

class Solver {
 public:
  Solver(const Program& p, const Options& o) : prog_(p), opt_(o) {}

  Result run();

 private:
  void factor(const Iterate& it);
  // Solves for the search direction given complementarity targets Rc.
  void direction(const Iterate& it, const std::vector<MatrixXd>& Rc, Iterate& d);
  bool farkas_certificate(const Iterate& it) const;

  const Program& prog_;
  Options opt_;
  double obj_scale_ = 1.0;
  MatrixXd Q_;
  VectorXd c_;

  // Residuals at the current iterate.
  std::vector<VectorXd> rp_;
  VectorXd re_, rd_;
  std::vector<MatrixXd> Rd_;

  std::vector<BlockFactor> factors_;
  Eigen::PartialPivLU<MatrixXd> kkt_;
  Eigen::Index n_ = 0, ne_ = 0;
};

void Solver::factor(const Iterate& it) {
  const std::size_t nb = prog_.blocks.size();
  factors_.resize(nb);
  parallel_for(nb, opt_.threads, [&](std::size_t b) {
    const auto& blk = prog_.blocks[b];
    auto& f = factors_[b];
    const int m = blk.order;
    // Symmetric square roots X = Lx Lx^T and S^{-1} = Rs Rs^T.
    const Eigen::SelfAdjointEigenSolver<MatrixXd> ex(it.X[b]);
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(it.S[b]);
    f.ok = ex.info() == Eigen::Success && es.info() == Eigen::Success && es.eigenvalues().minCoeff() > 0.0;
    if (!f.ok) return;
    const MatrixXd Lx = ex.eigenvectors() * ex.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    const MatrixXd Rs = es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
    f.Sinv = Rs * Rs.transpose();
    // Schur = Gram^T Gram with Gram column k = vec(Lx^T A_k Rs); its QR
    // factor avoids squaring the condition number.
    const int r = blk.rows();
    MatrixXd gram(m * m, r);
    for (int k = 0; k < r; ++k) {
      const MatrixXd Gk = Lx.transpose() * blk.A[static_cast<std::size_t>(k)] * Rs;
      gram.col(k) = Eigen::Map<const VectorXd>(Gk.data(), m * m);
    }
    if (m * m >= r) {
      const Eigen::HouseholderQR<MatrixXd> qr(gram);
      f.schur_r = qr.matrixQR().topRows(r).triangularView<Eigen::Upper>();
    } else {
      f.schur_r = MatrixXd::Zero(r, r);
    }
    const VectorXd diag = f.schur_r.diagonal().cwiseAbs();
    if (!(diag.minCoeff() > 1e-15 * (1.0 + diag.maxCoeff())) || !f.schur_r.allFinite()) {
      // Rank-deficient Gram: regularized normal-form Cholesky.
      MatrixXd schur = gram.transpose() * gram;
      schur.diagonal().array() += 1e-14 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
      const Eigen::LLT<MatrixXd> llt(schur);
      f.ok = llt.info() == Eigen::Success;
      if (!f.ok) return;
      f.schur_r = llt.matrixU();
    }
    f.schur_inv_M = f.schur_solve(blk.M);
  });

  MatrixXd H = Q_;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& blk = prog_.blocks[b];
    const MatrixXd MtSM = blk.M.transpose() * factors_[b].schur_inv_M;
    for (std::size_t a = 0; a < blk.cols.size(); ++a) {
      for (std::size_t c = 0; c < blk.cols.size(); ++c) {
        H(blk.cols[a], blk.cols[c]) += MtSM(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(c));
      }
    }
  }
  MatrixXd K = MatrixXd::Zero(n_ + ne_, n_ + ne_);
  K.topLeftCorner(n_, n_) = H;
  if (ne_ > 0) {
    K.topRightCorner(n_, ne_) = prog_.E.transpose();
    K.bottomLeftCorner(ne_, n_) = prog_.E;
  }
  kkt_.compute(K);
}

void Solver::direction(const Iterate& it, const std::vector<MatrixXd>& Rc, Iterate& d) {
  const std::size_t nb = prog_.blocks.size();
  std::vector<MatrixXd> G(nb);
  std::vector<VectorXd> sg(nb);  // Schur^{-1} g
  parallel_for(nb, opt_.threads, [&](std::size_t b) {
    const auto& blk = prog_.blocks[b];
    G[b] = (Rc[b] - it.X[b] * Rd_[b]) * factors_[b].Sinv;
    const VectorXd g = rp_[b] + apply_op(blk, G[b]);
    sg[b] = factors_[b].schur_solve(g);
  });

  VectorXd rhs = VectorXd::Zero(n_ + ne_);
  rhs.head(n_) = -rd_;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& blk = prog_.blocks[b];
    const VectorXd v = blk.M.transpose() * sg[b];
    for (std::size_t a = 0; a < blk.cols.size(); ++a) rhs[blk.cols[a]] += v[static_cast<Eigen::Index>(a)];
  }
  if (ne_ > 0) rhs.tail(ne_) = -re_;
  const VectorXd sol = kkt_.solve(rhs);
  d.theta = sol.head(n_);
  d.z = ne_ > 0 ? VectorXd(-sol.tail(ne_)) : VectorXd();

  d.X.resize(nb);
  d.S.resize(nb);
  d.y.resize(nb);
  parallel_for(nb, opt_.threads, [&](std::size_t b) {
    const auto& blk = prog_.blocks[b];
    const VectorXd dth = gather(d.theta, blk.cols);
    d.y[b] = sg[b] - factors_[b].schur_inv_M * dth;
    d.S[b] = adjoint(blk, d.y[b]) + Rd_[b];
    MatrixXd dX = (Rc[b] - it.X[b] * d.S[b]) * factors_[b].Sinv;
    d.X[b] = 0.5 * (dX + dX.transpose());
  });
}

bool Solver::farkas_certificate(const Iterate& it) const {
  double norm2 = ne_ > 0 ? it.z.squaredNorm() : 0.0;
  for (const auto& y : it.y) norm2 += y.squaredNorm();
  const double norm = std::sqrt(norm2);
  if (!(norm > 0)) return false;

  VectorXd mty = VectorXd::Zero(n_);
  double value = 0.0;
  double worst_eig = kInf;
  double hnorm = 0.0;
  for (std::size_t b = 0; b < prog_.blocks.size(); ++b) {
    const auto& blk = prog_.blocks[b];
    const VectorXd yb = it.y[b] / norm;
    worst_eig = std::min(worst_eig, min_eig(adjoint(blk, yb)));
    const VectorXd v = blk.M.transpose() * yb;
    for (std::size_t a = 0; a < blk.cols.size(); ++a) mty[blk.cols[a]] += v[static_cast<Eigen::Index>(a)];
    value += blk.h.dot(yb);
    hnorm += blk.h.squaredNorm();
  }
  if (ne_ > 0) {
    const VectorXd zn = it.z / norm;
    mty += prog_.E.transpose() * zn;
    value -= prog_.e.dot(zn);
    hnorm += prog_.e.squaredNorm();
  }
  hnorm = std::sqrt(hnorm);
  return worst_eig >= -1e-7 && mty.norm() <= 1e-6 * (1.0 + hnorm) && value < -1e-7 * (1.0 + hnorm);
}

Result Solver::run() {
  prog_.validate();
  n_ = prog_.dimension();
  ne_ = prog_.E.rows();
  const std::size_t nb = prog_.blocks.size();

  obj_scale_ = 1.0 / std::max({1.0, prog_.Q.cwiseAbs().maxCoeff(),
                               prog_.c.size() ? prog_.c.cwiseAbs().maxCoeff() : 0.0});
  Q_ = obj_scale_ * prog_.Q;
  c_ = obj_scale_ * prog_.c;

  Iterate it;
  {
    MatrixXd K = MatrixXd::Zero(n_ + ne_, n_ + ne_);
    K.topLeftCorner(n_, n_) = Q_;
    VectorXd rhs = VectorXd::Zero(n_ + ne_);
    rhs.head(n_) = -c_;
    if (ne_ > 0) {
      K.topRightCorner(n_, ne_) = prog_.E.transpose();
      K.bottomLeftCorner(ne_, n_) = prog_.E;
      rhs.tail(ne_) = prog_.e;
    }
    // Unconstrained (equality-only) minimizer, refined twice.
    const Eigen::PartialPivLU<MatrixXd> lu(K);
    VectorXd sol = lu.solve(rhs);
    for (int pass = 0; pass < 2 && sol.allFinite(); ++pass) sol += lu.solve(rhs - K * sol);
    it.theta = sol.head(n_);
    it.z = ne_ > 0 ? VectorXd(-sol.tail(ne_)) : VectorXd::Zero(0);
    if (!it.theta.allFinite()) {
      it.theta = VectorXd::Zero(n_);
      it.z = VectorXd::Zero(ne_);
    }
  }
  it.X.resize(nb);
  it.S.resize(nb);
  it.y.resize(nb);
  double hnorm2 = ne_ > 0 ? prog_.e.squaredNorm() : 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& blk = prog_.blocks[b];
    const VectorXd target = blk.M * gather(it.theta, blk.cols) + blk.h;
    const double xi = std::max(1.0, 10.0 * target.cwiseAbs().maxCoeff());
    it.X[b] = xi * MatrixXd::Identity(blk.order, blk.order);
    it.S[b] = MatrixXd::Identity(blk.order, blk.order);
    it.y[b] = VectorXd::Zero(blk.rows());
    hnorm2 += blk.h.squaredNorm();
  }
  const double hnorm = std::sqrt(hnorm2);
  const double cnorm = c_.norm();
  double order_total = 0;
  for (const auto& blk : prog_.blocks) order_total += blk.order;

  Result res;
  rp_.resize(nb);
  Rd_.resize(nb);
  int stalls = 0;
  // Most feasible iterate meeting the gap target, kept for stalled runs.
  Iterate best;
  Result best_stats;
  double best_residual = kInf;
  for (int iter = 0; iter <= opt_.max_iterations; ++iter) {
    // Residuals.
    VectorXd mty = VectorXd::Zero(n_);
    double pres2 = 0.0, dres2 = 0.0, xs = 0.0, hy = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& blk = prog_.blocks[b];
      rp_[b] = apply_op(blk, it.X[b]) - blk.M * gather(it.theta, blk.cols) - blk.h;
      Rd_[b] = adjoint(blk, it.y[b]) - it.S[b];
      const VectorXd v = blk.M.transpose() * it.y[b];
      for (std::size_t a = 0; a < blk.cols.size(); ++a) mty[blk.cols[a]] += v[static_cast<Eigen::Index>(a)];
      pres2 += rp_[b].squaredNorm();
      dres2 += Rd_[b].squaredNorm();
      xs += frob(it.X[b], it.S[b]);
      hy += blk.h.dot(it.y[b]);
    }
    if (ne_ > 0) {
      re_ = prog_.E * it.theta - prog_.e;
      pres2 += re_.squaredNorm();
      mty += prog_.E.transpose() * it.z;
    }
    rd_ = Q_ * it.theta + c_ - mty;
    dres2 += rd_.squaredNorm();

    const double quad = 0.5 * it.theta.dot(Q_ * it.theta);
    const double pobj = quad + c_.dot(it.theta);
    const double dobj = -quad - hy + (ne_ > 0 ? prog_.e.dot(it.z) : 0.0);
    const double pres = std::sqrt(pres2) / (1.0 + hnorm);
    const double dres = std::sqrt(dres2) / (1.0 + cnorm);
    // Duality gap relative to the unscaled objective, constant included.
    const double relgap = std::abs(xs) / obj_scale_ / (1.0 + std::abs(pobj / obj_scale_ + prog_.constant));

    res.iterations = iter;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.relative_gap = relgap;
    res.primal_objective = pobj / obj_scale_ + prog_.constant;
    res.dual_objective = dobj / obj_scale_ + prog_.constant;
    if (relgap <= opt_.gap_tol && std::max(pres, dres) < best_residual) {
      best_residual = std::max(pres, dres);
      best = it;
      best_stats = res;
    }

    if (relgap <= opt_.gap_tol && pres <= opt_.feasibility_tol && dres <= opt_.feasibility_tol) {
      res.status = Status::Optimal;
      break;
    }
    if (iter == opt_.max_iterations) {
      res.status = farkas_certificate(it) ? Status::Infeasible : Status::IterationLimit;
      break;
    }
    if (iter > 20 && pres > 1e-6 && farkas_certificate(it)) {
      // Diverging multipliers along a Farkas ray.
      double ynorm = 0;
      for (const auto& y : it.y) ynorm = std::max(ynorm, y.cwiseAbs().maxCoeff());
      if (ynorm > 1e6 * (1.0 + cnorm)) {
        res.status = Status::Infeasible;
        break;
      }
    }

    factor(it);
    bool ok = true;
    for (const auto& f : factors_) ok = ok && f.ok;
    if (!ok) {
      res.status = farkas_certificate(it) ? Status::Infeasible : Status::NumericalFailure;
      break;
    }

    const double mu = order_total > 0 ? xs / order_total : 0.0;

    // Predictor.
    std::vector<MatrixXd> Rc(nb);
    for (std::size_t b = 0; b < nb; ++b) Rc[b] = -it.X[b] * it.S[b];
    Iterate aff;
    direction(it, Rc, aff);
    double ap = 1.0, ad = 1.0;
    for (std::size_t b = 0; b < nb; ++b) {
      ap = std::min(ap, max_step(it.X[b], aff.X[b]));
      ad = std::min(ad, max_step(it.S[b], aff.S[b]));
    }
    double xs_aff = 0.0;
    for (std::size_t b = 0; b < nb; ++b) {
      xs_aff += frob(it.X[b] + ap * aff.X[b], it.S[b] + ad * aff.S[b]);
    }
    const double mu_aff = order_total > 0 ? xs_aff / order_total : 0.0;
    const double sigma = mu > 0 ? std::clamp(std::pow(mu_aff / mu, 3.0), 0.0, 1.0) : 0.0;

    // Corrector.
    for (std::size_t b = 0; b < nb; ++b) {
      const auto& blk = prog_.blocks[b];
      Rc[b] = sigma * mu * MatrixXd::Identity(blk.order, blk.order) - it.X[b] * it.S[b] -
              aff.X[b] * aff.S[b];
    }
    Iterate d;
    direction(it, Rc, d);
    double step_p = kInf, step_d = kInf;
    for (std::size_t b = 0; b < nb; ++b) {
      step_p = std::min(step_p, max_step(it.X[b], d.X[b]));
      step_d = std::min(step_d, max_step(it.S[b], d.S[b]));
    }
    const double alpha = std::min({1.0, opt_.step_fraction * step_p, opt_.step_fraction * step_d});
    if (!(alpha > 1e-12) || !d.theta.allFinite()) {
      if (++stalls > 3) {
        res.status = farkas_certificate(it) ? Status::Infeasible : Status::NumericalFailure;
        break;
      }
    }

    it.theta += alpha * d.theta;
    if (ne_ > 0) it.z += alpha * d.z;
    for (std::size_t b = 0; b < nb; ++b) {
      it.X[b] += alpha * d.X[b];
      it.X[b] = 0.5 * (it.X[b] + it.X[b].transpose()).eval();
      it.S[b] += alpha * d.S[b];
      it.S[b] = 0.5 * (it.S[b] + it.S[b].transpose()).eval();
      it.y[b] += alpha * d.y[b];
    }
  }

  if ((res.status == Status::NumericalFailure || res.status == Status::IterationLimit) &&
      best_residual <= opt_.near_feasibility_tol) {
    const int iterations = res.iterations;
    res = best_stats;
    res.iterations = iterations;
    res.status = Status::Optimal;
    it = std::move(best);
  }
  res.theta = it.theta;
  res.Z = it.X;
  res.S.resize(nb);
  res.y.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    res.S[b] = it.S[b] / obj_scale_;
    res.y[b] = it.y[b] / obj_scale_;
  }
  res.z = ne_ > 0 ? VectorXd(it.z / obj_scale_) : VectorXd();
  return res;
}

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::IterationLimit: return "iteration-limit";
    case Status::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

void Program::validate() const {
  const Eigen::Index n = Q.rows();
  if (Q.cols() != n || c.size() != n) throw SizeMismatchError("objective dimensions disagree");
  if (E.rows() > 0 && (E.cols() != n || e.size() != E.rows())) {
    throw SizeMismatchError("equality block dimensions disagree");
  }
  for (const auto& b : blocks) {
    if (b.M.rows() != b.rows() || b.h.size() != b.rows() ||
        b.M.cols() != static_cast<Eigen::Index>(b.cols.size())) {
      throw SizeMismatchError("cone block '" + b.tag + "' has inconsistent row data");
    }
    for (const auto& A : b.A) {
      if (A.rows() != b.order || A.cols() != b.order) {
        throw SizeMismatchError("cone block '" + b.tag + "' coefficient matrix has the wrong order");
      }
    }
    for (int col : b.cols) {
      if (col < 0 || col >= n) throw SizeMismatchError("cone block column out of range");
    }
  }
}

Result solve(const Program& program, const Options& options) {
  Solver s(program, options);
  return s.run();
}

}  // namespace missoc::conic
