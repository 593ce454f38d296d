#include "missoc/localsearch.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Dense>

#include "missoc/errors.hpp"

namespace missoc {

namespace {

using Eigen::VectorXd;

class Lagrangian {
 public:
  Lagrangian(const ProblemInstance& inst, const std::vector<bool>& fixed)
      : inst_(inst), fixed_(fixed), m_(static_cast<int>(inst.constraints.size())) {
    mult_ = VectorXd::Zero(m_);
  }

  double rho = 10.0;

  // Powell-Hestenes-Rockafellar merit and its gradient (fixed entries zero).
  double value(const VectorXd& x, VectorXd* grad) const {
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    VectorXd g(x.size());
    double f = expr::evaluate_gradient(inst_.objective, xs, g);
    VectorXd total = g;
    for (int i = 0; i < m_; ++i) {
      const auto& c = inst_.constraints[static_cast<std::size_t>(i)];
      const double v = expr::evaluate_gradient(c.body, xs, g);
      if (c.sense == ConstraintSense::Equal) {
        f += mult_[i] * v + 0.5 * rho * v * v;
        total += (mult_[i] + rho * v) * g;
      } else {
        const double s = std::max(0.0, mult_[i] + rho * v);
        f += (s * s - mult_[i] * mult_[i]) / (2.0 * rho);
        total += s * g;
      }
    }
    if (grad) {
      *grad = total;
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        if (fixed_[static_cast<std::size_t>(j)]) (*grad)[j] = 0.0;
      }
    }
    return f;
  }

  void update_multipliers(const VectorXd& x) {
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(x.size()));
    for (int i = 0; i < m_; ++i) {
      const auto& c = inst_.constraints[static_cast<std::size_t>(i)];
      const double v = expr::evaluate(c.body, xs);
      mult_[i] = c.sense == ConstraintSense::Equal ? mult_[i] + rho * v : std::max(0.0, mult_[i] + rho * v);
    }
  }

 private:
  const ProblemInstance& inst_;
  const std::vector<bool>& fixed_;
  int m_;
  VectorXd mult_;
};

VectorXd project(const VectorXd& x, const VectorXd& lo, const VectorXd& hi) { return x.cwiseMax(lo).cwiseMin(hi); }

// Projected-gradient stationarity measure ||P(x - g) - x||_inf.
double stationarity(const VectorXd& x, const VectorXd& g, const VectorXd& lo, const VectorXd& hi) {
  return (project(x - g, lo, hi) - x).lpNorm<Eigen::Infinity>();
}

// Projected L-BFGS on the merit; returns the number of accepted steps.
int inner_solve(const Lagrangian& L, VectorXd& x, const VectorXd& lo, const VectorXd& hi,
                const RefineOptions& opt, std::vector<double>* trace) {
  VectorXd g;
  double f = L.value(x, &g);
  if (trace) trace->push_back(f);
  std::deque<std::pair<VectorXd, VectorXd>> mem;
  int steps = 0;
  for (int it = 0; it < opt.max_inner; ++it) {
    if (stationarity(x, g, lo, hi) <= opt.stationarity_tol) break;
    // Active set: variables at a bound with the gradient pushing outward.
    std::vector<bool> active(static_cast<std::size_t>(x.size()));
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      active[j] = (x[j] <= lo[j] && g[j] > 0) || (x[j] >= hi[j] && g[j] < 0) || lo[j] == hi[j];
    }
    auto mask = [&](VectorXd v) {
      for (Eigen::Index j = 0; j < v.size(); ++j) {
        if (active[j]) v[j] = 0.0;
      }
      return v;
    };
    // Two-loop recursion on the free subspace.
    VectorXd q = mask(g);
    std::vector<double> alpha(mem.size());
    for (std::size_t k = mem.size(); k-- > 0;) {
      const auto& [s, y] = mem[k];
      const double sy = mask(s).dot(mask(y));
      if (sy <= 0) continue;
      alpha[k] = mask(s).dot(q) / sy;
      q -= alpha[k] * mask(y);
    }
    if (!mem.empty()) {
      const VectorXd s = mask(mem.back().first), y = mask(mem.back().second);
      const double yy = y.squaredNorm();
      if (yy > 0 && s.dot(y) > 0) q *= s.dot(y) / yy;
    }
    for (std::size_t k = 0; k < mem.size(); ++k) {
      const auto& [s, y] = mem[k];
      const double sy = mask(s).dot(mask(y));
      if (sy <= 0) continue;
      const double beta = mask(y).dot(q) / sy;
      q += (alpha[k] - beta) * mask(s);
    }
    VectorXd d = -q;
    if (g.dot(d) >= 0) {
      d = -mask(g);
      mem.clear();
    }
    double step = 1.0;
    if (mem.empty()) step = 1.0 / std::max(1.0, d.lpNorm<Eigen::Infinity>());
    bool accepted = false;
    VectorXd xn, gn;
    double fn = 0.0;
    for (int ls = 0; ls < 60; ++ls) {
      xn = project(x + step * d, lo, hi);
      fn = L.value(xn, &gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * g.dot(xn - x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || (xn - x).lpNorm<Eigen::Infinity>() == 0.0) break;
    mem.emplace_back(xn - x, gn - g);
    if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
    x = xn;
    g = gn;
    f = fn;
    ++steps;
    if (trace) trace->push_back(f);
  }
  return steps;
}

}  // namespace

RefineResult refine(const ProblemInstance& instance, std::span<const double> start, const RefineOptions& options) {
  const int n = instance.dimension();
  if (static_cast<int>(start.size()) != n) throw SizeMismatchError("start point dimension mismatch");
  VectorXd lo(n), hi(n), x(n);
  std::vector<bool> fixed(static_cast<std::size_t>(n), false);
  for (int j = 0; j < n; ++j) {
    const auto& v = instance.variables[static_cast<std::size_t>(j)];
    if (start[j] < v.lower - 1e-9 || start[j] > v.upper + 1e-9) {
      throw ValidationError("start point leaves the box of '" + v.name + "'");
    }
    x[j] = std::clamp(start[j], v.lower, v.upper);
    lo[j] = v.lower;
    hi[j] = v.upper;
    if (v.integer) {
      if (std::abs(start[j] - std::round(start[j])) > 1e-9) {
        throw ValidationError("start point is fractional in integer variable '" + v.name + "'");
      }
      fixed[j] = true;
      x[j] = lo[j] = hi[j] = start[j];
    }
  }
  const std::vector<double> x0(x.data(), x.data() + n);
  const double f0 = instance.objective_value(x0);
  const double v0 = instance.max_violation(x0);

  RefineResult res;
  Lagrangian L(instance, fixed);
  L.rho = options.initial_penalty;
  double prev_viol = instance.max_violation(std::span<const double>(x.data(), static_cast<std::size_t>(n)));
  VectorXd best_x = x;
  double best_viol = prev_viol;
  for (int outer = 0; outer < options.max_outer; ++outer) {
    std::vector<double>* trace = nullptr;
    if (options.trace) trace = &res.merit_trace.emplace_back();
    res.iterations += inner_solve(L, x, lo, hi, options, trace);
    const std::span<const double> xs(x.data(), static_cast<std::size_t>(n));
    const double viol = instance.max_violation(xs);
    if (viol < best_viol) {
      best_viol = viol;
      best_x = x;
    }
    VectorXd g;
    const double unused = L.value(x, &g);
    (void)unused;
    const bool stationary = stationarity(x, g, lo, hi) <= options.stationarity_tol * 10.0;
    if (viol <= options.feasibility_tol && stationary) {
      res.converged = true;
      break;
    }
    L.update_multipliers(x);
    if (viol > 0.25 * prev_viol) L.rho = std::min(L.rho * 10.0, 1e10);
    prev_viol = viol;
  }

  if (!res.converged && instance.max_violation(std::span<const double>(x.data(), static_cast<std::size_t>(n))) >
                            options.feasibility_tol) {
    x = best_x;
  }
  res.x.assign(x.data(), x.data() + n);
  res.objective = instance.objective_value(res.x);
  res.max_violation = instance.max_violation(res.x);
  const bool feasible = res.max_violation <= options.feasibility_tol;
  res.converged = res.converged || feasible;
  if (v0 <= options.feasibility_tol && (!feasible || res.objective > f0 + 1e-9)) {
    res.x = x0;
    res.objective = f0;
    res.max_violation = v0;
    res.fallback = true;
    res.converged = true;
  }
  return res;
}

}  // namespace missoc
