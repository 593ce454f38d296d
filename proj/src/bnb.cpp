#include "missoc/bnb.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <memory>

#include "missoc/bernstein.hpp"
#include "missoc/errors.hpp"
#include "missoc/lp_simplex.hpp"

namespace missoc::bnb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMaxCutsPerLink = 16;

struct Cut {
  double a = 0.0;  // coefficient of the selector
  double b = 0.0;  // coefficient of the offset
};

struct Node {
  long id = 0;
  int depth = 0;
  double bound = -kInf;
  std::vector<double> lo, hi;
  std::vector<double> range_lo, range_hi;
  std::vector<std::vector<Cut>> cuts;
  std::vector<double> cut_width;  // width of the range the fresh cuts were built on
};

struct NodeOrder {
  bool operator()(const std::unique_ptr<Node>& a, const std::unique_ptr<Node>& b) const {
    if (a->bound != b->bound) return a->bound > b->bound;
    return a->id > b->id;
  }
};

// p(x) = c0 + sum_{r>=1} c_r x^r of a link, as full coefficients.
const std::vector<double>& poly(const PolynomialLink& l) { return l.coeffs; }

// Cut a + b x <= p(x) on [L, U] written in selector/offset form.
Cut as_cut(const Line& line) { return {line.intercept, line.slope}; }

class Solver {
 public:
  Solver(const SurrogateMINLP& s, const Options& o) : s_(s), opt_(o) {
    for (const auto& c : s_.nonlinear) {
      if (c.sense == ConstraintSense::Equal) {
        throw UnsupportedScopeError("nonlinear equality constraints cannot be relaxed by outer approximation");
      }
    }
    n_ = s_.size();
    for (int i = 0; i < s_.original.dimension(); ++i) {
      if (s_.variables[static_cast<std::size_t>(i)].integer) int_orig_.push_back(i);
    }
  }

  SolveReport run() {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    SolveReport rep;
    if (opt_.log) *opt_.log << "node,depth,lb,ub,gap%\n";

    auto root = std::make_unique<Node>();
    root->lo.resize(static_cast<std::size_t>(n_));
    root->hi.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) {
      root->lo[i] = s_.variables[i].lower;
      root->hi[i] = s_.variables[i].upper;
    }
    for (const auto& l : s_.links) {
      root->range_lo.push_back(0.0);
      root->range_hi.push_back(l.width);
    }
    root->cuts.assign(s_.links.size(), {});
    root->cut_width.assign(s_.links.size(), 0.0);

    // Min-heap on (bound, id): best bound first, FIFO among ties.
    std::vector<std::unique_ptr<Node>> open;
    open.push_back(std::move(root));
    double closed_min = kInf;
    long next_id = 1;
    bool unbounded = false;

    while (!open.empty()) {
      if (elapsed() > opt_.time_limit) {
        rep.status = Status::TimeLimit;
        rep.reason = "time limit";
        break;
      }
      if (rep.nodes >= opt_.max_nodes) {
        rep.status = Status::NodeLimit;
        rep.reason = "node limit";
        break;
      }
      std::pop_heap(open.begin(), open.end(), NodeOrder{});
      std::unique_ptr<Node> node = std::move(open.back());
      open.pop_back();
      if (has_ub_ && node->bound >= ub_ - margin()) {
        closed_min = std::min(closed_min, node->bound);
        continue;
      }
      ++rep.nodes;
      rep.max_depth = std::max(rep.max_depth, node->depth);

      std::vector<std::unique_ptr<Node>> children;
      const Outcome out = process(*node, children, next_id);
      if (out == Outcome::Unbounded) {
        unbounded = true;
        break;
      }
      if (opt_.on_node && out != Outcome::Infeasible) opt_.on_node(view(*node));
      if (out == Outcome::Closed || out == Outcome::Pruned) closed_min = std::min(closed_min, node->bound);
      for (auto& c : children) {
        open.push_back(std::move(c));
        std::push_heap(open.begin(), open.end(), NodeOrder{});
      }
      if (opt_.log) {
        const double lb = global_lb(open, closed_min);
        *opt_.log << node->id << "," << node->depth << "," << num(lb) << "," << (has_ub_ ? num(ub_) : "inf")
                  << "," << (has_ub_ ? num(optimality_gap(ub_, lb)) : "inf") << "\n";
      }
    }

    if (unbounded) {
      rep.status = Status::Unbounded;
      rep.reason = "relaxation unbounded";
    } else if (open.empty()) {
      rep.status = has_ub_ ? Status::Optimal : Status::Infeasible;
      rep.reason = has_ub_ ? "gap closed" : "tree exhausted without a feasible point";
    } else if (!has_ub_) {
      rep.status = Status::NoIncumbent;
    }
    rep.has_incumbent = has_ub_;
    rep.lower_bound = unbounded ? -kInf : global_lb(open, closed_min);
    if (has_ub_) {
      rep.z = best_z_;
      rep.x = s_.project(best_z_);
      rep.objective = ub_;
      rep.lower_bound = std::min(rep.lower_bound, ub_);
      rep.gap_pct = optimality_gap(ub_, rep.lower_bound);
      rep.max_violation = s_.max_violation(best_z_);
    }
    rep.wall_time = elapsed();
    return rep;
  }

 private:
  enum class Outcome { Infeasible, Pruned, Closed, Branched, Unbounded };

  static std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
  }

  double margin() const { return has_ub_ ? std::max(opt_.gap_tol * std::abs(ub_), opt_.abs_tol) : opt_.abs_tol; }

  double global_lb(const std::vector<std::unique_ptr<Node>>& open, double closed_min) const {
    double lb = closed_min;
    if (!open.empty()) lb = std::min(lb, open.front()->bound);
    if (has_ub_) lb = std::min(lb, ub_);
    return lb;
  }

  NodeView view(const Node& node) const {
    NodeView v;
    v.id = node.id;
    v.depth = node.depth;
    v.lower_bound = node.bound;
    v.lower = node.lo;
    v.upper = node.hi;
    for (std::size_t i = 0; i < s_.links.size(); ++i) v.link_range.emplace_back(eff_lo_[i], eff_hi_[i]);
    return v;
  }

  // Tightens selector and original bounds implied by the node; false when
  // the node is empty.
  bool propagate(Node& node) {
    const std::size_t L = s_.links.size();
    eff_lo_.assign(L, 0.0);
    eff_hi_.assign(L, 0.0);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < L; ++i) {
        const auto& l = s_.links[i];
        const double lo = std::max({node.range_lo[i], node.lo[l.original] - l.knot, node.lo[l.offset]});
        const double hi = std::min({node.range_hi[i], node.hi[l.original] - l.knot, l.width});
        eff_lo_[i] = std::max(lo, 0.0);
        eff_hi_[i] = hi;
        if (eff_lo_[i] > eff_hi_[i] + 1e-12 * (1.0 + l.width)) {
          if (node.lo[l.selector] > 0.5) return false;
          node.hi[l.selector] = 0.0;
        }
        eff_hi_[i] = std::max(eff_hi_[i], eff_lo_[i]);
        if (node.hi[l.selector] < 0.5) {
          node.hi[l.offset] = 0.0;
          node.lo[l.piece] = 0.0;
          node.hi[l.piece] = 0.0;
        }
      }
      for (std::size_t j = 0; j < s_.covariates.size(); ++j) {
        int free_count = 0, last = -1;
        double xlo = kInf, xhi = -kInf;
        for (std::size_t q = 0; q < s_.selectors[j].size(); ++q) {
          const int y = s_.selectors[j][q];
          if (node.hi[y] < 0.5) continue;
          ++free_count;
          last = static_cast<int>(q);
          const std::size_t li = link_index(j, q);
          xlo = std::min(xlo, s_.links[li].knot + eff_lo_[li]);
          xhi = std::max(xhi, s_.links[li].knot + eff_hi_[li]);
        }
        if (free_count == 0) return false;
        if (free_count == 1) node.lo[s_.selectors[j][static_cast<std::size_t>(last)]] = 1.0;
        const int v = s_.covariates[j];
        node.lo[v] = std::max(node.lo[v], xlo);
        node.hi[v] = std::min(node.hi[v], xhi);
        if (node.lo[v] > node.hi[v] + 1e-12 * (1.0 + std::abs(node.hi[v]))) return false;
        node.hi[v] = std::max(node.hi[v], node.lo[v]);
      }
    }
    for (int i = 0; i < n_; ++i) {
      if (node.lo[i] > node.hi[i]) return false;
    }
    return true;
  }

  std::size_t link_index(std::size_t j, std::size_t q) const {
    if (link_offset_.empty()) {
      std::size_t acc = 0;
      for (std::size_t jj = 0; jj < s_.covariates.size(); ++jj) {
        link_offset_.push_back(acc);
        acc += s_.selectors[jj].size();
      }
    }
    return link_offset_[j] + q;
  }

  void fresh_cuts(Node& node, std::size_t i) {
    const auto& l = s_.links[i];
    const double L = eff_lo_[i], U = eff_hi_[i];
    auto& cuts = node.cuts[i];
    cuts.clear();
    node.cut_width[i] = U - L;
    const auto& p = poly(l);
    if (U - L <= 1e-14 * (1.0 + l.width)) {
      cuts.push_back({horner(p, L), 0.0});
      return;
    }
    for (const Line& h : bernstein_lower_hull(p, L, U)) cuts.push_back(as_cut(h));
    for (double x0 : {L, 0.5 * (L + U), U}) cuts.push_back(as_cut(tangent_underestimator(p, L, U, x0)));
    if (certified_convex(p, L, U)) cuts.push_back(as_cut(tangent_underestimator(p, L, U, convex_argmin(p, L, U))));
  }

  void add_cut(Node& node, std::size_t i, Cut c) {
    auto& cuts = node.cuts[i];
    if (static_cast<int>(cuts.size()) >= kMaxCutsPerLink) cuts.erase(cuts.begin());
    cuts.push_back(c);
  }

  lp::Problem build_lp(const Node& node) const {
    lp::Problem P;
    P.c = Eigen::VectorXd::Zero(n_);
    for (const auto& [i, a] : s_.objective_terms) P.c[i] += a;
    P.lower = Eigen::Map<const Eigen::VectorXd>(node.lo.data(), n_);
    P.upper = Eigen::Map<const Eigen::VectorXd>(node.hi.data(), n_);
    std::size_t rows = s_.linear.size() + oa_.size();
    for (std::size_t i = 0; i < s_.links.size(); ++i) {
      if (node.hi[s_.links[i].selector] > 0.5) rows += 2 + node.cuts[i].size();
    }
    P.A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), n_);
    P.b = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(rows));
    P.sense.reserve(rows);
    Eigen::Index r = 0;
    auto put = [&](lp::RowSense sense, double rhs) {
      P.b[r] = rhs;
      P.sense.push_back(sense);
      ++r;
    };
    for (const auto& row : s_.linear) {
      for (const auto& [i, a] : row.terms) P.A(r, i) += a;
      put(row.sense == ConstraintSense::Equal ? lp::RowSense::Equal : lp::RowSense::LessEqual, row.rhs);
    }
    for (const auto& [coef, rhs] : oa_) {
      P.A.row(r).head(coef.size()) = coef.transpose();
      put(lp::RowSense::LessEqual, rhs);
    }
    for (std::size_t i = 0; i < s_.links.size(); ++i) {
      const auto& l = s_.links[i];
      if (node.hi[l.selector] < 0.5) continue;
      P.A(r, l.offset) = 1.0;
      P.A(r, l.selector) = -eff_hi_[i];
      put(lp::RowSense::LessEqual, 0.0);
      P.A(r, l.offset) = -1.0;
      P.A(r, l.selector) = eff_lo_[i];
      put(lp::RowSense::LessEqual, 0.0);
      for (const Cut& c : node.cuts[i]) {
        P.A(r, l.piece) = 1.0;
        P.A(r, l.selector) = -c.a;
        P.A(r, l.offset) = -c.b;
        put(lp::RowSense::GreaterEqual, 0.0);
      }
    }
    return P;
  }

  void try_incumbent(std::vector<double> x) {
    for (int i = 0; i < s_.original.dimension(); ++i) {
      const auto& v = s_.variables[static_cast<std::size_t>(i)];
      x[i] = std::clamp(x[i], v.lower, v.upper);
      if (v.integer) x[i] = std::clamp(std::round(x[i]), std::ceil(v.lower), std::floor(v.upper));
    }
    const Eigen::VectorXd z = s_.lift(x);
    if (s_.max_violation(z) > opt_.feasibility_tol) return;
    const double val = s_.objective_value(z);
    if (!has_ub_ || val < ub_) {
      has_ub_ = true;
      ub_ = val;
      best_z_ = z;
    }
  }

  // Gap between the polynomial and the relaxed piece value at an LP point,
  // measured on the perspective y p(x / y).
  double link_gap(std::size_t i, const Eigen::VectorXd& z) const {
    const auto& l = s_.links[i];
    const double y = z[l.selector];
    if (y <= 1e-9) return 0.0;
    const double x0 = std::clamp(z[l.offset] / y, eff_lo_[i], eff_hi_[i]);
    return y * horner(poly(l), x0) - z[l.piece];
  }

  Outcome process(Node& node, std::vector<std::unique_ptr<Node>>& children, long& next_id) {
    if (!propagate(node)) return Outcome::Infeasible;
    for (std::size_t i = 0; i < s_.links.size(); ++i) {
      if (node.hi[s_.links[i].selector] < 0.5) continue;
      const double w = eff_hi_[i] - eff_lo_[i];
      if (node.cuts[i].empty() || w < 0.5 * node.cut_width[i]) fresh_cuts(node, i);
    }

    lp::Result res;
    for (int round = 0;; ++round) {
      res = lp::solve(build_lp(node));
      if (res.status == lp::Status::Infeasible) return Outcome::Infeasible;
      if (res.status == lp::Status::Unbounded) return Outcome::Unbounded;
      if (res.status != lp::Status::Optimal) return Outcome::Infeasible;
      node.bound = std::max(node.bound, res.objective + s_.objective_constant);
      try_incumbent(s_.project(res.x));
      if (has_ub_ && node.bound >= ub_ - margin()) return Outcome::Pruned;
      if (round >= (node.depth == 0 ? opt_.root_cut_rounds : opt_.cut_rounds)) break;
      bool added = false;
      const double tol = 0.1 * margin();
      for (std::size_t i = 0; i < s_.links.size(); ++i) {
        const auto& l = s_.links[i];
        if (node.hi[l.selector] < 0.5 || link_gap(i, res.x) <= tol) continue;
        const double y = res.x[l.selector];
        const double x0 = std::clamp(res.x[l.offset] / y, eff_lo_[i], eff_hi_[i]);
        const Cut c = as_cut(tangent_underestimator(poly(l), eff_lo_[i], eff_hi_[i], x0));
        if (res.x[l.piece] < c.a * y + c.b * res.x[l.offset] - tol) {
          add_cut(node, i, c);
          added = true;
        }
      }
      added = add_oa_cuts(res.x) || added;
      if (!added) break;
    }

    const Eigen::VectorXd& z = res.x;
    // Most fractional selector.
    int pick = -1;
    double best_frac = 1e-9;
    for (std::size_t j = 0; j < s_.selectors.size(); ++j) {
      for (int y : s_.selectors[j]) {
        const double f = std::min(z[y] - node.lo[y], node.hi[y] - z[y]);
        if (node.hi[y] - node.lo[y] > 0.5 && f > best_frac) {
          best_frac = f;
          pick = y;
        }
      }
    }
    if (pick >= 0) {
      for (double v : {0.0, 1.0}) {
        auto c = child(node, next_id);
        c->lo[pick] = v;
        c->hi[pick] = v;
        children.push_back(std::move(c));
      }
      return Outcome::Branched;
    }
    // Fractional integer original.
    for (int v : int_orig_) {
      const double f = z[v] - std::floor(z[v]);
      if (f > 1e-9 && f < 1 - 1e-9) {
        auto a = child(node, next_id);
        a->hi[v] = std::floor(z[v]);
        auto b = child(node, next_id);
        b->lo[v] = std::ceil(z[v]);
        children.push_back(std::move(a));
        children.push_back(std::move(b));
        return Outcome::Branched;
      }
    }
    // Largest envelope gap.
    int link = -1;
    double worst = 0.0, total = 0.0;
    for (std::size_t i = 0; i < s_.links.size(); ++i) {
      if (node.hi[s_.links[i].selector] < 0.5) continue;
      const double g = link_gap(i, z);
      total += std::max(g, 0.0);
      const double w = eff_hi_[i] - eff_lo_[i];
      if (g > worst && w > 1e-12 * (1.0 + s_.links[i].width)) {
        worst = g;
        link = static_cast<int>(i);
      }
    }
    if (link >= 0 && total > 0.5 * margin()) {
      const auto li = static_cast<std::size_t>(link);
      const auto& l = s_.links[li];
      const double mid = 0.5 * (eff_lo_[li] + eff_hi_[li]);
      if (node.lo[l.selector] < 0.5) {
        auto off = child(node, next_id);
        off->hi[l.selector] = 0.0;
        children.push_back(std::move(off));
      }
      for (int side = 0; side < 2; ++side) {
        auto c = child(node, next_id);
        c->lo[l.selector] = 1.0;
        c->range_lo[li] = side == 0 ? eff_lo_[li] : mid;
        c->range_hi[li] = side == 0 ? mid : eff_hi_[li];
        c->cuts[li].clear();
        children.push_back(std::move(c));
      }
      return Outcome::Branched;
    }
    // Retained nonlinear constraints still violated: bisect the widest box.
    const auto x = s_.project(z);
    for (const auto& c : s_.nonlinear) {
      if (expr::evaluate(c.body, x) <= opt_.feasibility_tol) continue;
      int widest = -1;
      double width = 1e-9;
      for (int v : expr::variables(c.body)) {
        const double w = node.hi[v] - node.lo[v];
        if (w > width) {
          width = w;
          widest = v;
        }
      }
      if (widest < 0) break;
      const double mid = 0.5 * (node.lo[widest] + node.hi[widest]);
      auto a = child(node, next_id);
      a->hi[widest] = mid;
      auto b = child(node, next_id);
      b->lo[widest] = mid;
      children.push_back(std::move(a));
      children.push_back(std::move(b));
      return Outcome::Branched;
    }
    return Outcome::Closed;
  }

  bool add_oa_cuts(const Eigen::VectorXd& z) {
    if (s_.nonlinear.empty()) return false;
    const auto x = s_.project(z);
    const int dim = s_.original.dimension();
    bool added = false;
    for (const auto& c : s_.nonlinear) {
      Eigen::VectorXd g(dim);
      const double v = expr::evaluate_gradient(c.body, x, g);
      if (!(v > opt_.feasibility_tol) || !g.allFinite()) continue;
      // v + g^T (x' - x) <= 0.
      double rhs = -v;
      for (int i = 0; i < dim; ++i) rhs += g[i] * x[static_cast<std::size_t>(i)];
      oa_.emplace_back(g, rhs);
      added = true;
    }
    return added;
  }

  std::unique_ptr<Node> child(const Node& parent, long& next_id) const {
    auto c = std::make_unique<Node>(parent);
    c->id = next_id++;
    c->depth = parent.depth + 1;
    return c;
  }

  const SurrogateMINLP& s_;
  const Options& opt_;
  int n_ = 0;
  std::vector<int> int_orig_;
  bool has_ub_ = false;
  double ub_ = kInf;
  Eigen::VectorXd best_z_;
  std::vector<double> eff_lo_, eff_hi_;
  mutable std::vector<std::size_t> link_offset_;
  std::vector<std::pair<Eigen::VectorXd, double>> oa_;
};

}  // namespace

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::TimeLimit: return "time_limit";
    case Status::NodeLimit: return "node_limit";
    case Status::Infeasible: return "infeasible";
    case Status::NoIncumbent: return "no_incumbent";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

double optimality_gap(double ub, double lb) {
  if (ub == lb) return 0.0;
  if (ub == 0.0) return kInf;
  return 100.0 * std::abs(ub - lb) / std::abs(ub);
}

std::string SolveReport::csv_header() { return "status,objective,lower_bound,gap_pct,nodes,max_depth,time_s"; }

std::string SolveReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%.10g,%.10g,%.6g,%ld,%d,%.6f", to_string(status).c_str(),
                has_incumbent ? objective : kInf, lower_bound, gap_pct, nodes, max_depth, wall_time);
  return buf;
}

SolveReport solve(const SurrogateMINLP& surrogate, const Options& options) {
  if (!surrogate.substituted) {
    throw UnsupportedScopeError("the global solver expects a substituted surrogate (C = {0})");
  }
  return Solver(surrogate, options).run();
}

}  // namespace missoc::bnb
