#include "missoc/surrogate.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "missoc/errors.hpp"

namespace missoc {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

int add_var(SurrogateMINLP& s, std::string name, double lo, double hi, bool integer, VarRole role) {
  s.variables.push_back({std::move(name), lo, hi, integer, role});
  return s.size() - 1;
}

// Interval of x under the left tie rule on a piecewise polynomial.
int interval_left(const PiecewisePoly& pp, double x) {
  const auto& t = pp.breakpoints();
  int q = 0;
  while (q + 1 < pp.intervals() && x > t[static_cast<std::size_t>(q + 1)]) ++q;
  return q;
}

}  // namespace

double LinearConstraint::activity(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  double v = 0.0;
  for (const auto& [i, a] : terms) v += a * z[i];
  return v;
}

double LinearConstraint::violation(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  const double r = activity(z) - rhs;
  return sense == ConstraintSense::Equal ? std::abs(r) : std::max(0.0, r);
}

double PolynomialLink::polynomial(double offset_value) const {
  // Without the constant, which is carried by the selector.
  double v = 0.0;
  for (std::size_t r = coeffs.size(); r-- > 1;) v = v * offset_value + coeffs[r];
  return v * offset_value;
}

int SurrogateMINLP::binaries() const {
  int n = 0;
  for (const auto& v : variables) n += v.role == VarRole::Selector;
  return n;
}

int SurrogateMINLP::added_continuous() const {
  int n = 0;
  for (const auto& v : variables) n += v.role == VarRole::Offset || v.role == VarRole::Piece || v.role == VarRole::Component;
  return n;
}

double SurrogateMINLP::objective_value(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  if (!substituted) {
    const auto x = project(z);
    return original.objective_value(x);
  }
  double v = objective_constant;
  for (const auto& [i, a] : objective_terms) v += a * z[i];
  return v;
}

double SurrogateMINLP::max_violation(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  double worst = 0.0;
  for (int i = 0; i < size(); ++i) {
    const auto& v = variables[static_cast<std::size_t>(i)];
    worst = std::max({worst, v.lower - z[i], z[i] - v.upper});
    if (v.integer) worst = std::max(worst, std::abs(z[i] - std::round(z[i])));
  }
  for (const auto& row : linear) worst = std::max(worst, row.violation(z));
  for (const auto& l : links) {
    const double want = l.coeffs[0] * z[l.selector] + l.polynomial(z[l.offset]);
    worst = std::max(worst, std::abs(z[l.piece] - want));
  }
  const auto x = project(z);
  for (const auto& c : nonlinear) {
    const double g = expr::evaluate(c.body, x);
    worst = std::max(worst, c.sense == ConstraintSense::Equal ? std::abs(g) : g);
  }
  if (!substituted) worst = std::max(worst, original.max_violation(x));
  return worst;
}

Eigen::VectorXd SurrogateMINLP::lift(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != original.dimension()) throw SizeMismatchError("point dimension mismatch");
  Eigen::VectorXd z = Eigen::VectorXd::Zero(size());
  for (std::size_t i = 0; i < x.size(); ++i) z[static_cast<Eigen::Index>(i)] = x[i];
  for (std::size_t j = 0; j < covariates.size(); ++j) {
    const auto& pp = components[j];
    const double xv = x[static_cast<std::size_t>(covariates[j])];
    const int q = interval_left(pp, xv);
    const double off = std::clamp(xv - pp.breakpoints()[static_cast<std::size_t>(q)], 0.0, pp.width(q));
    z[selectors[j][static_cast<std::size_t>(q)]] = 1.0;
    z[offsets[j][static_cast<std::size_t>(q)]] = off;
    const double val = pp.piece_value(q, off);
    z[pieces[j][static_cast<std::size_t>(q)]] = val;
    z[sigma[j]] = val;
  }
  return z;
}

std::vector<double> SurrogateMINLP::project(const Eigen::Ref<const Eigen::VectorXd>& z) const {
  return std::vector<double>(z.data(), z.data() + original.dimension());
}

std::string SurrogateMINLP::to_text() const {
  if (!substituted) return original.to_text();
  std::ostringstream os;
  auto term_list = [&](const std::vector<std::pair<int, double>>& terms) {
    std::string s;
    for (const auto& [i, a] : terms) {
      s += (s.empty() ? "" : " + ") + fmt(a) + "*" + variables[static_cast<std::size_t>(i)].name;
    }
    return s.empty() ? std::string("0") : s;
  };
  os << "# surrogate of " << (original.name.empty() ? "instance" : original.name) << "\n";
  os << "# binaries " << binaries() << ", added continuous " << added_continuous() << "\n";
  for (const auto& v : variables) {
    os << "var " << v.name << " in [" << fmt(v.lower) << ", " << fmt(v.upper) << "]"
       << (v.integer ? " integer" : "") << ";\n";
  }
  os << "min " << fmt(objective_constant) << " + " << term_list(objective_terms) << ";\n";
  for (const auto& row : linear) {
    os << "st " << term_list(row.terms) << (row.sense == ConstraintSense::Equal ? " = " : " <= ") << fmt(row.rhs)
       << ";  # " << row.tag << "\n";
  }
  for (const auto& l : links) {
    const auto& off = variables[static_cast<std::size_t>(l.offset)].name;
    os << "st " << variables[static_cast<std::size_t>(l.piece)].name << " = " << fmt(l.coeffs[0]) << "*"
       << variables[static_cast<std::size_t>(l.selector)].name;
    for (std::size_t r = 1; r < l.coeffs.size(); ++r) os << " + " << fmt(l.coeffs[r]) << "*" << off << "^" << r;
    os << ";  # piece\n";
  }
  const auto nm = original.names();
  for (const auto& c : nonlinear) {
    os << "st " << expr::unparse(c.body, nm) << (c.sense == ConstraintSense::Equal ? " = 0" : " <= 0")
       << ";  # retained\n";
  }
  return os.str();
}

std::vector<int> resolve_covariates(const AdditiveModelFit& fit, const ProblemInstance& instance) {
  std::vector<int> out;
  bool labelled = true;
  for (const auto& c : fit.components) {
    const int idx = c.name().empty() ? -1 : instance.index_of(c.name());
    if (idx < 0) labelled = false;
    out.push_back(idx);
  }
  if (labelled) return out;
  const auto covs = instance.objective_covariates();
  if (covs.size() != fit.covariates()) {
    throw DomainMismatchError("fit has " + std::to_string(fit.covariates()) + " components but the objective has " +
                              std::to_string(covs.size()) + " nonlinear variables");
  }
  return covs;
}

SurrogateMINLP build_surrogate(const AdditiveModelFit& fit, const ProblemInstance& instance,
                               const std::set<int>& complicating) {
  SurrogateMINLP s;
  s.original = instance;
  for (const auto& v : instance.variables) add_var(s, v.name, v.lower, v.upper, v.integer, VarRole::Original);
  if (complicating.empty()) {
    for (const auto& c : instance.constraints) s.nonlinear.push_back(c);
    return s;
  }
  if (complicating != std::set<int>{0}) {
    throw UnsupportedScopeError("only the objective may be replaced by a surrogate (C = {0})");
  }
  s.substituted = true;
  s.intercept = fit.intercept;
  s.covariates = resolve_covariates(fit, instance);

  for (std::size_t j = 0; j < fit.covariates(); ++j) {
    const auto& comp = fit.components[j];
    const int v = s.covariates[j];
    const auto& var = instance.variables[static_cast<std::size_t>(v)];
    const auto& knots = comp.basis.knots();
    const double slack = 1e-12 * std::max(1.0, knots.upper() - knots.lower());
    if (!(var.lower >= knots.lower() - slack && var.upper <= knots.upper() + slack)) {
      throw DomainMismatchError("box of '" + var.name + "' [" + fmt(var.lower) + ", " + fmt(var.upper) +
                                "] exceeds the fitted knot range [" + fmt(knots.lower()) + ", " +
                                fmt(knots.upper()) + "]");
    }
    s.components.push_back(to_piecewise_poly(comp.theta, comp.basis));
  }

  const std::size_t p = fit.covariates();
  s.selectors.resize(p);
  s.offsets.resize(p);
  s.pieces.resize(p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto& pp = s.components[j];
    const std::string& base = instance.variables[static_cast<std::size_t>(s.covariates[j])].name;
    for (int q = 0; q < pp.intervals(); ++q) {
      const std::string tag = base + "_" + std::to_string(q + 1);
      s.selectors[j].push_back(add_var(s, "y_" + tag, 0.0, 1.0, true, VarRole::Selector));
      s.offsets[j].push_back(add_var(s, "dx_" + tag, 0.0, pp.width(q), false, VarRole::Offset));
      s.pieces[j].push_back(add_var(s, "sp_" + tag, -INFINITY, INFINITY, false, VarRole::Piece));
    }
    s.sigma.push_back(add_var(s, "sigma_" + base, -INFINITY, INFINITY, false, VarRole::Component));
  }

  for (std::size_t j = 0; j < p; ++j) {
    const auto& pp = s.components[j];
    const int v = s.covariates[j];
    const std::string& base = instance.variables[static_cast<std::size_t>(v)].name;
    const int k = pp.intervals();

    LinearConstraint one{{}, ConstraintSense::Equal, 1.0, "choose one interval of " + base};
    for (int q = 0; q < k; ++q) one.terms.emplace_back(s.selectors[j][static_cast<std::size_t>(q)], 1.0);
    s.linear.push_back(std::move(one));

    for (int q = 0; q < k; ++q) {
      const auto uq = static_cast<std::size_t>(q);
      s.linear.push_back({{{s.offsets[j][uq], 1.0}, {s.selectors[j][uq], -pp.width(q)}},
                          ConstraintSense::LessEqual,
                          0.0,
                          "offset only on the chosen interval"});
    }

    LinearConstraint agg{{{v, 1.0}}, ConstraintSense::Equal, 0.0, "lift of " + base};
    for (int q = 0; q < k; ++q) {
      const auto uq = static_cast<std::size_t>(q);
      agg.terms.emplace_back(s.selectors[j][uq], -pp.breakpoints()[uq]);
      agg.terms.emplace_back(s.offsets[j][uq], -1.0);
    }
    s.linear.push_back(std::move(agg));

    LinearConstraint sum{{{s.sigma[j], 1.0}}, ConstraintSense::Equal, 0.0, "component value of " + base};
    for (int q = 0; q < k; ++q) sum.terms.emplace_back(s.pieces[j][static_cast<std::size_t>(q)], -1.0);
    s.linear.push_back(std::move(sum));

    for (int q = 0; q < k; ++q) {
      const auto uq = static_cast<std::size_t>(q);
      PolynomialLink l;
      l.covariate = static_cast<int>(j);
      l.interval = q;
      l.selector = s.selectors[j][uq];
      l.offset = s.offsets[j][uq];
      l.piece = s.pieces[j][uq];
      l.original = v;
      l.knot = pp.breakpoints()[uq];
      l.width = pp.width(q);
      l.coeffs = pp.coeffs(q);
      s.links.push_back(std::move(l));
    }
  }

  for (const auto& c : instance.constraints) {
    if (auto aff = expr::as_affine(c.body)) {
      LinearConstraint row{{}, c.sense, -aff->constant, "retained"};
      for (const auto& [i, a] : aff->coeffs) {
        if (a != 0.0) row.terms.emplace_back(i, a);
      }
      s.linear.push_back(std::move(row));
    } else {
      s.nonlinear.push_back(c);
    }
  }

  const auto split = expr::split_linear(instance.objective);
  s.objective_constant = fit.intercept;
  for (const auto& [i, a] : split.linear.coeffs) {
    if (a != 0.0) s.objective_terms.emplace_back(i, a);
  }
  for (int sj : s.sigma) s.objective_terms.emplace_back(sj, 1.0);
  return s;
}

double eval_surrogate_at(const AdditiveModelFit& fit, std::span<const double> x, LiftedPoint* lifted) {
  if (x.size() != fit.covariates()) throw SizeMismatchError("point dimension mismatch");
  double v = fit.intercept;
  if (lifted) *lifted = {};
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto& comp = fit.components[j];
    const auto& knots = comp.basis.knots();
    if (!knots.contains(x[j])) throw OutOfDomainError(comp.name(), x[j], knots.lower(), knots.upper());
    const PiecewisePoly pp = to_piecewise_poly(comp.theta, comp.basis);
    const int q = knots.interval_of_left(x[j]);
    const double off = x[j] - pp.breakpoints()[static_cast<std::size_t>(q)];
    const double piece = pp.piece_value(q, off);
    v += piece;
    if (lifted) {
      lifted->interval.push_back(q);
      lifted->offset.push_back(off);
      lifted->piece.push_back(piece);
    }
  }
  return v;
}

}  // namespace missoc
