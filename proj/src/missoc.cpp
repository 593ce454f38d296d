#include "missoc/missoc.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "missoc/errors.hpp"

namespace missoc {

namespace {

std::vector<int> expand(const std::vector<int>& v, int fallback, std::size_t p, const char* what) {
  if (v.empty()) return std::vector<int>(p, fallback);
  if (v.size() == 1) return std::vector<int>(p, v[0]);
  if (v.size() != p) {
    throw ValidationError(std::string(what) + " list has " + std::to_string(v.size()) + " entries for " +
                          std::to_string(p) + " covariates");
  }
  return v;
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <class F>
auto timed(const char* stage, std::vector<StageTime>& times, F&& f) {
  const auto t0 = std::chrono::steady_clock::now();
  auto stop = [&] {
    times.push_back({stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  };
  try {
    auto out = f();
    stop();
    return out;
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace

std::vector<int> MissocConfig::degrees_for(std::size_t p) const { return expand(degrees, default_degree, p, "degree"); }

std::vector<int> MissocConfig::intervals_for(std::size_t p) const {
  return expand(intervals, default_intervals, p, "interval");
}

int training_size(int samples_per_param, std::span<const int> degrees, std::span<const int> intervals) {
  int params = 1;
  for (std::size_t j = 0; j < degrees.size(); ++j) params += degrees[j] + intervals[j];
  return samples_per_param * params;
}

TrainingSet sample_training(const ProblemInstance& instance, const MissocConfig& config) {
  const auto covs = instance.objective_covariates();
  const std::size_t p = covs.size();
  const auto d = config.degrees_for(p);
  const auto k = config.intervals_for(p);
  const int n = training_size(config.samples_per_param, d, k);
  const auto split = expr::split_linear(instance.objective);
  const expr::Expr response = split.nonlinear + split.linear.constant;

  std::vector<double> point(static_cast<std::size_t>(instance.dimension()), 0.0);
  std::vector<std::string> names;
  std::vector<double> lo, hi;
  for (int v : covs) {
    const auto& var = instance.variables[static_cast<std::size_t>(v)];
    if (!std::isfinite(var.lower) || !std::isfinite(var.upper)) {
      throw SamplingError("variable '" + var.name + "' needs a finite box for sampling");
    }
    names.push_back(var.name);
    lo.push_back(var.lower);
    hi.push_back(var.upper);
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd X(n, static_cast<Eigen::Index>(p));
  Eigen::VectorXd y(n);
  int draws = 0;
  for (int i = 0; i < n;) {
    if (++draws > n + config.resample_cap) {
      throw SamplingError("too many non-finite responses (" + std::to_string(draws - 1 - i) + " rejected draws)");
    }
    for (std::size_t j = 0; j < p; ++j) {
      const double u = unit(rng);
      const double x = lo[j] + u * (hi[j] - lo[j]);
      X(i, static_cast<Eigen::Index>(j)) = x;
      point[static_cast<std::size_t>(covs[j])] = x;
    }
    const double v = expr::evaluate(response, point);
    if (!std::isfinite(v)) continue;
    y[i] = v;
    ++i;
  }
  TrainingSet ts(std::move(X), std::move(y), std::move(names));
  ts.lower = std::move(lo);
  ts.upper = std::move(hi);
  return ts;
}

std::string MissocReport::csv_header() {
  return "instance,stage,time_s,objective,surrogate_objective,gap_pct,nodes,status";
}

std::string MissocReport::csv_rows() const {
  std::ostringstream os;
  const std::string status = bnb::to_string(solve.status);
  for (const auto& st : stages) {
    os << instance << "," << st.stage << "," << num(st.seconds) << ",";
    if (st.stage == "solve") {
      os << "," << num(surrogate_objective) << "," << num(solve.gap_pct) << "," << solve.nodes << "," << status;
    } else if (st.stage == "refine") {
      os << num(objective) << ",,,," << (refinement && refinement->fallback ? "fallback" : "ok");
    } else {
      os << ",,,,ok";
    }
    os << "\n";
  }
  os << instance << ",total," << num(total_time) << "," << num(objective) << "," << num(surrogate_objective) << ","
     << num(solve.gap_pct) << "," << solve.nodes << "," << status << "\n";
  return os.str();
}

MissocReport run_missoc(const ProblemInstance& instance, const MissocConfig& config) {
  MissocReport rep;
  rep.instance = instance.name.empty() ? "instance" : instance.name;
  if (instance.complicating != std::set<int>{0}) {
    throw StageError("surrogate", "only the objective may be replaced by a surrogate (C = {0})");
  }
  const auto covs = instance.objective_covariates();
  const std::size_t p = covs.size();

  const TrainingSet data = timed("sample", rep.stages, [&] { return sample_training(instance, config); });

  rep.fit = timed("fit", rep.stages, [&] {
    const auto d = config.degrees_for(p);
    const auto k = config.intervals_for(p);
    if (p == 0) {
      AdditiveModelFit empty;
      empty.intercept = data.y.size() > 0 ? data.y.mean() : 0.0;
      return empty;
    }
    if (config.use_shape && !instance.shape.empty()) {
      rep.constrained = true;
      auto cf = fit_constrained(data, d, k, instance.shape.for_covariates(covs), config.conic);
      rep.warnings = cf.warnings;
      return cf.fit;
    }
    return fit_additive(data, d, k);
  });

  const SurrogateMINLP sur = timed("surrogate", rep.stages, [&] { return build_surrogate(rep.fit, instance); });

  rep.solve = timed("solve", rep.stages, [&] {
    bnb::Options o;
    o.time_limit = config.time_limit;
    o.gap_tol = config.gap_tol;
    o.log = config.solver_log;
    auto r = bnb::solve(sur, o);
    if (!r.has_incumbent) throw Error("no feasible surrogate point (" + bnb::to_string(r.status) + ")");
    return r;
  });
  rep.x_tilde = rep.solve.x;
  rep.surrogate_objective = rep.solve.objective;

  if (config.refine) {
    rep.refinement = timed("refine", rep.stages, [&] { return refine(instance, rep.x_tilde, config.local); });
    rep.x_star = rep.refinement->x;
  } else {
    rep.x_star = rep.x_tilde;
  }
  rep.objective = instance.objective_value(rep.x_star);
  rep.max_violation = instance.max_violation(rep.x_star);
  for (const auto& st : rep.stages) rep.total_time += st.seconds;
  return rep;
}

}  // namespace missoc
