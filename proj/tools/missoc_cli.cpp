#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "missoc/bnb.hpp"
#include "missoc/errors.hpp"
#include "missoc/instance.hpp"
#include "missoc/missoc.hpp"
#include "missoc/regression.hpp"
#include "missoc/surrogate.hpp"

namespace fs = std::filesystem;
using namespace missoc;

namespace {

struct CommonArgs {
  std::string instance;
  std::vector<int> degree;
  std::vector<int> intervals;
  int samples_per_param = 15;
  std::uint64_t seed = 1;
  double time_limit = 600.0;
  double gap_tol = 1e-4;
  std::string out;
  std::string plot_data;
  std::string model;
  std::string log;
  bool no_refine = false;
  bool no_shape = false;
};

void add_fit_flags(CLI::App* app, CommonArgs& a) {
  app->add_option("--degree", a.degree, "Spline degree, one value or one per covariate")->delimiter(',');
  app->add_option("--intervals", a.intervals, "Knot intervals, one value or one per covariate")->delimiter(',');
  app->add_option("--samples-per-param", a.samples_per_param, "Training samples per model parameter")
      ->check(CLI::PositiveNumber);
  app->add_option("--seed", a.seed, "Sampling seed");
  app->add_flag("--no-shape", a.no_shape, "Ignore shape directives of the instance");
}

void add_solve_flags(CLI::App* app, CommonArgs& a, bool with_log = true) {
  app->add_option("--time-limit", a.time_limit, "Solver time budget in seconds")->capture_default_str();
  app->add_option("--gap-tol", a.gap_tol, "Relative optimality gap tolerance")->capture_default_str();
  if (with_log) app->add_option("--log", a.log, "Write the node log (node,depth,lb,ub,gap%) as CSV");
}

MissocConfig config_from(const CommonArgs& a) {
  MissocConfig c;
  c.degrees = a.degree;
  c.intervals = a.intervals;
  c.samples_per_param = a.samples_per_param;
  c.seed = a.seed;
  c.time_limit = a.time_limit;
  c.gap_tol = a.gap_tol;
  c.refine = !a.no_refine;
  c.use_shape = !a.no_shape;
  return c;
}

AdditiveModelFit fit_for(const ProblemInstance& inst, const CommonArgs& a, std::vector<std::string>* warnings) {
  const MissocConfig cfg = config_from(a);
  const TrainingSet data = sample_training(inst, cfg);
  const auto covs = inst.objective_covariates();
  const auto d = cfg.degrees_for(covs.size());
  const auto k = cfg.intervals_for(covs.size());
  if (cfg.use_shape && !inst.shape.empty()) {
    auto cf = fit_constrained(data, d, k, inst.shape.for_covariates(covs), cfg.conic);
    if (warnings) *warnings = cf.warnings;
    return cf.fit;
  }
  return fit_additive(data, d, k);
}

void write_plot_data(const AdditiveModelFit& fit, const std::string& dir) {
  fs::create_directories(dir);
  constexpr int kGrid = 201;
  for (const auto& comp : fit.components) {
    const auto& knots = comp.basis.knots();
    std::ofstream os(fs::path(dir) / (comp.name() + ".csv"));
    os << "x,component\n";
    os.precision(12);
    for (int i = 0; i < kGrid; ++i) {
      const double x = knots.lower() + (knots.upper() - knots.lower()) * i / (kGrid - 1);
      os << x << "," << comp(x) << "\n";
    }
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw Error("cannot write " + path);
  return os;
}

void print_point(const ProblemInstance& inst, const std::vector<double>& x) {
  for (int j = 0; j < inst.dimension(); ++j) {
    std::cout << "  " << inst.variables[static_cast<std::size_t>(j)].name << " = " << x[static_cast<std::size_t>(j)]
              << "\n";
  }
}

int cmd_fit(const CommonArgs& a) {
  const auto inst = load_instance(a.instance);
  std::vector<std::string> warnings;
  const auto t0 = std::chrono::steady_clock::now();
  const auto fit = fit_for(inst, a, &warnings);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "intercept " << fit.intercept << ", " << fit.covariates() << " components, residual norm "
            << fit.diagnostics.residual_norm << "\n";
  if (!a.model.empty()) save_model(fit, a.model);
  if (!a.plot_data.empty()) write_plot_data(fit, a.plot_data);
  if (!a.out.empty()) {
    auto os = open_out(a.out);
    os << MissocReport::csv_header() << "\n"
       << inst.name << ",fit," << secs << ",,,,," << (warnings.empty() ? "ok" : "weights_fallback") << "\n";
  }
  return 0;
}

AdditiveModelFit model_or_fit(const ProblemInstance& inst, const CommonArgs& a) {
  if (!a.model.empty() && fs::exists(a.model)) return load_model(a.model);
  return fit_for(inst, a, nullptr);
}

int cmd_surrogate(const CommonArgs& a) {
  const auto inst = load_instance(a.instance);
  const auto sur = build_surrogate(model_or_fit(inst, a), inst);
  std::cout << "binaries " << sur.binaries() << ", added continuous " << sur.added_continuous() << ", variables "
            << sur.size() << ", linear rows " << sur.linear.size() << "\n";
  if (!a.out.empty()) {
    auto os = open_out(a.out);
    os << sur.to_text();
  }
  return 0;
}

int cmd_solve(const CommonArgs& a) {
  const auto inst = load_instance(a.instance);
  const auto sur = build_surrogate(model_or_fit(inst, a), inst);
  bnb::Options o;
  o.time_limit = a.time_limit;
  o.gap_tol = a.gap_tol;
  std::ofstream log;
  if (!a.log.empty()) {
    log = open_out(a.log);
    o.log = &log;
  }
  const auto rep = bnb::solve(sur, o);
  std::cout << "status " << bnb::to_string(rep.status) << ", objective " << rep.objective << ", lower bound "
            << rep.lower_bound << ", gap% " << rep.gap_pct << ", nodes " << rep.nodes << "\n";
  if (rep.has_incumbent) print_point(inst, rep.x);
  if (!a.out.empty()) {
    auto os = open_out(a.out);
    os << "instance," << bnb::SolveReport::csv_header() << "\n" << inst.name << "," << rep.csv_row() << "\n";
  }
  return rep.has_incumbent ? 0 : 2;
}

int cmd_missoc(const CommonArgs& a) {
  const auto inst = load_instance(a.instance);
  auto cfg = config_from(a);
  std::ofstream log;
  if (!a.log.empty()) {
    log = open_out(a.log);
    cfg.solver_log = &log;
  }
  const auto rep = run_missoc(inst, cfg);
  for (const auto& w : rep.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "g0(x*) " << rep.objective << ", surrogate " << rep.surrogate_objective << ", gap% "
            << rep.solve.gap_pct << ", nodes " << rep.solve.nodes << ", time " << rep.total_time << " s\n";
  print_point(inst, rep.x_star);
  if (!a.model.empty()) save_model(rep.fit, a.model);
  if (!a.plot_data.empty()) write_plot_data(rep.fit, a.plot_data);
  if (!a.out.empty()) {
    auto os = open_out(a.out);
    os << MissocReport::csv_header() << "\n" << rep.csv_rows();
  } else {
    std::cout << MissocReport::csv_header() << "\n" << rep.csv_rows();
  }
  return 0;
}

int cmd_bench(const CommonArgs& a, const std::vector<std::string>& files, int seeds) {
  std::ofstream file;
  std::ostream* os = &std::cout;
  if (!a.out.empty()) {
    file = open_out(a.out);
    os = &file;
  }
  *os << MissocReport::csv_header() << ",seed\n";
  int failures = 0;
  for (const auto& path : files) {
    const auto inst = load_instance(path);
    for (int s = 0; s < seeds; ++s) {
      CommonArgs run = a;
      run.seed = a.seed + static_cast<std::uint64_t>(s);
      try {
        const auto rep = run_missoc(inst, config_from(run));
        std::istringstream rows(rep.csv_rows());
        for (std::string line; std::getline(rows, line);) *os << line << "," << run.seed << "\n";
        std::cerr << inst.name << " seed " << run.seed << ": g0(x*) = " << rep.objective << "\n";
      } catch (const StageError& e) {
        ++failures;
        *os << inst.name << "," << e.stage() << ",,,,,,error," << run.seed << "\n";
        std::cerr << inst.name << " seed " << run.seed << ": " << e.what() << "\n";
      }
    }
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mixed-integer surrogate optimization with shape-constrained spline fits"};
  app.require_subcommand(1);
  CommonArgs a;

  auto* fit = app.add_subcommand("fit", "Sample the objective and fit an additive spline model");
  fit->add_option("instance", a.instance, "Instance file")->required()->check(CLI::ExistingFile);
  add_fit_flags(fit, a);
  fit->add_option("--model", a.model, "Write the fitted model here");
  fit->add_option("--out", a.out, "Write the stage report as CSV");
  fit->add_option("--plot-data", a.plot_data, "Directory for per-covariate component grids (CSV)");

  auto* sur = app.add_subcommand("surrogate", "Build the multiple-choice surrogate and write its listing");
  sur->add_option("instance", a.instance, "Instance file")->required()->check(CLI::ExistingFile);
  add_fit_flags(sur, a);
  sur->add_option("--model", a.model, "Fitted model to use instead of fitting afresh");
  sur->add_option("--out", a.out, "Write the algebraic listing here");

  auto* solve = app.add_subcommand("solve", "Solve the surrogate globally");
  solve->add_option("instance", a.instance, "Instance file")->required()->check(CLI::ExistingFile);
  add_fit_flags(solve, a);
  add_solve_flags(solve, a);
  solve->add_option("--model", a.model, "Fitted model to use instead of fitting afresh");
  solve->add_option("--out", a.out, "Write the solve report as CSV");

  auto* run = app.add_subcommand("missoc", "Run the full pipeline: sample, fit, surrogate, solve, refine");
  run->add_option("instance", a.instance, "Instance file")->required()->check(CLI::ExistingFile);
  add_fit_flags(run, a);
  add_solve_flags(run, a);
  run->add_flag("--no-refine", a.no_refine, "Skip the local refinement");
  run->add_option("--model", a.model, "Write the fitted model here");
  run->add_option("--out", a.out, "Write the stage report as CSV");
  run->add_option("--plot-data", a.plot_data, "Directory for per-covariate component grids (CSV)");

  std::vector<std::string> files;
  int seeds = 1;
  auto* bench = app.add_subcommand("bench", "Run the pipeline over several instances and seeds");
  bench->add_option("instances", files, "Instance files")->required()->check(CLI::ExistingFile);
  add_fit_flags(bench, a);
  add_solve_flags(bench, a, false);
  bench->add_option("--seeds", seeds, "Seeds per instance, counting up from --seed")->check(CLI::PositiveNumber);
  bench->add_option("--out", a.out, "Write the combined report as CSV");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*fit) return cmd_fit(a);
    if (*sur) return cmd_surrogate(a);
    if (*solve) return cmd_solve(a);
    if (*run) return cmd_missoc(a);
    if (*bench) return cmd_bench(a, files, seeds);
  } catch (const SyntaxError& e) {
    std::cerr << a.instance << ":" << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
