#include <cmath>
#include <algorithm>

#include "brute_surrogate.hpp"
#include "doctest.h"
#include "missoc/errors.hpp"
#include "missoc/missoc.hpp"

using namespace missoc;

namespace {

std::string data_file(const std::string& name) { return std::string(MISSOC_DATA_DIR) + "/instances/" + name; }

}  // namespace

TEST_CASE("training size and sampling distribution") {
  const std::vector<int> d{3, 3}, k{10, 10};
  CHECK(training_size(15, d, k) == 405);

  const auto inst = parse_instance("var x in [-1, 3]; var y in [0, 10]; min sin(x) + exp(y/10);");
  MissocConfig cfg;
  cfg.seed = 42;
  const auto a = sample_training(inst, cfg);
  CHECK(a.samples() == 405);
  CHECK(a.covariates() == 2);
  const auto b = sample_training(inst, cfg);
  CHECK(a.X == b.X);
  CHECK(a.y == b.y);
  cfg.seed = 43;
  CHECK_FALSE(sample_training(inst, cfg).X == a.X);

  const double lo[2] = {-1.0, 0.0}, hi[2] = {3.0, 10.0};
  for (int j = 0; j < 2; ++j) {
    const double mean = a.X.col(j).mean();
    const double sd = (hi[j] - lo[j]) / std::sqrt(12.0);
    CHECK(std::abs(mean - 0.5 * (lo[j] + hi[j])) <= 3.0 * sd / std::sqrt(405.0));
    CHECK(a.X.col(j).minCoeff() >= lo[j]);
    CHECK(a.X.col(j).maxCoeff() <= hi[j]);
    CHECK(a.lower[static_cast<std::size_t>(j)] == lo[j]);
    CHECK(a.upper[static_cast<std::size_t>(j)] == hi[j]);
  }
  for (Eigen::Index i = 0; i < a.samples(); ++i) {
    CHECK(a.y(i) == doctest::Approx(std::sin(a.X(i, 0)) + std::exp(a.X(i, 1) / 10)).epsilon(1e-14));
  }
}

TEST_CASE("exactly representable splines are optimized exactly") {
  const auto inst = load_instance(data_file("spline_sum.inst"));
  MissocConfig cfg;
  const auto rep = run_missoc(inst, cfg);
  REQUIRE(rep.solve.status == bnb::Status::Optimal);
  const auto ref = oracle::brute_force_objective(inst);
  CHECK(std::abs(rep.surrogate_objective - ref.value) <= 1e-3);
  CHECK(std::abs(rep.objective - ref.value) <= 1e-3);
  CHECK(rep.max_violation <= 1e-6);
}

TEST_CASE("report bookkeeping") {
  const auto inst = load_instance(data_file("synthetic_02.inst"));
  MissocConfig cfg;
  cfg.refine = false;
  cfg.default_intervals = 4;
  const auto rep = run_missoc(inst, cfg);
  REQUIRE(rep.solve.has_incumbent);
  CHECK(rep.x_star == rep.x_tilde);
  CHECK_FALSE(rep.refinement.has_value());
  double sum = 0.0;
  for (const auto& s : rep.stages) sum += s.seconds;
  CHECK(std::abs(rep.total_time - sum) <= 1e-9);
  CHECK(rep.stages.front().stage == "sample");
  CHECK(std::abs(rep.solve.gap_pct - bnb::optimality_gap(rep.solve.objective, rep.solve.lower_bound)) <= 1e-12);
  CHECK(MissocReport::csv_header() == "instance,stage,time_s,objective,surrogate_objective,gap_pct,nodes,status");
  const auto rows = rep.csv_rows();
  CHECK(std::count(rows.begin(), rows.end(), '\n') == static_cast<long>(rep.stages.size()) + 1);

  // The text form reproduces the run bit for bit.
  const auto again = run_missoc(parse_instance(inst.to_text(), inst.name), cfg);
  CHECK(again.x_tilde == rep.x_tilde);
  CHECK(again.surrogate_objective == rep.surrogate_objective);
}

TEST_CASE("shape bounds hold on the fitted surrogate") {
  const auto inst = load_instance(data_file("hydro_demo.inst"));
  MissocConfig cfg;
  cfg.default_intervals = 4;
  const auto rep = run_missoc(inst, cfg);
  REQUIRE(rep.constrained);
  for (int a = 0; a <= 40; ++a) {
    for (int b = 0; b <= 40; ++b) {
      const double v = predict(rep.fit, std::vector<double>{a / 40.0, b / 40.0});
      CHECK(v >= 2.595 - 1e-6);
      CHECK(v <= 24.089 + 1e-6);
    }
  }
  CHECK(rep.max_violation <= 1e-6);
}

TEST_CASE("failures are tagged with their stage") {
  auto inst = parse_instance("var x in [0, 1]; var y in [0, 1]; min x^2 + y^2; st x + y >= 3;");
  try {
    run_missoc(inst, MissocConfig{});
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "solve");
  }
  inst.complicating = {1};
  try {
    run_missoc(inst, MissocConfig{});
    FAIL("expected a stage error");
  } catch (const StageError& e) {
    CHECK(e.stage() == "surrogate");
  }
}
