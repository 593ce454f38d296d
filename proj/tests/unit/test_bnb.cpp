#include <cmath>
#include <limits>
#include <sstream>

#include "brute_surrogate.hpp"
#include "doctest.h"
#include "missoc/bnb.hpp"
#include "missoc/errors.hpp"
#include "missoc/missoc.hpp"

using namespace missoc;

namespace {

AdditiveModelFit fit_instance(const ProblemInstance& inst, int d, int k, std::uint64_t seed = 5) {
  MissocConfig cfg;
  cfg.default_degree = d;
  cfg.default_intervals = k;
  cfg.seed = seed;
  const auto data = sample_training(inst, cfg);
  const auto covs = inst.objective_covariates();
  return fit_additive(data, std::vector<int>(covs.size(), d), std::vector<int>(covs.size(), k));
}

}  // namespace

TEST_CASE("optimality gap formula") {
  CHECK(bnb::optimality_gap(5.0, 5.0) == 0.0);
  CHECK(bnb::optimality_gap(0.0, 0.0) == 0.0);
  CHECK(std::isinf(bnb::optimality_gap(0.0, -1.0)));
  CHECK(std::isinf(bnb::optimality_gap(0.0, 1e-300)));
  CHECK(std::abs(bnb::optimality_gap(100.0, 90.0) - 10.0) <= 1e-12);
  CHECK(std::abs(bnb::optimality_gap(-0.216, -0.226) - 100.0 * 0.01 / 0.216) <= 1e-12);
  CHECK(std::abs(bnb::optimality_gap(-2.0, -1.0) - 50.0) <= 1e-12);
}

TEST_CASE("linear pieces give an exact root relaxation") {
  // The fitted remainder is identically zero, so degree-1 pieces are exact.
  const auto lin = parse_instance("var x in [0, 3]; var y in [-1, 1]; min 0*x*y + 3*x - 2.5*y; st x + y >= 1;");
  const auto fit = fit_instance(lin, 1, 4);
  const auto sur = build_surrogate(fit, lin);
  const auto rep = bnb::solve(sur);
  REQUIRE(rep.status == bnb::Status::Optimal);
  CHECK(rep.nodes == 1);
  CHECK(rep.gap_pct == doctest::Approx(0.0).scale(1.0).epsilon(1e-8));
  // min 3x - 2.5y on x + y >= 1: x = 0, y = 1 -> -2.5.
  CHECK(rep.objective == doctest::Approx(-2.5).epsilon(1e-6));
}

TEST_CASE("separable convex surrogate closes at the root") {
  const auto inst = parse_instance("var x in [-1, 2]; var y in [0, 3]; min (x - 0.4)^2 + exp(y - 1) - y;");
  const auto fit = fit_instance(inst, 3, 6);
  const auto sur = build_surrogate(fit, inst);
  const auto rep = bnb::solve(sur);
  REQUIRE(rep.status == bnb::Status::Optimal);
  CHECK(rep.nodes == 1);
  CHECK(rep.gap_pct / 100.0 <= 1e-4);
  const auto ref = oracle::brute_force_surrogate(inst, fit);
  CHECK(std::abs(rep.objective - ref.value) <= 1e-3);
}

TEST_CASE("coupled nonconvex surrogate matches brute force") {
  const auto inst = parse_instance(
      "var x in [-2, 2]; var y in [-2, 2]; min sin(3*x) + 0.3*x^3 + y*cos(2*y); st x + y >= 1.3; st x - y <= 0.5;");
  const auto fit = fit_instance(inst, 3, 10);
  const auto sur = build_surrogate(fit, inst);
  std::ostringstream log;
  bnb::Options o;
  o.log = &log;
  const auto rep = bnb::solve(sur, o);
  REQUIRE(rep.status == bnb::Status::Optimal);
  const auto ref = oracle::brute_force_surrogate(inst, fit);
  CHECK(std::abs(rep.objective - ref.value) <= 1e-3);
  CHECK(rep.gap_pct / 100.0 <= 1e-4);
  CHECK(rep.max_violation <= 1e-6);
  CHECK(std::abs(bnb::optimality_gap(rep.objective, rep.lower_bound) - rep.gap_pct) <= 1e-12);
  CHECK(rep.lower_bound <= ref.value + 1e-9);

  // The incumbent never gets worse along the log.
  std::istringstream in(log.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "node,depth,lb,ub,gap%");
  double prev = std::numeric_limits<double>::infinity();
  int lines = 0;
  while (std::getline(in, line)) {
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    REQUIRE(cols.size() == 5);
    const double ub = std::stod(cols[3]);
    CHECK(ub <= prev);
    prev = ub;
    ++lines;
  }
  CHECK(lines == rep.nodes);

  const auto again = bnb::solve(sur);
  CHECK(again.objective == rep.objective);
  CHECK(again.nodes == rep.nodes);
  CHECK(again.x == rep.x);
}

TEST_CASE("node bounds never exceed the node's grid minimum") {
  const auto inst = parse_instance(
      "var x in [-1.5, 1.5]; var y in [-2, 2]; min (x^2 - 1)^2 + 0.3*x + sin(4*y) + 0.2*y^2; st x + y >= 0.5;");
  const auto fit = fit_instance(inst, 3, 5);
  const auto sur = build_surrogate(fit, inst);
  int audited = 0, violations = 0;
  bnb::Options o;
  o.on_node = [&](const bnb::NodeView& v) {
    ++audited;
    double best = std::numeric_limits<double>::infinity();
    const int G = 150;
    for (int a = 0; a <= G; ++a) {
      for (int b = 0; b <= G; ++b) {
        const std::vector<double> x{v.lower[0] + (v.upper[0] - v.lower[0]) * a / G,
                                    v.lower[1] + (v.upper[1] - v.lower[1]) * b / G};
        if (inst.max_violation(x) > 0) continue;
        bool fits = true;
        for (std::size_t j = 0; j < sur.covariates.size() && fits; ++j) {
          bool any = false;
          for (std::size_t q = 0; q < sur.selectors[j].size(); ++q) {
            std::size_t li = 0;
            while (!(sur.links[li].covariate == static_cast<int>(j) && sur.links[li].interval == static_cast<int>(q))) ++li;
            const int sel = sur.selectors[j][q];
            if (v.upper[sel] < 0.5) continue;
            bool other_fixed = false;
            for (int s : sur.selectors[j]) other_fixed = other_fixed || (s != sel && v.lower[s] > 0.5);
            if (other_fixed) continue;
            const double off = x[static_cast<std::size_t>(sur.covariates[j])] - sur.links[li].knot;
            if (off >= v.link_range[li].first - 1e-12 && off <= v.link_range[li].second + 1e-12) any = true;
          }
          fits = any;
        }
        if (!fits) continue;
        best = std::min(best, sur.objective_value(sur.lift(x)));
      }
    }
    if (std::isfinite(best) && v.lower_bound > best + 1e-9) {
      ++violations;
      MESSAGE("node " << v.id << " depth " << v.depth << " lb " << v.lower_bound << " grid " << best);
    }
  };
  const auto rep = bnb::solve(sur, o);
  CHECK(rep.status == bnb::Status::Optimal);
  CHECK(audited > 1);
  CHECK(violations == 0);
}

TEST_CASE("integer variables and infeasibility") {
  const auto inst = parse_instance(
      "var k in [-3, 3] integer; var x in [0, 4]; min 0.1*(k^2 - 2)^2 + x*cos(x); st k + x <= 3;");
  const auto fit = fit_instance(inst, 3, 6);
  const auto rep = bnb::solve(build_surrogate(fit, inst));
  REQUIRE(rep.status == bnb::Status::Optimal);
  CHECK(rep.x[0] == std::round(rep.x[0]));
  const auto ref = oracle::brute_force_surrogate(inst, fit);
  CHECK(std::abs(rep.objective - ref.value) <= 1e-3);

  const auto bad = parse_instance("var x in [0, 1]; var y in [0, 1]; min x^2 + y^2; st x + y >= 3;");
  const auto bad_rep = bnb::solve(build_surrogate(fit_instance(bad, 2, 3), bad));
  CHECK(bad_rep.status == bnb::Status::Infeasible);
  CHECK_FALSE(bad_rep.has_incumbent);
}

TEST_CASE("convex retained constraints through outer approximation") {
  const auto inst = parse_instance(
      "var x in [-2, 2]; var y in [-2, 2]; min sin(2*x) + y^3 - y; st x^2 + y^2 - 1 <= 0;");
  const auto fit = fit_instance(inst, 3, 8);
  const auto sur = build_surrogate(fit, inst);
  const auto rep = bnb::solve(sur);
  REQUIRE(rep.has_incumbent);
  CHECK(inst.max_violation(rep.x) <= 1e-6);
  CHECK(rep.gap_pct / 100.0 <= 1e-4);

  const auto eq = parse_instance("var x in [-2, 2]; min sin(2*x); st x^2 - 1 = 0;");
  CHECK_THROWS_AS(bnb::solve(build_surrogate(fit_instance(eq, 3, 4), eq)), UnsupportedScopeError);
}

TEST_CASE("budget exhaustion reports its reason") {
  const auto inst = parse_instance(
      "var x in [-2, 2]; var y in [-2, 2]; min sin(3*x) + 0.3*x^3 + y*cos(2*y); st x + y >= 1.3;");
  const auto sur = build_surrogate(fit_instance(inst, 3, 10), inst);
  bnb::Options o;
  o.max_nodes = 1;
  o.root_cut_rounds = 0;
  const auto rep = bnb::solve(sur, o);
  if (rep.nodes == 1 && rep.status != bnb::Status::Optimal) {
    CHECK((rep.status == bnb::Status::NodeLimit || rep.status == bnb::Status::NoIncumbent));
  }
  CHECK(rep.nodes <= 1);
}
