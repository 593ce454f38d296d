#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "missoc/bernstein.hpp"
#include "missoc/bnb.hpp"
#include "missoc/errors.hpp"
#include "missoc/instance.hpp"
#include "missoc/localsearch.hpp"
#include "missoc/missoc.hpp"
#include "missoc/regression.hpp"
#include "missoc/shapecon.hpp"
#include "missoc/splines.hpp"
#include "missoc/surrogate.hpp"

namespace py = pybind11;
using namespace missoc;

namespace {

TrainingSet make_training(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, std::vector<std::string> names,
                          std::vector<double> lower, std::vector<double> upper) {
  TrainingSet ts(X, y, std::move(names));
  if (!lower.empty()) ts.lower = std::move(lower);
  if (!upper.empty()) ts.upper = std::move(upper);
  return ts;
}

}  // namespace

PYBIND11_MODULE(_missoc, m) {
  m.doc() = "Shape-constrained spline surrogates for mixed-integer nonlinear optimization";

  auto base = py::register_exception<Error>(m, "MissocError", PyExc_RuntimeError);
  py::register_exception<SyntaxError>(m, "SyntaxError", base.ptr());
  py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<OutOfDomainError>(m, "OutOfDomainError", base.ptr());
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());
  py::register_exception<DomainMismatchError>(m, "DomainMismatchError", base.ptr());
  py::register_exception<UnsupportedScopeError>(m, "UnsupportedScopeError", base.ptr());
  py::register_exception<StageError>(m, "StageError", base.ptr());

  py::class_<BSplineBasis>(m, "BSplineBasis")
      .def(py::init([](double lo, double hi, int intervals, int degree) {
             return BSplineBasis(KnotVector::uniform(lo, hi, intervals, degree));
           }),
           py::arg("lower"), py::arg("upper"), py::arg("intervals"), py::arg("degree"))
      .def_property_readonly("degree", &BSplineBasis::degree)
      .def_property_readonly("intervals", &BSplineBasis::intervals)
      .def_property_readonly("size", &BSplineBasis::size)
      .def("row", &BSplineBasis::row, py::arg("x"))
      .def("evaluate", &BSplineBasis::evaluate, py::arg("theta"), py::arg("x"));

  py::class_<TrainingSet>(m, "TrainingSet")
      .def(py::init(&make_training), py::arg("X"), py::arg("y"), py::arg("names") = std::vector<std::string>{},
           py::arg("lower") = std::vector<double>{}, py::arg("upper") = std::vector<double>{})
      .def_readonly("X", &TrainingSet::X)
      .def_readonly("y", &TrainingSet::y)
      .def_readonly("names", &TrainingSet::names)
      .def_readonly("lower", &TrainingSet::lower)
      .def_readonly("upper", &TrainingSet::upper);

  py::class_<AdditiveModelFit>(m, "AdditiveModelFit")
      .def_readonly("intercept", &AdditiveModelFit::intercept)
      .def_property_readonly("covariates", &AdditiveModelFit::covariates)
      .def_property_readonly("coefficients", &AdditiveModelFit::coefficients)
      .def("component", [](const AdditiveModelFit& f, std::size_t j, double x) { return f.components.at(j)(x); })
      .def("predict", [](const AdditiveModelFit& f, const std::vector<double>& x) { return predict(f, x); })
      .def("serialize", [](const AdditiveModelFit& f) { return serialize_model(f); })
      .def_static("deserialize", &deserialize_model);

  m.def(
      "fit_additive",
      [](const TrainingSet& data, const std::vector<int>& degrees, const std::vector<int>& intervals) {
        return fit_additive(data, degrees, intervals);
      },
      py::arg("data"), py::arg("degrees"), py::arg("intervals"));

  py::enum_<Monotonicity>(m, "Monotonicity")
      .value("NONE", Monotonicity::None)
      .value("INCREASING", Monotonicity::Increasing)
      .value("DECREASING", Monotonicity::Decreasing);
  py::enum_<Curvature>(m, "Curvature")
      .value("NONE", Curvature::None)
      .value("CONVEX", Curvature::Convex)
      .value("CONCAVE", Curvature::Concave);
  py::enum_<PointRelation>(m, "PointRelation")
      .value("INTERPOLATE", PointRelation::Interpolate)
      .value("UNDER", PointRelation::Under)
      .value("OVER", PointRelation::Over);

  py::class_<PointwiseSet>(m, "PointwiseSet")
      .def(py::init<>())
      .def_readwrite("indices", &PointwiseSet::indices)
      .def_readwrite("relation", &PointwiseSet::relation);

  py::class_<ShapeSpec>(m, "ShapeSpec")
      .def(py::init<>())
      .def_readwrite("lower", &ShapeSpec::lower)
      .def_readwrite("upper", &ShapeSpec::upper)
      .def_readwrite("lower_weights", &ShapeSpec::lower_weights)
      .def_readwrite("upper_weights", &ShapeSpec::upper_weights)
      .def_readwrite("monotone", &ShapeSpec::monotone)
      .def_readwrite("curvature", &ShapeSpec::curvature)
      .def_readwrite("points", &ShapeSpec::points);

  py::class_<ConstrainedFit>(m, "ConstrainedFit")
      .def_readonly("fit", &ConstrainedFit::fit)
      .def_readonly("lower_weights", &ConstrainedFit::lower_weights)
      .def_readonly("upper_weights", &ConstrainedFit::upper_weights)
      .def_readonly("warnings", &ConstrainedFit::warnings)
      .def_readonly("objective", &ConstrainedFit::objective);

  m.def(
      "fit_constrained",
      [](const TrainingSet& data, const std::vector<int>& degrees, const std::vector<int>& intervals,
         const ShapeSpec& spec) { return fit_constrained(data, degrees, intervals, spec); },
      py::arg("data"), py::arg("degrees"), py::arg("intervals"), py::arg("spec"));

  py::class_<ProblemInstance>(m, "ProblemInstance")
      .def_readonly("name", &ProblemInstance::name)
      .def_property_readonly("dimension", &ProblemInstance::dimension)
      .def_property_readonly("names", &ProblemInstance::names)
      .def_property_readonly("lower", &ProblemInstance::lower)
      .def_property_readonly("upper", &ProblemInstance::upper)
      .def_property_readonly("integers", &ProblemInstance::integers)
      .def_property_readonly("constraints", [](const ProblemInstance& p) { return p.constraints.size(); })
      .def_readonly("best_known", &ProblemInstance::best_known)
      .def("objective_value",
           [](const ProblemInstance& p, const std::vector<double>& x) { return p.objective_value(x); })
      .def("max_violation", [](const ProblemInstance& p, const std::vector<double>& x) { return p.max_violation(x); })
      .def("to_text", &ProblemInstance::to_text);

  m.def(
      "parse_instance", [](const std::string& text, const std::string& name) { return parse_instance(text, name); },
      py::arg("text"), py::arg("name") = "");
  m.def("load_instance", &load_instance, py::arg("path"));

  py::class_<SurrogateMINLP>(m, "SurrogateMINLP")
      .def_property_readonly("binaries", &SurrogateMINLP::binaries)
      .def_property_readonly("added_continuous", &SurrogateMINLP::added_continuous)
      .def_property_readonly("size", &SurrogateMINLP::size)
      .def("lift", [](const SurrogateMINLP& s, const std::vector<double>& x) { return s.lift(x); })
      .def("objective_value", [](const SurrogateMINLP& s, const Eigen::VectorXd& z) { return s.objective_value(z); })
      .def("max_violation", [](const SurrogateMINLP& s, const Eigen::VectorXd& z) { return s.max_violation(z); })
      .def("to_text", &SurrogateMINLP::to_text);

  m.def(
      "build_surrogate",
      [](const AdditiveModelFit& fit, const ProblemInstance& inst) { return build_surrogate(fit, inst); },
      py::arg("fit"), py::arg("instance"));

  m.def(
      "eval_surrogate_at",
      [](const AdditiveModelFit& fit, const std::vector<double>& x) {
        LiftedPoint lp;
        const double v = eval_surrogate_at(fit, x, &lp);
        return py::make_tuple(v, lp.interval, lp.offset);
      },
      py::arg("fit"), py::arg("x"));

  py::class_<bnb::SolveReport>(m, "SolveReport")
      .def_property_readonly("status", [](const bnb::SolveReport& r) { return bnb::to_string(r.status); })
      .def_readonly("has_incumbent", &bnb::SolveReport::has_incumbent)
      .def_readonly("x", &bnb::SolveReport::x)
      .def_readonly("objective", &bnb::SolveReport::objective)
      .def_readonly("lower_bound", &bnb::SolveReport::lower_bound)
      .def_readonly("gap_pct", &bnb::SolveReport::gap_pct)
      .def_readonly("nodes", &bnb::SolveReport::nodes)
      .def_readonly("wall_time", &bnb::SolveReport::wall_time);

  m.def(
      "solve",
      [](const SurrogateMINLP& s, double time_limit, double gap_tol) {
        bnb::Options o;
        o.time_limit = time_limit;
        o.gap_tol = gap_tol;
        return bnb::solve(s, o);
      },
      py::arg("surrogate"), py::arg("time_limit") = 600.0, py::arg("gap_tol") = 1e-4);
  m.def("optimality_gap", &bnb::optimality_gap, py::arg("ub"), py::arg("lb"));
  m.def(
      "bernstein_bounds",
      [](const std::vector<double>& a, double lo, double hi) { return bernstein_bounds(a, lo, hi); }, py::arg("coeffs"),
      py::arg("lo"), py::arg("hi"));

  py::class_<RefineResult>(m, "RefineResult")
      .def_readonly("x", &RefineResult::x)
      .def_readonly("objective", &RefineResult::objective)
      .def_readonly("max_violation", &RefineResult::max_violation)
      .def_readonly("iterations", &RefineResult::iterations)
      .def_readonly("converged", &RefineResult::converged)
      .def_readonly("fallback", &RefineResult::fallback);
  m.def(
      "refine", [](const ProblemInstance& inst, const std::vector<double>& x) { return refine(inst, x); },
      py::arg("instance"), py::arg("start"));

  py::class_<MissocConfig>(m, "MissocConfig")
      .def(py::init<>())
      .def_readwrite("degrees", &MissocConfig::degrees)
      .def_readwrite("intervals", &MissocConfig::intervals)
      .def_readwrite("samples_per_param", &MissocConfig::samples_per_param)
      .def_readwrite("seed", &MissocConfig::seed)
      .def_readwrite("time_limit", &MissocConfig::time_limit)
      .def_readwrite("gap_tol", &MissocConfig::gap_tol)
      .def_readwrite("use_shape", &MissocConfig::use_shape)
      .def_readwrite("refine", &MissocConfig::refine);

  py::class_<MissocReport>(m, "MissocReport")
      .def_readonly("instance", &MissocReport::instance)
      .def_readonly("fit", &MissocReport::fit)
      .def_readonly("solve", &MissocReport::solve)
      .def_readonly("x_tilde", &MissocReport::x_tilde)
      .def_readonly("surrogate_objective", &MissocReport::surrogate_objective)
      .def_readonly("x_star", &MissocReport::x_star)
      .def_readonly("objective", &MissocReport::objective)
      .def_readonly("total_time", &MissocReport::total_time)
      .def("csv", [](const MissocReport& r) { return MissocReport::csv_header() + "\n" + r.csv_rows(); });

  m.def("sample_training", &sample_training, py::arg("instance"), py::arg("config"));
  m.def("run_missoc", &run_missoc, py::arg("instance"), py::arg("config"));
}
