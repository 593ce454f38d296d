#include <cstdio>
#include <fstream>
#include <sstream>

#include "missoc/regression.hpp"

namespace missoc {

namespace {

constexpr const char* kMagic = "missoc-model";
constexpr int kVersion = 1;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Reader {
 public:
  explicit Reader(const std::string& text) : in_(text) {}

  void expect(const std::string& keyword) {
    std::string word;
    if (!(in_ >> word) || word != keyword) {
      throw FormatError("model file: expected '" + keyword + "' but found '" + word + "'");
    }
  }
  std::string word() {
    std::string w;
    if (!(in_ >> w)) throw FormatError("model file: unexpected end of input");
    return w;
  }
  long integer() {
    const std::string w = word();
    std::size_t pos = 0;
    long v = 0;
    try {
      v = std::stol(w, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != w.size()) throw FormatError("model file: expected an integer, got '" + w + "'");
    return v;
  }
  double real() {
    const std::string w = word();
    char* end = nullptr;
    const double v = std::strtod(w.c_str(), &end);
    if (end == w.c_str() || *end != '\0') throw FormatError("model file: bad number '" + w + "'");
    return v;
  }

 private:
  std::istringstream in_;
};

}  // namespace

std::string serialize_model(const AdditiveModelFit& fit) {
  std::ostringstream os;
  os << kMagic << ' ' << kVersion << '\n';
  os << "intercept " << fmt(fit.intercept) << '\n';
  os << "covariates " << fit.components.size() << '\n';
  for (const auto& c : fit.components) {
    const auto& kv = c.basis.knots();
    os << "covariate " << (c.name().empty() ? std::string("_") : c.name()) << '\n';
    os << "degree " << kv.degree() << '\n';
    os << "knots " << kv.internal().size();
    for (double t : kv.internal()) os << ' ' << fmt(t);
    os << '\n';
    os << "coeffs " << c.theta.size();
    for (Eigen::Index i = 0; i < c.theta.size(); ++i) os << ' ' << fmt(c.theta[i]);
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

AdditiveModelFit deserialize_model(const std::string& text) {
  Reader r(text);
  r.expect(kMagic);
  const long version = r.integer();
  if (version != kVersion) {
    throw FormatError("model file: unsupported version " + std::to_string(version));
  }
  AdditiveModelFit fit;
  r.expect("intercept");
  fit.intercept = r.real();
  r.expect("covariates");
  const long p = r.integer();
  if (p < 0) throw FormatError("model file: negative covariate count");
  for (long j = 0; j < p; ++j) {
    r.expect("covariate");
    std::string name = r.word();
    if (name == "_") name.clear();
    r.expect("degree");
    const long d = r.integer();
    r.expect("knots");
    const long nk = r.integer();
    if (nk < 2) throw FormatError("model file: too few knots");
    std::vector<double> knots(static_cast<std::size_t>(nk));
    for (auto& t : knots) t = r.real();
    r.expect("coeffs");
    const long nc = r.integer();
    if (nc != nk - 1 + d) throw FormatError("model file: coefficient count does not match basis");
    Eigen::VectorXd theta(nc);
    for (long i = 0; i < nc; ++i) theta[i] = r.real();
    fit.components.push_back(
        {BSplineBasis(KnotVector::extend(knots, static_cast<int>(d)), std::move(name)), std::move(theta)});
  }
  r.expect("end");
  return fit;
}

void save_model(const AdditiveModelFit& fit, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write model file " + path);
  out << serialize_model(fit);
}

AdditiveModelFit load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read model file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace missoc
