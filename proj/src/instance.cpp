#include "missoc/instance.hpp"

#include "missoc/errors.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace missoc {

SyntaxError::SyntaxError(const std::string& message, int line, int column)
    : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + message),
      line_(line),
      column_(column) {}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

enum class Tok { Ident, Number, Symbol, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  double number = 0.0;
  int line = 1;
  int column = 1;
};

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1, col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    const char c = src[i];
    if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    Token t;
    t.line = line;
    t.column = col;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_' || src[j] == '.')) {
        ++j;
      }
      t.kind = Tok::Ident;
      t.text = std::string(src.substr(i, j - i));
      advance(j - i);
      out.push_back(std::move(t));
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      const std::string rest(src.substr(i, std::min<std::size_t>(64, src.size() - i)));
      char* end = nullptr;
      t.number = std::strtod(rest.c_str(), &end);
      const std::size_t len = static_cast<std::size_t>(end - rest.c_str());
      t.kind = Tok::Number;
      t.text = rest.substr(0, len);
      advance(len);
      out.push_back(std::move(t));
      continue;
    }
    static const char* two[] = {"<=", ">=", "==", "**"};
    bool matched = false;
    for (const char* s : two) {
      if (src.substr(i, 2) == s) {
        t.kind = Tok::Symbol;
        t.text = s;
        advance(2);
        matched = true;
        break;
      }
    }
    if (!matched) {
      if (std::string("+-*/^()[],;=<>:").find(c) == std::string::npos) {
        throw SyntaxError(std::string("unexpected character '") + c + "'", line, col);
      }
      t.kind = Tok::Symbol;
      t.text = std::string(1, c);
      advance(1);
    }
    if (t.text == "**") t.text = "^";
    out.push_back(std::move(t));
  }
  Token end;
  end.line = line;
  end.column = col;
  out.push_back(end);
  return out;
}

class Parser {
 public:
  Parser(std::vector<Token> toks, ProblemInstance& inst) : toks_(std::move(toks)), inst_(inst) {}

  void run() {
    // Declarations first so statements may use variables declared later.
    std::vector<std::pair<std::size_t, std::size_t>> stmts;
    std::size_t start = 0;
    for (std::size_t i = 0; i < toks_.size(); ++i) {
      if (toks_[i].kind == Tok::End || is_symbol(toks_[i], ";")) {
        if (i > start) stmts.emplace_back(start, i);
        start = i + 1;
      }
    }
    for (auto [a, b] : stmts) {
      if (is_ident(toks_[a], "var")) statement(a, b);
    }
    for (auto [a, b] : stmts) {
      if (!is_ident(toks_[a], "var")) statement(a, b);
    }
    if (!has_objective_) throw SyntaxError("missing 'min' objective", toks_.back().line, toks_.back().column);
  }

 private:
  static bool is_symbol(const Token& t, const char* s) { return t.kind == Tok::Symbol && t.text == s; }
  static bool is_ident(const Token& t, const char* s) { return t.kind == Tok::Ident && t.text == s; }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ < end_) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const std::string& msg, const Token& t) const {
    throw SyntaxError(msg, t.line, t.column);
  }
  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = pos_ < end_ ? toks_[pos_] : toks_[end_];
    fail(msg, t);
  }
  bool at_end() const { return pos_ >= end_; }
  void expect_symbol(const char* s) {
    if (at_end() || !is_symbol(peek(), s)) fail(std::string("expected '") + s + "'");
    next();
  }
  std::string expect_ident(const char* what) {
    if (at_end() || peek().kind != Tok::Ident) fail(std::string("expected ") + what);
    return next().text;
  }
  void expect_end() {
    if (!at_end()) fail("unexpected '" + peek().text + "'");
  }

  double signed_number() {
    double sign = 1.0;
    while (!at_end() && (is_symbol(peek(), "-") || is_symbol(peek(), "+"))) {
      if (next().text == "-") sign = -sign;
    }
    if (at_end()) fail("expected a number");
    const Token& t = next();
    if (t.kind == Tok::Number) return sign * t.number;
    if (t.kind == Tok::Ident && (t.text == "inf" || t.text == "infinity")) return sign * kInf;
    fail("expected a number", t);
  }

  void statement(std::size_t a, std::size_t b) {
    pos_ = a;
    end_ = b;
    const Token& head = next();
    if (head.kind != Tok::Ident) fail("expected a statement keyword", head);
    const std::string& kw = head.text;
    if (kw == "var") {
      var_statement();
    } else if (kw == "min" || kw == "minimize") {
      if (has_objective_) fail("duplicate objective", head);
      inst_.objective = expression();
      has_objective_ = true;
    } else if (kw == "st" || kw == "s.t." || kw == "subject_to") {
      constraint_statement();
    } else if (kw == "shape") {
      shape_statement();
    } else if (kw == "point") {
      point_statement();
    } else if (kw == "bestknown") {
      inst_.best_known = signed_number();
    } else if (kw == "name") {
      inst_.name = expect_ident("an instance name");
    } else {
      fail("unknown statement '" + kw + "'", head);
    }
    expect_end();
  }

  void var_statement() {
    const Token& nt = peek();
    Variable v;
    v.name = expect_ident("a variable name");
    if (inst_.index_of(v.name) >= 0) fail("variable '" + v.name + "' declared twice", nt);
    if (!at_end() && is_ident(peek(), "binary")) {
      next();
      v.lower = 0.0;
      v.upper = 1.0;
      v.integer = true;
    } else {
      if (at_end() || !is_ident(peek(), "in")) fail("expected 'in'");
      next();
      expect_symbol("[");
      v.lower = signed_number();
      expect_symbol(",");
      v.upper = signed_number();
      expect_symbol("]");
      if (v.lower > v.upper) fail("empty bounds for '" + v.name + "'", nt);
      if (!at_end() && is_ident(peek(), "integer")) {
        next();
        v.integer = true;
      }
    }
    inst_.variables.push_back(std::move(v));
  }

  void constraint_statement() {
    const expr::Expr lhs = expression();
    if (at_end()) fail("expected a relation (<=, >= or =)");
    const Token& rel = next();
    if (rel.kind != Tok::Symbol || (rel.text != "<=" && rel.text != ">=" && rel.text != "=" && rel.text != "==")) {
      fail("expected a relation (<=, >= or =)", rel);
    }
    const Token& rhs_tok = peek();
    const expr::Expr rhs = expression();
    const bool zero_rhs = rhs.op() == expr::Op::Const && rhs.node().value == 0.0 &&
                          rhs_tok.kind == Tok::Number;
    Constraint c;
    if (rel.text == ">=") {
      c.body = zero_rhs ? -lhs : rhs - lhs;
    } else {
      c.body = zero_rhs ? lhs : lhs - rhs;
    }
    c.sense = (rel.text == "=" || rel.text == "==") ? ConstraintSense::Equal : ConstraintSense::LessEqual;
    inst_.constraints.push_back(std::move(c));
  }

  int variable_ref() {
    const Token& t = peek();
    const std::string name = expect_ident("a variable name");
    const int idx = inst_.index_of(name);
    if (idx < 0) fail("undeclared variable '" + name + "'", t);
    return idx;
  }

  void shape_statement() {
    const Token& kt = peek();
    const std::string kind = expect_ident("a shape kind");
    auto& sh = inst_.shape;
    if (kind == "bounds") {
      expect_symbol("[");
      const double lo = signed_number();
      expect_symbol(",");
      const double hi = signed_number();
      expect_symbol("]");
      if (!(lo < hi)) fail("shape bounds need L < U", kt);
      sh.lower = std::isfinite(lo) ? std::optional<double>(lo) : std::nullopt;
      sh.upper = std::isfinite(hi) ? std::optional<double>(hi) : std::nullopt;
    } else if (kind == "monotone") {
      const int v = variable_ref();
      const Token& dt = peek();
      const std::string dir = expect_ident("'up' or 'down'");
      if (dir == "up" || dir == "increasing") {
        sh.monotone[v] = Monotonicity::Increasing;
      } else if (dir == "down" || dir == "decreasing") {
        sh.monotone[v] = Monotonicity::Decreasing;
      } else {
        fail("expected 'up' or 'down'", dt);
      }
    } else if (kind == "convex") {
      sh.curvature[variable_ref()] = Curvature::Convex;
    } else if (kind == "concave") {
      sh.curvature[variable_ref()] = Curvature::Concave;
    } else {
      fail("unknown shape kind '" + kind + "'", kt);
    }
  }

  void point_statement() {
    const Token& kt = peek();
    const std::string kind = expect_ident("'interp', 'under' or 'over'");
    PointwiseSet set;
    if (kind == "interp") {
      set.relation = PointRelation::Interpolate;
    } else if (kind == "under") {
      set.relation = PointRelation::Under;
    } else if (kind == "over") {
      set.relation = PointRelation::Over;
    } else {
      fail("expected 'interp', 'under' or 'over'", kt);
    }
    while (!at_end()) {
      const int first = index_number();
      int last = first;
      if (!at_end() && is_symbol(peek(), ":")) {
        next();
        last = index_number();
        if (last < first) fail("descending index range");
      }
      for (int i = first; i <= last; ++i) set.indices.push_back(i - 1);
      if (!at_end()) expect_symbol(",");
    }
    if (set.indices.empty()) fail("expected at least one index", kt);
    inst_.shape.points.push_back(std::move(set));
  }

  int index_number() {
    if (at_end() || peek().kind != Tok::Number) fail("expected a 1-based row index");
    const Token& t = next();
    if (t.number < 1 || t.number != std::floor(t.number)) fail("row indices are positive integers", t);
    return static_cast<int>(t.number);
  }

  // expr := term (('+'|'-') term)*
  expr::Expr expression() {
    expr::Expr e = term();
    while (!at_end() && (is_symbol(peek(), "+") || is_symbol(peek(), "-"))) {
      const bool plus = next().text == "+";
      const expr::Expr r = term();
      e = plus ? e + r : e - r;
    }
    return e;
  }

  expr::Expr term() {
    expr::Expr e = unary();
    while (!at_end() && (is_symbol(peek(), "*") || is_symbol(peek(), "/"))) {
      const bool mul = next().text == "*";
      const expr::Expr r = unary();
      e = mul ? e * r : e / r;
    }
    return e;
  }

  expr::Expr unary() {
    if (!at_end() && is_symbol(peek(), "-")) {
      next();
      return -unary();
    }
    if (!at_end() && is_symbol(peek(), "+")) {
      next();
      return unary();
    }
    return power();
  }

  expr::Expr power() {
    expr::Expr base = primary();
    if (!at_end() && is_symbol(peek(), "^")) {
      next();
      return expr::pow(base, unary());
    }
    return base;
  }

  expr::Expr primary() {
    if (at_end()) fail("unexpected end of expression");
    const Token& t = next();
    if (t.kind == Tok::Number) return expr::Expr(t.number);
    if (is_symbol(t, "(")) {
      expr::Expr e = expression();
      expect_symbol(")");
      return e;
    }
    if (t.kind == Tok::Ident) {
      if (!at_end() && is_symbol(peek(), "(")) {
        const auto op = expr::function_from_name(t.text);
        if (!op) fail("unknown function '" + t.text + "'", t);
        next();
        std::vector<expr::Expr> args{expression()};
        while (!at_end() && is_symbol(peek(), ",")) {
          next();
          args.push_back(expression());
        }
        expect_symbol(")");
        const bool nary = *op == expr::Op::Min || *op == expr::Op::Max;
        if (nary ? args.size() < 2 : args.size() != 1) {
          fail("wrong number of arguments for '" + t.text + "'", t);
        }
        return expr::Expr::apply(*op, std::move(args));
      }
      if (t.text == "inf") return expr::Expr(kInf);
      const int idx = inst_.index_of(t.text);
      if (idx < 0) fail("undeclared variable '" + t.text + "'", t);
      return expr::Expr::variable(idx);
    }
    fail("unexpected '" + t.text + "'", t);
  }

  std::vector<Token> toks_;
  ProblemInstance& inst_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  bool has_objective_ = false;
};

std::string number_text(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

bool ShapeDirectives::empty() const {
  return !lower && !upper && monotone.empty() && curvature.empty() && points.empty();
}

ShapeSpec ShapeDirectives::for_covariates(const std::vector<int>& covariates) const {
  ShapeSpec spec;
  spec.lower = lower;
  spec.upper = upper;
  spec.points = points;
  if (!monotone.empty()) {
    spec.monotone.assign(covariates.size(), Monotonicity::None);
    for (std::size_t j = 0; j < covariates.size(); ++j) {
      if (auto it = monotone.find(covariates[j]); it != monotone.end()) spec.monotone[j] = it->second;
    }
  }
  if (!curvature.empty()) {
    spec.curvature.assign(covariates.size(), Curvature::None);
    for (std::size_t j = 0; j < covariates.size(); ++j) {
      if (auto it = curvature.find(covariates[j]); it != curvature.end()) spec.curvature[j] = it->second;
    }
  }
  return spec;
}

std::vector<std::string> ProblemInstance::names() const {
  std::vector<std::string> out;
  out.reserve(variables.size());
  for (const auto& v : variables) out.push_back(v.name);
  return out;
}

int ProblemInstance::index_of(const std::string& n) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].name == n) return static_cast<int>(i);
  }
  return -1;
}

std::vector<double> ProblemInstance::lower() const {
  std::vector<double> out;
  for (const auto& v : variables) out.push_back(v.lower);
  return out;
}

std::vector<double> ProblemInstance::upper() const {
  std::vector<double> out;
  for (const auto& v : variables) out.push_back(v.upper);
  return out;
}

std::vector<int> ProblemInstance::integers() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].integer) out.push_back(static_cast<int>(i));
  }
  return out;
}

double ProblemInstance::objective_value(std::span<const double> x) const {
  return expr::evaluate(objective, x);
}

double ProblemInstance::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (const auto& c : constraints) {
    const double v = expr::evaluate(c.body, x);
    const double viol = c.sense == ConstraintSense::Equal ? std::abs(v) : v;
    if (std::isnan(viol)) return std::numeric_limits<double>::infinity();
    worst = std::max(worst, viol);
  }
  return worst;
}

std::vector<int> ProblemInstance::objective_covariates() const {
  const auto split = expr::split_linear(objective);
  const auto vars = expr::variables(split.nonlinear);
  return {vars.begin(), vars.end()};
}

void ProblemInstance::validate() const {
  for (int m : complicating) {
    if (m < 0 || m > static_cast<int>(constraints.size())) {
      throw ValidationError("complicating-function index " + std::to_string(m) + " out of range");
    }
    const expr::Expr& f = m == 0 ? objective : constraints[static_cast<std::size_t>(m - 1)].body;
    for (int v : expr::variables(expr::split_linear(f).nonlinear)) {
      const auto& var = variables[static_cast<std::size_t>(v)];
      if (!std::isfinite(var.lower) || !std::isfinite(var.upper)) {
        throw ValidationError("variable '" + var.name +
                              "' enters a complicating function nonlinearly and needs finite bounds "
                              "(the surrogate is fitted over the variable box)");
      }
    }
  }
  std::vector<double> mid;
  for (const auto& v : variables) {
    if (std::isfinite(v.lower) && std::isfinite(v.upper)) {
      mid.push_back(0.5 * (v.lower + v.upper));
    } else if (std::isfinite(v.lower)) {
      mid.push_back(v.lower);
    } else if (std::isfinite(v.upper)) {
      mid.push_back(v.upper);
    } else {
      mid.push_back(0.0);
    }
  }
  if (!std::isfinite(expr::evaluate(objective, mid))) {
    throw ValidationError("objective does not evaluate finitely at the box midpoint");
  }
  for (std::size_t m = 0; m < constraints.size(); ++m) {
    if (!std::isfinite(expr::evaluate(constraints[m].body, mid))) {
      throw ValidationError("constraint " + std::to_string(m + 1) +
                            " does not evaluate finitely at the box midpoint");
    }
  }
}

std::string ProblemInstance::to_text() const {
  std::ostringstream os;
  const auto nm = names();
  if (!name.empty()) os << "name " << name << ";\n";
  for (const auto& v : variables) {
    os << "var " << v.name << " in [" << number_text(v.lower) << ", " << number_text(v.upper) << "]"
       << (v.integer ? " integer" : "") << ";\n";
  }
  os << "min " << expr::unparse(objective, nm) << ";\n";
  for (const auto& c : constraints) {
    os << "st " << expr::unparse(c.body, nm) << (c.sense == ConstraintSense::Equal ? " = 0" : " <= 0") << ";\n";
  }
  if (shape.lower || shape.upper) {
    os << "shape bounds [" << number_text(shape.lower.value_or(-std::numeric_limits<double>::infinity()))
       << ", " << number_text(shape.upper.value_or(std::numeric_limits<double>::infinity())) << "];\n";
  }
  for (const auto& [v, m] : shape.monotone) {
    if (m == Monotonicity::None) continue;
    os << "shape monotone " << nm[static_cast<std::size_t>(v)] << (m == Monotonicity::Increasing ? " up" : " down")
       << ";\n";
  }
  for (const auto& [v, c] : shape.curvature) {
    if (c == Curvature::None) continue;
    os << "shape " << (c == Curvature::Convex ? "convex " : "concave ") << nm[static_cast<std::size_t>(v)] << ";\n";
  }
  for (const auto& set : shape.points) {
    os << "point "
       << (set.relation == PointRelation::Interpolate ? "interp"
           : set.relation == PointRelation::Under     ? "under"
                                                      : "over");
    for (std::size_t i = 0; i < set.indices.size(); ++i) os << (i ? ", " : " ") << set.indices[i] + 1;
    os << ";\n";
  }
  if (best_known) os << "bestknown " << number_text(*best_known) << ";\n";
  return os.str();
}

ProblemInstance parse_instance(std::string_view text, std::string name) {
  ProblemInstance inst;
  inst.name = std::move(name);
  Parser(tokenize(text), inst).run();
  inst.validate();
  return inst;
}

ProblemInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read instance file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.find_last_of('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  ProblemInstance inst = parse_instance(ss.str(), stem);
  return inst;
}

}  // namespace missoc
