#include "missoc/expression.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "missoc/errors.hpp"

namespace missoc::expr {

namespace {

NodePtr make(Op op, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args.reserve(args.size());
  for (auto& a : args) n->args.push_back(a.ptr());
  return n;
}

Expr wrap(const NodePtr& p) { return Expr(p); }

int arity(Op op) {
  switch (op) {
    case Op::Const:
    case Op::Var: return 0;
    case Op::Neg:
    case Op::Exp:
    case Op::Log:
    case Op::Sqrt:
    case Op::Sin:
    case Op::Cos:
    case Op::Abs: return 1;
    case Op::Min:
    case Op::Max: return -1;
    default: return 2;
  }
}

double eval_node(const Node& n, std::span<const double> x) {
  auto arg = [&](std::size_t i) { return eval_node(*n.args[i], x); };
  switch (n.op) {
    case Op::Const: return n.value;
    case Op::Var: return x[static_cast<std::size_t>(n.var)];
    case Op::Add: return arg(0) + arg(1);
    case Op::Sub: return arg(0) - arg(1);
    case Op::Mul: return arg(0) * arg(1);
    case Op::Div: return arg(0) / arg(1);
    case Op::Pow: return std::pow(arg(0), arg(1));
    case Op::Neg: return -arg(0);
    case Op::Exp: return std::exp(arg(0));
    case Op::Log: return std::log(arg(0));
    case Op::Sqrt: return std::sqrt(arg(0));
    case Op::Sin: return std::sin(arg(0));
    case Op::Cos: return std::cos(arg(0));
    case Op::Abs: return std::abs(arg(0));
    case Op::Min:
    case Op::Max: {
      double v = arg(0);
      for (std::size_t i = 1; i < n.args.size(); ++i) {
        v = n.op == Op::Min ? std::min(v, arg(i)) : std::max(v, arg(i));
      }
      return v;
    }
  }
  return std::numeric_limits<double>::quiet_NaN();
}

// Forward mode: returns the value and writes d(value)/dx into g.
double grad_node(const Node& n, std::span<const double> x, Eigen::VectorXd& g) {
  const Eigen::Index m = static_cast<Eigen::Index>(x.size());
  switch (n.op) {
    case Op::Const:
      g.setZero(m);
      return n.value;
    case Op::Var:
      g.setZero(m);
      g[n.var] = 1.0;
      return x[static_cast<std::size_t>(n.var)];
    default: break;
  }
  Eigen::VectorXd ga, gb;
  const double a = grad_node(*n.args[0], x, ga);
  switch (n.op) {
    case Op::Neg:
      g = -ga;
      return -a;
    case Op::Exp: {
      const double v = std::exp(a);
      g = v * ga;
      return v;
    }
    case Op::Log:
      g = ga / a;
      return std::log(a);
    case Op::Sqrt: {
      const double v = std::sqrt(a);
      g = ga / (2.0 * v);
      return v;
    }
    case Op::Sin:
      g = std::cos(a) * ga;
      return std::sin(a);
    case Op::Cos:
      g = -std::sin(a) * ga;
      return std::cos(a);
    case Op::Abs:
      g = (a > 0 ? 1.0 : a < 0 ? -1.0 : 0.0) * ga;
      return std::abs(a);
    case Op::Min:
    case Op::Max: {
      double v = a;
      g = ga;
      for (std::size_t i = 1; i < n.args.size(); ++i) {
        const double b = grad_node(*n.args[i], x, gb);
        if (n.op == Op::Min ? b < v : b > v) {
          v = b;
          g = gb;
        }
      }
      return v;
    }
    default: break;
  }
  const double b = grad_node(*n.args[1], x, gb);
  switch (n.op) {
    case Op::Add:
      g = ga + gb;
      return a + b;
    case Op::Sub:
      g = ga - gb;
      return a - b;
    case Op::Mul:
      g = b * ga + a * gb;
      return a * b;
    case Op::Div:
      g = ga / b - (a / (b * b)) * gb;
      return a / b;
    case Op::Pow: {
      const double v = std::pow(a, b);
      if (n.args[1]->op == Op::Const || gb.isZero(0.0)) {
        g = (b == 0.0 ? 0.0 : b * std::pow(a, b - 1.0)) * ga;
      } else {
        g = v * (std::log(a) * gb + (b / a) * ga);
      }
      return v;
    }
    default: break;
  }
  g.setConstant(m, std::numeric_limits<double>::quiet_NaN());
  return std::numeric_limits<double>::quiet_NaN();
}

int precedence(Op op) {
  switch (op) {
    case Op::Add:
    case Op::Sub: return 1;
    case Op::Mul:
    case Op::Div: return 2;
    case Op::Neg: return 3;
    case Op::Pow: return 4;
    default: return 5;
  }
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  if (s == "inf") return "inf";
  if (s == "-inf") return "(-inf)";
  if (v < 0 || (v == 0 && std::signbit(v))) return "(" + s + ")";
  return s;
}

void unparse_node(const Node& n, const std::vector<std::string>& names, std::string& out) {
  auto child = [&](const NodePtr& c, bool parens) {
    if (parens) out += '(';
    unparse_node(*c, names, out);
    if (parens) out += ')';
  };
  const int p = precedence(n.op);
  switch (n.op) {
    case Op::Const: out += format_number(n.value); return;
    case Op::Var:
      if (n.var >= 0 && static_cast<std::size_t>(n.var) < names.size()) {
        out += names[static_cast<std::size_t>(n.var)];
      } else {
        out += "x" + std::to_string(n.var + 1);
      }
      return;
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      static const char* sym[] = {" + ", " - ", " * ", " / "};
      const int idx = n.op == Op::Add ? 0 : n.op == Op::Sub ? 1 : n.op == Op::Mul ? 2 : 3;
      child(n.args[0], precedence(n.args[0]->op) < p);
      out += sym[idx];
      child(n.args[1], precedence(n.args[1]->op) <= p);
      return;
    }
    case Op::Pow:
      child(n.args[0], precedence(n.args[0]->op) <= p);
      out += "^";
      child(n.args[1], precedence(n.args[1]->op) <= p);
      return;
    case Op::Neg:
      out += "-";
      child(n.args[0], precedence(n.args[0]->op) < p);
      return;
    default: {
      out += function_name(n.op);
      out += '(';
      for (std::size_t i = 0; i < n.args.size(); ++i) {
        if (i) out += ", ";
        unparse_node(*n.args[i], names, out);
      }
      out += ')';
      return;
    }
  }
}

void collect(const Node& n, std::set<int>& out) {
  if (n.op == Op::Var) out.insert(n.var);
  for (const auto& a : n.args) collect(*a, out);
}

void add_scaled(Affine& into, const Affine& from, double s) {
  into.constant += s * from.constant;
  for (const auto& [k, v] : from.coeffs) into.coeffs[k] += s * v;
}

void flatten_sum(const NodePtr& n, double sign, std::vector<std::pair<double, NodePtr>>& terms) {
  if (n->op == Op::Add) {
    flatten_sum(n->args[0], sign, terms);
    flatten_sum(n->args[1], sign, terms);
  } else if (n->op == Op::Sub) {
    flatten_sum(n->args[0], sign, terms);
    flatten_sum(n->args[1], -sign, terms);
  } else if (n->op == Op::Neg) {
    flatten_sum(n->args[0], -sign, terms);
  } else {
    terms.emplace_back(sign, n);
  }
}

NodePtr remap(const NodePtr& n, const std::vector<int>& map) {
  if (n->op == Op::Var) return Expr::variable(map[static_cast<std::size_t>(n->var)]).ptr();
  if (n->args.empty()) return n;
  auto out = std::make_shared<Node>(*n);
  for (auto& a : out->args) a = remap(a, map);
  return out;
}

}  // namespace

Expr::Expr(double c) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = c;
  node_ = std::move(n);
}

Expr Expr::variable(int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->var = index;
  return Expr(NodePtr(std::move(n)));
}

Expr Expr::apply(Op op, std::vector<Expr> args) {
  const int a = arity(op);
  if ((a >= 0 && static_cast<int>(args.size()) != a) || (a < 0 && args.size() < 2)) {
    throw Error("wrong number of arguments for expression node");
  }
  return Expr(make(op, std::move(args)));
}

Expr operator+(const Expr& a, const Expr& b) { return Expr::apply(Op::Add, {a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::apply(Op::Sub, {a, b}); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::apply(Op::Mul, {a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::apply(Op::Div, {a, b}); }
Expr operator-(const Expr& a) { return Expr::apply(Op::Neg, {a}); }
Expr pow(const Expr& a, const Expr& b) { return Expr::apply(Op::Pow, {a, b}); }

std::string function_name(Op op) {
  switch (op) {
    case Op::Exp: return "exp";
    case Op::Log: return "log";
    case Op::Sqrt: return "sqrt";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::Abs: return "abs";
    case Op::Min: return "min";
    case Op::Max: return "max";
    default: return {};
  }
}

std::optional<Op> function_from_name(const std::string& name) {
  for (Op op : {Op::Exp, Op::Log, Op::Sqrt, Op::Sin, Op::Cos, Op::Abs, Op::Min, Op::Max}) {
    if (function_name(op) == name) return op;
  }
  return std::nullopt;
}

double evaluate(const Expr& e, std::span<const double> x) { return eval_node(e.node(), x); }

double evaluate_gradient(const Expr& e, std::span<const double> x, Eigen::Ref<Eigen::VectorXd> grad) {
  Eigen::VectorXd g;
  const double v = grad_node(e.node(), x, g);
  grad = g;
  return v;
}

std::string unparse(const Expr& e, const std::vector<std::string>& names) {
  std::string out;
  unparse_node(e.node(), names, out);
  return out;
}

std::set<int> variables(const Expr& e) {
  std::set<int> out;
  collect(e.node(), out);
  return out;
}

bool is_constant(const Expr& e) { return variables(e).empty(); }

double Affine::operator()(std::span<const double> x) const {
  double v = constant;
  for (const auto& [k, c] : coeffs) v += c * x[static_cast<std::size_t>(k)];
  return v;
}

std::optional<Affine> as_affine(const Expr& e) {
  const Node& n = e.node();
  switch (n.op) {
    case Op::Const: {
      Affine a;
      a.constant = n.value;
      return a;
    }
    case Op::Var: {
      Affine a;
      a.coeffs[n.var] = 1.0;
      return a;
    }
    case Op::Neg: {
      auto a = as_affine(wrap(n.args[0]));
      if (!a) return std::nullopt;
      Affine out;
      add_scaled(out, *a, -1.0);
      return out;
    }
    case Op::Add:
    case Op::Sub: {
      auto a = as_affine(wrap(n.args[0]));
      auto b = as_affine(wrap(n.args[1]));
      if (!a || !b) return std::nullopt;
      add_scaled(*a, *b, n.op == Op::Add ? 1.0 : -1.0);
      return a;
    }
    case Op::Mul: {
      auto a = as_affine(wrap(n.args[0]));
      auto b = as_affine(wrap(n.args[1]));
      if (!a || !b) return std::nullopt;
      if (a->coeffs.empty()) {
        Affine out;
        add_scaled(out, *b, a->constant);
        return out;
      }
      if (b->coeffs.empty()) {
        Affine out;
        add_scaled(out, *a, b->constant);
        return out;
      }
      return std::nullopt;
    }
    case Op::Div: {
      auto a = as_affine(wrap(n.args[0]));
      auto b = as_affine(wrap(n.args[1]));
      if (!a || !b || !b->coeffs.empty() || b->constant == 0.0) return std::nullopt;
      Affine out;
      add_scaled(out, *a, 1.0 / b->constant);
      return out;
    }
    default: break;
  }
  if (is_constant(e)) {
    Affine a;
    a.constant = evaluate(e, {});
    return a;
  }
  return std::nullopt;
}

Split split_linear(const Expr& e) {
  std::vector<std::pair<double, NodePtr>> terms;
  flatten_sum(e.ptr(), 1.0, terms);
  Split out;
  std::optional<Expr> rest;
  for (const auto& [sign, node] : terms) {
    const Expr term = wrap(node);
    if (auto a = as_affine(term)) {
      add_scaled(out.linear, *a, sign);
      continue;
    }
    if (!rest) {
      rest = sign > 0 ? term : -term;
    } else {
      rest = sign > 0 ? *rest + term : *rest - term;
    }
  }
  out.has_nonlinear = rest.has_value();
  out.nonlinear = rest ? *rest : Expr(0.0);
  return out;
}

Expr remap_variables(const Expr& e, const std::vector<int>& map) { return Expr(remap(e.ptr(), map)); }

}  // namespace missoc::expr
