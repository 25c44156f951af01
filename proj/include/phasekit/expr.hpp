#pragma once

#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "mjet.hpp"

namespace phasekit {

using Params = std::map<std::string, double>;

enum class Op { Var, Param, Const, Add, Mul, Neg, Div, Pow, Exp, Log, Sqrt, Sin, Cos, Bump };

class Expr;

struct Node {
  Op op;
  double value = 0.0;  // Const
  int index = 0;       // Var, zero based
  std::string name;    // Param
  std::vector<Expr> args;
};

class Expr {
 public:
  Expr() : Expr(0.0) {}
  Expr(double v);  // constant
  explicit Expr(std::shared_ptr<const Node> n) : n_(std::move(n)) {}

  const Node& node() const { return *n_; }
  Op op() const { return n_->op; }
  const Expr& arg(int i) const { return n_->args[i]; }
  size_t arity() const { return n_->args.size(); }
  bool same(const Expr& o) const { return n_ == o.n_; }

 private:
  std::shared_ptr<const Node> n_;
};

namespace detail {
inline Expr make(Op op, std::vector<Expr> args) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->args = std::move(args);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}
inline Expr make_const(double v) {
  auto n = std::make_shared<Node>();
  n->op = Op::Const;
  n->value = v;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}
}  // namespace detail

// negative constants are stored as a negation so that printing round-trips
inline Expr::Expr(double v)
    : n_(std::signbit(v) && v != 0.0 ? detail::make(Op::Neg, {detail::make_const(-v)}).n_
                                     : detail::make_const(v).n_) {}

inline Expr var(int index) {
  auto n = std::make_shared<Node>();
  n->op = Op::Var;
  n->index = index;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}
inline Expr param(const std::string& name) {
  auto n = std::make_shared<Node>();
  n->op = Op::Param;
  n->name = name;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}
inline Expr constant(double v) { return Expr(v); }

inline Expr operator+(const Expr& a, const Expr& b) { return detail::make(Op::Add, {a, b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return detail::make(Op::Mul, {a, b}); }
inline Expr operator-(const Expr& a) { return detail::make(Op::Neg, {a}); }
inline Expr operator-(const Expr& a, const Expr& b) { return a + (-b); }
inline Expr operator/(const Expr& a, const Expr& b) { return detail::make(Op::Div, {a, b}); }
inline Expr operator+(const Expr& a, double b) { return a + Expr(b); }
inline Expr operator+(double a, const Expr& b) { return Expr(a) + b; }
inline Expr operator-(const Expr& a, double b) { return a - Expr(b); }
inline Expr operator-(double a, const Expr& b) { return Expr(a) - b; }
inline Expr operator*(const Expr& a, double b) { return a * Expr(b); }
inline Expr operator*(double a, const Expr& b) { return Expr(a) * b; }
inline Expr operator/(const Expr& a, double b) { return a / Expr(b); }
inline Expr operator/(double a, const Expr& b) { return Expr(a) / b; }

bool depends_on_variables(const Expr& e);

inline Expr pow(const Expr& base, const Expr& exponent) {
  if (depends_on_variables(exponent))
    throw InvalidArgument("power exponent must not depend on variables");
  return detail::make(Op::Pow, {base, exponent});
}
inline Expr pow(const Expr& base, double p) { return pow(base, Expr(p)); }
inline Expr exp(const Expr& a) { return detail::make(Op::Exp, {a}); }
inline Expr log(const Expr& a) { return detail::make(Op::Log, {a}); }
inline Expr sqrt(const Expr& a) { return detail::make(Op::Sqrt, {a}); }
inline Expr sin(const Expr& a) { return detail::make(Op::Sin, {a}); }
inline Expr cos(const Expr& a) { return detail::make(Op::Cos, {a}); }
inline Expr bump(const Expr& a) { return detail::make(Op::Bump, {a}); }

// structural equality
inline bool equal(const Expr& a, const Expr& b) {
  if (a.same(b)) return true;
  const Node &x = a.node(), &y = b.node();
  if (x.op != y.op || x.args.size() != y.args.size()) return false;
  switch (x.op) {
    case Op::Const:
      return x.value == y.value || (std::isnan(x.value) && std::isnan(y.value));
    case Op::Var:
      return x.index == y.index;
    case Op::Param:
      return x.name == y.name;
    default:
      break;
  }
  for (size_t i = 0; i < x.args.size(); ++i)
    if (!equal(x.args[i], y.args[i])) return false;
  return true;
}

inline bool depends_on_variables(const Expr& e) {
  if (e.op() == Op::Var) return true;
  for (const auto& a : e.node().args)
    if (depends_on_variables(a)) return true;
  return false;
}

inline void collect_params(const Expr& e, std::set<std::string>& out) {
  if (e.op() == Op::Param) out.insert(e.node().name);
  for (const auto& a : e.node().args) collect_params(a, out);
}
inline std::set<std::string> free_params(const Expr& e) {
  std::set<std::string> s;
  collect_params(e, s);
  return s;
}

inline int max_variable(const Expr& e) {
  int m = e.op() == Op::Var ? e.node().index : -1;
  for (const auto& a : e.node().args) m = std::max(m, max_variable(a));
  return m;
}

namespace detail {
template <class F>
Expr rebuild(const Expr& e, F&& leaf) {
  if (e.arity() == 0) return leaf(e);
  std::vector<Expr> args;
  bool changed = false;
  for (const auto& a : e.node().args) {
    args.push_back(rebuild(a, leaf));
    changed = changed || !args.back().same(a);
  }
  if (!changed) return e;
  auto n = std::make_shared<Node>(e.node());
  n->args = std::move(args);
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}
}  // namespace detail

inline Expr substitute(const Expr& e, int index, const Expr& replacement) {
  return detail::rebuild(e, [&](const Expr& l) {
    return (l.op() == Op::Var && l.node().index == index) ? replacement : l;
  });
}

// simultaneous substitution of several variables
inline Expr substitute(const Expr& e, const std::map<int, Expr>& repl) {
  return detail::rebuild(e, [&](const Expr& l) {
    if (l.op() == Op::Var) {
      auto it = repl.find(l.node().index);
      if (it != repl.end()) return it->second;
    }
    return l;
  });
}

inline Expr substitute_param(const Expr& e, const std::string& name, const Expr& replacement) {
  return detail::rebuild(e, [&](const Expr& l) {
    return (l.op() == Op::Param && l.node().name == name) ? replacement : l;
  });
}

inline Expr bind(const Expr& e, const Params& params) {
  return detail::rebuild(e, [&](const Expr& l) {
    if (l.op() == Op::Param) {
      auto it = params.find(l.node().name);
      if (it != params.end()) return Expr(it->second);
    }
    return l;
  });
}

// renumber variables: index i becomes map[i]
inline Expr remap_variables(const Expr& e, const std::vector<int>& map) {
  return detail::rebuild(e, [&](const Expr& l) {
    if (l.op() == Op::Var) return var(map.at(l.node().index));
    return l;
  });
}

inline std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s == "inf" || s == "nan" || s == "-nan") throw InvalidArgument("non-finite constant");
  return s;
}

// Fully parenthesized rendering in the parser's grammar.
inline std::string to_string(const Expr& e) {
  const Node& n = e.node();
  auto un = [&](const char* f) { return std::string(f) + "(" + to_string(n.args[0]) + ")"; };
  switch (n.op) {
    case Op::Const:
      return format_number(n.value);
    case Op::Var:
      return "x" + std::to_string(n.index + 1);
    case Op::Param:
      return n.name;
    case Op::Add:
      return "(" + to_string(n.args[0]) + " + " + to_string(n.args[1]) + ")";
    case Op::Mul:
      return "(" + to_string(n.args[0]) + " * " + to_string(n.args[1]) + ")";
    case Op::Div:
      return "(" + to_string(n.args[0]) + " / " + to_string(n.args[1]) + ")";
    case Op::Neg:
      return "(-" + to_string(n.args[0]) + ")";
    case Op::Pow:
      return "(" + to_string(n.args[0]) + " ^ " + to_string(n.args[1]) + ")";
    case Op::Exp:
      return un("exp");
    case Op::Log:
      return un("log");
    case Op::Sqrt:
      return un("sqrt");
    case Op::Sin:
      return un("sin");
    case Op::Cos:
      return un("cos");
    case Op::Bump:
      return un("bump");
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Generic evaluation. A context supplies leaves; arithmetic comes from overloads.

namespace detail {

inline cplx lookup(const Params& p, const std::string& name) {
  auto it = p.find(name);
  if (it == p.end()) throw UnboundParameter(name);
  return it->second;
}

inline cplx eval_scalar(const Expr& e, std::span<const double> x, const Params& p);

inline double real_exponent(const Expr& ex, const Params& p) {
  cplx v = eval_scalar(ex, {}, p);
  if (v.imag() != 0.0) throw DomainViolation("complex exponent");
  return v.real();
}

template <class T, class Ctx>
T eval_generic(const Expr& e, const Ctx& ctx) {
  const Node& n = e.node();
  switch (n.op) {
    case Op::Const:
      return ctx.constant(n.value);
    case Op::Param:
      return ctx.constant(lookup(ctx.params(), n.name));
    case Op::Var:
      return ctx.variable(n.index);
    case Op::Add:
      return eval_generic<T>(n.args[0], ctx) + eval_generic<T>(n.args[1], ctx);
    case Op::Mul:
      return eval_generic<T>(n.args[0], ctx) * eval_generic<T>(n.args[1], ctx);
    case Op::Div: {
      T den = eval_generic<T>(n.args[1], ctx);
      return ctx.div(eval_generic<T>(n.args[0], ctx), den);
    }
    case Op::Neg:
      return -eval_generic<T>(n.args[0], ctx);
    case Op::Pow:
      return ctx.pow(eval_generic<T>(n.args[0], ctx), real_exponent(n.args[1], ctx.params()));
    case Op::Exp:
      return ctx.exp(eval_generic<T>(n.args[0], ctx));
    case Op::Log:
      return ctx.log(eval_generic<T>(n.args[0], ctx));
    case Op::Sqrt:
      return ctx.sqrt(eval_generic<T>(n.args[0], ctx));
    case Op::Sin:
      return ctx.sin(eval_generic<T>(n.args[0], ctx));
    case Op::Cos:
      return ctx.cos(eval_generic<T>(n.args[0], ctx));
    case Op::Bump:
      return ctx.bump(eval_generic<T>(n.args[0], ctx));
  }
  throw InvalidArgument("bad node");
}

struct ScalarCtx {
  std::span<const double> x;
  const Params* p;
  const Params& params() const { return *p; }
  cplx constant(cplx v) const { return v; }
  cplx variable(int i) const {
    if (i >= static_cast<int>(x.size()))
      throw InvalidArgument("variable x" + std::to_string(i + 1) + " has no value");
    return x[i];
  }
  static cplx div(cplx a, cplx b) {
    if (b == cplx(0.0)) throw DomainViolation("division by zero");
    return a / b;
  }
  static cplx pow(cplx a, double q) { return scalar::pow(a, q); }
  static cplx exp(cplx a) { return std::exp(a); }
  static cplx log(cplx a) { return scalar::log(a); }
  static cplx sqrt(cplx a) { return scalar::sqrt(a); }
  static cplx sin(cplx a) { return std::sin(a); }
  static cplx cos(cplx a) { return std::cos(a); }
  static cplx bump(cplx a) { return scalar::bump(a); }
};

inline cplx eval_scalar(const Expr& e, std::span<const double> x, const Params& p) {
  return eval_generic<cplx>(e, ScalarCtx{x, &p});
}

struct JetCtx {
  int var;
  std::span<const double> x;
  const Params* p;
  int order;
  const Params& params() const { return *p; }
  Jet constant(cplx v) const { return Jet::constant(order, v, x[var]); }
  Jet variable(int i) const {
    if (i >= static_cast<int>(x.size()))
      throw InvalidArgument("variable x" + std::to_string(i + 1) + " has no value");
    return i == var ? Jet::variable(order, x[i]) : Jet::constant(order, x[i], x[var]);
  }
  static Jet div(const Jet& a, const Jet& b) { return a / b; }
  static Jet pow(const Jet& a, double q) { return phasekit::pow(a, q); }
  static Jet exp(const Jet& a) { return phasekit::exp(a); }
  static Jet log(const Jet& a) { return phasekit::log(a); }
  static Jet sqrt(const Jet& a) { return phasekit::sqrt(a); }
  static Jet sin(const Jet& a) { return phasekit::sin(a); }
  static Jet cos(const Jet& a) { return phasekit::cos(a); }
  static Jet bump(const Jet& a) { return phasekit::bump(a); }
};

struct MJetCtx {
  std::span<const double> x;
  std::span<const int> vars;
  const Params* p;
  int order;
  std::vector<double> center;
  const Params& params() const { return *p; }
  MJet constant(cplx v) const {
    return MJet::constant(static_cast<int>(vars.size()), order, v, center);
  }
  MJet variable(int i) const {
    if (i >= static_cast<int>(x.size()))
      throw InvalidArgument("variable x" + std::to_string(i + 1) + " has no value");
    for (size_t s = 0; s < vars.size(); ++s)
      if (vars[s] == i)
        return MJet::variable(static_cast<int>(vars.size()), order, static_cast<int>(s), x[i],
                              center);
    return constant(x[i]);
  }
  static MJet div(const MJet& a, const MJet& b) {
    if (b[0] == cplx(0.0)) throw DomainViolation("division by zero");
    return a / b;
  }
  static MJet pow(const MJet& a, double q) { return phasekit::pow(a, q); }
  static MJet exp(const MJet& a) { return phasekit::exp(a); }
  static MJet log(const MJet& a) { return phasekit::log(a); }
  static MJet sqrt(const MJet& a) { return phasekit::sqrt(a); }
  static MJet sin(const MJet& a) { return phasekit::sin(a); }
  static MJet cos(const MJet& a) { return phasekit::cos(a); }
  static MJet bump(const MJet& a) { return phasekit::bump(a); }
};

}  // namespace detail

inline cplx eval(const Expr& e, std::span<const double> point, const Params& params = {}) {
  return detail::eval_scalar(e, point, params);
}
inline cplx eval(const Expr& e, std::initializer_list<double> point, const Params& params = {}) {
  std::vector<double> x(point);
  return eval(e, std::span<const double>(x), params);
}

inline Jet jet_of(const Expr& e, int var, std::span<const double> point, const Params& params,
                  int order) {
  if (order < 0) throw InvalidArgument("negative jet order");
  return detail::eval_generic<Jet>(e, detail::JetCtx{var, point, &params, order});
}

// jet in the listed variables (slot s is x_{vars[s]})
inline MJet mjet_of(const Expr& e, std::span<const double> point, const Params& params, int order,
                    std::span<const int> vars) {
  if (order < 0) throw InvalidArgument("negative jet order");
  std::vector<double> center;
  for (int v : vars) center.push_back(point[v]);
  return detail::eval_generic<MJet>(e, detail::MJetCtx{point, vars, &params, order, center});
}

// jet in all variables 0..point.size()-1
inline MJet mjet_of(const Expr& e, std::span<const double> point, const Params& params, int order) {
  std::vector<int> vars(point.size());
  for (size_t i = 0; i < vars.size(); ++i) vars[i] = static_cast<int>(i);
  return mjet_of(e, point, params, order, vars);
}

// ---------------------------------------------------------------------------
// Flat real-valued program for the hot loops of the quadrature oracle.

class RealProgram {
 public:
  RealProgram() = default;
  RealProgram(const Expr& e, const Params& params) { emit(bind_all(e, params)); }

  double operator()(const double* x) const {
    double st[kStack];
    int sp = 0;
    for (const auto& in : code_) {
      switch (in.op) {
        case Op::Const:
          st[sp++] = in.value;
          break;
        case Op::Var:
          st[sp++] = x[in.index];
          break;
        case Op::Add:
          --sp;
          st[sp - 1] += st[sp];
          break;
        case Op::Mul:
          --sp;
          st[sp - 1] *= st[sp];
          break;
        case Op::Div:
          --sp;
          if (st[sp] == 0.0) throw DomainViolation("division by zero");
          st[sp - 1] /= st[sp];
          break;
        case Op::Neg:
          st[sp - 1] = -st[sp - 1];
          break;
        case Op::Pow:
          st[sp - 1] = real_pow(st[sp - 1], in.value);
          break;
        case Op::Exp:
          st[sp - 1] = std::exp(st[sp - 1]);
          break;
        case Op::Log:
          if (!(st[sp - 1] > 0)) throw DomainViolation("log needs a positive argument");
          st[sp - 1] = std::log(st[sp - 1]);
          break;
        case Op::Sqrt:
          if (st[sp - 1] < 0) throw DomainViolation("sqrt needs a positive argument");
          st[sp - 1] = std::sqrt(st[sp - 1]);
          break;
        case Op::Sin:
          st[sp - 1] = std::sin(st[sp - 1]);
          break;
        case Op::Cos:
          st[sp - 1] = std::cos(st[sp - 1]);
          break;
        case Op::Bump: {
          double u = st[sp - 1];
          st[sp - 1] = std::abs(u) >= 1.0 ? 0.0 : std::exp(-1.0 / (1.0 - u * u));
          break;
        }
        case Op::Param:
          break;
      }
    }
    return st[0];
  }
  double operator()(std::span<const double> x) const { return (*this)(x.data()); }

  // value and directional derivative d/dx_var via dual numbers
  std::pair<double, double> with_derivative(const double* x, int var) const {
    double v[kStack], d[kStack];
    int sp = 0;
    for (const auto& in : code_) {
      switch (in.op) {
        case Op::Const:
          v[sp] = in.value;
          d[sp++] = 0.0;
          break;
        case Op::Var:
          v[sp] = x[in.index];
          d[sp++] = in.index == var ? 1.0 : 0.0;
          break;
        case Op::Add:
          --sp;
          v[sp - 1] += v[sp];
          d[sp - 1] += d[sp];
          break;
        case Op::Mul:
          --sp;
          d[sp - 1] = d[sp - 1] * v[sp] + v[sp - 1] * d[sp];
          v[sp - 1] *= v[sp];
          break;
        case Op::Div: {
          --sp;
          if (v[sp] == 0.0) throw DomainViolation("division by zero");
          double q = v[sp - 1] / v[sp];
          d[sp - 1] = (d[sp - 1] - q * d[sp]) / v[sp];
          v[sp - 1] = q;
          break;
        }
        case Op::Neg:
          v[sp - 1] = -v[sp - 1];
          d[sp - 1] = -d[sp - 1];
          break;
        case Op::Pow: {
          double a = v[sp - 1], p = in.value;
          v[sp - 1] = real_pow(a, p);
          d[sp - 1] *= (p == 0.0) ? 0.0 : p * real_pow(a, p - 1.0);
          break;
        }
        case Op::Exp:
          v[sp - 1] = std::exp(v[sp - 1]);
          d[sp - 1] *= v[sp - 1];
          break;
        case Op::Log:
          if (!(v[sp - 1] > 0)) throw DomainViolation("log needs a positive argument");
          d[sp - 1] /= v[sp - 1];
          v[sp - 1] = std::log(v[sp - 1]);
          break;
        case Op::Sqrt:
          if (!(v[sp - 1] > 0)) throw DomainViolation("sqrt needs a positive argument");
          v[sp - 1] = std::sqrt(v[sp - 1]);
          d[sp - 1] /= 2.0 * v[sp - 1];
          break;
        case Op::Sin:
          d[sp - 1] *= std::cos(v[sp - 1]);
          v[sp - 1] = std::sin(v[sp - 1]);
          break;
        case Op::Cos:
          d[sp - 1] *= -std::sin(v[sp - 1]);
          v[sp - 1] = std::cos(v[sp - 1]);
          break;
        case Op::Bump: {
          double u = v[sp - 1];
          if (std::abs(u) >= 1.0) {
            v[sp - 1] = 0.0;
            d[sp - 1] = 0.0;
          } else {
            double w = 1.0 - u * u;
            double b = std::exp(-1.0 / w);
            v[sp - 1] = b;
            d[sp - 1] *= b * (-2.0 * u / (w * w));
          }
          break;
        }
        case Op::Param:
          break;
      }
    }
    return {v[0], d[0]};
  }

  bool empty() const { return code_.empty(); }

 private:
  static constexpr int kStack = 64;
  struct Instr {
    Op op;
    double value;
    int index;
  };

  static double real_pow(double a, double p) {
    if (detail::is_small_integer(p)) {
      int n = static_cast<int>(p);
      if (n < 0 && a == 0.0) throw DomainViolation("negative power of zero");
      double r = 1.0, b = n < 0 ? 1.0 / a : a;
      for (int k = std::abs(n); k > 0; k >>= 1) {
        if (k & 1) r *= b;
        b *= b;
      }
      return r;
    }
    if (a == 0.0 && p > 0) return 0.0;
    if (!(a > 0)) throw DomainViolation("power with non-integer exponent needs a positive base");
    return std::pow(a, p);
  }

  static Expr bind_all(const Expr& e, const Params& p) {
    for (const auto& name : free_params(e))
      if (!p.count(name)) throw UnboundParameter(name);
    return bind(e, p);
  }

  int emit(const Expr& e) {
    const Node& n = e.node();
    int depth = 0;
    switch (n.op) {
      case Op::Const:
        code_.push_back({Op::Const, n.value, 0});
        return 1;
      case Op::Var:
        code_.push_back({Op::Var, 0.0, n.index});
        return 1;
      case Op::Pow: {
        depth = emit(n.args[0]);
        double p = detail::real_exponent(n.args[1], {});
        code_.push_back({Op::Pow, p, 0});
        return depth;
      }
      case Op::Add:
      case Op::Mul:
      case Op::Div: {
        int a = emit(n.args[0]);
        int b = emit(n.args[1]);
        depth = std::max(a, b + 1);
        break;
      }
      default:
        depth = emit(n.args[0]);
        break;
    }
    if (depth >= kStack) throw InvalidArgument("expression too deep for the compiled evaluator");
    code_.push_back({n.op, 0.0, 0});
    return depth;
  }

  std::vector<Instr> code_;
};

}  // namespace phasekit
