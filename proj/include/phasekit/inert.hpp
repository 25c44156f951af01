#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <limits>
#include <memory>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "expr.hpp"
#include "field.hpp"
#include "mjet.hpp"
#include "oracle.hpp"
#include "parallel.hpp"

namespace phasekit {

// A parameter is drawn from [lo, hi] (log-uniformly when log is set) or from a list.
struct ParamRange {
  double lo = 0.0, hi = 0.0;
  bool log = false;
  std::vector<double> values;

  static ParamRange interval(double lo, double hi) { return {lo, hi, false, {}}; }
  static ParamRange log_interval(double lo, double hi) { return {lo, hi, true, {}}; }
  static ParamRange list(std::vector<double> v) { return {0.0, 0.0, false, std::move(v)}; }

  void validate(const std::string& name) const {
    if (!values.empty()) return;
    if (!(hi >= lo)) throw InvalidArgument("empty range for parameter '" + name + "'");
    if (log && !(lo > 0)) throw InvalidArgument("log range for '" + name + "' must be positive");
  }
  // h in [0, 1)
  double sample(double h) const {
    if (!values.empty()) {
      size_t i = std::min(values.size() - 1, static_cast<size_t>(h * values.size()));
      return values[i];
    }
    if (log) return std::exp(std::log(lo) + h * (std::log(hi) - std::log(lo)));
    return lo + h * (hi - lo);
  }
};

// weight * e^{i phase} over d variables. Each variable k has a list of support
// scales; the support is [max, 2 min] of that list. The claimed inertness scale
// is max(1, inert_scale...).
struct FamilySpec {
  int dim = 1;
  Expr weight{1.0};
  std::optional<Expr> phase;
  std::map<std::string, ParamRange> ranges;
  Params fixed;
  std::vector<std::vector<Expr>> scales;
  std::vector<Expr> inert_scale;

  std::set<std::string> param_names() const {
    std::set<std::string> s;
    for (const auto& [k, v] : ranges) s.insert(k);
    for (const auto& [k, v] : fixed) s.insert(k);
    return s;
  }

  void validate() const {
    if (dim < 1) throw InvalidArgument("family dimension must be positive");
    if (max_variable(weight) >= dim || (phase && max_variable(*phase) >= dim))
      throw InvalidArgument("family expression uses a variable beyond its dimension");
    if (static_cast<int>(scales.size()) != dim) throw InvalidArgument("need support scales for every variable");
    for (const auto& s : scales)
      if (s.empty()) throw InvalidArgument("need support scales for every variable");
    for (const auto& [k, r] : ranges) {
      r.validate(k);
      if (fixed.count(k)) throw NameCollision("parameter '" + k + "' is both fixed and ranged");
    }
  }
};

struct FamilyInstance {
  FieldPtr weight;
  std::vector<Interval> box;  // empty when the declared supports do not overlap
  double X = 1.0;
};

class WeightFamily {
 public:
  virtual ~WeightFamily() = default;
  virtual int dim() const = 0;
  virtual const std::map<std::string, ParamRange>& ranges() const = 0;
  virtual FamilyInstance instance(const Params& T) const = 0;
};

class ExprFamily : public WeightFamily {
 public:
  explicit ExprFamily(FamilySpec spec) : spec_(std::move(spec)) { spec_.validate(); }
  int dim() const override { return spec_.dim; }
  const std::map<std::string, ParamRange>& ranges() const override { return spec_.ranges; }
  const FamilySpec& spec() const { return spec_; }

  FamilyInstance instance(const Params& T) const override {
    Params p = spec_.fixed;
    for (const auto& [k, v] : T) p[k] = v;
    FamilyInstance out;
    bool empty = false;
    for (int k = 0; k < spec_.dim; ++k) {
      double mx = 0.0, mn = std::numeric_limits<double>::infinity();
      for (const auto& e : spec_.scales[k]) {
        double v = eval(e, {}, p).real();
        if (!(v > 0)) throw DomainViolation("support scale must be positive");
        mx = std::max(mx, v);
        mn = std::min(mn, v);
      }
      if (!(2 * mn > mx)) empty = true;
      out.box.push_back({mx, 2 * mn});
    }
    if (empty) out.box.clear();
    out.X = 1.0;
    for (const auto& e : spec_.inert_scale) out.X = std::max(out.X, eval(e, {}, p).real());
    if (spec_.phase)
      out.weight = std::make_shared<PhasedExprField>(spec_.weight, *spec_.phase, p, spec_.dim);
    else
      out.weight = make_field(spec_.weight, p, spec_.dim);
    return out;
  }

 private:
  FamilySpec spec_;
};

// family produced by code, e.g. the output weights of a stationary-phase step
class OutputWeightFamily : public WeightFamily {
 public:
  using Builder = std::function<FamilyInstance(const Params&)>;
  OutputWeightFamily(int dim, std::map<std::string, ParamRange> ranges, Builder build)
      : dim_(dim), ranges_(std::move(ranges)), build_(std::move(build)) {
    for (const auto& [k, r] : ranges_) r.validate(k);
  }
  int dim() const override { return dim_; }
  const std::map<std::string, ParamRange>& ranges() const override { return ranges_; }
  FamilyInstance instance(const Params& T) const override { return build_(T); }

 private:
  int dim_;
  std::map<std::string, ParamRange> ranges_;
  Builder build_;
};

namespace detail {

inline double radical_inverse(unsigned long long i, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

inline unsigned nth_prime(size_t k) {
  static const unsigned p[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53};
  if (k >= std::size(p)) throw InvalidArgument("too many sampled parameters");
  return p[k];
}

// sup over the relative grid of |u^k (d/du)^k bump(2u - 3)|
inline std::vector<double> reference_bounds(int max_order, int n) {
  std::vector<double> r(max_order + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    double u = 1.0 + (i + 0.5) / n;
    Jet b = bump(Jet::variable(max_order, u) * 2.0 - cplx(3.0));
    double up = 1.0;
    for (int k = 0; k <= max_order; ++k) {
      r[k] = std::max(r[k], up * std::abs(deriv(b, k)));
      up *= u;
    }
  }
  return r;
}

inline std::string format_params(const Params& p) {
  std::string s;
  for (const auto& [k, v] : p) {
    if (!s.empty()) s += ';';
    s += k + "=" + format_number(v);
  }
  return s;
}

inline std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) {
    if (!s.empty()) s += ' ';
    s += format_number(x);
  }
  return s;
}

inline std::string join(const MultiIndex& v) {
  std::string s;
  for (int x : v) {
    if (!s.empty()) s += ' ';
    s += std::to_string(x);
  }
  return s;
}

}  // namespace detail

// Parameter tuples from a Halton sequence; seed skips that many points.
inline std::vector<Params> sample_parameters(const std::map<std::string, ParamRange>& ranges, int n,
                                             unsigned long long seed = 0) {
  std::vector<Params> out;
  if (ranges.empty()) return {Params{}};
  for (int i = 0; i < n; ++i) {
    Params p;
    size_t k = 0;
    for (const auto& [name, r] : ranges) p[name] = r.sample(detail::radical_inverse(seed + i + 1, detail::nth_prime(k++)));
    out.push_back(std::move(p));
  }
  return out;
}

struct InertRow {
  MultiIndex j;
  double C_hat = 0.0;       // max of X^{-|j|} |x^j w^{(j)}|
  double reference = 1.0;   // the same quantity for the unit bump on the same grid
  double normalized = 0.0;  // C_hat / reference
  double bound = 0.0;
  bool pass = true;
  Params worst_T;
  std::vector<double> worst_x;
};

struct InertReport {
  int dim = 1;
  int max_order = 0;
  size_t param_samples = 0;
  size_t empty_samples = 0;  // tuples whose declared supports do not overlap
  size_t point_evaluations = 0;
  double ceiling = 0.0;
  bool pass = true;
  std::vector<InertRow> rows;

  const InertRow& row(const MultiIndex& j) const {
    for (const auto& r : rows)
      if (r.j == j) return r;
    throw InvalidArgument("multi-index not in report");
  }
  double C(const MultiIndex& j) const { return row(j).C_hat; }

  std::string to_csv() const {
    std::ostringstream o;
    o << "j,C_hat,normalized,bound,worst_T,worst_x,verdict\n";
    for (const auto& r : rows)
      o << detail::join(r.j) << ',' << format_number(r.C_hat) << ',' << format_number(r.normalized) << ','
        << format_number(r.bound) << ',' << detail::format_params(r.worst_T) << ',' << detail::join(r.worst_x)
        << ',' << (r.pass ? "pass" : "fail") << '\n';
    return o.str();
  }

  std::string to_text() const {
    std::ostringstream o;
    o << "inertness check: " << (pass ? "PASS" : "FAIL") << "\n"
      << "  dimension " << dim << ", orders <= " << max_order << ", " << param_samples << " parameter samples ("
      << empty_samples << " with empty support), " << point_evaluations << " point evaluations\n";
    for (const auto& r : rows) {
      o << "  j=(" << detail::join(r.j) << ")  C=" << format_number(r.C_hat)
        << "  normalized=" << format_number(r.normalized) << "  bound=" << format_number(r.bound) << "  "
        << (r.pass ? "pass" : "FAIL");
      if (!r.worst_x.empty()) o << "  at x=(" << detail::join(r.worst_x) << ") T{" << detail::format_params(r.worst_T) << "}";
      o << '\n';
    }
    return o.str();
  }
};

namespace detail {

struct SampleMax {
  std::vector<double> C;
  std::vector<std::vector<double>> where;
  size_t evaluations = 0;
  bool empty = false;
};

inline void check_support(const Field& w, const std::vector<Interval>& box, int n) {
  int d = static_cast<int>(box.size());
  int m = 2 * n;
  std::vector<int> idx(d, 0);
  std::vector<double> x(d);
  while (true) {
    bool inside = true;
    for (int k = 0; k < d; ++k) {
      double lo = box[k].lo / 2, hi = 2 * box[k].hi;
      x[k] = lo + (hi - lo) * (idx[k] + 0.5) / m;
      if (x[k] < box[k].lo || x[k] > box[k].hi) inside = false;
    }
    if (!inside && std::abs(w.value(x)) > 1e-12) {
      std::ostringstream o;
      o << "weight is " << std::abs(w.value(x)) << " at (" << join(x) << ") outside the declared support";
      throw SupportViolation(o.str());
    }
    int k = 0;
    while (k < d && ++idx[k] == m) idx[k++] = 0;
    if (k == d) break;
  }
}

}  // namespace detail

// Sampled estimate of the inertness constants. ceiling > 0 bounds the
// normalized constants directly; otherwise each must stay below 10 max(1, N(0)).
inline InertReport check_inert(const WeightFamily& family, int max_order, int n_param_samples,
                               int n_point_samples, double ceiling = 0.0, unsigned long long seed = 0) {
  if (max_order < 0 || max_order > 8) throw InvalidArgument("max_order must be in [0, 8]");
  if (n_param_samples < 1 || n_point_samples < 1) throw InvalidArgument("sample counts must be positive");
  const int d = family.dim();
  auto params = sample_parameters(family.ranges(), n_param_samples, seed);
  auto js = multi_indices(d, max_order);
  const size_t nj = js.size();
  std::vector<int> vars(d);
  for (int k = 0; k < d; ++k) vars[k] = k;
  long long npts = 1;
  for (int k = 0; k < d; ++k) npts *= n_point_samples;

  std::vector<detail::SampleMax> per(params.size());
  parallel_for(params.size(), [&](size_t s) {
    auto& out = per[s];
    out.C.assign(nj, 0.0);
    out.where.assign(nj, {});
    FamilyInstance inst = family.instance(params[s]);
    if (inst.box.empty()) {
      out.empty = true;
      return;
    }
    if (static_cast<int>(inst.box.size()) != d || inst.weight->dim() != d)
      throw InvalidArgument("family instance does not match the family dimension");
    if (!(inst.X >= 1.0)) throw InvalidArgument("claimed inertness scale below 1");
    detail::check_support(*inst.weight, inst.box, std::max(2, std::min(n_point_samples, 8)));
    std::vector<double> x(d);
    for (long long p = 0; p < npts; ++p) {
      long long r = p;
      for (int k = 0; k < d; ++k) {
        int i = static_cast<int>(r % n_point_samples);
        r /= n_point_samples;
        x[k] = inst.box[k].lo + inst.box[k].width() * (i + 0.5) / n_point_samples;
      }
      MJet J = inst.weight->mjet(x, max_order, vars);
      ++out.evaluations;
      for (size_t q = 0; q < nj; ++q) {
        const auto& j = js[q];
        double v = std::abs(J.partial(j));
        for (int k = 0; k < d; ++k) v *= std::pow(x[k] / inst.X, j[k]);
        if (v > out.C[q]) {
          out.C[q] = v;
          out.where[q] = x;
        }
      }
    }
  });

  InertReport rep;
  rep.dim = d;
  rep.max_order = max_order;
  rep.param_samples = params.size();
  rep.ceiling = ceiling;
  auto ref1 = detail::reference_bounds(max_order, n_point_samples);
  rep.rows.resize(nj);
  for (size_t q = 0; q < nj; ++q) {
    rep.rows[q].j = js[q];
    double ref = 1.0;
    for (int k = 0; k < d; ++k) ref *= ref1[js[q][k]];
    rep.rows[q].reference = ref;
  }
  for (size_t s = 0; s < per.size(); ++s) {
    if (per[s].empty) {
      ++rep.empty_samples;
      continue;
    }
    rep.point_evaluations += per[s].evaluations;
    for (size_t q = 0; q < nj; ++q)
      if (per[s].C[q] > rep.rows[q].C_hat) {
        rep.rows[q].C_hat = per[s].C[q];
        rep.rows[q].worst_T = params[s];
        rep.rows[q].worst_x = per[s].where[q];
      }
  }
  for (auto& r : rep.rows) r.normalized = r.C_hat / r.reference;
  double bound = ceiling > 0 ? ceiling : 10.0 * std::max(1.0, rep.rows[0].normalized);
  for (auto& r : rep.rows) {
    r.bound = bound;
    r.pass = r.normalized <= bound;
    rep.pass = rep.pass && r.pass;
  }
  return rep;
}

inline InertReport check_inert(const FamilySpec& spec, int max_order, int n_param_samples, int n_point_samples,
                               double ceiling = 0.0, unsigned long long seed = 0) {
  return check_inert(ExprFamily(spec), max_order, n_param_samples, n_point_samples, ceiling, seed);
}

// pointwise product; parameter names must be disjoint
inline FamilySpec product_family(const FamilySpec& f, const FamilySpec& g) {
  f.validate();
  g.validate();
  if (f.dim != g.dim) throw InvalidArgument("product of families of different dimension");
  auto a = f.param_names(), b = g.param_names();
  for (const auto& n : a)
    if (b.count(n)) throw NameCollision("parameter '" + n + "' appears in both families");
  FamilySpec p;
  p.dim = f.dim;
  p.weight = f.weight * g.weight;
  if (f.phase && g.phase)
    p.phase = *f.phase + *g.phase;
  else if (f.phase || g.phase)
    p.phase = f.phase ? *f.phase : *g.phase;
  p.ranges = f.ranges;
  p.ranges.insert(g.ranges.begin(), g.ranges.end());
  p.fixed = f.fixed;
  p.fixed.insert(g.fixed.begin(), g.fixed.end());
  p.scales = f.scales;
  for (int k = 0; k < p.dim; ++k) p.scales[k].insert(p.scales[k].end(), g.scales[k].begin(), g.scales[k].end());
  p.inert_scale = f.inert_scale;
  p.inert_scale.insert(p.inert_scale.end(), g.inert_scale.begin(), g.inert_scale.end());
  return p;
}

// every parameter name gets the suffix
inline FamilySpec rename_params(const FamilySpec& f, const std::string& suffix) {
  auto ren = [&](Expr e) {
    for (const auto& n : f.param_names()) e = substitute_param(e, n, param(n + suffix));
    return e;
  };
  FamilySpec r = f;
  r.weight = ren(f.weight);
  if (f.phase) r.phase = ren(*f.phase);
  r.ranges.clear();
  for (const auto& [k, v] : f.ranges) r.ranges[k + suffix] = v;
  r.fixed.clear();
  for (const auto& [k, v] : f.fixed) r.fixed[k + suffix] = v;
  for (auto& list : r.scales)
    for (auto& e : list) e = ren(e);
  for (auto& e : r.inert_scale) e = ren(e);
  return r;
}

// replace variable `index` by an expression in the remaining variables
inline FamilySpec specialize(const FamilySpec& f, int index, const Expr& replacement) {
  f.validate();
  if (index < 0 || index >= f.dim) throw InvalidArgument("variable out of range");
  if (f.dim < 2) throw InvalidArgument("cannot specialize a one-dimensional family");
  (void)detail::rebuild(replacement, [&](const Expr& l) {
    if (l.op() == Op::Var && l.node().index == index)
      throw InvalidArgument("replacement depends on the eliminated variable");
    return l;
  });
  std::vector<int> map(f.dim);
  for (int k = 0; k < f.dim; ++k) map[k] = k < index ? k : k - 1;
  map[index] = 0;
  auto apply = [&](const Expr& e) { return remap_variables(substitute(e, index, replacement), map); };
  FamilySpec r = f;
  r.dim = f.dim - 1;
  r.weight = apply(f.weight);
  if (f.phase) r.phase = apply(*f.phase);
  r.scales.erase(r.scales.begin() + index);
  return r;
}

// prod bump(2 x_i / X_i - 3), X_i log-uniform in [lo, hi]; 1-inert
inline FamilySpec dilation_family(int d, double lo = 1.0, double hi = 1e6, const std::string& prefix = "X") {
  FamilySpec f;
  f.dim = d;
  f.scales.resize(d);
  Expr w(1.0);
  for (int i = 0; i < d; ++i) {
    std::string name = prefix + std::to_string(i + 1);
    f.ranges[name] = ParamRange::log_interval(lo, hi);
    Expr X = param(name);
    w = i == 0 ? bump(2.0 * var(i) / X - 3.0) : w * bump(2.0 * var(i) / X - 3.0);
    f.scales[i] = {X};
  }
  f.weight = w;
  return f;
}

// dilation family times e^{i sum lambda_i x_i}, lambda_i = m_i / X_i with
// m_i in [-m_max, m_max]; claimed scale 1 + max |lambda_i| X_i
inline FamilySpec oscillation_family(int d, double m_max = 50.0, double lo = 1.0, double hi = 1e6,
                                     const std::string& prefix = "X", const std::string& freq_prefix = "m") {
  FamilySpec f = dilation_family(d, lo, hi, prefix);
  Expr ph(0.0);
  for (int i = 0; i < d; ++i) {
    std::string m = freq_prefix + std::to_string(i + 1);
    f.ranges[m] = ParamRange::interval(-m_max, m_max);
    Expr term = param(m) / param(prefix + std::to_string(i + 1)) * var(i);
    ph = i == 0 ? term : ph + term;
    f.inert_scale.push_back(1.0 + sqrt(param(m) * param(m)));
  }
  f.phase = ph;
  return f;
}

// Fourier transform in one variable, scaled: F(t) = X1^{-1} \int w(x) e(-x t) dx
struct FourierReport {
  std::vector<double> t;
  std::vector<cplx> F;
  std::vector<double> F_error;
  // |t^k F^{(k)}(t)| per order k (rows) and grid point, with the bound M(k)
  std::vector<std::vector<double>> scaled_derivatives;
  std::vector<double> derivative_bounds;
  bool derivatives_ok = true;
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();
  int fit_points = 0;
  double A = 0.0;
  bool decay_ok = false;
  double peak_t = 0.0;
  double X = 1.0, X1 = 1.0, q = 1.0;
  double noise_floor = 0.0;

  // share of sum |F|^2 dt (trapezoid on the sorted grid) within |t - centre| <= halfwidth
  double mass_fraction(double centre, double halfwidth) const {
    std::vector<size_t> ord(t.size());
    for (size_t i = 0; i < ord.size(); ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](size_t a, size_t b) { return t[a] < t[b]; });
    double in = 0, all = 0;
    for (size_t k = 0; k + 1 < ord.size(); ++k) {
      size_t a = ord[k], b = ord[k + 1];
      double piece = 0.5 * (std::norm(F[a]) + std::norm(F[b])) * (t[b] - t[a]);
      all += piece;
      double mid = 0.5 * (t[a] + t[b]);
      if (std::abs(mid - centre) <= halfwidth) in += piece;
    }
    return all > 0 ? in / all : 0.0;
  }
};

inline FourierReport fourier_decay_check(const WeightFamily& family, const Params& T, int var,
                                         std::vector<double> other_point, const std::vector<double>& t_grid,
                                         double q = 0.0, double A = 5.0, int max_deriv = 3, double tol = 1e-10) {
  const int d = family.dim();
  if (var < 0 || var >= d) throw InvalidArgument("variable out of range");
  if (max_deriv < 0 || max_deriv > 8) throw InvalidArgument("derivative order must be in [0, 8]");
  if (t_grid.empty()) throw InvalidArgument("empty frequency grid");
  FamilyInstance inst = family.instance(T);
  if (inst.box.empty()) throw InvalidArgument("family instance has empty support");
  if (other_point.empty())
    for (const auto& iv : inst.box) other_point.push_back(0.5 * (iv.lo + iv.hi));
  if (static_cast<int>(other_point.size()) != d) throw InvalidArgument("need a value for every variable");
  FourierReport rep;
  rep.X = inst.X;
  rep.X1 = inst.box[var].lo;
  rep.A = A;
  if (q == 0.0)
    for (const auto& iv : inst.box) q = std::max(q, iv.lo);
  if (q < 1.0) throw InvalidArgument("q must be at least 1");
  rep.q = q;
  const double a = inst.box[var].lo, b = inst.box[var].hi, X1 = rep.X1;
  const double two_pi = 2.0 * std::numbers::pi;
  auto at = [&](double x) {
    std::vector<double> p = other_point;
    p[var] = x;
    return p;
  };
  const Field& w = *inst.weight;
  // frequency of the weight itself, Im(w'/w)
  auto own_freq = [&](double x) {
    Jet j = w.jet(var, at(x), 1);
    return std::abs(j[0]) > 0 ? (j[1] / j[0]).imag() : 0.0;
  };
  OracleOptions opt;
  opt.parallel = false;

  // M(k) = X1^{-1} \int |(d/dx)^k (x^k w)| dx
  for (int k = 0; k <= max_deriv; ++k) {
    auto f = [&](double x) {
      Jet g = w.jet(var, at(x), k);
      Jet xk = Jet::constant(k, 1.0, x);
      for (int i = 0; i < k; ++i) xk = xk * Jet::variable(k, x);
      return cplx(std::abs(deriv(xk * g, k)), 0.0);
    };
    rep.derivative_bounds.push_back(integrate_panels(f, a, b, 0.0, 1e-8, opt).value.real() / X1);
  }

  size_t n = t_grid.size();
  rep.t = t_grid;
  rep.F.resize(n);
  rep.F_error.resize(n);
  rep.scaled_derivatives.assign(max_deriv + 1, std::vector<double>(n));
  std::vector<std::vector<double>> deriv_err(max_deriv + 1, std::vector<double>(n));
  parallel_for(n, [&](size_t i) {
    double t = t_grid[i];
    auto dphi = [&](double x) { return own_freq(x) - two_pi * t; };
    for (int k = 0; k <= max_deriv; ++k) {
      // t^k d^k/dt^k of e(-x t) is (-2 pi i x t)^k e(-x t)
      auto f = [&](double x) {
        cplx m = std::pow(cplx(0.0, -two_pi * x * t), k);
        return w.value(at(x)) * m * std::exp(cplx(0.0, -two_pi * x * t));
      };
      auto r = integrate_oscillatory(f, dphi, a, b, tol, opt);
      if (k == 0) {
        rep.F[i] = r.value / X1;
        rep.F_error[i] = r.error_estimate / X1;
      }
      rep.scaled_derivatives[k][i] = std::abs(r.value) / X1;
      deriv_err[k][i] = r.error_estimate / X1;
    }
  });
  for (int k = 0; k <= max_deriv; ++k)
    for (size_t i = 0; i < n; ++i)
      if (rep.scaled_derivatives[k][i] > rep.derivative_bounds[k] * (1 + 1e-6) + 10 * deriv_err[k][i])
        rep.derivatives_ok = false;

  size_t peak = 0;
  for (size_t i = 1; i < n; ++i)
    if (std::abs(rep.F[i]) > std::abs(rep.F[peak])) peak = i;
  rep.peak_t = t_grid[peak];

  // tail fit of log|F| against log(1 + |t| X1 / X) on the envelope from the far end
  double mass = rep.derivative_bounds[0];
  rep.noise_floor = 1e-13 * mass;
  std::vector<size_t> ord;
  for (size_t i = 0; i < n; ++i)
    if (std::abs(t_grid[i]) * X1 / rep.X >= 1.0) ord.push_back(i);
  std::sort(ord.begin(), ord.end(), [&](size_t x, size_t y) { return std::abs(t_grid[x]) > std::abs(t_grid[y]); });
  std::vector<double> lx, ly;
  double env = 0.0;
  for (size_t i : ord) {
    double v = std::abs(rep.F[i]);
    env = std::max(env, v);
    if (v <= rep.noise_floor || v <= 10 * rep.F_error[i]) continue;
    lx.push_back(std::log1p(std::abs(t_grid[i]) * X1 / rep.X));
    ly.push_back(std::log(env));
  }
  rep.fit_points = static_cast<int>(lx.size());
  if (lx.size() >= 3) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
      sxy += (lx[i] - mx) * (ly[i] - my);
      sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (sxx > 0) rep.fitted_exponent = -sxy / sxx;
  }
  rep.decay_ok = rep.fitted_exponent >= A;
  return rep;
}

inline FourierReport fourier_decay_check(const FamilySpec& spec, const Params& T, int var,
                                         std::vector<double> other_point, const std::vector<double>& t_grid,
                                         double q = 0.0, double A = 5.0, int max_deriv = 3, double tol = 1e-10) {
  return fourier_decay_check(ExprFamily(spec), T, var, std::move(other_point), t_grid, q, A, max_deriv, tol);
}

}  // namespace phasekit
