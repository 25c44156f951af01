#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "expansion.hpp"
#include "field.hpp"
#include "oracle.hpp"
#include "stationary.hpp"

namespace phasekit {

// Per-step scales. When automatic, Z is the lower end of the variable's box, Y
// the largest |Z^2 phase''| over a grid of the current box, X the ambient scale
// and R = Y / X^2.
struct StepScales {
  bool automatic = true;
  double Z = 1.0, Y = 1.0, X = 1.0, R = 1.0;
};

// Parameters of the three-variable example, in the e(x) convention.
struct Ambient {
  double t = 1.0;
  std::vector<double> lambda;
  std::vector<double> X;
  double q = 1e3;
  double delta = 0.1;
  double P() const {
    double p = t;
    for (double x : X) p *= x;
    return p;
  }
};

struct PipelineSpec {
  IntegralSpec integral;   // phase in radians
  std::vector<int> order;  // variables to eliminate, first to last
  std::vector<StepScales> scales;
  double X = 1.0;  // inertness scale of the weight
  std::optional<Ambient> ambient;
  // integrand before any change of variables; used for the joint prediction
  std::optional<IntegralSpec> original;
  std::vector<double> original_start;  // Newton start for the joint stationary point
};

struct StepRecord {
  int var = 0;                 // variable eliminated (index in the integral)
  std::vector<int> spectators; // remaining variables, in index order
  SPContext ctx;
  bool closed_form = false;
  std::optional<StationaryPointForm> t0_form;
  std::vector<double> at;  // spectator point along the stationary chain
  ExpansionResult expansion;
  double relative_truncation = 0.0;
};

struct PipelineResult {
  bool pruned = false;
  std::string reason;
  cplx main_value = 0.0;
  double final_phase = 0.0;
  double amplitude_scale = 1.0;  // product of Z / sqrt(Y) over the steps
  cplx W = 0.0;                  // main_value e^{-i final_phase} / amplitude_scale
  double truncation_estimate = 0.0;
  std::vector<StepRecord> steps;
  std::vector<double> stationary_point;  // in the integral's coordinates
  std::optional<cplx> predicted;
};

struct PruneResult {
  bool pruned = false;
  std::string reason;
};

// Dyadic localisation of the lambda_i with slack 8, and the oscillation threshold P >= q^delta.
inline PruneResult prune(const Ambient& a) {
  double P = a.P();
  if (!(P >= std::pow(a.q, a.delta)))
    return {true, "P = " + format_number(P) + " is below q^delta = " + format_number(std::pow(a.q, a.delta))};
  if (a.lambda.size() != a.X.size()) throw InvalidArgument("need one lambda per scale");
  for (size_t i = 0; i < a.lambda.size(); ++i) {
    double c = P / a.X[i];
    if (a.lambda[i] < c / 8 || a.lambda[i] > 8 * c)
      return {true, "lambda" + std::to_string(i + 1) + " = " + format_number(a.lambda[i]) + " is outside [" +
                        format_number(c / 8) + ", " + format_number(8 * c) + "]"};
  }
  return {};
}
inline PruneResult prune(const PipelineSpec& s) { return s.ambient ? prune(*s.ambient) : PruneResult{}; }

namespace detail {

// p/q with q <= 12 within 1e-8 of a
inline std::optional<double> snap_rational(double a) {
  for (int q = 1; q <= 12; ++q) {
    double p = std::round(a * q);
    if (std::abs(a - p / q) < 1e-8) return p / q;
  }
  return std::nullopt;
}

// t0 = c prod s^alpha, read off from the first-order jet and checked at shifted points
inline std::optional<StationaryPointForm> detect_monomial(const SPContext& ctx, std::span<const double> s,
                                                           const std::vector<int>& spectator_vars) {
  int m = static_cast<int>(s.size());
  MJet tau = t0_jet(ctx, s, 1);
  double t0 = tau[0].real();
  if (!(t0 > 0)) return std::nullopt;
  std::vector<double> alpha(m);
  std::vector<int> e(m, 0);
  for (int i = 0; i < m; ++i) {
    if (!(s[i] > 0)) return std::nullopt;
    e[i] = 1;
    auto a = snap_rational(s[i] * tau.coeff(e).real() / t0);
    e[i] = 0;
    if (!a) return std::nullopt;
    alpha[i] = *a;
  }
  StationaryPointForm f{1.0, alpha, spectator_vars};
  f.c = t0 / f.value(s);
  for (int k = 0; k < m; ++k) {
    for (double shift : {0.93, 1.07}) {
      std::vector<double> p(s.begin(), s.end());
      p[k] *= shift;
      auto st = classify(ctx, p);
      if (!st.stationary() || std::abs(st.t0 - f.value(p)) > 1e-8 * std::abs(st.t0)) return std::nullopt;
    }
  }
  return f;
}

inline double auto_Y(const SPContext& ctx, const std::vector<Interval>& box) {
  int m = ctx.dim;
  constexpr int n = 9;
  long long total = 1;
  for (int k = 0; k < m; ++k) total *= n;
  double Y = 0.0;
  std::vector<double> x(m);
  for (long long p = 0; p < total; ++p) {
    long long r = p;
    for (int k = 0; k < m; ++k) {
      x[k] = box[k].lo + box[k].width() * (r % n) / (n - 1);
      r /= n;
    }
    try {
      Jet j = ctx.phase_jet(x, 2);
      Y = std::max(Y, std::abs(2.0 * j[2].real()) * ctx.Z * ctx.Z);
    } catch (const StepHypothesisViolation&) {
    }
  }
  if (!(Y > 0)) throw StepHypothesisViolation("phase'' vanishes on the whole support grid");
  return Y;
}

}  // namespace detail

struct PipelineOptions {
  int n_max = 1;
  bool detect_closed_form = true;
};

// Leading term of the joint stationary-phase expansion in all variables:
// (2 pi)^{d/2} e^{i pi sig/4} e^{i phase} w / sqrt|det H| at the nondegenerate
// stationary point reached by Newton from `start`.
inline cplx joint_stationary_prediction(const IntegralSpec& s, std::vector<double> x,
                                        std::vector<double>* point = nullptr) {
  validate_spec(s);
  int d = s.dim;
  if (static_cast<int>(x.size()) != d) throw InvalidArgument("start point has the wrong dimension");
  std::vector<int> vars(d);
  for (int i = 0; i < d; ++i) vars[i] = i;
  Eigen::MatrixXd H(d, d);
  Eigen::VectorXd g(d);
  auto load = [&] {
    MJet J = mjet_of(s.phase, x, s.params, 2, vars);
    std::vector<int> a(d, 0);
    for (int i = 0; i < d; ++i) {
      a[i] = 1;
      g(i) = J.coeff(a).real();
      for (int k = 0; k < d; ++k) {
        a[k] += 1;
        H(i, k) = J.partial(a).real();
        a[k] -= 1;
      }
      a[i] = 0;
    }
  };
  bool converged = false;
  for (int it = 0; it < 60 && !converged; ++it) {
    load();
    Eigen::VectorXd step = H.fullPivLu().solve(g);
    double size = 0;
    for (int i = 0; i < d; ++i) {
      x[i] -= step(i);
      size = std::max(size, std::abs(step(i)) / std::max(1.0, std::abs(x[i])));
    }
    converged = size < 1e-15;
  }
  load();
  if (!converged && g.norm() > 1e-9 * H.norm()) throw NoConvergence("joint stationary point not found");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
  int sig = 0;
  double det = 1.0;
  for (int i = 0; i < d; ++i) {
    double ev = es.eigenvalues()(i);
    if (ev == 0.0) throw SingularImplicit("degenerate joint stationary point");
    sig += ev > 0 ? 1 : -1;
    det *= ev;
  }
  if (point) *point = x;
  double ph = eval(s.phase, x, s.params).real();
  cplx w = eval(s.weight, x, s.params);
  return std::pow(2 * std::numbers::pi, d / 2.0) / std::sqrt(std::abs(det)) *
         std::exp(cplx(0.0, std::numbers::pi * sig / 4.0 + ph)) * w;
}

inline PipelineResult run(const PipelineSpec& spec, const PipelineOptions& opt = {}) {
  validate_spec(spec.integral);
  const IntegralSpec& I = spec.integral;
  PipelineResult res;
  if (auto pr = prune(spec); pr.pruned) {
    res.pruned = true;
    res.reason = pr.reason;
    return res;
  }
  int d = I.dim;
  if (static_cast<int>(spec.order.size()) != d) throw InvalidArgument("the elimination order must list every variable");
  std::vector<int> seen(d, 0);
  for (int v : spec.order) {
    if (v < 0 || v >= d || seen[v]++) throw InvalidArgument("the elimination order must be a permutation");
  }
  if (!spec.scales.empty() && static_cast<int>(spec.scales.size()) != d)
    throw InvalidArgument("need scales for every step");
  int cap = std::max(4, 2 * opt.n_max * (d - 1) + 2);

  // remaining variables (original indices) of the current integrand
  std::vector<int> remaining(d);
  for (int i = 0; i < d; ++i) remaining[i] = i;
  std::optional<Expr> phase_expr = I.phase;
  FieldPtr phase_field;
  FieldPtr weight = make_field(I.weight, I.params, d);
  std::vector<StepFieldPtr> fields;

  for (int k = 0; k < d; ++k) {
    int orig = spec.order[k];
    int pos = static_cast<int>(std::find(remaining.begin(), remaining.end(), orig) - remaining.begin());
    int m = static_cast<int>(remaining.size());
    StepRecord rec;
    rec.var = orig;
    for (int v : remaining)
      if (v != orig) rec.spectators.push_back(v);
    SPContext ctx;
    if (phase_expr)
      ctx.phase = *phase_expr;
    else
      ctx.phase_field = phase_field;
    ctx.params = I.params;
    ctx.dim = m;
    ctx.var = pos;
    const Interval& b = I.box[orig];
    // earlier steps search wider, so that later grids stay where the
    // substituted phase is defined
    double widen = std::pow(4.0, d - k);
    ctx.interval = {b.lo / widen, b.hi * widen};
    StepScales sc = spec.scales.empty() ? StepScales{} : spec.scales[k];
    if (sc.automatic) {
      ctx.Z = b.lo;
      std::vector<Interval> cur;
      for (int v : remaining) cur.push_back(I.box[v]);
      ctx.X = spec.X;
      ctx.Y = detail::auto_Y(ctx, cur);
      ctx.R = ctx.Y / (ctx.X * ctx.X);
    } else {
      ctx.Z = sc.Z;
      ctx.Y = sc.Y;
      ctx.X = sc.X;
      ctx.R = sc.R;
    }
    ctx.validate();
    auto field = std::make_shared<StepField>(ctx, weight, opt.n_max, false, cap);
    fields.push_back(field);
    rec.ctx = ctx;

    std::vector<int> map(m);  // current positions -> positions after elimination
    for (int i = 0; i < m; ++i) map[i] = i < pos ? i : i - 1;
    map[pos] = 0;
    if (phase_expr && opt.detect_closed_form) {
      std::vector<double> centre;
      std::vector<int> spec_pos;
      for (int i = 0; i < m; ++i)
        if (i != pos) {
          centre.push_back(0.5 * (I.box[remaining[i]].lo + I.box[remaining[i]].hi));
          spec_pos.push_back(i);
        }
      auto form = detail::detect_monomial(ctx, centre, spec_pos);
      if (form) {
        rec.closed_form = true;
        rec.t0_form = form;
        phase_expr = remap_variables(substitute(*phase_expr, pos, form->to_expr()), map);
      }
    }
    if (!rec.closed_form) {
      phase_expr.reset();
      phase_field = std::make_shared<SubstitutedPhaseField>(field);
    }
    weight = field;
    remaining.erase(remaining.begin() + pos);
    res.steps.push_back(std::move(rec));
  }

  // walk back along the stationary points: the last step has no spectators
  std::vector<double> x(d, 0.0);
  std::vector<double> known;  // values of the remaining variables before step k, in index order
  for (int k = d - 1; k >= 0; --k) {
    auto& rec = res.steps[k];
    rec.at.clear();
    for (int v : rec.spectators) rec.at.push_back(x[v]);
    rec.expansion = fields[k]->expand(rec.at);
    x[rec.var] = rec.expansion.t0;
    rec.relative_truncation = rec.expansion.truncation_estimate / std::abs(rec.expansion.amplitude);
  }
  res.stationary_point = x;
  const auto& last = res.steps[d - 1];
  cplx amp = fields[d - 1]->value(std::span<const double>());
  double t0 = last.expansion.t0;
  res.final_phase = last.ctx.phase_value(last.ctx.point(t0, {}));
  res.main_value = std::exp(cplx(0.0, res.final_phase)) * amp;
  for (const auto& r : res.steps) {
    res.amplitude_scale *= r.ctx.Z / std::sqrt(r.ctx.Y);
    res.truncation_estimate += r.relative_truncation;
  }
  res.truncation_estimate *= std::abs(res.main_value);
  res.W = amp / res.amplitude_scale;
  if (spec.original) {
    std::vector<double> start = spec.original_start;
    if (start.empty()) start = x;
    res.predicted = joint_stationary_prediction(*spec.original, start);
  }
  return res;
}

// The three-variable example with X_i = 1, t = P and lambda_i = ratio_i P,
// weight prod bump(3 x_i - 3), all in the e(x) convention.
inline IntegralSpec ci_integral(double P, std::array<double, 3> ratios) {
  IntegralSpec s;
  s.dim = 3;
  s.phase = 2.0 * std::numbers::pi *
            (-(param("t") * var(0) * var(1) * var(2)) + param("l1") * var(0) + param("l2") * var(1) +
             param("l3") * var(2));
  s.weight = bump(3.0 * var(0) - 3.0) * bump(3.0 * var(1) - 3.0) * bump(3.0 * var(2) - 3.0);
  s.box = {{2.0 / 3, 4.0 / 3}, {2.0 / 3, 4.0 / 3}, {2.0 / 3, 4.0 / 3}};
  s.params = {{"t", P}, {"l1", ratios[0] * P}, {"l2", ratios[1] * P}, {"l3", ratios[2] * P},
              {"X1", 1.0}, {"X2", 1.0}, {"X3", 1.0}};
  return s;
}

// closed forms for the three stationary points, in the coordinates after x1 -> x1 X2 X3 / (x2 x3)
struct CiClosedForms {
  double x1, x2, x3;
};
inline CiClosedForms ci_closed_forms(const Params& p) {
  double t = p.at("t"), l1 = p.at("l1"), l2 = p.at("l2"), l3 = p.at("l3");
  double X2 = p.at("X2"), X3 = p.at("X3");
  CiClosedForms c;
  c.x1 = std::sqrt(l1 * l2 * l3 / (t * t * t * X2 * X2 * X3 * X3));
  c.x2 = std::cbrt(l1 * l3 * c.x1 * X2 * X3 / (l2 * l2));
  c.x3 = std::sqrt(l1 * c.x1 * X2 * X3 / (l3 * c.x2));
  return c;
}

inline PipelineSpec ci_pipeline_spec(double P, std::array<double, 3> ratios, double q = 1e3,
                                     std::vector<int> order = {2, 1, 0}) {
  IntegralSpec orig = ci_integral(P, ratios);
  PipelineSpec s;
  s.original = orig;
  Ambient a;
  a.t = P;
  a.lambda = {ratios[0] * P, ratios[1] * P, ratios[2] * P};
  a.X = {1.0, 1.0, 1.0};
  a.q = q;
  s.ambient = a;
  // x1 -> x1 X2 X3 / (x2 x3), with its Jacobian in the weight
  IntegralSpec I = orig;
  Expr X23 = param("X2") * param("X3");
  Expr jac = X23 / (var(1) * var(2));
  I.phase = 2.0 * std::numbers::pi *
            (-(param("t") * var(0) * X23) + var(0) * param("l1") * jac + param("l2") * var(1) +
             param("l3") * var(2));
  I.weight = bump(3.0 * var(0) * jac - 3.0) * bump(3.0 * var(1) - 3.0) * bump(3.0 * var(2) - 3.0) * jac;
  double lo = 2.0 / 3, hi = 4.0 / 3;
  I.box = {{lo * lo * lo, hi * hi * hi}, {lo, hi}, {lo, hi}};
  s.integral = I;
  s.order = std::move(order);
  // Y from the second derivatives: lambda1 X1, sqrt(lambda1 lambda3 X1 X3), P (times 2 pi)
  double two_pi = 2.0 * std::numbers::pi;
  double Yx3 = two_pi * a.lambda[0], Yx2 = two_pi * std::sqrt(a.lambda[0] * a.lambda[2]);
  double Yx1 = two_pi * P;
  std::array<double, 3> Y{Yx1, Yx2, Yx3};
  if (s.order != std::vector<int>{2, 1, 0}) Y = {Yx1, two_pi * a.lambda[0], two_pi * a.lambda[0]};
  for (int v : s.order) s.scales.push_back({false, 1.0, Y[v], 1.0, Y[v]});
  // the joint stationary point of the original phase solves lambda_i x_i = t x1 x2 x3
  double prod = std::sqrt(a.lambda[0] * a.lambda[1] * a.lambda[2] / (P * P * P));
  s.original_start = {P * prod / a.lambda[0], P * prod / a.lambda[1], P * prod / a.lambda[2]};
  return s;
}

inline PipelineResult ci_example(double P, std::array<double, 3> ratios, double q = 1e3, int n_max = 1) {
  if (!(P >= 50)) throw InvalidArgument("the example needs P >= 50");
  PipelineOptions opt;
  opt.n_max = n_max;
  return run(ci_pipeline_spec(P, ratios, q), opt);
}

}  // namespace phasekit
