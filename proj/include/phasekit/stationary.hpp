#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <tuple>
#include <vector>

#include "expr.hpp"
#include "field.hpp"
#include "oracle.hpp"

namespace phasekit {

// One stationary-phase step: phase in radians, active variable `var`, search
// interval (normally [Z, 2Z]) and the scales of the derivative bounds.
struct SPContext {
  Expr phase;
  FieldPtr phase_field;  // numeric phase, used instead of `phase` when set
  Params params;
  int dim = 1;
  int var = 0;
  Interval interval{1.0, 2.0};
  double Z = 1.0, Y = 1.0, X = 1.0, R = 1.0;
  std::vector<double> spectator_scales;  // X_i of the other variables, in index order

  void validate() const {
    if (dim < 1 || var < 0 || var >= dim) throw InvalidArgument("active variable out of range");
    if (!(Z > 0) || !(Y > 0) || !(X > 0)) throw InvalidArgument("scales must be positive");
    if (!(R >= 1.0) || Y / (X * X) < R * (1 - 1e-12))
      throw InvalidArgument("scales violate Y/X^2 >= R >= 1");
    if (!(interval.hi > interval.lo)) throw InvalidArgument("empty interval");
    if (!spectator_scales.empty() && static_cast<int>(spectator_scales.size()) != dim - 1)
      throw InvalidArgument("need one spectator scale per spectator variable");
  }

  // full point with the active variable at t
  std::vector<double> point(double t, std::span<const double> spectators) const {
    if (static_cast<int>(spectators.size()) != dim - 1)
      throw InvalidArgument("need one value per spectator variable");
    std::vector<double> x(dim);
    for (int i = 0, s = 0; i < dim; ++i) x[i] = (i == var) ? t : spectators[s++];
    return x;
  }

  Jet phase_jet(std::span<const double> x, int order) const {
    if (phase_field) return phase_field->jet(var, x, order);
    return jet_of(phase, var, x, params, order);
  }
  MJet phase_mjet(std::span<const double> x, int order, std::span<const int> vars) const {
    if (phase_field) return phase_field->mjet(x, order, vars);
    return mjet_of(phase, x, params, order, vars);
  }
  double phase_value(std::span<const double> x) const {
    if (phase_field) return phase_field->value(x).real();
    return eval(phase, x, params).real();
  }

  std::vector<int> spectator_vars() const {
    std::vector<int> v;
    for (int i = 0; i < dim; ++i)
      if (i != var) v.push_back(i);
    return v;
  }
};

enum class StationaryKind { Stationary, NonStationary, Indeterminate };

struct StationaryResult {
  StationaryKind kind = StationaryKind::Indeterminate;
  double t0 = 0.0;
  double min_abs_dphi = 0.0;
  // phase'' < 0: the expansion works with -phase and conjugates
  bool conjugate = false;
  std::string reason;

  bool stationary() const { return kind == StationaryKind::Stationary; }
};

inline const char* to_string(StationaryKind k) {
  switch (k) {
    case StationaryKind::Stationary: return "Stationary";
    case StationaryKind::NonStationary: return "NonStationary";
    default: return "Indeterminate";
  }
}

namespace detail {

inline std::pair<double, double> dphi_d2phi(const SPContext& ctx, double t, std::span<const double> spec) {
  auto x = ctx.point(t, spec);
  Jet j = ctx.phase_jet(x, 2);
  return {j[1].real(), 2.0 * j[2].real()};
}

// root of phase' in a sign-change bracket; plain bisection when newton is false
inline double solve_bracket(const SPContext& ctx, std::span<const double> spec, double a, double b,
                            double fa, bool newton) {
  double tol = 1e-12 * ctx.Y / ctx.Z;
  double t = 0.5 * (a + b);
  for (int it = 0; it < 100; ++it) {
    auto [f, f2] = dphi_d2phi(ctx, t, spec);
    if (std::abs(f) <= tol) return t;
    if ((f < 0) == (fa < 0)) {
      a = t;
      fa = f;
    } else {
      b = t;
    }
    if (b - a <= 4 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b)))
      return 0.5 * (a + b);
    double next = newton && f2 != 0.0 ? t - f / f2 : 0.5 * (a + b);
    if (!(next > a && next < b)) next = 0.5 * (a + b);
    t = next;
  }
  throw NoConvergence("stationary point search did not converge in 100 iterations");
}

inline StationaryResult classify_impl(const SPContext& ctx, std::span<const double> spec, bool newton) {
  ctx.validate();
  constexpr int N = 65;
  const double lo = ctx.interval.lo, hi = ctx.interval.hi;
  std::vector<double> t(N), d1(N), d2(N);
  for (int i = 0; i < N; ++i) {
    t[i] = lo + (hi - lo) * i / (N - 1);
    std::tie(d1[i], d2[i]) = dphi_d2phi(ctx, t[i], spec);
  }
  StationaryResult r;
  // roots on grid points count once; otherwise strict sign changes
  int changes = 0, at = -1;
  for (int i = 0; i < N; ++i) {
    if (d1[i] == 0.0) {
      ++changes;
      at = i;
    } else if (i + 1 < N && d1[i + 1] != 0.0 && (d1[i] < 0) != (d1[i + 1] < 0)) {
      ++changes;
      at = i;
    }
  }
  if (changes == 0) {
    r.kind = StationaryKind::NonStationary;
    r.min_abs_dphi = std::abs(d1[0]);
    for (double v : d1) r.min_abs_dphi = std::min(r.min_abs_dphi, std::abs(v));
    return r;
  }
  double floor = 1e-12 * ctx.Y / (ctx.Z * ctx.Z);
  double sign = d2[at] < 0 ? -1.0 : 1.0;
  for (double v : d2)
    if (sign * v <= -floor) {
      r.reason = "phase'' changes sign on the interval";
      return r;
    }
  if (changes > 1) {
    r.reason = "phase' has several sign changes";
    return r;
  }
  double t0 = d1[at] == 0.0 ? t[at] : solve_bracket(ctx, spec, t[at], t[at + 1], d1[at], newton);
  if (t0 - lo < 1e-6 * ctx.Z || hi - t0 < 1e-6 * ctx.Z) {
    r.reason = "stationary point at the interval edge";
    r.t0 = t0;
    return r;
  }
  r.t0 = t0;
  if (std::abs(detail::dphi_d2phi(ctx, t0, spec).second) < 1e-10 * ctx.Y / (ctx.Z * ctx.Z)) {
    r.reason = "degenerate stationary point";
    return r;
  }
  r.kind = StationaryKind::Stationary;
  r.conjugate = sign < 0;
  return r;
}

}  // namespace detail

inline StationaryResult classify(const SPContext& ctx, std::span<const double> spectators) {
  return detail::classify_impl(ctx, spectators, true);
}
inline StationaryResult classify(const SPContext& ctx, std::initializer_list<double> spectators = {}) {
  std::vector<double> s(spectators);
  return classify(ctx, std::span<const double>(s));
}

// same classification with the root found by bisection only
inline StationaryResult classify_bisection(const SPContext& ctx, std::span<const double> spectators) {
  return detail::classify_impl(ctx, spectators, false);
}

namespace detail {

// t0(s + sigma) - t0(s) as a jet in the spectators listed in `slots`
// (positions in the spectator list), from phase'(t0, s) = 0 solved order by order
inline MJet t0_shift(const SPContext& ctx, double t0, std::span<const double> spectators, int order,
                     std::span<const int> slots) {
  int m = static_cast<int>(slots.size());
  auto x = ctx.point(t0, spectators);
  auto spec_vars = ctx.spectator_vars();
  std::vector<int> vars{ctx.var};
  for (int s : slots) vars.push_back(spec_vars[s]);
  MJet F = ctx.phase_mjet(x, order + 1, vars).derivative(0);
  std::vector<int> e1(m + 1, 0);
  e1[0] = 1;
  double a = F.coeff(e1).real();
  if (std::abs(a) < 1e-10 * ctx.Y / (ctx.Z * ctx.Z))
    throw SingularImplicit("phase'' vanishes at the stationary point");
  std::vector<MJet> args(m + 1);
  for (int j = 0; j < m; ++j) args[j + 1] = MJet::variable(m, order, j, 0.0);
  MJet tau(m, order);
  for (int k = 1; k <= order; ++k) {
    args[0] = tau;
    tau -= compose(F, args) * (1.0 / a);
    tau[0] = 0.0;
  }
  std::vector<double> center;
  for (int s : slots) center.push_back(spectators[s]);
  tau.set_center(center);
  return tau;
}

}  // namespace detail

// t0 as a jet in the spectator variables
inline MJet t0_jet(const SPContext& ctx, std::span<const double> spectators, int order) {
  StationaryResult st = classify(ctx, spectators);
  if (!st.stationary()) throw StepHypothesisViolation(std::string("no stationary point: ") + st.reason);
  std::vector<int> slots(ctx.dim - 1);
  for (int i = 0; i < ctx.dim - 1; ++i) slots[i] = i;
  MJet tau = detail::t0_shift(ctx, st.t0, spectators, order, slots);
  tau[0] = st.t0;
  return tau;
}

// closed-form stationary point c * prod s_i^{alpha_i} over the spectators
struct StationaryPointForm {
  double c = 1.0;
  std::vector<double> exponents;
  std::vector<int> vars;  // variable index of each spectator

  double value(std::span<const double> spectators) const {
    double v = c;
    for (size_t i = 0; i < exponents.size(); ++i)
      if (exponents[i] != 0.0) v *= scalar::pow(spectators[i], exponents[i]).real();
    return v;
  }

  MJet mjet(std::span<const double> spectators, int order) const {
    int m = static_cast<int>(exponents.size());
    std::vector<double> center(spectators.begin(), spectators.end());
    MJet r = MJet::constant(m, order, c, center);
    for (int i = 0; i < m; ++i)
      if (exponents[i] != 0.0) r = r * pow(MJet::variable(m, order, i, spectators[i], center), exponents[i]);
    r.set_center(center);
    return r;
  }

  Expr to_expr() const {
    Expr e = constant(c);
    for (size_t i = 0; i < exponents.size(); ++i)
      if (exponents[i] != 0.0) e = e * pow(var(vars[i]), exponents[i]);
    return e;
  }
};

inline StationaryPointForm t0_monomial(double c, std::vector<double> exponents, std::vector<int> vars = {}) {
  if (!(c > 0)) throw DomainViolation("monomial stationary point needs c > 0");
  if (vars.empty())
    for (size_t i = 0; i < exponents.size(); ++i) vars.push_back(static_cast<int>(i) + 1);
  if (vars.size() != exponents.size()) throw InvalidArgument("one variable per exponent");
  return {c, std::move(exponents), std::move(vars)};
}

}  // namespace phasekit
