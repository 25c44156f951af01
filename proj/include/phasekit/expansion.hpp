#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include "field.hpp"
#include "stationary.hpp"

namespace phasekit {

struct SPConstants {
  std::vector<cplx> c;
};

// c_n = sqrt(2 pi) e^{i pi/4} (i/2)^n / n!, from the even Fresnel moments
inline SPConstants sp_constants(int n_max) {
  if (n_max < 0 || n_max > 10) throw InvalidArgument("n_max must lie in [0, 10]");
  SPConstants r;
  cplx c = std::sqrt(2.0 * std::numbers::pi) * std::exp(cplx(0.0, std::numbers::pi / 4));
  for (int n = 0; n <= n_max; ++n) {
    r.c.push_back(c);
    c *= cplx(0.0, 0.5) / double(n + 1);
  }
  return r;
}

struct ExpansionResult {
  double t0 = 0.0;
  double phase_at_t0 = 0.0;
  double phase_dd_at_t0 = 0.0;
  std::vector<cplx> terms;
  cplx amplitude;   // main_value without the e^{i phase(t0)} factor
  cplx main_value;
  cplx W_value;
  double truncation_estimate = 0.0;
  bool conjugated = false;
};

namespace detail {

// jet of G = w e^{iH} about t0, H = phase - phase(t0) - phase''(t0)/2 (t - t0)^2
inline Jet g_jet(const Jet& phase, const Jet& weight, double scale) {
  int n = std::min(phase.order(), weight.order());
  std::vector<cplx> h(n + 1, 0.0);
  for (int k = 3; k <= n; ++k) h[k] = phase[k];
  if (n >= 1 && std::abs(phase[1]) > 1e-9 * scale)
    throw AssertionFailure("phase' does not vanish at t0; wrong stationary point");
  Jet H = Jet::from_coeffs(std::move(h), phase.center());
  return weight.truncated(n) * exp(H * cplx(0.0, 1.0));
}

inline double derivative_scale(const SPContext& ctx, double t0, double phase_dd) {
  return std::max({ctx.Y / ctx.Z, std::abs(phase_dd) * std::abs(t0), 1e-300});
}

}  // namespace detail

// G^(2n)(t0) for n <= n_max
inline std::vector<cplx> g_derivatives(const SPContext& ctx, const Field& weight, double t0,
                                       std::span<const double> spectators, int n_max) {
  if (n_max < 0) throw InvalidArgument("n_max must be non-negative");
  auto x = ctx.point(t0, spectators);
  int order = std::max(2 * n_max, 2);
  Jet ph = ctx.phase_jet(x, order);
  Jet w = weight.jet(ctx.var, x, order);
  Jet g = detail::g_jet(ph, w, detail::derivative_scale(ctx, t0, 2.0 * ph[2].real()));
  std::vector<cplx> r;
  for (int n = 0; n <= n_max; ++n) r.push_back(detail::factorial(2 * n) * g[2 * n]);
  return r;
}

inline std::vector<cplx> g_derivatives(const SPContext& ctx, const Expr& weight, double t0,
                                       std::span<const double> spectators, int n_max) {
  return g_derivatives(ctx, ExprField(weight, ctx.params, ctx.dim), t0, spectators, n_max);
}

inline ExpansionResult sp_expand(const SPContext& ctx, const Field& weight,
                                 std::span<const double> spectators, int n_max) {
  StationaryResult st = classify(ctx, spectators);
  if (!st.stationary())
    throw StepHypothesisViolation(std::string(to_string(st.kind)) + ": " + st.reason);
  ExpansionResult r;
  r.t0 = st.t0;
  r.conjugated = st.conjugate;
  auto x = ctx.point(st.t0, spectators);
  int order = std::max(2 * n_max, 2);
  Jet ph = ctx.phase_jet(x, order);
  r.phase_at_t0 = ph[0].real();
  r.phase_dd_at_t0 = 2.0 * ph[2].real();
  double a = std::abs(r.phase_dd_at_t0);
  if (a < 1e-10 * ctx.Y / (ctx.Z * ctx.Z)) throw SingularImplicit("phase'' too small at t0");
  Jet w = weight.jet(ctx.var, x, order);
  Jet g = detail::g_jet(ph, w, detail::derivative_scale(ctx, st.t0, r.phase_dd_at_t0));
  // phase'' < 0 is the complex conjugate of the convex case
  SPConstants c = sp_constants(n_max);
  cplx sum = 0.0;
  for (int n = 0; n <= n_max; ++n) {
    cplx cn = st.conjugate ? std::conj(c.c[n]) : c.c[n];
    r.terms.push_back(cn * std::pow(a, -double(n)) * detail::factorial(2 * n) * g[2 * n]);
    sum += r.terms.back();
  }
  r.amplitude = sum / std::sqrt(a);
  r.main_value = std::exp(cplx(0.0, r.phase_at_t0)) * r.amplitude;
  r.W_value = std::sqrt(ctx.Y) / ctx.Z * r.amplitude;
  double wscale = std::abs(w[0]);
  r.truncation_estimate =
      std::abs(r.terms.back()) / std::sqrt(a) + ctx.Z * std::pow(ctx.R, -(n_max + 1.0)) * wscale;
  return r;
}

inline ExpansionResult sp_expand(const SPContext& ctx, const Expr& weight,
                                 std::span<const double> spectators, int n_max) {
  return sp_expand(ctx, ExprField(weight, ctx.params, ctx.dim), spectators, n_max);
}
inline ExpansionResult sp_expand(const SPContext& ctx, const Expr& weight,
                                 std::initializer_list<double> spectators, int n_max) {
  std::vector<double> s(spectators);
  return sp_expand(ctx, weight, std::span<const double>(s), n_max);
}

// The output of one stationary-phase step as a function of the spectators:
// the amplitude F/sqrt(phase'') (normalized: times sqrt(Y)/Z), with jets from
// running the expansion in multivariate jet arithmetic.
class StepField : public Field {
 public:
  StepField(SPContext ctx, FieldPtr weight, int n_max, bool normalized, int max_jet_order = 4)
      : ctx_(std::move(ctx)),
        weight_(std::move(weight)),
        n_max_(n_max),
        normalized_(normalized),
        max_jet_order_(max_jet_order) {
    ctx_.validate();
    if (weight_->dim() != ctx_.dim) throw InvalidArgument("weight dimension differs from the phase");
    sp_constants(n_max_);
  }

  int dim() const override { return ctx_.dim - 1; }
  const SPContext& context() const { return ctx_; }
  int n_max() const { return n_max_; }

  cplx value(std::span<const double> s) const override {
    auto st = stationary(s);
    if (st.kind == StationaryKind::NonStationary) return 0.0;
    ExpansionResult r = sp_expand(ctx_, *weight_, s, n_max_);
    return normalized_ ? r.W_value : r.amplitude;
  }

  ExpansionResult expand(std::span<const double> s) const { return sp_expand(ctx_, *weight_, s, n_max_); }

  MJet mjet(std::span<const double> s, int order, std::span<const int> vars) const override {
    if (order > max_jet_order_) throw OrderExceeded("spectator jet order above the configured cap");
    Key key{std::vector<double>(s.begin(), s.end()), order, std::vector<int>(vars.begin(), vars.end())};
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) return it->second;
    }
    MJet r = compute(s, order, vars);
    std::lock_guard<std::mutex> lock(mu_);
    cache_.emplace(std::move(key), r);
    return r;
  }

  // jet of the phase after substitution, phase(t0(s), s)
  MJet substituted_phase(std::span<const double> s, int order, std::span<const int> vars) const {
    auto st = require_stationary(s);
    int m = static_cast<int>(vars.size());
    MJet tau = detail::t0_shift(ctx_, st.t0, s, order, vars);
    auto x = ctx_.point(st.t0, s);
    MJet F = ctx_.phase_mjet(x, order, jet_vars(vars));
    std::vector<MJet> args{tau};
    for (int j = 0; j < m; ++j) args.push_back(MJet::variable(m, order, j, 0.0));
    MJet r = compose(F, args);
    r.set_center(centre(s, vars));
    return r;
  }

  StationaryResult stationary(std::span<const double> s) const {
    std::vector<double> key(s.begin(), s.end());
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = st_cache_.find(key);
      if (it != st_cache_.end()) return it->second;
    }
    StationaryResult st = classify(ctx_, s);
    std::lock_guard<std::mutex> lock(mu_);
    st_cache_.emplace(std::move(key), st);
    return st;
  }

 private:
  using Key = std::tuple<std::vector<double>, int, std::vector<int>>;

  StationaryResult require_stationary(std::span<const double> s) const {
    auto st = stationary(s);
    if (!st.stationary())
      throw StepHypothesisViolation(std::string(to_string(st.kind)) + " at a spectator point: " + st.reason);
    return st;
  }

  std::vector<int> jet_vars(std::span<const int> slots) const {
    auto sv = ctx_.spectator_vars();
    std::vector<int> v{ctx_.var};
    for (int s : slots) v.push_back(sv[s]);
    return v;
  }

  static std::vector<double> centre(std::span<const double> s, std::span<const int> vars) {
    std::vector<double> c;
    for (int v : vars) c.push_back(s[v]);
    return c;
  }

  MJet compute(std::span<const double> s, int K, std::span<const int> vars) const {
    int m = static_cast<int>(vars.size());
    auto st0 = stationary(s);
    if (st0.kind == StationaryKind::NonStationary) return MJet(m, K, centre(s, vars));
    auto st = require_stationary(s);
    int M = std::max(2 * n_max_ + K, K + 2);
    MJet tau = detail::t0_shift(ctx_, st.t0, s, M, vars);
    auto x = ctx_.point(st.t0, s);
    auto jv = jet_vars(vars);
    MJet Fphi = ctx_.phase_mjet(x, M, jv);
    MJet Fw = weight_->mjet(x, M, jv);
    // substitute t = t0(s + sigma) + u; slot 0 is u, slots 1.. are sigma
    std::vector<int> shift(m);
    for (int j = 0; j < m; ++j) shift[j] = j + 1;
    MJet U = MJet::variable(m + 1, M, 0, 0.0);
    std::vector<MJet> args{U + tau.embed(m + 1, shift, M)};
    for (int j = 0; j < m; ++j) args.push_back(MJet::variable(m + 1, M, j + 1, 0.0));
    MJet Phi = compose(Fphi, args);
    MJet Wc = compose(Fw, args);
    MJet phi0 = Phi.slice(0, 0), phi2 = Phi.slice(0, 2);
    MJet H = Phi - phi0.embed(m + 1, shift, M) - phi2.embed(m + 1, shift, M) * (U * U);
    double scale = detail::derivative_scale(ctx_, st.t0, 2.0 * phi2[0].real());
    MJet h1 = H.slice(0, 1);
    if (std::abs(h1[0]) > 1e-9 * scale) throw AssertionFailure("phase' does not vanish at t0");
    MJet G = Wc * exp(H * cplx(0.0, 1.0));
    SPConstants c = sp_constants(n_max_);
    // |phase''| as a jet in sigma
    MJet D = phi2.truncated(K) * (st.conjugate ? -2.0 : 2.0);
    MJet amp(m, K);
    for (int n = 0; n <= n_max_; ++n) {
      cplx cn = st.conjugate ? std::conj(c.c[n]) : c.c[n];
      MJet g2n = G.slice(0, 2 * n).truncated(K);
      amp += (cn * detail::factorial(2 * n)) * (pow(D, -double(n) - 0.5) * g2n);
    }
    if (normalized_) amp *= std::sqrt(ctx_.Y) / ctx_.Z;
    amp.set_center(centre(s, vars));
    return amp;
  }

  SPContext ctx_;
  FieldPtr weight_;
  int n_max_;
  bool normalized_;
  int max_jet_order_;
  mutable std::mutex mu_;
  mutable std::map<Key, MJet> cache_;
  mutable std::map<std::vector<double>, StationaryResult> st_cache_;
};

using StepFieldPtr = std::shared_ptr<const StepField>;

// phase(t0(s), s) of a step, as a field over the spectators
class SubstitutedPhaseField : public Field {
 public:
  explicit SubstitutedPhaseField(StepFieldPtr step) : step_(std::move(step)) {}
  int dim() const override { return step_->dim(); }
  cplx value(std::span<const double> s) const override {
    auto st = step_->stationary(s);
    if (!st.stationary()) throw StepHypothesisViolation("no stationary point for the substituted phase");
    return step_->context().phase_value(step_->context().point(st.t0, s));
  }
  MJet mjet(std::span<const double> s, int order, std::span<const int> vars) const override {
    return step_->substituted_phase(s, order, vars);
  }

 private:
  StepFieldPtr step_;
};

// normalized output weight of a step, consumable by the inertness checker
inline StepFieldPtr weight_out(const SPContext& ctx, FieldPtr weight, int n_max, int max_jet_order = 4) {
  return std::make_shared<StepField>(ctx, std::move(weight), n_max, true, max_jet_order);
}
inline StepFieldPtr weight_out(const SPContext& ctx, const Expr& weight, int n_max, int max_jet_order = 4) {
  return weight_out(ctx, make_field(weight, ctx.params, ctx.dim), n_max, max_jet_order);
}

}  // namespace phasekit
