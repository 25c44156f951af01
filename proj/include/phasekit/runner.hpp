#pragma once

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "config.hpp"
#include "inert.hpp"
#include "oracle.hpp"
#include "pipeline.hpp"

namespace phasekit {

struct Report {
  std::string title;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
  std::vector<bool> row_pass;
  std::vector<std::string> notes;
  std::vector<std::array<double, 3>> sweep;  // parameter, |I|, arg I

  bool pass() const {
    for (bool b : row_pass)
      if (!b) return false;
    return true;
  }

  void add(std::vector<std::string> row, bool ok) {
    rows.push_back(std::move(row));
    row_pass.push_back(ok);
  }

  std::string csv() const {
    std::ostringstream o;
    for (size_t i = 0; i < columns.size(); ++i) o << (i ? "," : "") << columns[i];
    o << '\n';
    for (const auto& r : rows) {
      for (size_t i = 0; i < r.size(); ++i) o << (i ? "," : "") << r[i];
      o << '\n';
    }
    return o.str();
  }

  std::string text() const {
    std::vector<size_t> w(columns.size());
    for (size_t i = 0; i < columns.size(); ++i) w[i] = columns[i].size();
    for (const auto& r : rows)
      for (size_t i = 0; i < r.size() && i < w.size(); ++i) w[i] = std::max(w[i], r[i].size());
    std::ostringstream o;
    o << title << ": " << (pass() ? "PASS" : "FAIL") << "\n\n";
    auto line = [&](const std::vector<std::string>& r) {
      for (size_t i = 0; i < r.size(); ++i) o << (i ? "  " : "") << std::setw(static_cast<int>(w[i])) << r[i];
      o << '\n';
    };
    line(columns);
    for (const auto& r : rows) line(r);
    if (!notes.empty()) o << '\n';
    for (const auto& n : notes) o << n << '\n';
    return o.str();
  }

  std::string sweep_csv() const {
    std::ostringstream o;
    o << "param,abs,arg\n";
    for (const auto& s : sweep) o << format_number(s[0]) << ',' << format_number(s[1]) << ',' << format_number(s[2]) << '\n';
    return o.str();
  }

  void write(const std::string& dir, bool with_sweep) const {
    std::filesystem::create_directories(dir);
    std::ofstream(std::filesystem::path(dir) / "report.csv") << csv();
    std::ofstream(std::filesystem::path(dir) / "report.txt") << text();
    if (with_sweep) std::ofstream(std::filesystem::path(dir) / "sweep.csv") << sweep_csv();
  }
};

namespace detail {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline std::string num(double v) {
  std::ostringstream o;
  o << std::setprecision(10) << v;
  return o.str();
}

inline IntegralSpec integral_spec(const IntegralConfig& c, const Params& p) {
  IntegralSpec s;
  s.dim = c.dim;
  s.phase = kTwoPi * parse_expr(c.phase);
  s.weight = parse_expr(c.weight);
  for (const auto& b : c.box) s.box.push_back({b[0], b[1]});
  s.params = p;
  return s;
}

inline PipelineSpec pipeline_spec(const RunConfig& c, const Params& p) {
  PipelineSpec s;
  s.integral = integral_spec(*c.integral, p);
  s.X = c.X;
  for (const auto& v : c.order) s.order.push_back(variable_index(v));
  for (const auto& st : c.steps) {
    StepScales sc;
    if (!st.Z.empty()) {
      auto ev = [&](const std::string& e) { return eval(parse_expr(e), {}, p).real(); };
      sc = {false, ev(st.Z), kTwoPi * ev(st.Y), ev(st.X), kTwoPi * ev(st.R)};
    }
    s.scales.push_back(sc);
  }
  if (s.scales.size() != s.order.size()) s.scales.assign(s.order.size(), StepScales{});
  return s;
}

inline OracleResult oracle(const IntegralSpec& s, double tol) { return s.dim == 1 ? quad1d(s, tol) : quad_nd(s, tol); }

inline std::vector<std::pair<std::string, Params>> sweep_points(const RunConfig& c) {
  Params base = c.integral ? Params(c.integral->params.begin(), c.integral->params.end()) : Params{};
  if (!c.sweep) return {{"", base}};
  std::vector<std::pair<std::string, Params>> out;
  for (double v : c.sweep->values) {
    Params p = base;
    p[c.sweep->param] = v;
    out.push_back({num(v), p});
  }
  return out;
}

inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) mx += std::log(x[i]), my += std::log(y[i]);
  mx /= x.size();
  my /= y.size();
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

inline Report run_oracle(const RunConfig& c) {
  Report r;
  r.title = "oracle";
  r.columns = {"param", "re", "im", "abs", "error_estimate", "panels"};
  for (const auto& [label, p] : sweep_points(c)) {
    auto o = oracle(integral_spec(*c.integral, p), c.tol);
    r.add({label, num(o.value.real()), num(o.value.imag()), num(std::abs(o.value)), num(o.error_estimate),
           std::to_string(o.panels_used)},
          true);
    if (c.sweep) r.sweep.push_back({c.sweep->values[r.sweep.size()], std::abs(o.value), std::arg(o.value)});
  }
  return r;
}

inline Report run_eval(const RunConfig& c) {
  Report r;
  r.title = "eval";
  r.columns = {"param", "re", "im", "abs", "final_phase", "truncation_estimate", "stationary_point"};
  PipelineOptions opt;
  opt.n_max = c.n_max;
  for (const auto& [label, p] : sweep_points(c)) {
    auto res = run(pipeline_spec(c, p), opt);
    std::string pt;
    for (double x : res.stationary_point) pt += (pt.empty() ? "" : " ") + num(x);
    r.add({label, num(res.main_value.real()), num(res.main_value.imag()), num(std::abs(res.main_value)),
           num(res.final_phase), num(res.truncation_estimate), pt},
          true);
    if (c.sweep) r.sweep.push_back({c.sweep->values[r.sweep.size()], std::abs(res.main_value), std::arg(res.main_value)});
  }
  return r;
}

}  // namespace detail

// asymptotic value against the oracle for every sweep point
inline Report run_compare(const RunConfig& c) {
  if (c.mode != Mode::Compare || !c.integral) throw InvalidArgument("run_compare needs a compare config");
  using detail::num;
  Report r;
  r.title = "compare";
  r.columns = {"param", "kind", "oracle_re", "oracle_im", "main_re", "main_im", "diff", "rel_diff", "estimate", "bound", "verdict"};
  PipelineOptions opt;
  opt.n_max = c.n_max;
  std::vector<double> xs, errs;
  for (const auto& [label, p] : detail::sweep_points(c)) {
    PipelineSpec ps = detail::pipeline_spec(c, p);
    auto o = detail::oracle(ps.integral, c.tol);
    if (c.sweep) r.sweep.push_back({p.at(c.sweep->param), std::abs(o.value), std::arg(o.value)});
    if (ps.integral.dim == 1) {
      // a one-variable integral without a stationary point is checked against Z R^{-3}
      SPContext ctx;
      ctx.phase = ps.integral.phase;
      ctx.params = p;
      const auto& b = ps.integral.box[0];
      ctx.interval = {b.lo / 4, b.hi * 4};
      const auto& sc = ps.scales[0];
      if (sc.automatic) {
        ctx.Z = b.lo;
        ctx.X = c.X;
        ctx.Y = ctx.R = 1.0;
      } else {
        ctx.Z = sc.Z;
        ctx.Y = sc.Y;
        ctx.X = sc.X;
        ctx.R = sc.R;
      }
      auto st = classify(ctx);
      if (st.kind == StationaryKind::NonStationary) {
        double bound = ctx.Z * std::pow(ctx.R, -3.0) * 1e3;
        bool ok = std::abs(o.value) <= bound;
        r.add({label, "NonStationary", num(o.value.real()), num(o.value.imag()), "0", "0", num(std::abs(o.value)), "", "",
               num(bound), ok ? "pass" : "fail"},
              ok);
        continue;
      }
    }
    auto res = run(ps, opt);
    double diff = std::abs(res.main_value - o.value);
    double bound = std::max({5 * res.truncation_estimate, c.rel_tol * std::abs(o.value), c.abs_floor});
    bool ok = diff <= bound;
    r.add({label, res.pruned ? "Pruned" : "Stationary", num(o.value.real()), num(o.value.imag()),
           num(res.main_value.real()), num(res.main_value.imag()), num(diff), num(diff / std::abs(o.value)),
           num(res.truncation_estimate), num(bound), ok ? "pass" : "fail"},
          ok);
    if (c.sweep) {
      xs.push_back(p.at(c.sweep->param));
      errs.push_back(std::max(diff / std::abs(o.value), 1e-300));
    }
  }
  if (c.sweep && c.sweep->expected_slope && xs.size() >= 2) {
    double slope = detail::fit_slope(xs, errs);
    bool ok = std::abs(slope - *c.sweep->expected_slope) <= c.sweep->slope_tol;
    r.add({"slope", "fit", "", "", "", "", num(slope), "", "", num(*c.sweep->expected_slope) + "+-" + num(c.sweep->slope_tol),
           ok ? "pass" : "fail"},
          ok);
  }
  return r;
}

inline FamilySpec family_spec(const FamilyConfig& f) {
  FamilySpec s;
  if (f.builtin == "dilation") {
    s = dilation_family(f.dim, f.lo, f.hi);
  } else if (f.builtin == "oscillation") {
    s = oscillation_family(f.dim, f.m_max, f.lo, f.hi);
  } else {
    s.dim = f.dim;
    s.weight = parse_expr(f.weight);
    if (!f.phase.empty()) s.phase = detail::kTwoPi * parse_expr(f.phase);
    s.fixed = Params(f.fixed.begin(), f.fixed.end());
    for (const auto& list : f.scales) {
      s.scales.emplace_back();
      for (const auto& e : list) s.scales.back().push_back(parse_expr(e));
    }
    for (const auto& e : f.inert_scale) s.inert_scale.push_back(parse_expr(e));
  }
  for (const auto& [k, v] : f.ranges)
    s.ranges[k] = v.values.empty() ? ParamRange{v.lo, v.hi, v.log, {}} : ParamRange::list(v.values);
  return s;
}

inline Report run_inert_check(const RunConfig& c) {
  auto rep = check_inert(family_spec(*c.family), c.max_order, c.param_samples, c.point_samples, c.ceiling, c.seed);
  Report r;
  r.title = "inert-check";
  r.columns = {"j", "C_hat", "normalized", "bound", "worst_T", "worst_x", "verdict"};
  for (const auto& row : rep.rows)
    r.add({detail::join(row.j), detail::num(row.C_hat), detail::num(row.normalized), detail::num(row.bound),
           detail::format_params(row.worst_T), detail::join(row.worst_x), row.pass ? "pass" : "fail"},
          row.pass);
  r.notes.push_back(std::to_string(rep.param_samples) + " parameter samples, " + std::to_string(rep.empty_samples) +
                    " with empty support, " + std::to_string(rep.point_evaluations) + " point evaluations");
  return r;
}

inline Report run_example_ci(const RunConfig& c) {
  using detail::num;
  Report r;
  r.title = "example-ci";
  r.columns = {"P", "status", "oracle_re", "oracle_im", "main_re", "main_im", "rel_diff", "estimate", "t0_rel_err", "phase_rel_err", "verdict"};
  const auto& ci = *c.ci;
  for (double P : ci.P) {
    auto spec = ci_pipeline_spec(P, ci.ratios, ci.q);
    spec.ambient->delta = ci.delta;
    PipelineOptions opt;
    opt.n_max = c.n_max;
    auto res = run(spec, opt);
    if (res.pruned) {
      r.add({num(P), "pruned", "", "", "", "", "", "", "", "", "pass"}, true);
      r.notes.push_back("P=" + num(P) + ": " + res.reason);
      continue;
    }
    auto o = quad_nd(*spec.original, c.tol);
    r.sweep.push_back({P, std::abs(o.value), std::arg(o.value)});
    auto cf = ci_closed_forms(spec.original->params);
    double t0err = std::max({std::abs(res.stationary_point[0] / cf.x1 - 1), std::abs(res.stationary_point[1] / cf.x2 - 1),
                             std::abs(res.stationary_point[2] / cf.x3 - 1)});
    const auto& p = spec.original->params;
    double expect = detail::kTwoPi * 2 * std::sqrt(p.at("l1") * p.at("l2") * p.at("l3") / p.at("t"));
    double pherr = std::abs(res.final_phase / expect - 1);
    double diff = std::abs(res.main_value - o.value);
    double bound = std::max({5 * res.truncation_estimate, c.rel_tol * std::abs(o.value), c.abs_floor});
    bool ok = t0err <= 1e-8 && pherr <= 1e-6 && diff <= bound;
    r.add({num(P), "ok", num(o.value.real()), num(o.value.imag()), num(res.main_value.real()), num(res.main_value.imag()),
           num(diff / std::abs(o.value)), num(res.truncation_estimate / std::abs(o.value)), num(t0err), num(pherr),
           ok ? "pass" : "fail"},
          ok);
  }
  return r;
}

inline Report run_config(const RunConfig& c) {
  switch (c.mode) {
    case Mode::Oracle: return detail::run_oracle(c);
    case Mode::Eval: return detail::run_eval(c);
    case Mode::Compare: return run_compare(c);
    case Mode::InertCheck: return run_inert_check(c);
    default: return run_example_ci(c);
  }
}

}  // namespace phasekit
