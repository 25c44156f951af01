#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "expr.hpp"
#include "parser.hpp"

namespace phasekit {

// Run configuration. Phases (and the phase scales Y, R) are written in the
// e(x) = exp(2 pi i x) convention and are multiplied by 2 pi when a run starts.

enum class Mode { Oracle, Eval, Compare, InertCheck, ExampleCi };

inline const char* to_string(Mode m) {
  switch (m) {
    case Mode::Oracle: return "oracle";
    case Mode::Eval: return "eval";
    case Mode::Compare: return "compare";
    case Mode::InertCheck: return "inert-check";
    default: return "example-ci";
  }
}

inline std::optional<Mode> parse_mode(const std::string& s) {
  for (Mode m : {Mode::Oracle, Mode::Eval, Mode::Compare, Mode::InertCheck, Mode::ExampleCi})
    if (s == to_string(m)) return m;
  return std::nullopt;
}

struct IntegralConfig {
  int dim = 1;
  std::string phase;
  std::string weight;
  std::vector<std::array<double, 2>> box;
  std::map<std::string, double> params;
  bool operator==(const IntegralConfig&) const = default;
};

// scales are expressions over the parameters; empty Z means automatic
struct StepConfig {
  std::string var;
  std::string Z, Y, X, R;
  bool operator==(const StepConfig&) const = default;
};

struct SweepConfig {
  std::string param;
  std::vector<double> values;
  std::optional<double> expected_slope;
  double slope_tol = 0.5;
  bool operator==(const SweepConfig&) const = default;
};

struct RangeConfig {
  double lo = 0, hi = 0;
  bool log = false;
  std::vector<double> values;
  bool operator==(const RangeConfig&) const = default;
};

struct FamilyConfig {
  std::string builtin;  // "dilation", "oscillation" or empty
  int dim = 1;
  double lo = 1.0, hi = 1e6, m_max = 50.0;
  std::string weight;
  std::string phase;
  std::map<std::string, RangeConfig> ranges;
  std::map<std::string, double> fixed;
  std::vector<std::vector<std::string>> scales;
  std::vector<std::string> inert_scale;
  bool operator==(const FamilyConfig&) const = default;
};

struct CiConfig {
  std::vector<double> P;
  std::array<double, 3> ratios{1, 1, 1};
  double q = 1e3;
  double delta = 0.1;
  bool operator==(const CiConfig&) const = default;
};

struct RunConfig {
  Mode mode = Mode::Oracle;
  std::optional<IntegralConfig> integral;
  std::vector<std::string> order;
  std::vector<StepConfig> steps;
  std::optional<SweepConfig> sweep;
  std::optional<FamilyConfig> family;
  std::optional<CiConfig> ci;
  double tol = 1e-10;
  int n_max = 1;
  unsigned long long seed = 0;
  double rel_tol = 0.0;
  double abs_floor = 1e-12;
  double X = 1.0;
  int max_order = 4;
  int param_samples = 16;
  int point_samples = 6;
  double ceiling = 0.0;
  std::string out_dir = ".";
  bool sweep_csv = false;
  bool operator==(const RunConfig&) const = default;
};

namespace detail {

using nlohmann::json;

class ConfigReader {
 public:
  std::vector<std::string> errors;

  void fail(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  void keys(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return;
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || it.key() == a;
      if (!ok) fail(path + "." + it.key(), "unknown field");
    }
  }

  template <class T>
  void get(const json& j, const std::string& path, const char* key, T& out, bool required = false) {
    if (!j.is_object() || !j.contains(key)) {
      if (required) fail(path + "." + key, "missing");
      return;
    }
    try {
      out = j.at(key).get<T>();
    } catch (const std::exception&) {
      fail(path + "." + key, "wrong type");
    }
  }

  void expr(const std::string& path, const std::string& text, std::set<std::string>& used) {
    try {
      collect_params(parse_expr(text), used);
    } catch (const ExprParseError& e) {
      fail(path, e.what());
    }
  }

  void bound(const std::string& path, const std::set<std::string>& used, const std::set<std::string>& known) {
    for (const auto& n : used)
      if (!known.count(n)) fail(path, "unbound parameter '" + n + "'");
  }
};

inline int variable_index(const std::string& name) {
  if (name.size() < 2 || name[0] != 'x') return -1;
  for (size_t i = 1; i < name.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(name[i]))) return -1;
  return std::stoi(name.substr(1)) - 1;
}

}  // namespace detail

inline RunConfig parse_config(const std::string& text) {
  using detail::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError({std::string("$: not valid JSON: ") + e.what()});
  }
  detail::ConfigReader rd;
  RunConfig c;
  rd.keys(j, "$",
          {"mode", "integral", "order", "steps", "sweep", "family", "example", "tol", "n_max", "seed", "rel_tol",
           "abs_floor", "X", "max_order", "param_samples", "point_samples", "ceiling", "output"});
  if (!rd.errors.empty()) throw SchemaError(rd.errors);
  std::string mode;
  rd.get(j, "$", "mode", mode, true);
  if (!mode.empty()) {
    if (auto m = parse_mode(mode))
      c.mode = *m;
    else
      rd.fail("$.mode", "unknown mode '" + mode + "'");
  }
  rd.get(j, "$", "tol", c.tol);
  rd.get(j, "$", "n_max", c.n_max);
  rd.get(j, "$", "seed", c.seed);
  rd.get(j, "$", "rel_tol", c.rel_tol);
  rd.get(j, "$", "abs_floor", c.abs_floor);
  rd.get(j, "$", "X", c.X);
  rd.get(j, "$", "max_order", c.max_order);
  rd.get(j, "$", "param_samples", c.param_samples);
  rd.get(j, "$", "point_samples", c.point_samples);
  rd.get(j, "$", "ceiling", c.ceiling);
  if (!(c.tol > 0)) rd.fail("$.tol", "must be positive");
  if (c.n_max < 0 || c.n_max > 10) rd.fail("$.n_max", "must be in [0, 10]");
  if (!(c.X >= 1)) rd.fail("$.X", "must be at least 1");
  if (c.max_order < 0 || c.max_order > 8) rd.fail("$.max_order", "must be in [0, 8]");
  if (c.param_samples < 1) rd.fail("$.param_samples", "must be positive");
  if (c.point_samples < 1) rd.fail("$.point_samples", "must be positive");
  if (j.contains("output")) {
    const auto& o = j["output"];
    rd.keys(o, "$.output", {"dir", "sweep_csv"});
    rd.get(o, "$.output", "dir", c.out_dir);
    rd.get(o, "$.output", "sweep_csv", c.sweep_csv);
  }

  std::set<std::string> sweep_names;
  if (j.contains("sweep")) {
    const auto& s = j["sweep"];
    SweepConfig sw;
    rd.keys(s, "$.sweep", {"param", "values", "expected_slope", "slope_tol"});
    rd.get(s, "$.sweep", "param", sw.param, true);
    rd.get(s, "$.sweep", "values", sw.values, true);
    if (s.is_object() && s.contains("expected_slope")) {
      double v = 0;
      rd.get(s, "$.sweep", "expected_slope", v);
      sw.expected_slope = v;
    }
    rd.get(s, "$.sweep", "slope_tol", sw.slope_tol);
    if (sw.values.empty()) rd.fail("$.sweep.values", "must not be empty");
    sweep_names.insert(sw.param);
    c.sweep = sw;
  }

  std::set<std::string> known = sweep_names;
  if (j.contains("integral")) {
    const auto& s = j["integral"];
    IntegralConfig ic;
    rd.keys(s, "$.integral", {"dim", "phase", "weight", "box", "params"});
    rd.get(s, "$.integral", "dim", ic.dim, true);
    rd.get(s, "$.integral", "phase", ic.phase, true);
    rd.get(s, "$.integral", "weight", ic.weight, true);
    rd.get(s, "$.integral", "box", ic.box, true);
    rd.get(s, "$.integral", "params", ic.params);
    if (ic.dim < 1 || ic.dim > 3) rd.fail("$.integral.dim", "must be 1, 2 or 3");
    if (static_cast<int>(ic.box.size()) != ic.dim) rd.fail("$.integral.box", "needs one interval per variable");
    for (size_t i = 0; i < ic.box.size(); ++i)
      if (!(ic.box[i][1] > ic.box[i][0])) rd.fail("$.integral.box[" + std::to_string(i) + "]", "empty interval");
    for (const auto& [k, v] : ic.params) known.insert(k);
    for (auto [name, text] : {std::pair{"phase", ic.phase}, std::pair{"weight", ic.weight}}) {
      std::set<std::string> used;
      std::string path = std::string("$.integral.") + name;
      rd.expr(path, text, used);
      rd.bound(path, used, known);
      try {
        if (max_variable(parse_expr(text)) >= ic.dim) rd.fail(path, "uses a variable beyond dim");
      } catch (const ExprParseError&) {
      }
    }
    c.integral = ic;
  }
  rd.get(j, "$", "order", c.order);
  if (j.contains("steps")) {
    if (!j["steps"].is_array()) {
      rd.fail("$.steps", "expected an array");
    } else {
      for (size_t i = 0; i < j["steps"].size(); ++i) {
        const auto& s = j["steps"][i];
        std::string path = "$.steps[" + std::to_string(i) + "]";
        StepConfig st;
        rd.keys(s, path, {"var", "Z", "Y", "X", "R"});
        rd.get(s, path, "var", st.var, true);
        rd.get(s, path, "Z", st.Z);
        rd.get(s, path, "Y", st.Y);
        rd.get(s, path, "X", st.X);
        rd.get(s, path, "R", st.R);
        bool any = !st.Z.empty() || !st.Y.empty() || !st.X.empty() || !st.R.empty();
        bool all = !st.Z.empty() && !st.Y.empty() && !st.X.empty() && !st.R.empty();
        if (any && !all) rd.fail(path, "give all of Z, Y, X, R or none");
        for (auto [name, text] : {std::pair{"Z", st.Z}, std::pair{"Y", st.Y}, std::pair{"X", st.X}, std::pair{"R", st.R}}) {
          if (text.empty()) continue;
          std::set<std::string> used;
          rd.expr(path + "." + name, text, used);
          rd.bound(path + "." + name, used, known);
        }
        c.steps.push_back(st);
      }
    }
  }
  if (c.integral) {
    int d = c.integral->dim;
    if (c.order.empty())
      for (int i = d; i >= 1; --i) c.order.push_back("x" + std::to_string(i));
    std::set<int> seen;
    for (const auto& v : c.order) {
      int k = detail::variable_index(v);
      if (k < 0 || k >= d || !seen.insert(k).second) rd.fail("$.order", "'" + v + "' is not a distinct variable of the integral");
    }
    if (!c.steps.empty()) {
      if (c.steps.size() != c.order.size()) rd.fail("$.steps", "needs one entry per eliminated variable");
      for (size_t i = 0; i < c.steps.size() && i < c.order.size(); ++i)
        if (c.steps[i].var != c.order[i]) rd.fail("$.steps[" + std::to_string(i) + "].var", "does not follow $.order");
    }
  }

  if (j.contains("family")) {
    const auto& s = j["family"];
    FamilyConfig f;
    rd.keys(s, "$.family", {"builtin", "dim", "lo", "hi", "m_max", "weight", "phase", "ranges", "fixed", "scales", "inert_scale"});
    rd.get(s, "$.family", "builtin", f.builtin);
    rd.get(s, "$.family", "dim", f.dim, true);
    rd.get(s, "$.family", "lo", f.lo);
    rd.get(s, "$.family", "hi", f.hi);
    rd.get(s, "$.family", "m_max", f.m_max);
    rd.get(s, "$.family", "weight", f.weight);
    rd.get(s, "$.family", "phase", f.phase);
    rd.get(s, "$.family", "fixed", f.fixed);
    rd.get(s, "$.family", "scales", f.scales);
    rd.get(s, "$.family", "inert_scale", f.inert_scale);
    if (f.dim < 1 || f.dim > 3) rd.fail("$.family.dim", "must be 1, 2 or 3");
    if (s.is_object() && s.contains("ranges")) {
      const auto& r = s["ranges"];
      if (!r.is_object()) rd.fail("$.family.ranges", "expected an object");
      else
        for (auto it = r.begin(); it != r.end(); ++it) {
          std::string path = "$.family.ranges." + it.key();
          RangeConfig rc;
          if (it->is_array()) {
            rd.get(r, "$.family.ranges", it.key().c_str(), rc.values);
            if (rc.values.empty()) rd.fail(path, "empty list");
          } else {
            rd.keys(*it, path, {"lo", "hi", "log"});
            rd.get(*it, path, "lo", rc.lo, true);
            rd.get(*it, path, "hi", rc.hi, true);
            rd.get(*it, path, "log", rc.log);
            if (!(rc.hi >= rc.lo)) rd.fail(path, "hi below lo");
            if (rc.log && !(rc.lo > 0)) rd.fail(path, "log range must be positive");
          }
          f.ranges[it.key()] = rc;
        }
    }
    if (f.builtin.empty()) {
      std::set<std::string> fk;
      for (const auto& [k, v] : f.ranges) fk.insert(k);
      for (const auto& [k, v] : f.fixed) fk.insert(k);
      if (f.weight.empty()) rd.fail("$.family.weight", "missing");
      for (auto [name, text] : {std::pair{"weight", f.weight}, std::pair{"phase", f.phase}}) {
        if (text.empty()) continue;
        std::set<std::string> used;
        rd.expr(std::string("$.family.") + name, text, used);
        rd.bound(std::string("$.family.") + name, used, fk);
      }
      if (static_cast<int>(f.scales.size()) != f.dim) rd.fail("$.family.scales", "needs one list per variable");
      for (size_t k = 0; k < f.scales.size(); ++k)
        for (const auto& e : f.scales[k]) {
          std::set<std::string> used;
          rd.expr("$.family.scales[" + std::to_string(k) + "]", e, used);
          rd.bound("$.family.scales[" + std::to_string(k) + "]", used, fk);
        }
      for (const auto& e : f.inert_scale) {
        std::set<std::string> used;
        rd.expr("$.family.inert_scale", e, used);
        rd.bound("$.family.inert_scale", used, fk);
      }
    } else if (f.builtin != "dilation" && f.builtin != "oscillation") {
      rd.fail("$.family.builtin", "unknown family '" + f.builtin + "'");
    }
    c.family = f;
  }

  if (j.contains("example")) {
    const auto& s = j["example"];
    CiConfig ci;
    rd.keys(s, "$.example", {"P", "ratios", "q", "delta"});
    if (s.is_object() && s.contains("P")) {
      if (s["P"].is_number()) ci.P = {s["P"].get<double>()};
      else rd.get(s, "$.example", "P", ci.P);
    } else {
      rd.fail("$.example.P", "missing");
    }
    rd.get(s, "$.example", "ratios", ci.ratios);
    rd.get(s, "$.example", "q", ci.q);
    rd.get(s, "$.example", "delta", ci.delta);
    for (double p : ci.P)
      if (!(p >= 50)) rd.fail("$.example.P", "values must be at least 50");
    if (!(ci.q >= 1)) rd.fail("$.example.q", "must be at least 1");
    c.ci = ci;
  }

  switch (c.mode) {
    case Mode::Oracle:
    case Mode::Eval:
    case Mode::Compare:
      if (!c.integral) rd.fail("$.integral", "required for mode " + mode);
      break;
    case Mode::InertCheck:
      if (!c.family) rd.fail("$.family", "required for mode " + mode);
      break;
    case Mode::ExampleCi:
      if (!c.ci) rd.fail("$.example", "required for mode " + mode);
      break;
  }
  if (!rd.errors.empty()) throw SchemaError(rd.errors);
  return c;
}

inline std::string render(const RunConfig& c) {
  using detail::json;
  json j;
  j["mode"] = to_string(c.mode);
  j["tol"] = c.tol;
  j["n_max"] = c.n_max;
  j["seed"] = c.seed;
  j["rel_tol"] = c.rel_tol;
  j["abs_floor"] = c.abs_floor;
  j["X"] = c.X;
  j["max_order"] = c.max_order;
  j["param_samples"] = c.param_samples;
  j["point_samples"] = c.point_samples;
  j["ceiling"] = c.ceiling;
  j["output"] = {{"dir", c.out_dir}, {"sweep_csv", c.sweep_csv}};
  if (c.integral) {
    const auto& i = *c.integral;
    j["integral"] = {{"dim", i.dim}, {"phase", i.phase}, {"weight", i.weight}, {"box", i.box}, {"params", i.params}};
  }
  if (!c.order.empty()) j["order"] = c.order;
  if (!c.steps.empty()) {
    j["steps"] = json::array();
    for (const auto& s : c.steps) {
      json e{{"var", s.var}};
      if (!s.Z.empty()) e.update({{"Z", s.Z}, {"Y", s.Y}, {"X", s.X}, {"R", s.R}});
      j["steps"].push_back(e);
    }
  }
  if (c.sweep) {
    j["sweep"] = {{"param", c.sweep->param}, {"values", c.sweep->values}, {"slope_tol", c.sweep->slope_tol}};
    if (c.sweep->expected_slope) j["sweep"]["expected_slope"] = *c.sweep->expected_slope;
  }
  if (c.family) {
    const auto& f = *c.family;
    json e{{"dim", f.dim}};
    if (!f.builtin.empty()) {
      e.update({{"builtin", f.builtin}, {"lo", f.lo}, {"hi", f.hi}, {"m_max", f.m_max}});
    } else {
      e.update({{"weight", f.weight}, {"fixed", f.fixed}, {"scales", f.scales}, {"inert_scale", f.inert_scale}});
      if (!f.phase.empty()) e["phase"] = f.phase;
    }
    json r = json::object();
    for (const auto& [k, v] : f.ranges) {
      if (!v.values.empty())
        r[k] = v.values;
      else
        r[k] = {{"lo", v.lo}, {"hi", v.hi}, {"log", v.log}};
    }
    e["ranges"] = r;
    j["family"] = e;
  }
  if (c.ci) j["example"] = {{"P", c.ci->P}, {"ratios", c.ci->ratios}, {"q", c.ci->q}, {"delta", c.ci->delta}};
  return j.dump(2) + "\n";
}

}  // namespace phasekit
