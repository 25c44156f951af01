#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <functional>
#include <numbers>
#include <queue>
#include <vector>

#include "expr.hpp"
#include "parallel.hpp"

namespace phasekit {

struct Interval {
  double lo = 0.0, hi = 1.0;
  double width() const { return hi - lo; }
  bool operator==(const Interval&) const = default;
};

// integral of weight * e^{i phase} over a box; phase in radians
struct IntegralSpec {
  int dim = 1;
  Expr phase;
  Expr weight;
  std::vector<Interval> box;
  Params params;
};

struct OracleResult {
  cplx value;
  double error_estimate = 0.0;
  long long panels_used = 0;  // panels in 1-d, integrand nodes in n-d
  double l1_mass = 0.0;       // estimate of the integral of |integrand|
};

struct OracleOptions {
  long long panel_budget = 10'000'000;
  long long node_budget = 4'000'000'000LL;
  int scan_points = 1024;
  bool parallel = true;
};

namespace detail {

constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b;
  cplx value;
  double err, abs;
};

// 15-point Kronrod rule with the embedded 7-point Gauss rule, error model as in QUADPACK
template <class F>
Panel gk15(F& f, double a, double b) {
  constexpr double eps = 2.220446049250313e-16;
  double c = 0.5 * (a + b), h = 0.5 * (b - a);
  cplx fv[15];
  fv[7] = f(c);
  for (int j = 0; j < 7; ++j) {
    double dx = h * kXgk[j];
    fv[j] = f(c - dx);
    fv[14 - j] = f(c + dx);
  }
  cplx resk = kWgk[7] * fv[7], resg = kWg[3] * fv[7];
  double resabs = kWgk[7] * std::abs(fv[7]);
  for (int j = 0; j < 7; ++j) {
    cplx s = fv[j] + fv[14 - j];
    resk += kWgk[j] * s;
    resabs += kWgk[j] * (std::abs(fv[j]) + std::abs(fv[14 - j]));
    if (j % 2 == 1) resg += kWg[j / 2] * s;
  }
  cplx mean = 0.5 * resk;
  double resasc = kWgk[7] * std::abs(fv[7] - mean);
  for (int j = 0; j < 7; ++j)
    resasc += kWgk[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));
  double err = std::abs((resk - resg) * h);
  resasc *= std::abs(h);
  resabs *= std::abs(h);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > 1e-290) err = std::max(50.0 * eps * resabs, err);
  return {a, b, resk * h, err, resabs};
}

struct LongSum {
  long double re = 0, im = 0;
  void add(cplx v) {
    re += v.real();
    im += v.imag();
  }
  cplx get() const { return {static_cast<double>(re), static_cast<double>(im)}; }
};

}  // namespace detail

// Adaptive integration of f on [a, b] where |phase'| <= omega. Initial panels
// span at most a quarter period; the worst panel is bisected until the summed
// error meets the target. The final sum runs in panel order.
template <class F>
OracleResult integrate_panels(F&& f, double a, double b, double omega, double tol,
                              const OracleOptions& opt = {}) {
  using detail::Panel;
  constexpr double eps = 2.220446049250313e-16;
  if (!(b > a)) return {0.0, 0.0, 0, 0.0};
  double width = b - a;
  double h0 = width / 8.0;
  if (omega > 0) h0 = std::min(h0, std::numbers::pi / (2.0 * omega));
  double n0d = std::ceil(width / h0);
  if (n0d > static_cast<double>(opt.panel_budget))
    throw QuadratureFailure("initial panel count exceeds the panel budget");
  size_t n0 = static_cast<size_t>(n0d);
  std::vector<Panel> panels(n0);
  auto initial = [&](size_t i) {
    double lo = a + width * double(i) / double(n0);
    double hi = (i + 1 == n0) ? b : a + width * double(i + 1) / double(n0);
    panels[i] = detail::gk15(f, lo, hi);
  };
  if (opt.parallel)
    parallel_for(n0, initial);
  else
    for (size_t i = 0; i < n0; ++i) initial(i);
  auto totals = [&](cplx& v, double& e, double& m) {
    detail::LongSum s;
    long double es = 0, ms = 0;
    for (const auto& p : panels) {
      s.add(p.value);
      es += p.err;
      ms += p.abs;
    }
    v = s.get();
    e = static_cast<double>(es);
    m = static_cast<double>(ms);
  };
  cplx value;
  double err, mass;
  totals(value, err, mass);
  auto target = [&] {
    return std::max(tol * std::max(std::abs(value), 1e-3 * mass), 100.0 * eps * mass);
  };
  using Item = std::pair<double, size_t>;
  std::priority_queue<Item> heap;
  for (size_t i = 0; i < panels.size(); ++i) heap.push({panels[i].err, i});
  long long splits = 0;
  while (err > target() && !heap.empty()) {
    if (static_cast<long long>(panels.size()) >= opt.panel_budget)
      throw QuadratureFailure("panel budget exhausted");
    auto [e, i] = heap.top();
    heap.pop();
    Panel p = panels[i];
    if (p.b - p.a < 1e-13 * width) continue;  // roundoff level, leave it
    double mid = 0.5 * (p.a + p.b);
    Panel l = detail::gk15(f, p.a, mid), r = detail::gk15(f, mid, p.b);
    value += l.value + r.value - p.value;
    err += l.err + r.err - p.err;
    mass += l.abs + r.abs - p.abs;
    panels[i] = l;
    panels.push_back(r);
    heap.push({l.err, i});
    heap.push({r.err, panels.size() - 1});
    if (++splits % 4096 == 0) totals(value, err, mass);
  }
  std::sort(panels.begin(), panels.end(), [](const Panel& x, const Panel& y) { return x.a < y.a; });
  totals(value, err, mass);
  return {value, err, static_cast<long long>(panels.size()), mass};
}

// As integrate_panels, with the phase-derivative bound taken from a scan of dphi.
template <class F, class D>
OracleResult integrate_oscillatory(F&& f, D&& abs_dphi, double a, double b, double tol,
                                   const OracleOptions& opt = {}) {
  double omega = 0.0;
  int n = opt.scan_points;
  for (int i = 0; i <= n; ++i) omega = std::max(omega, std::abs(abs_dphi(a + (b - a) * i / n)));
  // the scan can step over a peak of |phase'| by one grid cell
  return integrate_panels(f, a, b, 1.25 * omega, tol, opt);
}

inline void validate_spec(const IntegralSpec& s) {
  if (s.dim < 1 || s.dim > 3) throw InvalidArgument("integral dimension must be 1, 2 or 3");
  if (static_cast<int>(s.box.size()) != s.dim) throw InvalidArgument("box does not match dimension");
  for (const auto& iv : s.box)
    if (!(iv.hi > iv.lo)) throw InvalidArgument("empty integration interval");
  if (max_variable(s.phase) >= s.dim || max_variable(s.weight) >= s.dim)
    throw InvalidArgument("expression uses a variable beyond the integral dimension");
}

inline OracleResult quad1d(const IntegralSpec& s, double tol, const OracleOptions& opt = {}) {
  if (s.dim != 1) throw InvalidArgument("quad1d needs a one-dimensional spec");
  if (!(tol > 0)) throw InvalidArgument("tol must be positive");
  validate_spec(s);
  RealProgram W(s.weight, s.params), P(s.phase, s.params);
  auto f = [&](double t) -> cplx {
    double w = W(&t);
    if (w == 0.0) return 0.0;
    double ph = P(&t);
    return {w * std::cos(ph), w * std::sin(ph)};
  };
  auto dphi = [&](double t) { return P.with_derivative(&t, 0).second; };
  return integrate_oscillatory(f, dphi, s.box[0].lo, s.box[0].hi, tol, opt);
}

namespace detail {

// max |d phase / d x_k| on a coarse grid, reduced per level over a
// neighbourhood of the outer coordinates and over all inner coordinates
class FrequencyMap {
 public:
  static constexpr int G = 17;

  FrequencyMap(const RealProgram& P, const std::vector<Interval>& box) : d_(box.size()), box_(box) {
    size_t nodes = 1;
    for (size_t i = 0; i < d_; ++i) nodes *= G;
    std::vector<std::vector<double>> g(d_, std::vector<double>(nodes));
    std::vector<size_t> idx(d_);
    double x[3];
    for (size_t n = 0; n < nodes; ++n) {
      size_t r = n;
      for (size_t i = 0; i < d_; ++i) {
        idx[i] = r % G;
        r /= G;
        x[i] = box[i].lo + box[i].width() * double(idx[i]) / (G - 1);
      }
      for (size_t k = 0; k < d_; ++k) g[k][n] = std::abs(P.with_derivative(x, int(k)).second);
    }
    table_.resize(d_);
    for (size_t k = 0; k < d_; ++k) {
      size_t outer = 1;
      for (size_t i = 0; i < k; ++i) outer *= G;
      table_[k].assign(outer, 0.0);
      for (size_t n = 0; n < nodes; ++n) {
        size_t r = n;
        for (size_t i = 0; i < d_; ++i) {
          idx[i] = r % G;
          r /= G;
        }
        // spread this node's value to every outer tuple within one cell
        spread(k, 0, 0, 1, idx, g[k][n]);
      }
    }
  }

  double bound(size_t k, const double* x) const {
    size_t key = 0, mul = 1;
    for (size_t i = 0; i < k; ++i) {
      double u = (x[i] - box_[i].lo) / box_[i].width() * (G - 1);
      long gi = std::lround(std::clamp(u, 0.0, double(G - 1)));
      key += static_cast<size_t>(gi) * mul;
      mul *= G;
    }
    return table_[k][key];
  }

 private:
  void spread(size_t k, size_t i, size_t key, size_t mul, const std::vector<size_t>& idx, double v) {
    if (i == k) {
      table_[k][key] = std::max(table_[k][key], v);
      return;
    }
    for (long o = -1; o <= 1; ++o) {
      long gi = long(idx[i]) + o;
      if (gi < 0 || gi >= G) continue;
      spread(k, i + 1, key + size_t(gi) * mul, mul * G, idx, v);
    }
  }

  size_t d_;
  std::vector<Interval> box_;
  std::vector<std::vector<double>> table_;
};

struct NdSum {
  cplx v;
  double m;
};

// Smallest sampling rate s = 2 pi / h such that no nonzero multiple of s falls
// in the frequency band [A, B]. Bands away from zero allow undersampling.
inline double sampling_rate(double A, double B, double width, int min_nodes) {
  if (B < 0) {
    double t = A;
    A = -B;
    B = -t;
  }
  double classic = 1.02 * std::max(std::abs(A), std::abs(B));
  double floor_rate = 2.0 * std::numbers::pi * min_nodes / width;
  if (A <= 0) return std::max(classic, floor_rate);
  double m = std::ceil(A / (B - A)) - 1.0;
  for (; m >= 1.0; m -= 1.0) {
    double s = 0.5 * (B / (m + 1.0) + A / m);
    if (s >= floor_rate) return s;
  }
  return std::max(classic, floor_rate);
}

class TrapezoidNd {
 public:
  static constexpr int G = 17;

  TrapezoidNd(const RealProgram& W, const RealProgram& P, const std::vector<Interval>& box,
              std::vector<double> margin, long long budget)
      : W_(W), P_(P), box_(box), margin_(std::move(margin)), budget_(budget) {}

  NdSum run() {
    double x[3] = {0, 0, 0};
    Grid g = grid(0, x);
    std::vector<NdSum> parts(g.n);
    parallel_for(g.n, [&](size_t j) {
      double y[3] = {0, 0, 0};
      y[0] = g.x0 + double(j) * g.h;
      parts[j] = box_.size() == 1 ? leaf(y) : level(1, y);
    });
    detail::LongSum s;
    long double m = 0;
    for (const auto& p : parts) {
      s.add(p.v);
      m += p.m;
    }
    return {s.get() * g.h, static_cast<double>(m) * g.h};
  }

  long long nodes() const { return nodes_.load(); }

 private:
  struct Grid {
    double x0, h;
    size_t n;
  };

  // range of d phase / d x_k with x_0..x_{k-1} fixed, over a grid of the
  // remaining coordinates, widened by the largest step between neighbours
  std::pair<double, double> band(size_t k, const double* outer) const {
    size_t d = box_.size(), inner = d - k;
    size_t total = 1;
    for (size_t i = 0; i < inner; ++i) total *= G;
    std::vector<double> v(total);
    double x[3];
    for (size_t i = 0; i < k; ++i) x[i] = outer[i];
    for (size_t n = 0; n < total; ++n) {
      size_t r = n;
      for (size_t i = k; i < d; ++i) {
        x[i] = box_[i].lo + box_[i].width() * double(r % G) / (G - 1);
        r /= G;
      }
      v[n] = P_.with_derivative(x, int(k)).second;
    }
    double lo = v[0], hi = v[0], slack = 0.0;
    for (size_t n = 0; n < total; ++n) {
      lo = std::min(lo, v[n]);
      hi = std::max(hi, v[n]);
      size_t stride = 1;
      for (size_t i = 0; i < inner; ++i, stride *= G)
        if ((n / stride) % G + 1 < G) slack = std::max(slack, std::abs(v[n + stride] - v[n]));
    }
    return {lo - slack, hi + slack};
  }

  Grid grid(size_t k, const double* x) const {
    auto [a, b] = band(k, x);
    double w = box_[k].width();
    double s = sampling_rate(a - margin_[k], b + margin_[k], w, 8);
    double h = 2.0 * std::numbers::pi / s;
    size_t n = static_cast<size_t>(std::ceil(w / h - 0.5));
    return {box_[k].lo + 0.5 * h, h, std::max<size_t>(n, 1)};
  }

  NdSum leaf(double* x) const {
    double w = W_(x);
    if (w == 0.0) return {0.0, 0.0};
    double ph = P_(x);
    return {cplx(w * std::cos(ph), w * std::sin(ph)), std::abs(w)};
  }

  NdSum level(size_t k, double* x) {
    Grid g = grid(k, x);
    if ((nodes_ += static_cast<long long>(g.n)) > budget_)
      throw QuadratureFailure("node budget exhausted in multidimensional quadrature");
    bool last = k + 1 == box_.size();
    cplx v = 0.0;
    double m = 0.0;
    for (size_t j = 0; j < g.n; ++j) {
      x[k] = g.x0 + double(j) * g.h;
      NdSum r = last ? leaf(x) : level(k + 1, x);
      v += r.v;
      m += r.m;
    }
    return {v * g.h, m * g.h};
  }

  const RealProgram& W_;
  const RealProgram& P_;
  const std::vector<Interval>& box_;
  std::vector<double> margin_;
  long long budget_;
  std::atomic<long long> nodes_{0};
};

// smallest extent of the weight's support along dimension k, over grid lines
inline double support_extent(const RealProgram& W, const std::vector<Interval>& box, size_t k) {
  constexpr int L = 9, S = 513;
  size_t d = box.size();
  size_t lines = 1;
  for (size_t i = 0; i + 1 < d; ++i) lines *= L;
  std::vector<double> ext;
  std::vector<double> peak;
  double global = 0.0;
  double x[3];
  for (size_t n = 0; n < lines; ++n) {
    size_t r = n;
    for (size_t i = 0; i < d; ++i) {
      if (i == k) continue;
      x[i] = box[i].lo + box[i].width() * (double(r % L) + 0.5) / L;
      r /= L;
    }
    int first = -1, lastnz = -1;
    double mx = 0.0;
    for (int s = 0; s < S; ++s) {
      x[k] = box[k].lo + box[k].width() * (s + 0.5) / S;
      double w = std::abs(W(x));
      if (w > 0) {
        if (first < 0) first = s;
        lastnz = s;
        mx = std::max(mx, w);
      }
    }
    if (first >= 0) {
      ext.push_back(box[k].width() * (lastnz - first + 1) / S);
      peak.push_back(mx);
      global = std::max(global, mx);
    }
  }
  double e = box[k].width();
  for (size_t i = 0; i < ext.size(); ++i)
    if (peak[i] >= 1e-3 * global) e = std::min(e, ext[i]);
  return e;
}

inline bool vanishes_on_faces(const RealProgram& W, const std::vector<Interval>& box) {
  constexpr int L = 17;
  size_t d = box.size();
  double scale = 0.0, face = 0.0;
  size_t nodes = 1;
  for (size_t i = 0; i < d; ++i) nodes *= L;
  double x[3];
  for (size_t n = 0; n < nodes; ++n) {
    size_t r = n;
    bool on_face = false;
    for (size_t i = 0; i < d; ++i) {
      size_t g = r % L;
      r /= L;
      on_face = on_face || g == 0 || g == L - 1;
      x[i] = box[i].lo + box[i].width() * double(g) / (L - 1);
    }
    double w = std::abs(W(x));
    scale = std::max(scale, w);
    if (on_face) face = std::max(face, w);
  }
  return face <= 1e-12 * std::max(scale, 1e-300);
}

}  // namespace detail

// Iterated Gauss-Kronrod, innermost variable first, per-level tolerance tol/(3d).
inline OracleResult quad_nd_iterated(const IntegralSpec& s, double tol, const OracleOptions& opt = {}) {
  validate_spec(s);
  RealProgram W(s.weight, s.params), P(s.phase, s.params);
  detail::FrequencyMap fm(P, s.box);
  size_t d = s.box.size();
  double level_tol = tol / (3.0 * double(d));
  long long panels = 0;
  double errsum = 0.0;
  std::function<cplx(size_t, double*)> level = [&](size_t k, double* x) -> cplx {
    auto f = [&](double t) -> cplx {
      double y[3] = {x[0], x[1], x[2]};
      y[k] = t;
      if (k + 1 == d) {
        double w = W(y);
        if (w == 0.0) return 0.0;
        double ph = P(y);
        return {w * std::cos(ph), w * std::sin(ph)};
      }
      return level(k + 1, y);
    };
    OracleOptions o = opt;
    o.parallel = false;
    OracleResult r = integrate_panels(f, s.box[k].lo, s.box[k].hi, 1.25 * fm.bound(k, x), level_tol, o);
    panels += r.panels_used;
    if (k == 0) errsum = r.error_estimate;
    return r.value;
  };
  double x[3] = {0, 0, 0};
  cplx v = level(0, x);
  return {v, errsum, panels, 0.0};
}

// Multidimensional oracle. For weights that vanish on the box faces (the
// normal case: compactly supported inside the box) it uses iterated midpoint
// sums with a step below the local Nyquist limit of the integrand, which
// converge faster than any power of the step; the error estimate compares two
// margins. Otherwise it falls back to iterated Gauss-Kronrod.
inline OracleResult quad_nd(const IntegralSpec& s, double tol, const OracleOptions& opt = {}) {
  if (!(tol > 0)) throw InvalidArgument("tol must be positive");
  validate_spec(s);
  if (s.dim == 1) return quad1d(s, tol, opt);
  RealProgram W(s.weight, s.params), P(s.phase, s.params);
  if (!detail::vanishes_on_faces(W, s.box)) return quad_nd_iterated(s, tol, opt);
  size_t d = s.box.size();
  // a smooth bump of half-width r has spectrum ~ exp(-sqrt(2 r |k|)); pick the
  // margin where that falls below the per-level tolerance
  double L = std::log(3.0 * double(d) / tol);
  std::vector<double> margin(d);
  for (size_t k = 0; k < d; ++k) margin[k] = L * L / detail::support_extent(W, s.box, k);
  long long nodes = 0;
  auto pass = [&](double factor) {
    std::vector<double> m = margin;
    for (auto& v : m) v *= factor;
    detail::TrapezoidNd t(W, P, s.box, m, opt.node_budget - nodes);
    detail::NdSum r = t.run();
    nodes += t.nodes();
    return r;
  };
  detail::NdSum coarse = pass(1.0);
  detail::NdSum fine = pass(1.5);
  double err = std::abs(fine.v - coarse.v);
  for (int attempt = 0; attempt < 2 && err > tol * fine.m; ++attempt) {
    for (auto& v : margin) v *= 2.0;
    coarse = fine;
    fine = pass(1.5);
    err = std::abs(fine.v - coarse.v);
  }
  return {fine.v, err, nodes, fine.m};
}

}  // namespace phasekit
