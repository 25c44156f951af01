#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "jet.hpp"

namespace phasekit {

using MultiIndex = std::vector<int>;

inline int total_degree(std::span<const int> a) {
  int s = 0;
  for (int v : a) s += v;
  return s;
}

// componentwise order
inline bool leq(std::span<const int> a, std::span<const int> b) {
  for (size_t i = 0; i < a.size(); ++i)
    if (a[i] > b[i]) return false;
  return true;
}

inline double multi_factorial(std::span<const int> a) {
  double f = 1.0;
  for (int v : a) f *= detail::factorial(v);
  return f;
}

// All multi-indices of nvars entries with |a| <= order, graded.
inline std::vector<MultiIndex> multi_indices(int nvars, int order) {
  std::vector<MultiIndex> out;
  MultiIndex a(nvars, 0);
  for (int deg = 0; deg <= order; ++deg) {
    if (nvars == 0) {
      if (deg == 0) out.push_back({});
      continue;
    }
    // enumerate compositions of deg into nvars parts, lexicographically descending
    std::fill(a.begin(), a.end(), 0);
    a[0] = deg;
    while (true) {
      out.push_back(a);
      // next composition
      int i = nvars - 2;
      while (i >= 0 && a[i] == 0) --i;
      if (i < 0) break;
      a[i] -= 1;
      int rest = 0;
      for (int k = i + 1; k < nvars; ++k) rest += a[k];
      for (int k = i + 1; k < nvars; ++k) a[k] = 0;
      a[i + 1] = rest + 1;
    }
  }
  return out;
}

class MJetLayout {
 public:
  MJetLayout(int nvars, int order) : nvars_(nvars), order_(order) {
    auto idx = multi_indices(nvars, order);
    size_ = idx.size();
    exps_.reserve(size_ * std::max(nvars, 1));
    for (const auto& a : idx) {
      for (int v : a) exps_.push_back(v);
      degree_.push_back(total_degree(a));
    }
    base_ = order + 1;
    long long dense = 1;
    for (int i = 0; i < nvars; ++i) {
      dense *= base_;
      if (dense > (1 << 22)) break;
    }
    use_dense_ = dense <= (1 << 22);
    if (use_dense_) lookup_.assign(static_cast<size_t>(dense), -1);
    for (size_t k = 0; k < size_; ++k) {
      long long key = encode(exponents(k).data());
      if (use_dense_)
        lookup_[static_cast<size_t>(key)] = static_cast<int>(k);
      else
        sparse_[key] = static_cast<int>(k);
    }
    // product table grouped by left factor
    row_.assign(size_ + 1, 0);
    std::vector<int> sum(std::max(nvars, 1));
    for (size_t i = 0; i < size_; ++i) {
      row_[i] = static_cast<uint32_t>(pj_.size());
      for (size_t j = 0; j < size_; ++j) {
        if (degree_[i] + degree_[j] > order) continue;
        for (int v = 0; v < nvars; ++v) sum[v] = exps_[i * nvars + v] + exps_[j * nvars + v];
        pj_.push_back(static_cast<uint32_t>(j));
        pk_.push_back(static_cast<uint32_t>(index(sum.data())));
      }
    }
    row_[size_] = static_cast<uint32_t>(pj_.size());
  }

  int nvars() const { return nvars_; }
  int order() const { return order_; }
  size_t size() const { return size_; }
  int degree(size_t k) const { return degree_[k]; }
  std::span<const int> exponents(size_t k) const {
    return {exps_.data() + k * nvars_, static_cast<size_t>(nvars_)};
  }
  // -1 when |a| > order
  int index(const int* a) const {
    int d = 0;
    for (int i = 0; i < nvars_; ++i) {
      if (a[i] < 0) return -1;
      d += a[i];
    }
    if (d > order_) return -1;
    long long key = encode(a);
    if (use_dense_) return lookup_[static_cast<size_t>(key)];
    auto it = sparse_.find(key);
    return it == sparse_.end() ? -1 : it->second;
  }
  int index(std::span<const int> a) const { return index(a.data()); }

  uint32_t row_begin(size_t i) const { return row_[i]; }
  uint32_t row_end(size_t i) const { return row_[i + 1]; }
  uint32_t pj(uint32_t t) const { return pj_[t]; }
  uint32_t pk(uint32_t t) const { return pk_[t]; }

 private:
  long long encode(const int* a) const {
    long long key = 0;
    for (int i = nvars_ - 1; i >= 0; --i) key = key * base_ + a[i];
    return key;
  }

  int nvars_, order_;
  size_t size_ = 0;
  std::vector<int> exps_, degree_;
  int base_ = 1;
  bool use_dense_ = true;
  std::vector<int> lookup_;
  std::unordered_map<long long, int> sparse_;
  std::vector<uint32_t> row_, pj_, pk_;
};

inline std::shared_ptr<const MJetLayout> mjet_layout(int nvars, int order) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::shared_ptr<const MJetLayout>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{nvars, order}];
  if (!slot) slot = std::make_shared<const MJetLayout>(nvars, order);
  return slot;
}

// Truncated multivariate Taylor series, coefficient at a equals d^a f / a!.
class MJet {
 public:
  MJet() : MJet(0, 0) {}
  MJet(int nvars, int order, std::vector<double> center = {})
      : L_(mjet_layout(nvars, order)), center_(std::move(center)), c_(L_->size(), cplx(0.0)) {
    if (center_.empty()) center_.assign(nvars, 0.0);
  }

  static MJet constant(int nvars, int order, cplx v, std::vector<double> center = {}) {
    MJet m(nvars, order, std::move(center));
    m.c_[0] = v;
    return m;
  }
  // coordinate function x_slot about value
  static MJet variable(int nvars, int order, int slot, double value,
                       std::vector<double> center = {}) {
    MJet m(nvars, order, std::move(center));
    m.c_[0] = value;
    if (order >= 1) {
      std::vector<int> a(nvars, 0);
      a[slot] = 1;
      m.c_[m.L_->index(a)] = 1.0;
    }
    return m;
  }

  int nvars() const { return L_->nvars(); }
  int order() const { return L_->order(); }
  size_t size() const { return c_.size(); }
  const MJetLayout& layout() const { return *L_; }
  const std::vector<double>& center() const { return center_; }
  void set_center(std::vector<double> c) { center_ = std::move(c); }

  cplx value() const { return c_[0]; }
  cplx& operator[](size_t k) { return c_[k]; }
  const cplx& operator[](size_t k) const { return c_[k]; }
  std::vector<cplx>& data() { return c_; }
  const std::vector<cplx>& data() const { return c_; }

  cplx coeff(std::span<const int> a) const {
    int k = L_->index(a);
    if (k < 0) throw OrderExceeded("multi-index beyond jet order");
    return c_[k];
  }
  cplx coeff(std::initializer_list<int> a) const {
    return coeff(std::span<const int>(a.begin(), a.size()));
  }
  void set_coeff(std::span<const int> a, cplx v) {
    int k = L_->index(a);
    if (k < 0) throw OrderExceeded("multi-index beyond jet order");
    c_[k] = v;
  }
  // d^a f at the center
  cplx partial(std::span<const int> a) const { return multi_factorial(a) * coeff(a); }

  MJet truncated(int order) const {
    MJet r(nvars(), order, center_);
    size_t n = std::min(r.size(), size());
    std::copy(c_.begin(), c_.begin() + n, r.c_.begin());
    return r;
  }

  // partial derivative in slot, order drops by one
  MJet derivative(int slot) const {
    if (order() < 1) throw OrderExceeded("cannot differentiate an order-0 jet");
    MJet r(nvars(), order() - 1, center_);
    std::vector<int> a(nvars());
    for (size_t k = 0; k < r.size(); ++k) {
      auto e = r.L_->exponents(k);
      std::copy(e.begin(), e.end(), a.begin());
      a[slot] += 1;
      r.c_[k] = double(a[slot]) * c_[L_->index(a)];
    }
    return r;
  }

  // coefficient series of x_slot^power, as a jet in the remaining variables
  MJet slice(int slot, int power) const {
    std::vector<double> cen;
    for (int i = 0; i < nvars(); ++i)
      if (i != slot) cen.push_back(center_[i]);
    MJet r(nvars() - 1, order() - power, cen);
    std::vector<int> a(nvars());
    for (size_t k = 0; k < r.size(); ++k) {
      auto e = r.L_->exponents(k);
      for (int i = 0, s = 0; i < nvars(); ++i) a[i] = (i == slot) ? power : e[s++];
      r.c_[k] = c_[L_->index(a)];
    }
    return r;
  }

  // reinterpret as a jet in new_nvars variables; variable s goes to slot_map[s]
  MJet embed(int new_nvars, std::span<const int> slot_map, int new_order) const {
    MJet r(new_nvars, new_order);
    std::vector<int> a(new_nvars);
    for (size_t k = 0; k < size(); ++k) {
      if (L_->degree(k) > new_order) continue;
      std::fill(a.begin(), a.end(), 0);
      auto e = L_->exponents(k);
      for (int s = 0; s < nvars(); ++s) a[slot_map[s]] = e[s];
      r.c_[r.L_->index(a)] = c_[k];
    }
    return r;
  }

  MJet operator-() const {
    MJet r = *this;
    for (auto& v : r.c_) v = -v;
    return r;
  }
  MJet& operator+=(const MJet& o) {
    match(o);
    for (size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  MJet& operator-=(const MJet& o) {
    match(o);
    for (size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  MJet& operator*=(cplx s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  MJet& operator+=(cplx s) {
    c_[0] += s;
    return *this;
  }

  friend MJet operator+(MJet a, const MJet& b) { return a += b; }
  friend MJet operator-(MJet a, const MJet& b) { return a -= b; }
  friend MJet operator+(MJet a, cplx s) { return a += s; }
  friend MJet operator+(cplx s, MJet a) { return a += s; }
  friend MJet operator-(MJet a, cplx s) { return a += -s; }
  friend MJet operator-(cplx s, const MJet& a) { return (-a) += s; }
  friend MJet operator*(MJet a, cplx s) { return a *= s; }
  friend MJet operator*(cplx s, MJet a) { return a *= s; }

  friend MJet operator*(const MJet& a, const MJet& b) {
    if (a.order() != b.order()) {
      int n = std::min(a.order(), b.order());
      return a.truncated(n) * b.truncated(n);
    }
    if (a.nvars() != b.nvars()) throw InvalidArgument("jet variable count mismatch");
    MJet r(a.nvars(), a.order(), a.center_);
    const MJetLayout& L = *a.L_;
    for (size_t i = 0; i < a.size(); ++i) {
      cplx ai = a.c_[i];
      if (ai == cplx(0.0)) continue;
      for (uint32_t t = L.row_begin(i); t < L.row_end(i); ++t) r.c_[L.pk(t)] += ai * b.c_[L.pj(t)];
    }
    return r;
  }

 private:
  void match(const MJet& o) {
    if (o.nvars() != nvars()) throw InvalidArgument("jet variable count mismatch");
    // graded layouts of lower order are prefixes of higher ones
    if (o.order() < order()) *this = truncated(o.order());
  }

  std::shared_ptr<const MJetLayout> L_;
  std::vector<double> center_;
  std::vector<cplx> c_;
};

// f(a) where f is given by its univariate Taylor coefficients about a's constant term
inline MJet apply_series(const MJet& a, const Jet& f) {
  int n = a.order();
  MJet delta = a;
  delta[0] = 0.0;
  MJet r = MJet::constant(a.nvars(), n, f[std::min(n, f.order())], a.center());
  for (int k = std::min(n, f.order()) - 1; k >= 0; --k) {
    r = r * delta;
    r[0] += f[k];
  }
  return r;
}

inline MJet exp(const MJet& a) { return apply_series(a, exp(Jet::shifted_identity(a.order(), a[0]))); }
inline MJet log(const MJet& a) { return apply_series(a, log(Jet::shifted_identity(a.order(), a[0]))); }
inline MJet sqrt(const MJet& a) {
  return apply_series(a, sqrt(Jet::shifted_identity(a.order(), a[0])));
}
inline MJet sin(const MJet& a) { return apply_series(a, sin(Jet::shifted_identity(a.order(), a[0]))); }
inline MJet cos(const MJet& a) { return apply_series(a, cos(Jet::shifted_identity(a.order(), a[0]))); }
inline MJet reciprocal(const MJet& a) {
  return apply_series(a, reciprocal(Jet::shifted_identity(a.order(), a[0])));
}
inline MJet pow(const MJet& a, double p) {
  if (detail::is_small_integer(p) && p >= 0) {
    MJet r = MJet::constant(a.nvars(), a.order(), 1.0, a.center());
    MJet b = a;
    for (int k = static_cast<int>(p); k > 0; k >>= 1) {
      if (k & 1) r = r * b;
      if (k > 1) b = b * b;
    }
    return r;
  }
  return apply_series(a, pow(Jet::shifted_identity(a.order(), a[0]), p));
}
inline MJet bump(const MJet& a) {
  cplx u0 = a[0];
  if (std::abs(u0.imag()) > 1e-12 * (1.0 + std::abs(u0.real())))
    throw DomainViolation("bump needs a real argument");
  if (std::abs(u0.real()) >= 1.0) return MJet(a.nvars(), a.order(), a.center());
  return apply_series(a, bump(Jet::shifted_identity(a.order(), a[0])));
}
inline MJet operator/(const MJet& a, const MJet& b) { return a * reciprocal(b); }
inline MJet operator/(const MJet& a, cplx s) { return a * (1.0 / s); }
inline MJet operator/(cplx s, const MJet& b) { return s * reciprocal(b); }

// F(args): F is a jet in args.size() variables, each arg a jet with zero constant
// term in a common set of variables. Result has the args' order.
inline MJet compose(const MJet& F, std::span<const MJet> args) {
  int d = F.nvars();
  if (static_cast<int>(args.size()) != d) throw InvalidArgument("compose: argument count mismatch");
  if (d == 0) return F;
  int m = args[0].nvars(), n = args[0].order();
  for (const auto& g : args) {
    if (g.nvars() != m || g.order() != n) throw InvalidArgument("compose: argument layouts differ");
    if (std::abs(g[0]) > 1e-300) throw InvalidArgument("compose: arguments need zero constant term");
  }
  int top = std::min(F.order(), n);
  std::vector<std::vector<MJet>> pw(d);
  for (int i = 0; i < d; ++i) {
    pw[i].push_back(MJet::constant(m, n, 1.0));
    for (int k = 1; k <= top; ++k) pw[i].push_back(pw[i].back() * args[i]);
  }
  MJet r(m, n);
  const MJetLayout& L = F.layout();
  // walk multi-indices grouped by all-but-last exponent so prefix products are reused
  std::map<std::vector<int>, MJet> prefix;
  for (size_t k = 0; k < F.size(); ++k) {
    if (L.degree(k) > top) continue;
    cplx fk = F[k];
    if (fk == cplx(0.0)) continue;
    auto e = L.exponents(k);
    std::vector<int> head(e.begin(), e.end() - 1);
    auto it = prefix.find(head);
    if (it == prefix.end()) {
      MJet p = pw[0][head.empty() ? 0 : head[0]];
      for (int i = 1; i < d - 1; ++i)
        if (head[i] > 0) p = p * pw[i][head[i]];
      it = prefix.emplace(head, std::move(p)).first;
    }
    int last = e[d - 1];
    if (d == 1) {
      r += fk * pw[0][last];
    } else {
      r += fk * (last == 0 ? it->second : it->second * pw[d - 1][last]);
    }
  }
  return r;
}

}  // namespace phasekit
