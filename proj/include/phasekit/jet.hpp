#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "error.hpp"

namespace phasekit {

using cplx = std::complex<double>;

namespace detail {

inline void require_positive(cplx a, const char* what) {
  if (!(a.real() > 0.0) || std::abs(a.imag()) > 1e-12 * a.real())
    throw DomainViolation(std::string(what) + " needs a positive real argument, got (" +
                          std::to_string(a.real()) + "," + std::to_string(a.imag()) + ")");
}

inline bool is_small_integer(double p) { return p == std::floor(p) && std::abs(p) <= 64.0; }

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace detail

// Scalar versions of the domain-checked elementary functions.
namespace scalar {

inline cplx log(cplx a) {
  detail::require_positive(a, "log");
  return std::log(a.real());
}

inline cplx sqrt(cplx a) {
  if (a == cplx(0.0)) return 0.0;
  detail::require_positive(a, "sqrt");
  return std::sqrt(a.real());
}

inline cplx pow(cplx a, double p) {
  if (detail::is_small_integer(p)) {
    int n = static_cast<int>(p);
    if (n < 0 && a == cplx(0.0)) throw DomainViolation("negative power of zero");
    cplx r = 1.0, b = n < 0 ? 1.0 / a : a;
    for (int k = std::abs(n); k > 0; k >>= 1) {
      if (k & 1) r *= b;
      b *= b;
    }
    return r;
  }
  if (a == cplx(0.0) && p > 0) return 0.0;
  detail::require_positive(a, "pow");
  return std::pow(a.real(), p);
}

inline cplx bump(cplx u) {
  if (std::abs(u.imag()) > 1e-12 * (1.0 + std::abs(u.real())))
    throw DomainViolation("bump needs a real argument");
  double x = u.real();
  if (std::abs(x) >= 1.0) return 0.0;
  return std::exp(-1.0 / (1.0 - x * x));
}

}  // namespace scalar

// Truncated Taylor series in one variable, coefficients f^(k)(center)/k!.
class Jet {
 public:
  Jet() : c_(1, cplx(0.0)) {}
  explicit Jet(int order, double center = 0.0) : center_(center), c_(order + 1, cplx(0.0)) {}

  static Jet constant(int order, cplx v, double center = 0.0) {
    Jet j(order, center);
    j.c_[0] = v;
    return j;
  }
  static Jet variable(int order, double center) {
    Jet j(order, center);
    j.c_[0] = center;
    if (order >= 1) j.c_[1] = 1.0;
    return j;
  }
  // x + delta about an arbitrary (possibly complex) value, used when composing
  static Jet shifted_identity(int order, cplx value) {
    Jet j(order, 0.0);
    j.c_[0] = value;
    if (order >= 1) j.c_[1] = 1.0;
    return j;
  }
  static Jet from_coeffs(std::vector<cplx> c, double center = 0.0) {
    Jet j;
    j.c_ = std::move(c);
    j.center_ = center;
    return j;
  }

  int order() const { return static_cast<int>(c_.size()) - 1; }
  double center() const { return center_; }
  const cplx& operator[](int k) const { return c_[k]; }
  cplx& operator[](int k) { return c_[k]; }
  const std::vector<cplx>& coeffs() const { return c_; }

  Jet truncated(int order) const {
    Jet j(order, center_);
    for (int k = 0; k <= std::min(order, this->order()); ++k) j.c_[k] = c_[k];
    return j;
  }

  Jet operator-() const {
    Jet r = *this;
    for (auto& v : r.c_) v = -v;
    return r;
  }
  Jet& operator+=(const Jet& o) {
    shrink_to(o.order());
    for (int k = 0; k <= order(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    shrink_to(o.order());
    for (int k = 0; k <= order(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(cplx s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator+=(cplx s) {
    c_[0] += s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, cplx s) { return a += s; }
  friend Jet operator+(cplx s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, cplx s) { return a += -s; }
  friend Jet operator-(cplx s, const Jet& a) { return (-a) += s; }
  friend Jet operator*(Jet a, cplx s) { return a *= s; }
  friend Jet operator*(cplx s, Jet a) { return a *= s; }

  friend Jet operator*(const Jet& a, const Jet& b) {
    int n = std::min(a.order(), b.order());
    Jet r(n, a.center_);
    for (int i = 0; i <= n; ++i) {
      if (a.c_[i] == cplx(0.0)) continue;
      for (int j = 0; i + j <= n; ++j) r.c_[i + j] += a.c_[i] * b.c_[j];
    }
    return r;
  }

  friend Jet operator/(const Jet& b, const Jet& a) {
    int n = std::min(a.order(), b.order());
    if (a.c_[0] == cplx(0.0)) throw DomainViolation("division by a series with zero constant term");
    Jet q(n, b.center_);
    for (int k = 0; k <= n; ++k) {
      cplx s = b.c_[k];
      for (int j = 1; j <= k; ++j) s -= a.c_[j] * q.c_[k - j];
      q.c_[k] = s / a.c_[0];
    }
    return q;
  }
  friend Jet operator/(const Jet& a, cplx s) { return a * (1.0 / s); }
  friend Jet operator/(cplx s, const Jet& a) { return Jet::constant(a.order(), s, a.center_) / a; }

 private:
  void shrink_to(int n) {
    if (n < order()) c_.resize(n + 1);
  }

  double center_ = 0.0;
  std::vector<cplx> c_;
};

inline cplx deriv(const Jet& j, int k) {
  if (k < 0 || k > j.order())
    throw OrderExceeded("derivative order " + std::to_string(k) + " exceeds jet order " +
                        std::to_string(j.order()));
  return detail::factorial(k) * j[k];
}

inline Jet reciprocal(const Jet& a) { return cplx(1.0) / a; }

inline Jet exp(const Jet& a) {
  int n = a.order();
  Jet e(n, a.center());
  e[0] = std::exp(a[0]);
  for (int k = 1; k <= n; ++k) {
    cplx s = 0.0;
    for (int j = 1; j <= k; ++j) s += double(j) * a[j] * e[k - j];
    e[k] = s / double(k);
  }
  return e;
}

inline Jet log(const Jet& a) {
  detail::require_positive(a[0], "log");
  int n = a.order();
  Jet l(n, a.center());
  l[0] = std::log(a[0].real());
  for (int k = 1; k <= n; ++k) {
    cplx s = a[k];
    for (int j = 1; j < k; ++j) s -= double(j) * l[j] * a[k - j] / double(k);
    l[k] = s / a[0];
  }
  return l;
}

inline Jet pow(const Jet& a, double p) {
  int n = a.order();
  if (detail::is_small_integer(p)) {
    int m = static_cast<int>(p);
    Jet b = m < 0 ? reciprocal(a) : a;
    Jet r = Jet::constant(n, 1.0, a.center());
    for (int k = std::abs(m); k > 0; k >>= 1) {
      if (k & 1) r = r * b;
      if (k > 1) b = b * b;
    }
    return r;
  }
  detail::require_positive(a[0], "pow");
  Jet y(n, a.center());
  y[0] = std::pow(a[0].real(), p);
  for (int k = 1; k <= n; ++k) {
    cplx s = 0.0;
    for (int j = 1; j <= k; ++j) s += ((p + 1.0) * j - k) * a[j] * y[k - j];
    y[k] = s / (double(k) * a[0]);
  }
  return y;
}

inline Jet sqrt(const Jet& a) {
  detail::require_positive(a[0], "sqrt");
  Jet y = pow(a, 0.5);
  y[0] = std::sqrt(a[0].real());
  return y;
}

namespace detail {
inline void sincos_jet(const Jet& a, Jet& s, Jet& c) {
  int n = a.order();
  s = Jet(n, a.center());
  c = Jet(n, a.center());
  s[0] = std::sin(a[0]);
  c[0] = std::cos(a[0]);
  for (int k = 1; k <= n; ++k) {
    cplx ss = 0.0, cc = 0.0;
    for (int j = 1; j <= k; ++j) {
      ss += double(j) * a[j] * c[k - j];
      cc -= double(j) * a[j] * s[k - j];
    }
    s[k] = ss / double(k);
    c[k] = cc / double(k);
  }
}
}  // namespace detail

inline Jet sin(const Jet& a) {
  Jet s, c;
  detail::sincos_jet(a, s, c);
  return s;
}

inline Jet cos(const Jet& a) {
  Jet s, c;
  detail::sincos_jet(a, s, c);
  return c;
}

inline Jet bump(const Jet& a) {
  cplx u0 = a[0];
  if (std::abs(u0.imag()) > 1e-12 * (1.0 + std::abs(u0.real())))
    throw DomainViolation("bump needs a real argument");
  if (std::abs(u0.real()) >= 1.0) return Jet(a.order(), a.center());
  Jet v = 1.0 - a * a;
  return exp(-reciprocal(v));
}

}  // namespace phasekit
