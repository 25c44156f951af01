#pragma once

#include <memory>
#include <span>
#include <vector>

#include "expr.hpp"

namespace phasekit {

// A complex function of dim() real variables that can also produce jets.
class Field {
 public:
  virtual ~Field() = default;
  virtual int dim() const = 0;
  virtual cplx value(std::span<const double> x) const = 0;
  // jet about x in the listed variables (slot s is x_{vars[s]})
  virtual MJet mjet(std::span<const double> x, int order, std::span<const int> vars) const = 0;

  Jet jet(int var, std::span<const double> x, int order) const {
    int v[1] = {var};
    MJet m = mjet(x, order, v);
    std::vector<cplx> c(m.data().begin(), m.data().end());
    return Jet::from_coeffs(std::move(c), x[var]);
  }
};

using FieldPtr = std::shared_ptr<const Field>;

class ExprField : public Field {
 public:
  ExprField(Expr e, Params p, int dim) : e_(std::move(e)), p_(std::move(p)), dim_(dim) {
    if (max_variable(e_) >= dim_) throw InvalidArgument("expression uses a variable beyond the field dimension");
  }
  int dim() const override { return dim_; }
  cplx value(std::span<const double> x) const override { return eval(e_, x, p_); }
  MJet mjet(std::span<const double> x, int order, std::span<const int> vars) const override {
    return mjet_of(e_, x, p_, order, vars);
  }
  const Expr& expr() const { return e_; }
  const Params& params() const { return p_; }

 private:
  Expr e_;
  Params p_;
  int dim_;
};

// weight * e^{i phase}
class PhasedExprField : public Field {
 public:
  PhasedExprField(Expr weight, Expr phase, Params p, int dim)
      : w_(std::move(weight)), ph_(std::move(phase)), p_(std::move(p)), dim_(dim) {
    if (max_variable(w_) >= dim_ || max_variable(ph_) >= dim_)
      throw InvalidArgument("expression uses a variable beyond the field dimension");
  }
  int dim() const override { return dim_; }
  cplx value(std::span<const double> x) const override {
    cplx w = eval(w_, x, p_);
    if (w == cplx(0.0)) return w;
    return w * std::exp(cplx(0.0, 1.0) * eval(ph_, x, p_));
  }
  MJet mjet(std::span<const double> x, int order, std::span<const int> vars) const override {
    MJet w = mjet_of(w_, x, p_, order, vars);
    return w * exp(mjet_of(ph_, x, p_, order, vars) * cplx(0.0, 1.0));
  }

 private:
  Expr w_, ph_;
  Params p_;
  int dim_;
};

inline FieldPtr make_field(Expr e, Params p, int dim) {
  return std::make_shared<ExprField>(std::move(e), std::move(p), dim);
}

// keep only the monomials in the listed slots, relabelled in that order
inline MJet restrict_slots(const MJet& full, std::span<const int> slots) {
  int m = static_cast<int>(slots.size());
  std::vector<double> center;
  for (int s : slots) center.push_back(full.center()[s]);
  MJet r(m, full.order(), center);
  std::vector<int> a(full.nvars());
  for (size_t k = 0; k < r.size(); ++k) {
    std::fill(a.begin(), a.end(), 0);
    auto e = r.layout().exponents(k);
    for (int s = 0; s < m; ++s) a[slots[s]] = e[s];
    r[k] = full.coeff(a);
  }
  return r;
}

inline MJet conj(MJet m) {
  for (auto& v : m.data()) v = std::conj(v);
  return m;
}

}  // namespace phasekit
