#include <gtest/gtest.h>

#include "phasekit/expansion.hpp"
#include "phasekit/parser.hpp"

using namespace phasekit;

namespace {

SPContext fresnel_ctx(double A, const std::string& phase = "A*(x1-1.5)^2") {
  SPContext c;
  c.phase = parse_expr(phase);
  c.params = {{"A", A}};
  c.dim = 1;
  c.interval = {1, 2};
  c.Z = 1;
  c.Y = A;
  c.X = 1;
  c.R = A;
  return c;
}

cplx oracle1(const SPContext& c, const std::string& weight, double tol = 1e-13) {
  IntegralSpec s;
  s.dim = 1;
  s.phase = c.phase;
  s.weight = parse_expr(weight);
  s.box = {c.interval};
  s.params = c.params;
  return quad1d(s, tol).value;
}

// spectator-dependent centre: phase A (x1 - 1.5 - 0.1 (x2 - 1.5))^2
SPContext moving_ctx(double A) {
  SPContext c;
  c.phase = parse_expr("A*(x1 - 1.5 - 0.1*(x2 - 1.5))^2");
  c.params = {{"A", A}};
  c.dim = 2;
  c.var = 0;
  c.interval = {1, 2};
  c.Z = 1;
  c.Y = A;
  c.R = A;
  return c;
}

const char* kMovingWeight = "bump(2*x1-3)*(1 + 0.3*x2)*x1";

std::vector<double> none;

}  // namespace

TEST(Constants, ClosedForms) {
  auto c = sp_constants(3);
  ASSERT_EQ(c.c.size(), 4u);
  double r = std::sqrt(std::numbers::pi);
  EXPECT_NEAR(c.c[0].real(), r, 1e-15);
  EXPECT_NEAR(c.c[0].imag(), r, 1e-15);
  EXPECT_NEAR(std::abs(c.c[1] / c.c[0] - cplx(0, 0.5)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(c.c[3] / c.c[2] - cplx(0, 0.5) / 3.0), 0.0, 1e-15);
  EXPECT_EQ(sp_constants(0).c.size(), 1u);
  EXPECT_THROW(sp_constants(11), InvalidArgument);
}

TEST(Constants, MatchFresnelMomentsByQuadrature) {
  // wide flat-top window: the tails of e^{iAu^2} cancel to roughly e^{-A}
  double A = 1e3;
  auto f0 = [&](double u) {
    double b0 = scalar::bump(u / 4).real(), bl = scalar::bump(u / 4 - 1).real(), br = scalar::bump(u / 4 + 1).real();
    double w = b0 / (b0 + bl + br);
    return w * cplx(std::cos(A * u * u), std::sin(A * u * u));
  };
  auto f2 = [&](double u) { return u * u * f0(u); };
  auto dphi = [&](double u) { return 2 * A * u; };
  cplx m0 = integrate_oscillatory(f0, dphi, -4.0, 4.0, 1e-13).value;
  cplx m2 = integrate_oscillatory(f2, dphi, -4.0, 4.0, 1e-13).value;
  auto c = sp_constants(1);
  // int e^{iAu^2} u^{2n} du = c_n (2A)^{-n-1/2} (2n)!
  cplx p0 = c.c[0] / std::sqrt(2 * A);
  cplx p2 = c.c[1] * std::pow(2 * A, -1.5) * 2.0;
  EXPECT_LE(std::abs(m0 - p0), 1e-6 * std::abs(p0));
  EXPECT_LE(std::abs(m2 - p2), 1e-6 * std::abs(p2));
}

TEST(GDerivatives, PureQuadraticGivesWeightDerivatives) {
  auto c = fresnel_ctx(50);
  auto g = g_derivatives(c, parse_expr("exp(x1)*x1"), 1.5, none, 3);
  Jet w = jet_of(parse_expr("exp(x1)*x1"), 0, std::vector<double>{1.5}, {}, 6);
  for (int n = 0; n <= 3; ++n) EXPECT_NEAR(std::abs(g[n] - deriv(w, 2 * n)), 0.0, 1e-10 * std::abs(deriv(w, 2 * n)));
  auto g0 = g_derivatives(c, parse_expr("3 + x1"), 1.5, none, 0);
  ASSERT_EQ(g0.size(), 1u);
  EXPECT_NEAR(g0[0].real(), 4.5, 1e-15);
}

TEST(GDerivatives, CubicPhaseAgainstDirectExponentiation) {
  double kappa = 0.7;
  auto c = fresnel_ctx(20, "A*(x1-1.5)^2 + k*(x1-1.5)^3");
  c.params["k"] = kappa;
  auto g = g_derivatives(c, parse_expr("1"), 1.5, none, 3);
  // e^{i k u^3} = 1 + i k u^3 - k^2 u^6 / 2 + ...
  EXPECT_NEAR(std::abs(g[1]), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(g[2]), 0.0, 1e-12);
  EXPECT_NEAR(std::abs(g[3] - cplx(-360 * kappa * kappa)), 0.0, 1e-9);
  EXPECT_THROW(g_derivatives(c, parse_expr("1"), 1.4, none, 1), AssertionFailure);
}

TEST(SpExpand, FresnelAgainstOracle) {
  std::vector<double> err;
  for (double A : {1e2, 1e3, 1e4}) {
    auto c = fresnel_ctx(A);
    auto r = sp_expand(c, parse_expr("bump(2*x1-3)"), none, 2);
    cplx o = oracle1(c, "bump(2*x1-3)");
    err.push_back(std::abs(r.main_value - o) / std::abs(o));
    if (A == 1e3) {
      EXPECT_LE(err.back(), 1e-4);
    }
    EXPECT_LE(std::abs(r.main_value - o), std::max(5 * r.truncation_estimate, 1e-9 * std::abs(o)));
  }
  EXPECT_LT(err[1], err[0]);
  EXPECT_LT(err[2], err[1]);
}

TEST(SpExpand, TermsDecayLikeOneOverR) {
  for (double A : {1e2, 1e3, 1e4}) {
    auto r = sp_expand(fresnel_ctx(A), parse_expr("bump(2*x1-3)"), none, 3);
    for (int n = 0; n + 1 < 4; ++n) {
      if (std::abs(r.terms[n]) > 0) {
        EXPECT_LE(std::abs(r.terms[n + 1]) / std::abs(r.terms[n]), 10.0 / A);
      }
    }
  }
}

TEST(SpExpand, ConstantPhaseFactorsOut) {
  auto a = sp_expand(fresnel_ctx(500), parse_expr("bump(2*x1-3)"), none, 2);
  auto b = sp_expand(fresnel_ctx(500, "A*(x1-1.5)^2 + 0.1"), parse_expr("bump(2*x1-3)"), none, 2);
  EXPECT_NEAR(std::abs(b.main_value - std::exp(cplx(0, 0.1)) * a.main_value), 0.0, 1e-16);
}

TEST(SpExpand, ZeroWeight) {
  auto r = sp_expand(fresnel_ctx(500), parse_expr("0"), none, 2);
  EXPECT_EQ(r.main_value, cplx(0.0));
  for (auto t : r.terms) EXPECT_EQ(t, cplx(0.0));
}

TEST(SpExpand, NegatedPhaseConjugates) {
  auto a = sp_expand(fresnel_ctx(300, "A*(x1-1.45)^2 + 2*(x1-1.45)^3"), parse_expr("bump(2*x1-3)*x1"), none, 3);
  auto b = sp_expand(fresnel_ctx(300, "-(A*(x1-1.45)^2 + 2*(x1-1.45)^3)"), parse_expr("bump(2*x1-3)*x1"), none, 3);
  EXPECT_TRUE(b.conjugated);
  EXPECT_EQ(a.main_value, std::conj(b.main_value));
}

TEST(SpExpand, NormalizationStaysOrderOne) {
  for (double A : {1e2, 1e3, 1e4, 1e5, 1e6}) {
    auto r = sp_expand(fresnel_ctx(A), parse_expr("bump(2*x1-3)"), none, 2);
    EXPECT_GE(std::abs(r.W_value), 1e-3);
    EXPECT_LE(std::abs(r.W_value), 1e3);
  }
}

TEST(SpExpand, NonStationaryIsRejected) {
  auto c = fresnel_ctx(100, "A*x1");
  EXPECT_THROW(sp_expand(c, parse_expr("1"), none, 1), StepHypothesisViolation);
}

TEST(WeightOut, ValueMatchesSpExpand) {
  auto c = moving_ctx(400);
  auto W = weight_out(c, parse_expr(kMovingWeight), 2);
  std::vector<double> s{1.3};
  auto r = sp_expand(c, parse_expr(kMovingWeight), s, 2);
  EXPECT_EQ(W->value(s), r.W_value);
  std::vector<int> v{0};
  MJet j = W->mjet(s, 3, v);
  EXPECT_NEAR(std::abs(j[0] - r.W_value), 0.0, 1e-12 * std::abs(r.W_value));
}

TEST(WeightOut, JetsMatchFiniteDifferences) {
  auto c = moving_ctx(400);
  auto W = weight_out(c, parse_expr(kMovingWeight), 2);
  double s0 = 1.3, h = 1e-3;
  std::vector<int> v{0};
  MJet j = W->mjet(std::vector<double>{s0}, 3, v);
  auto val = [&](double s) { return W->value(std::vector<double>{s}); };
  cplx d1 = (val(s0 + h) - val(s0 - h)) / (2 * h);
  cplx d2 = (val(s0 + h) - 2.0 * val(s0) + val(s0 - h)) / (h * h);
  EXPECT_NEAR(std::abs(j[1] - d1), 0.0, 1e-5 * std::abs(j[0]));
  EXPECT_NEAR(std::abs(2.0 * j[2] - d2), 0.0, 1e-4 * std::abs(j[0]));
}

TEST(WeightOut, PureQuadraticIsWeightAtT0) {
  auto c = fresnel_ctx(800);
  auto W = weight_out(c, parse_expr("bump(2*x1-3)"), 0);
  EXPECT_EQ(W->dim(), 0);
  cplx v = W->value(none);
  // (sqrt(Y)/Z) c_0 w(t0) / sqrt(2A)
  cplx want = std::sqrt(800.0) * sp_constants(0).c[0] * std::exp(-1.0) / std::sqrt(1600.0);
  EXPECT_NEAR(std::abs(v - want), 0.0, 1e-14);
  EXPECT_LE(std::abs(v), 10 * std::exp(-1.0) * std::sqrt(2 * std::numbers::pi));
}

TEST(WeightOut, JetOrderCap) {
  auto W = weight_out(moving_ctx(400), parse_expr(kMovingWeight), 1);
  std::vector<int> v{0};
  EXPECT_THROW(W->mjet(std::vector<double>{1.3}, 5, v), OrderExceeded);
}
