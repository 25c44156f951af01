#include <gtest/gtest.h>

#include "phasekit/parser.hpp"
#include "phasekit/stationary.hpp"

using namespace phasekit;

namespace {

SPContext ctx1(const std::string& phase, Interval iv, double Z, double Y, Params p = {}) {
  SPContext c;
  c.phase = parse_expr(phase);
  c.params = std::move(p);
  c.dim = 1;
  c.var = 0;
  c.interval = iv;
  c.Z = Z;
  c.Y = Y;
  return c;
}

// x3 step of the worked example, e(.) phase times 2 pi, spectators (x1, x2)
SPContext x3_ctx(double P) {
  SPContext c;
  c.phase = parse_expr("2*pi*(l3*x3 + x1*l1*X2*X3/(x2*x3))");
  c.params = {{"l1", P}, {"l3", P}, {"X2", 1.0}, {"X3", 1.0}};
  c.dim = 3;
  c.var = 2;
  c.interval = {0.5, 2.0};
  c.Z = 1.0;
  c.Y = 2 * std::numbers::pi * P;
  c.X = 1.0;
  c.R = 1.0;
  return c;
}

}  // namespace

TEST(Classify, QuadraticVertex) {
  auto r = classify(ctx1("7*(x1-1.5)^2", {1, 2}, 1, 7));
  ASSERT_EQ(r.kind, StationaryKind::Stationary);
  EXPECT_NEAR(r.t0, 1.5, 1e-14);
  EXPECT_FALSE(r.conjugate);
}

TEST(Classify, LinearPhaseIsNonStationary) {
  double lam = 40;
  auto r = classify(ctx1("l*x1", {1, 2}, 1, lam, {{"l", lam}}));
  ASSERT_EQ(r.kind, StationaryKind::NonStationary);
  EXPECT_NEAR(r.min_abs_dphi, lam, 1e-12);
}

TEST(Classify, ExampleSecondStep) {
  double l1 = 1.3, l2 = 0.9, l3 = 1.1, x1 = 1.2;
  SPContext c;
  c.phase = parse_expr("x2*l2 + 2*sqrt(l1*l3*x1*X2*X3/x2)");
  c.params = {{"l1", l1}, {"l2", l2}, {"l3", l3}, {"X2", 1.0}, {"X3", 1.0}};
  c.dim = 2;
  c.var = 1;
  c.interval = {0.5, 2.5};
  c.Z = 1;
  c.Y = 1;
  std::vector<double> spec{x1};
  auto r = classify(c, spec);
  ASSERT_TRUE(r.stationary());
  EXPECT_NEAR(r.t0, std::cbrt(l1 * l3 * x1 / (l2 * l2)), 1e-12);
}

TEST(Classify, ConcaveAndIndeterminate) {
  auto c = classify(ctx1("-3*(x1-1.4)^2", {1, 2}, 1, 3));
  ASSERT_TRUE(c.stationary());
  EXPECT_TRUE(c.conjugate);
  EXPECT_NEAR(c.t0, 1.4, 1e-14);
  // inflection inside the interval
  EXPECT_EQ(classify(ctx1("(x1-1.5)^3 - 0.01*x1", {1, 2}, 1, 1)).kind, StationaryKind::Indeterminate);
  // degenerate
  EXPECT_EQ(classify(ctx1("(x1-1.5)^4", {1, 2}, 1, 1)).kind, StationaryKind::Indeterminate);
  // too close to the edge
  EXPECT_EQ(classify(ctx1("(x1-1.0000000001)^2", {1, 2}, 1, 1)).kind, StationaryKind::Indeterminate);
  EXPECT_THROW(classify(ctx1("log(x1)", {-1, 2}, 1, 1)), DomainViolation);
}

TEST(Classify, BisectionAndNewtonAgree) {
  auto c = ctx1("x1^3/3 - 2.2*x1 + sin(x1)", {1, 2}, 1, 3);
  std::vector<double> none;
  auto a = classify(c, none);
  auto b = classify_bisection(c, none);
  ASSERT_TRUE(a.stationary());
  ASSERT_TRUE(b.stationary());
  EXPECT_NEAR(a.t0, b.t0, 1e-10 * a.t0);
}

TEST(Classify, RejectsBadScales) {
  auto c = ctx1("x1^2", {1, 2}, 1, 1);
  c.R = 2;  // Y/X^2 = 1 < R
  EXPECT_THROW(classify(c), InvalidArgument);
}

TEST(T0Monomial, Examples) {
  auto f = t0_monomial(2.0, {0.5, -0.5});
  std::vector<double> s{1.44, 0.81};
  EXPECT_NEAR(f.value(s), 2.0 * 1.2 / 0.9, 1e-14);
  auto one = t0_monomial(1.0, {0.0, 0.0});
  MJet j = one.mjet(s, 4);
  EXPECT_EQ(j[0], cplx(1.0));
  for (size_t k = 1; k < j.size(); ++k) EXPECT_EQ(j[k], cplx(0.0));
  EXPECT_NEAR(eval(f.to_expr(), {0.0, 1.44, 0.81}).real(), f.value(s), 1e-14);
  EXPECT_THROW(t0_monomial(-1.0, {1.0}), DomainViolation);
}

TEST(T0Jet, QuadraticFollowsItsCentreCurve) {
  SPContext c;
  c.phase = parse_expr("(x1 - x2^2)^2");
  c.dim = 2;
  c.var = 0;
  c.interval = {0.5, 2.5};
  c.Z = 1;
  c.Y = 1;
  std::vector<double> s{1.1};
  MJet t = t0_jet(c, s, 6);
  MJet g = mjet_of(parse_expr("x1^2"), s, {}, 6);
  for (size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(std::abs(t[k] - g[k]), 0.0, 1e-12);
}

TEST(T0Jet, ExampleStepMatchesClosedForm) {
  double P = 100;
  SPContext c = x3_ctx(P);
  std::vector<double> s{1.1, 0.9};
  MJet t = t0_jet(c, s, 4);
  // (x3)_0 = (l1 x1 X2 X3 / (l3 x2))^{1/2}
  auto form = t0_monomial(1.0, {0.5, -0.5}, {0, 1});
  MJet m = form.mjet(s, 4);
  EXPECT_NEAR(t[0].real(), form.value(s), 1e-10 * form.value(s));
  for (size_t k = 0; k < t.size(); ++k) EXPECT_NEAR(std::abs(t[k] - m[k]), 0.0, 1e-8 * std::abs(m[0]));
  // first-order coefficient in x2 is -t0/(2 x2)
  EXPECT_NEAR(t.coeff({0, 1}).real(), -0.5 * form.value(s) / s[1], 1e-12);
  auto st = classify(c, s);
  EXPECT_NEAR(t[0].real(), st.t0, 1e-10 * st.t0);
}

TEST(T0Jet, ScaledCoefficientsAreBounded) {
  SPContext c = x3_ctx(400);
  for (double x1 : {0.7, 0.85, 1.0, 1.15, 1.3})
    for (double x2 : {0.7, 0.85, 1.0, 1.15, 1.3}) {
      std::vector<double> s{x1, x2};
      MJet t = t0_jet(c, s, 4);
      for (size_t k = 0; k < t.size(); ++k) {
        // X_i = 1 and X = 1 here
        EXPECT_LE(std::abs(t[k] / t[0]), 10.0);
      }
    }
}

TEST(T0Jet, SingularWhenCurvatureVanishes) {
  SPContext c;
  c.phase = parse_expr("(x1-1.5)^3*x2 + 1e-13*(x1-1.5)^2");
  c.dim = 2;
  c.interval = {1, 2};
  c.Z = 1;
  c.Y = 1;
  std::vector<double> s{1.0};
  EXPECT_THROW(t0_jet(c, s, 3), Error);
}
