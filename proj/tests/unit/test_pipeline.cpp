#include <gtest/gtest.h>

#include "phasekit/inert.hpp"
#include "phasekit/parser.hpp"
#include "phasekit/pipeline.hpp"

using namespace phasekit;

namespace {

Ambient ambient(double P, std::array<double, 3> r, double q = 1e3) {
  Ambient a;
  a.t = P;
  a.X = {1, 1, 1};
  a.lambda = {r[0] * P, r[1] * P, r[2] * P};
  a.q = q;
  return a;
}

}  // namespace

TEST(Prune, Examples) {
  auto a = ambient(400, {1, 1, 1});
  EXPECT_FALSE(prune(a).pruned);
  a.lambda[0] = 1e-3 * 400;
  auto r = prune(a);
  EXPECT_TRUE(r.pruned);
  EXPECT_NE(r.reason.find("lambda1"), std::string::npos);
  Ambient b = ambient(1, {1, 1, 1}, 1e6);
  b.delta = 0.1;
  EXPECT_TRUE(prune(b).pruned);
  EXPECT_TRUE(prune(ambient(400, {16, 1, 1})).pruned);
  EXPECT_FALSE(prune(ambient(400, {4, 0.25, 1})).pruned);
}

TEST(CiExample, PrunedRatiosRecordNoSteps) {
  auto r = ci_example(400, {16, 1, 1});
  EXPECT_TRUE(r.pruned);
  EXPECT_TRUE(r.steps.empty());
}

TEST(CiExample, StationaryPointsMatchClosedForms) {
  auto r = ci_example(1600, {1, 1, 1});
  ASSERT_FALSE(r.pruned);
  ASSERT_EQ(r.steps.size(), 3u);
  for (const auto& s : r.steps) EXPECT_TRUE(s.closed_form);
  auto c = ci_closed_forms(ci_integral(1600, {1, 1, 1}).params);
  EXPECT_NEAR(r.stationary_point[0], c.x1, 1e-8 * c.x1);
  EXPECT_NEAR(r.stationary_point[1], c.x2, 1e-8 * c.x2);
  EXPECT_NEAR(r.stationary_point[2], c.x3, 1e-8 * c.x3);
  // final phase 2 pi * 2 sqrt(l1 l2 l3 / t)
  double expect = 2 * std::numbers::pi * 2 * std::sqrt(1600.0 * 1600 * 1600 / 1600);
  EXPECT_NEAR(r.final_phase, expect, 1e-6 * expect);
  // amplitude scale X1 X2 X3 / P^{3/2} up to the 2 pi in Y
  EXPECT_NEAR(r.amplitude_scale, std::pow(2 * std::numbers::pi * 1600, -1.5), 1e-12);
  EXPECT_GT(std::abs(r.W), 1e-3);
  EXPECT_LT(std::abs(r.W), 1e3);
}

TEST(CiExample, UnequalRatios) {
  auto r = ci_example(400, {2, 0.5, 1.5});
  ASSERT_FALSE(r.pruned);
  auto c = ci_closed_forms(ci_integral(400, {2, 0.5, 1.5}).params);
  EXPECT_NEAR(r.stationary_point[0], c.x1, 1e-8 * c.x1);
  EXPECT_NEAR(r.stationary_point[1], c.x2, 1e-8 * c.x2);
  EXPECT_NEAR(r.stationary_point[2], c.x3, 1e-8 * c.x3);
  double expect = 2 * std::numbers::pi * 2 * std::sqrt(2 * 0.5 * 1.5 * 400.0 * 400 * 400 / 400);
  EXPECT_NEAR(r.final_phase, expect, 1e-6 * expect);
}

TEST(CiExample, MatchesJointPrediction) {
  auto r = ci_example(1600, {1, 1, 1});
  ASSERT_TRUE(r.predicted.has_value());
  // the leading terms agree; the pipeline carries first-order corrections
  EXPECT_LE(std::abs(r.main_value - *r.predicted), 0.05 * std::abs(*r.predicted));
  EXPECT_NEAR(std::arg(r.main_value / *r.predicted), 0.0, 0.05);
}

TEST(CiExample, NumericStepsAgreeWithClosedForms) {
  auto spec = ci_pipeline_spec(400, {1, 1, 1});
  PipelineOptions closed, numeric;
  numeric.detect_closed_form = false;
  auto a = run(spec, closed), b = run(spec, numeric);
  for (const auto& s : b.steps) EXPECT_FALSE(s.closed_form);
  EXPECT_LE(std::abs(a.main_value - b.main_value), 1e-8 * std::abs(a.main_value));
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(a.stationary_point[i], b.stationary_point[i], 1e-10);
}

TEST(CiExample, OrderIndependence) {
  auto a = run(ci_pipeline_spec(1600, {1, 1, 1}, 1e3, {2, 1, 0}));
  auto b = run(ci_pipeline_spec(1600, {1, 1, 1}, 1e3, {1, 2, 0}));
  EXPECT_LE(std::abs(a.main_value - b.main_value), a.truncation_estimate + b.truncation_estimate);
  EXPECT_NEAR(a.final_phase, b.final_phase, 1e-9 * a.final_phase);
}

TEST(CiExample, PhaseConsistencyAcrossSteps) {
  auto r = ci_example(400, {1, 1, 1});
  // new phase at the spectator point equals the old phase at (t0, spectators)
  for (size_t k = 0; k + 1 < r.steps.size(); ++k) {
    const auto& s = r.steps[k];
    const auto& next = r.steps[k + 1];
    double old_phase = s.ctx.phase_value(s.ctx.point(s.expansion.t0, s.at));
    std::vector<double> x = next.at;
    double new_phase = next.ctx.phase_value(next.ctx.point(next.expansion.t0, x));
    EXPECT_NEAR(new_phase, old_phase, 1e-10 * std::abs(old_phase));
  }
}

TEST(CiExample, StepWeightsAreInert) {
  auto spec = ci_pipeline_spec(400, {1, 1, 1});
  auto r = run(spec);
  // output weight of the x3 step over (x1, x2)
  const auto& ctx = r.steps[0].ctx;
  auto w = weight_out(ctx, make_field(spec.integral.weight, spec.integral.params, 3), 1);
  OutputWeightFamily fam(2, {}, [&](const Params&) {
    return FamilyInstance{w, {spec.integral.box[0], spec.integral.box[1]}, 1.0};
  });
  auto rep = check_inert(fam, 3, 1, 6);
  EXPECT_TRUE(rep.pass) << rep.to_text();
}

TEST(Pipeline, OneDimensionalIsSpExpand) {
  PipelineSpec s;
  s.integral.dim = 1;
  s.integral.phase = parse_expr("A*(x1-1.4)^2 + 3*x1");
  s.integral.weight = parse_expr("bump(2*x1-3)*x1");
  s.integral.box = {{1, 2}};
  s.integral.params = {{"A", 500.0}};
  s.order = {0};
  s.scales = {{false, 1.0, 500.0, 1.0, 500.0}};
  auto r = run(s);
  SPContext c;
  c.phase = s.integral.phase;
  c.params = s.integral.params;
  c.interval = {0.25, 8};
  c.Y = c.R = 500;
  auto e = sp_expand(c, s.integral.weight, std::span<const double>(), 1);
  EXPECT_NEAR(std::abs(r.main_value - e.main_value), 0.0, 1e-12 * std::abs(e.main_value));
  EXPECT_EQ(r.steps.size(), 1u);
}

TEST(Pipeline, AutomaticScales) {
  auto spec = ci_pipeline_spec(400, {1, 1, 1});
  for (auto& sc : spec.scales) sc.automatic = true;
  auto a = run(spec);
  auto b = run(ci_pipeline_spec(400, {1, 1, 1}));
  // scales only move the normalisation, not the value
  EXPECT_LE(std::abs(a.main_value - b.main_value), 1e-10 * std::abs(b.main_value));
  for (const auto& s : a.steps) EXPECT_GE(s.ctx.R, 1.0);
}

TEST(Pipeline, Errors) {
  auto spec = ci_pipeline_spec(400, {1, 1, 1});
  spec.order = {0, 0, 1};
  EXPECT_THROW(run(spec), InvalidArgument);
  EXPECT_THROW(ci_example(10, {1, 1, 1}), InvalidArgument);
  // x1 first: phase linear in x1 after the change of variables, so no stationary point
  auto lin = ci_pipeline_spec(400, {1, 1, 1}, 1e3, {0, 1, 2});
  EXPECT_THROW(run(lin), StepHypothesisViolation);
}

TEST(JointPrediction, HessianSignature) {
  IntegralSpec s = ci_integral(100, {1, 1, 1});
  std::vector<double> x;
  cplx v = joint_stationary_prediction(s, {1.01, 0.99, 1.0}, &x);
  for (double xi : x) EXPECT_NEAR(xi, 1.0, 1e-12);
  // eigenvalues 2 pi P (-2, 1, 1): signature +1, |det| = 2 (2 pi P)^3
  double P2 = 2 * std::numbers::pi * 100;
  double mag = std::pow(2 * std::numbers::pi, 1.5) / std::sqrt(2 * P2 * P2 * P2) * std::exp(-3.0);
  EXPECT_NEAR(std::abs(v), mag, 1e-12 * mag);
  double ph = 2 * std::numbers::pi * 200 + std::numbers::pi / 4;
  EXPECT_NEAR(std::remainder(std::arg(v) - ph, 2 * std::numbers::pi), 0.0, 1e-9);
}
