#include <gtest/gtest.h>

#include <random>

#include "phasekit/parser.hpp"

using namespace phasekit;

TEST(Expr, EvalExamples) {
  EXPECT_EQ(eval(parse_expr("x1^2"), {3.0}), cplx(9.0));
  EXPECT_EQ(eval(parse_expr("sqrt(x1)"), {4.0}), cplx(2.0));
  EXPECT_NEAR(eval(parse_expr("bump((2*x1-3))"), {1.5}).real(), 0.36787944117144233, 1e-16);
}

TEST(Expr, RealTreesHaveZeroImaginaryPart) {
  cplx v = eval(parse_expr("sin(x1)*exp(x2)/(1+x2^2) - log(x1)"), {0.3, 0.8});
  EXPECT_EQ(v.imag(), 0.0);
}

TEST(Expr, Errors) {
  EXPECT_THROW(eval(parse_expr("lambda9*x1"), {1.0}), UnboundParameter);
  EXPECT_THROW(eval(parse_expr("log(x1)"), {-1.0}), DomainViolation);
  EXPECT_THROW(eval(parse_expr("sqrt(x1)"), {-1.0}), DomainViolation);
  EXPECT_THROW(eval(parse_expr("x1^0.5"), {-1.0}), DomainViolation);
  EXPECT_THROW(eval(parse_expr("1/x1"), {0.0}), DomainViolation);
  EXPECT_EQ(eval(parse_expr("x1^3"), {-2.0}), cplx(-8.0));
}

TEST(Parser, PrecedenceAndAssociativity) {
  EXPECT_EQ(eval(parse_expr("2^3^2"), {}), cplx(512.0));
  EXPECT_EQ(eval(parse_expr("-2^2"), {}), cplx(-4.0));
  EXPECT_EQ(eval(parse_expr("1-2-3"), {}), cplx(-4.0));
  EXPECT_EQ(eval(parse_expr("8/2/2"), {}), cplx(2.0));
  EXPECT_EQ(eval(parse_expr("2*x1^-1"), {4.0}), cplx(0.5));
  EXPECT_NEAR(eval(parse_expr("cos(pi)"), {}).real(), -1.0, 1e-16);
  EXPECT_EQ(eval(parse_expr("1.5e2 + .5"), {}), cplx(150.5));
}

TEST(Parser, ErrorsCarryPosition) {
  try {
    parse_expr("x1 +\n  (x2 * )");
    FAIL();
  } catch (const ExprParseError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_EQ(e.column(), 9);
  }
  EXPECT_THROW(parse_expr("foo(x1)"), ExprParseError);
  EXPECT_THROW(parse_expr("x1^x2"), ExprParseError);
  EXPECT_THROW(parse_expr("x0"), ExprParseError);
  EXPECT_THROW(parse_expr(""), ExprParseError);
  EXPECT_THROW(parse_expr("(x1"), ExprParseError);
  EXPECT_THROW(parse_expr("x1 x2"), ExprParseError);
}

TEST(Parser, ParametersAndVariables) {
  Expr e = parse_expr("lambda1*x1 + t*x2*x3");
  EXPECT_EQ(free_params(e), (std::set<std::string>{"lambda1", "t"}));
  EXPECT_EQ(max_variable(e), 2);
}

TEST(Parser, RenderRoundTrip) {
  const char* cases[] = {"-(x1-1.5)^2*A + 0.1",
                         "2*pi*(-t*x1*x2*x3 + l1*x1)",
                         "bump(3*x1-3)*bump(3*x2-3)/(x2*x3)",
                         "x1^(-0.5) + sqrt(log(x2)) - exp(-x3)",
                         "1e-300*x1 + 123456789.123456789"};
  for (auto c : cases) {
    Expr e = parse_expr(c);
    Expr back = parse_expr(to_string(e));
    EXPECT_TRUE(equal(e, back)) << c << " -> " << to_string(e);
  }
}

TEST(Expr, BuilderMatchesParser) {
  Expr x = var(0);
  Expr built = param("A") * pow(x - 1.5, 2.0);
  EXPECT_TRUE(equal(built, parse_expr("A*(x1-1.5)^2")));
  EXPECT_THROW(pow(x, x), InvalidArgument);
}

TEST(Expr, SubstituteAndRemap) {
  Expr e = parse_expr("x1*x2 + x3");
  Expr s = substitute(e, 1, parse_expr("x3^2"));
  EXPECT_EQ(eval(s, {2.0, 100.0, 3.0}), cplx(21.0));
  Expr r = remap_variables(parse_expr("x2 + 10*x3"), {0, 0, 1});
  EXPECT_EQ(eval(r, {1.0, 2.0}), cplx(21.0));
  Expr b = bind(parse_expr("a*x1"), {{"a", 3.0}});
  EXPECT_TRUE(free_params(b).empty());
}

TEST(RealProgram, AgreesWithTreeEvaluation) {
  Expr e = parse_expr("2*pi*(-t*x1*x2*x3 + l*x1 + x2^2/x3) + bump(3*x1-3)*sqrt(x2)*log(x3+1)");
  Params p{{"t", 7.0}, {"l", 3.0}};
  RealProgram prog(e, p);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.7, 1.3);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> x{u(rng), u(rng), u(rng)};
    double a = prog(x.data());
    double b = eval(e, x, p).real();
    EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(b)));
    auto [v, d] = prog.with_derivative(x.data(), 1);
    Jet j = jet_of(e, 1, x, p, 1);
    EXPECT_NEAR(v, b, 1e-12 * std::max(1.0, std::abs(b)));
    EXPECT_NEAR(d, j[1].real(), 1e-10 * std::max(1.0, std::abs(d)));
  }
  EXPECT_THROW(RealProgram(parse_expr("q*x1"), {}), UnboundParameter);
}
