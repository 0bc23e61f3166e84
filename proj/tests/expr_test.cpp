#include <gtest/gtest.h>

#include <cmath>

#include "diffinv/error.hpp"
#include "test_util.hpp"

namespace diffinv {
namespace {

using testing::equiv;
using testing::P;

const Expr x = Expr::symbol("x");
const Expr u = Expr::symbol("u");

TEST(Parse, SquareCollectsIntoPower) {
  Expr e = P("x + u*u");
  EXPECT_EQ(e, add({x, pow(u, 2)}));
  EXPECT_EQ(e.kind(), NodeKind::Sum);
}

TEST(Parse, SqrtOfSumOfSquares) {
  Expr e = P("sqrt(x^2+u^2)");
  ASSERT_EQ(e.kind(), NodeKind::Func);
  EXPECT_EQ(e.func(), FuncKind::Sqrt);
  EXPECT_EQ(e.argument(), add({pow(x, 2), pow(u, 2)}));
}

TEST(Parse, ExpTimesOneDropsTheFactor) {
  Expr e = P("exp(-x-u)*(1)");
  ASSERT_EQ(e.kind(), NodeKind::Func);
  EXPECT_EQ(e.func(), FuncKind::Exp);
  EXPECT_EQ(e.argument(), add({neg(x), neg(u)}));
}

TEST(Parse, Precedence) {
  Bindings b{{"x", 2.0}};
  EXPECT_DOUBLE_EQ(eval(P("-x^2"), b), -4.0);
  EXPECT_DOUBLE_EQ(eval(P("2^3^2"), b), 512.0);
  EXPECT_DOUBLE_EQ(eval(P("1 - x - 1"), b), -2.0);
  EXPECT_DOUBLE_EQ(eval(P("8/x/2"), b), 2.0);
  EXPECT_DOUBLE_EQ(eval(P("1.5e1 + x"), b), 17.0);
}

TEST(Parse, JetAliases) {
  EXPECT_EQ(P("u'"), Expr::symbol("u1[1]"));
  EXPECT_EQ(P("u[1]"), Expr::symbol("u1[1]"));
  EXPECT_EQ(P("u''"), Expr::symbol("u1[2]"));
  EXPECT_EQ(P("u2'"), Expr::symbol("u2[1]"));
  EXPECT_EQ(P("u1[0, 1]"), Expr::symbol("u1[0,1]"));
}

TEST(Parse, RationalAndDecimalLiterals) {
  Expr half = P("1/2");
  ASSERT_TRUE(half.as_constant());
  EXPECT_TRUE(half.as_constant()->exact());
  Expr dec = P("0.5");
  ASSERT_TRUE(dec.as_constant());
  EXPECT_FALSE(dec.as_constant()->exact());
}

TEST(Parse, SyntaxErrorCarriesOffset) {
  try {
    P("x + * u");
    FAIL() << "expected SyntaxError";
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.offset(), 4u);
    EXPECT_FALSE(e.expected().empty());
  }
  EXPECT_THROW(P("(x"), SyntaxError);
  EXPECT_THROW(P(""), SyntaxError);
  EXPECT_THROW(P("x u"), SyntaxError);
}

TEST(Parse, UnknownFunction) {
  try {
    P("x + sinh(u)");
    FAIL() << "expected UnknownFunction";
  } catch (const UnknownFunction& e) {
    EXPECT_EQ(e.name(), "sinh");
    EXPECT_EQ(e.offset(), 4u);
  }
}

TEST(Parse, RenderRoundTrip) {
  const char* fixtures[] = {
      "sqrt(x^2 + u^2)",
      "arcsin(x/sqrt(x^2 + u^2))",
      "exp(-x - u)*u",
      "exp(x + u)/u",
      "(x + u*u')/(-u + x*u')*sqrt(x^2 + u^2)",
      "(u' - u)*exp(-u)/(u + u*u' - u')",
      "u'^2 + (2 - C*exp(x))*u' - C*exp(x)",
      "-(C/x^2)*(1 + 1/(Ch - ln(x)))",
      "x^(-2)*u + tan(x) - arctan(u)/3",
      "2.5*x - 1/3",
  };
  for (const char* text : fixtures) {
    Expr e = P(text);
    EXPECT_EQ(P(render(e)), e) << text << " -> " << render(e);
    EXPECT_EQ(render(P(render(e))), render(e));
  }
}

TEST(Diff, Examples) {
  EXPECT_EQ(diff(P("x^2"), "x"), P("2*x"));
  EXPECT_EQ(diff(P("u*exp(-x)"), "x"), P("-u*exp(-x)"));
  EXPECT_TRUE(diff(P("C*u"), "x").is_zero());
}

TEST(Diff, ArcsinAgainstFiniteDifference) {
  Expr e = P("arcsin(x/sqrt(x^2+u^2))");
  Expr d = diff(e, "u");
  EXPECT_NEAR(eval(d, {{"x", 1.0}, {"u", 1.0}}), -0.5, 1e-12);
  const double h = 1e-6;
  double fd = (eval(e, {{"x", 1.0}, {"u", 1.0 + h}}) - eval(e, {{"x", 1.0}, {"u", 1.0 - h}})) / (2 * h);
  EXPECT_NEAR(fd, -0.5, 1e-8);
}

TEST(Diff, LinearityNumerically) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  const char* fixtures[] = {"sqrt(x^2+u^2)", "u*exp(-x)", "exp(x+u)/u", "arcsin(x/sqrt(x^2+u^2))", "x^3*u^(-2)"};
  for (const char* a : fixtures) {
    for (const char* b : fixtures) {
      Expr ca = Expr::decimal(coef(rng));
      Expr cb = Expr::decimal(coef(rng));
      Expr lhs = diff(ca * P(a) + cb * P(b), "x");
      Expr rhs = ca * diff(P(a), "x") + cb * diff(P(b), "x");
      EXPECT_TRUE(equiv(lhs, rhs)) << a << " , " << b;
    }
  }
}

TEST(Diff, CentralDifferences) {
  const char* fixtures[] = {"sqrt(x^2+u^2)", "u*exp(-x)", "exp(x+u)/u", "arcsin(x/sqrt(x^2+u^2))",
                            "ln(x*u) + tan(u/3)", "arctan(x - u)*cos(x*u)"};
  DomainSampler s;
  std::mt19937_64 rng(11);
  const std::vector<std::string> syms{"u", "x"};
  const double h = 1e-6;
  for (const char* text : fixtures) {
    Expr e = P(text);
    for (const auto& sym : syms) {
      CompiledExpr d(diff(e, sym));
      CompiledExpr f(e);
      for_each_sample(syms, s, 100, rng, [&](const Bindings& b) {
        Bindings hi = b;
        Bindings lo = b;
        hi.assign(sym, b.at(sym) + h);
        lo.assign(sym, b.at(sym) - h);
        double fd = (f(hi) - f(lo)) / (2 * h);
        double exact = d(b);
        EXPECT_NEAR(fd, exact, 1e-6 * (1 + std::fabs(exact))) << text << " d/d" << sym;
        return true;
      });
    }
  }
}

TEST(Substitute, Examples) {
  Substitution level{{"u", P("C*exp(x)")}};
  EXPECT_EQ(substitute(P("x+u"), level), P("x + C*exp(x)"));
  EXPECT_EQ(substitute(P("u1[1]"), {}), P("u1[1]"));
  Substitution swap{{"x", u}, {"u", x}};
  EXPECT_EQ(substitute(P("x*u"), swap), P("x*u"));
  EXPECT_EQ(substitute(P("x - u"), swap), P("u - x"));
}

TEST(Eval, Examples) {
  EXPECT_DOUBLE_EQ(eval(P("sqrt(x^2+u^2)"), {{"x", 3.0}, {"u", 4.0}}), 5.0);
  EXPECT_NEAR(eval(P("exp(x+u)/u"), {{"x", 0.0}, {"u", 1.0}}), std::exp(1.0), 1e-15);
  try {
    eval(P("ln(x)"), {{"x", -1.0}});
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_EQ(e.kind(), "ln");
  }
}

TEST(Eval, Errors) {
  EXPECT_THROW(eval(P("x + u"), {{"x", 1.0}}), UnboundSymbol);
  EXPECT_THROW(eval(P("sqrt(x)"), {{"x", -1.0}}), DomainError);
  EXPECT_THROW(eval(P("arcsin(x)"), {{"x", 2.0}}), DomainError);
  EXPECT_THROW(eval(P("1/x"), {{"x", 0.0}}), DomainError);
  EXPECT_THROW(eval(P("x^(-3)"), {{"x", 0.0}}), DomainError);
  EXPECT_THROW((Bindings{{"x", 1.0}, {"x", 2.0}}), InvalidBinding);
  EXPECT_THROW((Bindings{{"x", std::nan("")}}), InvalidBinding);
}

TEST(EquivalentNumeric, Examples) {
  Expr with_factor = P("(x+u*u')/(-u+x*u')*sqrt(x^2+u^2)") / P("sqrt(x^2+u^2)");
  DomainSampler s({{"u1[1]", {-1.0, 1.0}}});
  EXPECT_TRUE(equiv(with_factor, P("(x+u*u')/(-u+x*u')"), s));
  EXPECT_TRUE(equiv(P("sin(x)^2+cos(x)^2"), Expr(1)));
  EXPECT_FALSE(equiv(x, P("x + 1e-3"), {}, 200, 1e-9));
}

TEST(EquivalentNumeric, SamplingExhausted) {
  std::mt19937_64 rng(0);
  EXPECT_THROW(compare_numeric(P("ln(-x)"), P("x"), DomainSampler{}, 10, 1e-9, rng), SamplingExhausted);
}

TEST(Normalize, FoldsAndCollects) {
  EXPECT_EQ(P("x + x"), P("2*x"));
  EXPECT_EQ(P("x*x*x"), P("x^3"));
  EXPECT_TRUE(P("x - x").is_zero());
  EXPECT_TRUE(P("x/x").is_one());
  EXPECT_EQ(P("1/3 + 1/6"), P("1/2"));
  EXPECT_EQ(P("exp(x)*exp(u)"), P("exp(x + u)"));
  EXPECT_EQ(P("u + x"), P("x + u"));
}

TEST(Expand, DistributesProducts) {
  EXPECT_EQ(expand(P("(x + u)^2")), P("x^2 + 2*x*u + u^2"));
  EXPECT_EQ(expand(P("(2 - C*exp(x))*u'")), P("2*u' - C*exp(x)*u'"));
}

TEST(PolyDegree, Examples) {
  std::set<std::string> vars{"u1[1]"};
  EXPECT_EQ(poly_degree(P("u'^2 + x*u' + exp(x)"), vars), 2);
  EXPECT_EQ(poly_degree(P("x"), vars), 0);
  EXPECT_FALSE(poly_degree(P("1/u'"), vars).has_value());
}

}  // namespace
}  // namespace diffinv
