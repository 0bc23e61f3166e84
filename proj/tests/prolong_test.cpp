#include <gtest/gtest.h>

#include <thread>

#include "diffinv/error.hpp"
#include "diffinv/problem.hpp"
#include "diffinv/prolong.hpp"
#include "test_util.hpp"

namespace diffinv {
namespace {

using testing::equiv;
using testing::P;

VectorField translation() { return VectorField(1, 1, {Expr(1)}, {Expr(0)}); }
VectorField rotation() { return VectorField(1, 1, {P("u")}, {P("-x")}); }
VectorField example2() { return VectorField(1, 1, {P("exp(-x-u)")}, {P("u*exp(-x-u)")}); }

TEST(VectorField, Validation) {
  EXPECT_THROW(VectorField(1, 1, {Expr(0)}, {Expr(0)}), ValidationError);
  EXPECT_THROW(VectorField(1, 1, {P("u'")}, {Expr(1)}), ValidationError);
  EXPECT_THROW(VectorField(2, 1, {Expr(1)}, {Expr(1)}), ValidationError);
  std::mt19937_64 rng(0);
  EXPECT_THROW(check_nonzero(VectorField(1, 1, {P("x - x*1.0")}, {Expr(0)}), DomainSampler{}, rng),
               ValidationError);
}

TEST(Prolong, TranslationIsTrivial) {
  auto qr = prolong(translation(), 3);
  for (const auto& [name, c] : qr.all_coefficients()) {
    if (name == "x") {
      EXPECT_TRUE(c.is_one());
    } else {
      EXPECT_TRUE(c.is_zero()) << name << " = " << c;
    }
  }
}

TEST(Prolong, RotationFirstCoefficient) {
  auto qr = prolong(rotation(), 1);
  Expr c = qr.coefficient(0, {1});
  EXPECT_TRUE(equiv(c, P("-1 - u'^2"), DomainSampler({{"u1[1]", {-2.0, 2.0}}})));
  // Recursion oracle written out by hand: D_x(-x) - D_x(u)*u_x.
  EXPECT_EQ(c, P("-1 - u'^2"));
}

TEST(Prolong, Example2RecursionMatchesClosedForm) {
  auto qr = prolong(example2(), 1);
  Expr closed = first_prolongation_closed_form(example2(), 0, 0);
  DomainSampler s({{"u1[1]", {-1.0, 1.0}}});
  EXPECT_TRUE(equiv(qr.coefficient(0, {1}), closed, s, 200, 1e-9));
  EXPECT_TRUE(equiv(qr.coefficient(0, {1}), P("(u'^2 + (2 - u)*u' - u)*exp(-x-u)"), s, 200, 1e-9));
}

TEST(Prolong, ClosedFormAgreesOnEveryFixture) {
  for (const auto& name : builtin_problem_names()) {
    ProblemSpec spec = builtin_problem(name);
    VectorField q = spec.field();
    auto qr = prolong(q, 1);
    for (int k = 0; k < q.m(); ++k) {
      for (int c = 0; c < q.n(); ++c) {
        MultiIndex alpha(static_cast<std::size_t>(q.n()), 0);
        alpha[static_cast<std::size_t>(c)] = 1;
        EXPECT_TRUE(equiv(qr.coefficient(k, alpha), first_prolongation_closed_form(q, k, c), spec.sampler(), 200, 1e-9))
            << name << " k=" << k << " c=" << c;
      }
    }
  }
}

TEST(Prolong, CoefficientOrderBound) {
  auto qr = prolong(example2(), 3);
  const JetSpace& js = qr.jet();
  for (int k = 0; k <= 3; ++k) {
    EXPECT_LE(js.jet_order(qr.coefficient(0, {k})), k);
  }
  auto q0 = prolong(example2(), 0);
  EXPECT_EQ(q0.coefficient(0, {0}), example2().eta(0));
}

TEST(Prolong, ConcurrentReadersAgree) {
  auto qr = prolong(example2(), 4);
  std::vector<std::string> seen(4);
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < seen.size(); ++t) {
    threads.emplace_back([&, t] { seen[t] = render(qr.coefficient(0, {4})); });
  }
  for (auto& th : threads) th.join();
  for (const auto& s : seen) EXPECT_EQ(s, seen[0]);
}

TEST(Apply, Examples) {
  EXPECT_TRUE(apply(prolong(translation(), 1), P("u'")).is_zero());
  DomainSampler s;
  auto q0 = prolong(rotation(), 0);
  EXPECT_TRUE(equiv(apply(q0, P("sqrt(x^2+u^2)")), Expr(0), s));
  EXPECT_TRUE(equiv(apply(q0, P("arcsin(x/sqrt(x^2+u^2))")), Expr(1), s));
  EXPECT_THROW(apply(q0, P("u'")), OrderExceeded);
}

TEST(Apply, OrderBound) {
  auto qr = prolong(example2(), 2);
  const JetSpace& js = qr.jet();
  for (const char* text : {"u*exp(-x)", "u'*u + x", "u''/(1 + u'^2)"}) {
    Expr e = P(text);
    EXPECT_LE(js.jet_order(apply(qr, e)), js.jet_order(e)) << text;
  }
}

TEST(IsInvariantNumeric, Examples) {
  std::mt19937_64 rng(1);
  DomainSampler s({{"u1[1]", {-1.0, 1.0}}});
  auto rot = prolong(rotation(), 0);
  EXPECT_TRUE(is_invariant_numeric(rot, P("sqrt(x^2+u^2)"), s, 200, 1e-8, rng).invariant);
  auto verdict = is_invariant_numeric(rot, P("x"), s, 200, 1e-8, rng);
  EXPECT_FALSE(verdict.invariant);
  ASSERT_TRUE(verdict.witness);
  EXPECT_NEAR(verdict.witness_value, verdict.witness->at("u"), 1e-12);

  auto ex2 = prolong(example2(), 1);
  EXPECT_TRUE(is_invariant_numeric(ex2, P("(u'-u)*exp(-u)/(u+u*u'-u')"), s, 200, 1e-8, rng).invariant);
}

}  // namespace
}  // namespace diffinv
