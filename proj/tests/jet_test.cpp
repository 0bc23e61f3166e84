#include <gtest/gtest.h>

#include "diffinv/error.hpp"
#include "diffinv/jet.hpp"
#include "test_util.hpp"

namespace diffinv {
namespace {

using testing::equiv;
using testing::P;

std::size_t binom(int n, int k) {
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

TEST(MultiIndex, Enumeration) {
  EXPECT_EQ(multi_indices(2, 1), (std::vector<MultiIndex>{{1, 0}, {0, 1}}));
  EXPECT_EQ(multi_indices(2, 2), (std::vector<MultiIndex>{{2, 0}, {1, 1}, {0, 2}}));
  EXPECT_EQ(multi_indices(1, 3), (std::vector<MultiIndex>{{3}}));
  EXPECT_EQ(order({1, 2, 0}), 3);
  EXPECT_EQ(raised({1, 0}, 1), (MultiIndex{1, 1}));
}

TEST(Coordinates, Examples) {
  EXPECT_EQ(JetSpace(1, 1, 1).coordinates(1), (std::vector<std::string>{"x", "u", "u1[1]"}));
  EXPECT_EQ(JetSpace(2, 1, 2).coordinates(2).size(), 8u);
  EXPECT_EQ(JetSpace(1, 2, 1).coordinates(1), (std::vector<std::string>{"x", "u1", "u2", "u1[1]", "u2[1]"}));
  EXPECT_THROW(JetSpace(1, 1, 1).coordinates(2), OrderExceeded);
}

TEST(Coordinates, CountLaw) {
  for (int n = 1; n <= 3; ++n) {
    for (int m = 1; m <= 3; ++m) {
      for (int r = 0; r <= 3; ++r) {
        auto coords = JetSpace(n, m, r).coordinates(r);
        EXPECT_EQ(coords.size(), static_cast<std::size_t>(n) + static_cast<std::size_t>(m) * binom(n + r, r));
        std::set<std::string> unique(coords.begin(), coords.end());
        EXPECT_EQ(unique.size(), coords.size());
      }
    }
  }
}

TEST(Coordinates, NamingIsBijective) {
  JetSpace js(2, 2, 3);
  for (const auto& name : js.coordinates(3)) {
    if (auto a = js.independent_index(name)) {
      EXPECT_EQ(js.x(*a), name);
      continue;
    }
    auto c = js.dependent_coordinate(name);
    ASSERT_TRUE(c) << name;
    EXPECT_EQ(js.coordinate(*c), name);
  }
  EXPECT_FALSE(js.is_coordinate("C1"));
  EXPECT_FALSE(js.is_coordinate("x3"));
}

TEST(TotalDerivative, Examples) {
  JetSpace js(1, 1, 2);
  EXPECT_EQ(total_derivative(P("u"), 0, js), P("u'"));
  EXPECT_TRUE(equiv(total_derivative(P("u*exp(-x)"), 0, js), P("(u' - u)*exp(-x)")));
  JetSpace js2(2, 1, 3);
  EXPECT_EQ(total_derivative(P("u1[0,1]"), 0, js2), P("u1[1,1]"));
  EXPECT_EQ(total_derivative(P("u1[1,0]"), 1, js2), P("u1[1,1]"));
}

TEST(TotalDerivative, OrderExceeded) {
  JetSpace js(1, 1, 1);
  EXPECT_THROW(total_derivative(P("u'"), 0, js), OrderExceeded);
}

TEST(TotalDerivative, EqualsPartialWithoutJetCoordinates) {
  JetSpace js(2, 1, 1);
  const char* fixtures[] = {"x1^2*x2", "sin(x1 + C)", "exp(x2)/x1"};
  for (const char* text : fixtures) {
    for (int a = 0; a < 2; ++a) {
      EXPECT_EQ(total_derivative(P(text), a, js), diff(P(text), js.x(a))) << text;
    }
  }
}

TEST(TotalDerivative, Commutes) {
  JetSpace js(2, 2, 3);
  const char* fixtures[] = {"u1*u2[1,0] + x1*x2", "exp(u2)*sin(u1[0,1])", "sqrt(x1^2 + u1^2)*u2[0,1]"};
  DomainSampler s;
  for (const char* text : fixtures) {
    Expr e = P(text);
    Expr d01 = total_derivative(total_derivative(e, 0, js), 1, js);
    Expr d10 = total_derivative(total_derivative(e, 1, js), 0, js);
    EXPECT_TRUE(equiv(d01, d10, s)) << text;
  }
}

TEST(TotalJacobian, Examples) {
  JetSpace js(1, 1, 1);
  std::vector<Expr> f1{P("x")};
  std::vector<int> ax{0};
  EXPECT_TRUE(total_jacobian(f1, ax, js).is_one());

  std::vector<Expr> f2{P("sqrt(x^2+u^2)")};
  DomainSampler s({{"u1[1]", {-1.0, 1.0}}});
  EXPECT_TRUE(equiv(total_jacobian(f2, ax, js), P("(x+u*u')/sqrt(x^2+u^2)"), s));

  JetSpace js2(2, 1, 1);
  std::vector<Expr> f3{P("x1"), P("x2")};
  std::vector<int> ax2{0, 1};
  EXPECT_TRUE(total_jacobian(f3, ax2, js2).is_one());
}

TEST(TotalJacobian, FiniteDifferenceOracle) {
  // D_x f along the curve u = g(x) equals d/dx f(x, g(x)).
  JetSpace js(1, 1, 1);
  Expr f = P("sqrt(x^2+u^2)");
  Expr g = P("sin(x) + 2");
  std::vector<Expr> fs{f};
  std::vector<int> ax{0};
  Expr dj = total_jacobian(fs, ax, js);
  Expr along = substitute(f, {{"u", g}});
  const double h = 1e-6;
  for (double x0 : {0.3, 0.7, 1.1}) {
    double fd = (eval(along, {{"x", x0 + h}}) - eval(along, {{"x", x0 - h}})) / (2 * h);
    Bindings b{{"x", x0}, {"u", eval(g, {{"x", x0}})}, {"u1[1]", std::cos(x0)}};
    EXPECT_NEAR(eval(dj, b), fd, 1e-8);
  }
}

}  // namespace
}  // namespace diffinv
