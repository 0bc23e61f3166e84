#include <gtest/gtest.h>

#include "diffinv/error.hpp"
#include "diffinv/problem.hpp"
#include "diffinv/riccati.hpp"
#include "test_util.hpp"

namespace diffinv {
namespace {

using testing::equiv;
using testing::P;

struct Loaded {
  ProblemSpec spec;
  UniversalInvariant ui;
  RiccatiSystem sys;
};

Loaded load(const std::string& name) {
  ProblemSpec spec = builtin_problem(name);
  std::mt19937_64 rng(0);
  auto ui = spec.universal_invariant(rng);
  auto sys = build_system(ui.q, *ui.level_set, spec.sampler(), rng);
  return {spec, ui, sys};
}

RiccatiSolution solve(const Loaded& l, std::mt19937_64& rng) {
  if (l.ui.n() > 1) return general_solution_general_n(l.ui, l.spec.sampler(), rng);
  return general_solution_n1(l.ui, l.spec.sampler(), rng, l.spec.j_on_level_set(l.ui));
}

const SolutionFamily& family(const ProblemSpec& spec, const std::string& label) {
  for (const auto& f : spec.families) {
    if (f.label == label) return f;
  }
  throw std::runtime_error("no family " + label);
}

VerificationReport verify_family(const Loaded& l, const std::string& label) {
  const SolutionFamily& f = family(l.spec, label);
  std::mt19937_64 rng(1);
  return verify_solution(l.sys, l.spec.resolve(f, l.spec.j_on_level_set(l.ui)), f.constants, l.spec.grid, f.tol,
                         l.spec.family_sampler(f), rng);
}

TEST(BuildSystem, Example2Structural) {
  auto l = load("example2");
  ASSERT_EQ(l.sys.rhs.size(), 1u);
  EXPECT_EQ(l.sys.unknowns, (std::vector<std::string>{"u1[1]"}));
  Expr published = expand(substitute(P("u'^2 + (2 - C*exp(x))*u' - C*exp(x)"), {{"x", Expr::symbol("z")}}));
  EXPECT_EQ(l.sys.rhs[0], published);
}

TEST(BuildSystem, Example3Numeric) {
  for (const char* name : {"example3_k2", "example3_km1"}) {
    auto l = load(name);
    Expr published = P("-(1/(C*z^k))*u'^2 + (2*(k-1)/z)*u' + k*C*z^(k-2)");
    EXPECT_TRUE(equiv(l.sys.rhs[0], published, l.spec.sampler(), 200, 1e-9)) << name;
  }
}

TEST(BuildSystem, TranslationIsZero) {
  auto l = load("translation");
  ASSERT_EQ(l.sys.rhs.size(), 1u);
  EXPECT_TRUE(l.sys.rhs[0].is_zero());
}

TEST(BuildSystem, ZeroCoefficient) {
  VectorField q(1, 1, {Expr(0)}, {Expr(1)});
  LevelSetParametrization p;
  p.variable = "x";
  p.params = {"C"};
  p.solution = {{"u", P("C")}};
  EXPECT_THROW(build_system(q, p), ZeroCoefficient);
}

TEST(BuildSystem, RiccatiDegreeLaw) {
  for (const auto& name : builtin_problem_names()) {
    auto l = load(name);
    auto degree = riccati_degree(l.sys);
    ASSERT_TRUE(degree) << name;
    EXPECT_LE(*degree, 2) << name;
    if (l.ui.n() == 1 && l.ui.m() == 1 && classify_planar(l.ui.q) == PlanarClass::Linear) {
      EXPECT_LE(*degree, 1) << name;
    }
  }
}

TEST(GeneralSolution, OursVerifiesOnEveryFixture) {
  for (const auto& name : builtin_problem_names()) {
    auto l = load(name);
    std::mt19937_64 rng(2);
    RiccatiSolution sol = solve(l, rng);
    auto general = verify_solution(l.sys, sol, l.spec.grid, 1e-7, l.spec.sampler(), rng);
    EXPECT_TRUE(general.passed) << name << " residual " << general.max_residual << " deviation "
                                << general.max_deviation;
    auto particular = verify_solution(l.sys, sol.particular(), {}, l.spec.grid, 1e-7, l.spec.sampler(), rng);
    EXPECT_TRUE(particular.passed) << name;
    ASSERT_EQ(sol.alternate.size(), sol.family.size());
    DomainSampler s = l.spec.sampler();
    for (const auto& c : sol.constants) s.set(c, sol.constant_interval);
    for (std::size_t k = 0; k < sol.family.size(); ++k) {
      EXPECT_TRUE(equiv(sol.family[k], sol.alternate[k], s, 50, 1e-7)) << name;
    }
  }
}

TEST(GeneralSolution, ParticularIsUz) {
  for (const char* name : {"example2", "example3_k2", "example4"}) {
    auto l = load(name);
    std::mt19937_64 rng(0);
    RiccatiSolution sol = solve(l, rng);
    auto part = sol.particular();
    const auto& level = *l.ui.level_set;
    for (int i = 0; i < l.ui.m(); ++i) {
      Expr uz = diff(level.solution.at(l.ui.q.jet().u(i)), "z");
      EXPECT_TRUE(equiv(part[static_cast<std::size_t>(i)], uz, l.spec.sampler(), 50, 1e-9)) << name;
    }
  }
}

TEST(GeneralSolution, Example3ParticularFormula) {
  for (const char* name : {"example3_k2", "example3_km1"}) {
    auto l = load(name);
    std::mt19937_64 rng(0);
    auto part = solve(l, rng).particular();
    EXPECT_TRUE(equiv(part[0], P("k*C*z^(k-1)"), l.spec.sampler(), 100, 1e-12)) << name;
  }
}

TEST(GeneralSolution, PublishedFamiliesVerify) {
  struct Case {
    const char* problem;
    const char* label;
  };
  for (const Case& c : {Case{"example2", "published"}, Case{"example3_k2", "published"}, Case{"example3_km1", "published"},
                        Case{"example3_k2", "particular"}, Case{"example3_km1", "particular"},
                        Case{"example4", "published"}, Case{"example5", "published"}}) {
    auto l = load(c.problem);
    auto r = verify_family(l, c.label);
    EXPECT_TRUE(r.passed) << c.problem << "/" << c.label << " residual " << r.max_residual << " deviation "
                          << r.max_deviation;
  }
}

TEST(GeneralSolution, WrongArity) {
  auto l = load("synthetic_n2");
  std::mt19937_64 rng(0);
  EXPECT_THROW(general_solution_n1(l.ui, l.spec.sampler(), rng), WrongArity);
  auto e2 = load("example2");
  EXPECT_THROW(general_solution_systems(e2.ui, e2.spec.sampler(), rng), WrongArity);
  EXPECT_THROW(general_solution_general_n(e2.ui, e2.spec.sampler(), rng), WrongArity);
}

TEST(GeneralSolutionN, SyntheticParticularAndSmallCtilde) {
  auto l = load("synthetic_n2");
  std::mt19937_64 rng(3);
  RiccatiSolution sol = general_solution_general_n(l.ui, l.spec.sampler(), rng);
  EXPECT_EQ(sol.constants.size(), 2u);
  auto part = verify_solution(l.sys, sol.particular(), {}, l.spec.grid, 1e-8, l.spec.sampler(), rng);
  EXPECT_LE(part.max_residual, 1e-8);
  auto general = verify_solution(l.sys, sol, l.spec.grid, 1e-7, l.spec.sampler(), rng);
  EXPECT_LE(general.max_residual, 1e-7);
  EXPECT_TRUE(general.passed);
}

TEST(GeneralSolutionN, RectifiedParticularVanishes) {
  VectorField q(2, 1, {Expr(0), Expr(1)}, {Expr(0)});
  LevelSetParametrization p;
  p.variable = "x2";
  p.params = {"C1", "C2"};
  p.solution = {{"x1", P("C1")}, {"u", P("C2")}};
  UniversalInvariant ui(q, {P("x1"), P("u")}, P("x2"), p);
  std::mt19937_64 rng(0);
  RiccatiSolution sol = general_solution_general_n(ui, DomainSampler{}, rng);
  for (const Expr& e : sol.particular()) EXPECT_TRUE(e.is_zero()) << e;
}

TEST(ClassifyPlanar, Examples) {
  EXPECT_EQ(classify_planar(VectorField(1, 1, {P("u")}, {P("-x")})), PlanarClass::ConformalSeparable);
  EXPECT_EQ(classify_planar(VectorField(1, 1, {Expr(1)}, {P("x*u")})), PlanarClass::Linear);
  EXPECT_EQ(classify_planar(VectorField(1, 1, {P("exp(-x-u)")}, {P("u*exp(-x-u)")})), PlanarClass::General);
  EXPECT_EQ(classify_planar(VectorField(1, 1, {P("u^2")}, {P("u")})), PlanarClass::Bernoulli);
}

TEST(VerifySolution, ZeroSystemConstantSolution) {
  auto l = load("translation");
  std::mt19937_64 rng(0);
  DomainSampler s = l.spec.sampler();
  s.set("K", {-1.0, 1.0});
  std::vector<Expr> fam{Expr::symbol("K")};
  auto r = verify_solution(l.sys, fam, {"K"}, l.spec.grid, 1e-12, s, rng);
  EXPECT_EQ(r.max_residual, 0.0);
  EXPECT_TRUE(r.passed);
}

TEST(VerifySolution, CorruptedSolutionIsFlagged) {
  auto l = load("example2");
  std::mt19937_64 rng(0);
  RiccatiSolution sol = solve(l, rng);
  std::vector<Expr> corrupted;
  for (const Expr& e : sol.family) corrupted.push_back(e + Expr::decimal(1e-3));
  auto r = verify_solution(l.sys, corrupted, sol.constants, l.spec.grid, 1e-7, [&] {
    DomainSampler s = l.spec.sampler();
    for (const auto& c : sol.constants) s.set(c, sol.constant_interval);
    return s;
  }(), rng);
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_residual, 1e-7);
}

TEST(InvariantConstancy, FirstOrderInvariantsAreFirstIntegrals) {
  for (const char* name : {"example1", "example2", "example3_k2", "example4"}) {
    auto l = load(name);
    std::mt19937_64 rng(4);
    RiccatiSolution sol = solve(l, rng);
    ExprMatrix fo = first_order_invariants(l.ui);
    std::vector<Expr> invs;
    for (std::size_t i = 0; i < fo.rows(); ++i) invs.push_back(fo(i, 0));
    DomainSampler s = l.spec.sampler();
    for (const auto& c : sol.constants) s.set(c, sol.constant_interval);
    double spread = invariant_spread(invs, l.ui, l.sys, sol.family, sol.constants, l.spec.grid, s, rng);
    EXPECT_LE(spread, 1e-7) << name;
  }
}

}  // namespace
}  // namespace diffinv
