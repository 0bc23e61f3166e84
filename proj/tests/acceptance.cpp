// Acceptance run: one PASS/FAIL line per criterion, tolerances fixed below.
// Exit status is 0 when the set of failing criteria equals the set given by
// --expected-fail (default: empty).

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>

#include "diffinv/error.hpp"
#include "diffinv/invdiff.hpp"
#include "diffinv/parse.hpp"
#include "diffinv/problem.hpp"
#include "diffinv/quadrature.hpp"
#include "diffinv/riccati.hpp"
#include "random_tree.hpp"

using namespace diffinv;

namespace {

constexpr double kEx1Tol = 1e-9;
constexpr double kEx1Seconds = 1.0;
constexpr std::size_t kEx1Points = 200;
constexpr double kEx2Residual = 1e-7;
constexpr double kEx2Seconds = 5.0;
constexpr double kEx3Residual = 1e-7;
constexpr double kEx3ParticularResidual = 1e-9;
constexpr double kSystemsResidual = 1e-6;
constexpr double kSystemsSeconds = 30.0;
constexpr double kInvarianceTol = 1e-8;
constexpr std::size_t kInvariancePoints = 200;
constexpr std::size_t kRankPoints = 100;
constexpr double kRankFraction = 0.95;
constexpr double kReconstructTol = 1e-8;
constexpr int kOmegaTransforms = 5;
constexpr double kQuadratureTol = 1e-6;
constexpr int kPropertyTrees = 1000;
constexpr double kPropertyTol = 1e-8;

struct Outcome {
  bool pass = true;
  std::string detail;
};

void fail(Outcome& o, const std::string& what) {
  o.pass = false;
  if (!o.detail.empty()) o.detail += "; ";
  o.detail += what;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Loaded {
  ProblemSpec spec;
  UniversalInvariant ui;
  RiccatiSystem sys;
  Expr j_bar;
};

Loaded load(const std::string& name) {
  ProblemSpec spec = builtin_problem(name);
  std::mt19937_64 rng(0);
  auto ui = spec.universal_invariant(rng);
  auto sys = build_system(ui.q, *ui.level_set, spec.sampler(), rng);
  Expr j_bar = spec.j_on_level_set(ui);
  return {spec, ui, sys, j_bar};
}

VerificationReport verify_family(const Loaded& l, const std::string& label, double tol) {
  for (const auto& f : l.spec.families) {
    if (f.label != label) continue;
    std::mt19937_64 rng(1);
    return verify_solution(l.sys, l.spec.resolve(f, l.j_bar), f.constants, l.spec.grid, tol, l.spec.family_sampler(f),
                           rng);
  }
  throw Error("missing family " + label);
}

VerificationReport verify_ours(const Loaded& l, double tol) {
  std::mt19937_64 rng(2);
  RiccatiSolution sol = l.ui.n() == 1 ? general_solution_n1(l.ui, l.spec.sampler(), rng, l.j_bar)
                                      : general_solution_general_n(l.ui, l.spec.sampler(), rng);
  return verify_solution(l.sys, sol, l.spec.grid, tol, l.spec.sampler(), rng);
}

void expect_verified(Outcome& o, const std::string& what, const VerificationReport& r, double tol) {
  std::string res = what + " residual " + fmt("%.2e", r.max_residual) + " deviation " + fmt("%.2e", r.max_deviation);
  if (r.max_residual > tol || r.max_deviation > tol || r.rows.empty()) {
    fail(o, res);
  } else if (o.pass) {
    o.detail += (o.detail.empty() ? "" : "; ") + res;
  }
}

std::size_t binom(int n, int k) {
  std::size_t r = 1;
  for (int i = 1; i <= k; ++i) r = r * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return r;
}

Outcome criterion1() {
  Outcome o;
  Loaded l = load("example1");
  DomainSampler s({{"x", {0.5, 1.5}}, {"u", {0.5, 1.5}}, {"u1[1]", {-1.0, 1.0}}});
  auto out = first_order_n1(l.ui);
  std::mt19937_64 rng(0);
  Expr published = parse("(x + u*u')/(-u + x*u')*sqrt(x^2 + u^2)");
  Expr reduced = parse("(x + u*u')/(-u + x*u')");
  auto full = compare_numeric(out[0].ratio, published, s, kEx1Points, kEx1Tol, rng);
  auto red = compare_numeric(out[0].ratio / l.ui.ilist[0], reduced, s, kEx1Points, kEx1Tol, rng);
  auto negated = compare_numeric(out[0].ratio, -published, s, kEx1Points, kEx1Tol, rng);
  if (!full.equivalent) fail(o, "I_(1) vs published: max rel error " + fmt("%.3g", full.max_relative_error));
  if (!red.equivalent) fail(o, "reduced vs published: max rel error " + fmt("%.3g", red.max_relative_error));
  if (negated.equivalent) o.detail += "; equals the published form times -1 (QJ = +1 sign)";
  return o;
}

Outcome criterion2() {
  Outcome o;
  Loaded l = load("example2");
  std::mt19937_64 rng(0);
  Expr j = J_symbolic(l.ui.q, l.ui.ilist, *l.ui.level_set, *l.spec.antiderivative, l.spec.sampler(), 100, 1e-8, rng);
  if (j != parse("exp(x + u)/u")) fail(o, "J_symbolic gave " + render(j));
  Expr published = expand(substitute(parse("u'^2 + (2 - C*exp(x))*u' - C*exp(x)"), {{"x", Expr::symbol("z")}}));
  if (l.sys.rhs.size() != 1 || l.sys.rhs[0] != published) fail(o, "system not structurally equal");
  if (l.spec.grid.z0 != 0.0 || l.spec.grid.z1 != 1.0 || l.spec.sampler().interval("C").lo != 0.5 ||
      l.spec.sampler().interval("C").hi != 1.5) {
    fail(o, "fixture domain differs from x in [0,1], C in [0.5,1.5]");
  }
  expect_verified(o, "published", verify_family(l, "published", kEx2Residual), kEx2Residual);
  expect_verified(o, "ours", verify_ours(l, kEx2Residual), kEx2Residual);
  return o;
}

Outcome criterion3() {
  Outcome o;
  for (const char* name : {"example3_km1", "example3_k2"}) {
    Loaded l = load(name);
    expect_verified(o, std::string(name) + " published", verify_family(l, "published", kEx3Residual), kEx3Residual);
    std::vector<Expr> particular{parse("k*C*z^(k-1)")};
    std::mt19937_64 rng(3);
    auto r = verify_solution(l.sys, particular, {}, l.spec.grid, kEx3ParticularResidual, l.spec.sampler(), rng);
    expect_verified(o, std::string(name) + " particular", r, kEx3ParticularResidual);
  }
  return o;
}

Outcome criterion4() {
  Outcome o;
  for (const char* name : {"example4", "example5"}) {
    Loaded l = load(name);
    expect_verified(o, std::string(name) + " published", verify_family(l, "published", kSystemsResidual), kSystemsResidual);
  }
  return o;
}

Outcome criterion5() {
  Outcome o;
  double worst = 0.0;
  std::size_t checked = 0;
  for (const auto& name : builtin_problem_names()) {
    Loaded l = load(name);
    for (int r = 1; r <= 2; ++r) {
      std::mt19937_64 rng(5);
      auto qr = prolong(l.ui.q, r);
      for (const auto& inv : universal_differential_invariant(l.ui, r)) {
        auto v = is_invariant_numeric(qr, inv.expr, l.spec.sampler(), kInvariancePoints, kInvarianceTol, rng);
        worst = std::max(worst, v.max_scaled_residual);
        ++checked;
        if (!v.invariant) fail(o, name + " r=" + std::to_string(r) + " " + inv.label);
      }
    }
  }
  o.detail = std::to_string(checked) + " invariants, max scaled residual " + fmt("%.2e", worst) +
             (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

Outcome criterion6() {
  Outcome o;
  double worst = 1.0;
  for (const auto& name : builtin_problem_names()) {
    Loaded l = load(name);
    for (int r = 0; r <= 2; ++r) {
      auto list = universal_differential_invariant(l.ui, r);
      std::size_t expected = static_cast<std::size_t>(l.ui.n() - 1) + static_cast<std::size_t>(l.ui.m()) * binom(l.ui.n() + r, r);
      if (list.size() != expected) fail(o, name + " count");
      std::vector<Expr> exprs;
      for (const auto& inv : list) exprs.push_back(inv.expr);
      auto coords = JetSpace(l.ui.n(), l.ui.m(), r).coordinates(r);
      std::mt19937_64 rng(6);
      auto rank = functional_rank(exprs, coords, l.spec.sampler(), kRankPoints, rng);
      worst = std::min(worst, rank.fraction());
      if (rank.expected != expected || !rank.ok(kRankFraction)) fail(o, name + " r=" + std::to_string(r) + " rank");
    }
  }
  o.detail = "min full-rank fraction " + fmt("%.2f", worst) + (o.detail.empty() ? "" : "; " + o.detail);
  return o;
}

bool same_field(const VectorField& a, const VectorField& b, const DomainSampler& s) {
  for (int i = 0; i < a.n(); ++i) {
    if (!equivalent_numeric(a.xi(i), b.xi(i), s, 100, kReconstructTol, std::uint64_t{7})) return false;
  }
  for (int i = 0; i < a.m(); ++i) {
    if (!equivalent_numeric(a.eta(i), b.eta(i), s, 100, kReconstructTol, std::uint64_t{7})) return false;
  }
  return true;
}

Outcome criterion7() {
  Outcome o;
  std::mt19937_64 coef_rng(7);
  std::uniform_real_distribution<double> pos(0.5, 2.0);
  std::uniform_real_distribution<double> any(-1.0, 1.0);
  int transforms = 0;
  for (const char* name : {"example1", "example2", "example3_k2", "example3_km1"}) {
    Loaded l = load(name);
    DomainSampler s = l.spec.sampler();
    std::mt19937_64 rng(8);
    if (!same_field(reconstruct_field(l.ui.ilist, l.ui.j, l.ui.n(), l.ui.m(), s, rng), l.ui.q, s)) {
      fail(o, std::string(name) + " round trip");
    }
    auto args = invariant_argument_names(l.ui.ilist.size());
    for (int t = 0; t < kOmegaTransforms; ++t) {
      std::vector<Expr> f;
      for (const auto& a : args) {
        Expr i = Expr::symbol(a);
        f.push_back(Expr::decimal(pos(coef_rng)) * i + Expr::decimal(pos(coef_rng)) * pow(i, Expr(3)));
      }
      Expr i1 = Expr::symbol(args[0]);
      Expr h = Expr::decimal(any(coef_rng)) * sin(i1) + Expr::decimal(any(coef_rng)) * pow(i1, Expr(2));
      auto ut = equivalence_transform(l.ui, f, h, s, 30, kReconstructTol, rng);
      ++transforms;
      if (!same_field(reconstruct_field(ut.ilist, ut.j, l.ui.n(), l.ui.m(), s, rng), l.ui.q, s)) {
        fail(o, std::string(name) + " transform " + std::to_string(t));
      }
    }
  }
  if (o.pass) o.detail = "4 fixtures, " + std::to_string(transforms) + " equivalence transforms";
  return o;
}

Outcome criterion8() {
  Outcome o;
  int checked = 0;
  for (const auto& name : builtin_problem_names()) {
    Loaded l = load(name);
    if (l.ui.n() != 1) continue;
    JetSpace js(1, l.ui.m(), 1);
    std::set<std::string> jets;
    for (int i = 0; i < l.ui.m(); ++i) jets.insert(js.coordinate(i, {1}));
    for (const auto& f : first_order_n1(l.ui)) {
      auto dn = poly_degree(expand(f.numerator), jets);
      auto dd = poly_degree(expand(f.denominator), jets);
      ++checked;
      if (!dn || *dn > 1 || !dd || *dd > 1) fail(o, name);
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " outputs fractional-linear";
  return o;
}

Outcome criterion9() {
  Outcome o;
  double worst = 0.0;
  for (const char* name : {"example1", "example2"}) {
    Loaded l = load(name);
    const auto& p = *l.ui.level_set;
    std::mt19937_64 rng(9);
    std::vector<std::string> params(p.params.begin(), p.params.end());
    for (int set = 0; set < 5; ++set) {
      Bindings c = l.spec.sampler().sample(params, rng);
      auto point = [&](double z) {
        Bindings b = c;
        b.assign("z", z);
        Bindings xu;
        xu.bind(p.variable, z);
        for (const auto& [sym, e] : p.solution) xu.bind(sym, eval(e, b));
        return xu;
      };
      const auto& g = l.spec.grid;
      Bindings base = point(g.z0);
      for (int k = 1; k <= 5; ++k) {
        Bindings target = point(g.z0 + (g.z1 - g.z0) * k / 5.0);
        double expected = eval(l.ui.j, target) - eval(l.ui.j, base);
        double got = J_numeric(l.ui.q, l.ui.ilist, base, target);
        double err = std::fabs(got - expected) / (1 + std::fabs(expected));
        worst = std::max(worst, err);
        if (err > kQuadratureTol) fail(o, std::string(name) + " error " + fmt("%.2e", err));
      }
    }
  }
  if (o.pass) o.detail = "max relative error " + fmt("%.2e", worst);
  return o;
}

Outcome criterion10() {
  Outcome o;
  using testing::TreeGenerator;
  auto close = [](const Expr& a, const Expr& b, const DomainSampler& s) {
    std::mt19937_64 rng(17);
    return compare_numeric(a, b, s, 8, kPropertyTol, rng).equivalent;
  };
  int bad = 0;
  {
    TreeGenerator gen({"x", "u", "u1[1]", "C"}, 201);
    for (int i = 0; i < kPropertyTrees; ++i) {
      Expr once = normalize(gen.any(8));
      if (normalize(once) != once) ++bad;
    }
    if (bad) fail(o, "idempotence " + std::to_string(bad));
  }
  {
    JetSpace js(1, 1, 2);
    TreeGenerator gen({"x", "u", "u1[1]"}, 202);
    DomainSampler s({{"u1[1]", {-1.0, 1.0}}, {"u1[2]", {-1.0, 1.0}}});
    bad = 0;
    for (int i = 0; i < kPropertyTrees; ++i) {
      Expr a = gen.smooth(4);
      Expr b = gen.smooth(4);
      if (!close(total_derivative(a * b, 0, js), a * total_derivative(b, 0, js) + b * total_derivative(a, 0, js), s)) ++bad;
    }
    if (bad) fail(o, "Leibniz " + std::to_string(bad));
  }
  {
    JetSpace js(2, 1, 3);
    TreeGenerator gen({"x1", "x2", "u", "u1[1,0]", "u1[0,1]"}, 203);
    DomainSampler s(std::map<std::string, Interval>{}, Interval{-1.0, 1.0});
    bad = 0;
    for (int i = 0; i < kPropertyTrees; ++i) {
      Expr e = gen.smooth(4);
      if (!close(total_derivative(total_derivative(e, 0, js), 1, js),
                 total_derivative(total_derivative(e, 1, js), 0, js), s)) {
        ++bad;
      }
    }
    if (bad) fail(o, "commutativity " + std::to_string(bad));
  }
  {
    auto qr = prolong(VectorField(1, 1, {parse("exp(-x-u)")}, {parse("u*exp(-x-u)")}), 1);
    TreeGenerator gen({"x", "u", "u1[1]"}, 204);
    DomainSampler s({{"u1[1]", {-1.0, 1.0}}});
    bad = 0;
    for (int i = 0; i < kPropertyTrees; ++i) {
      Expr a = gen.smooth(4);
      Expr b = gen.smooth(4);
      if (!close(apply(qr, a * b), a * apply(qr, b) + b * apply(qr, a), s)) ++bad;
    }
    if (bad) fail(o, "derivation law " + std::to_string(bad));
  }
  if (o.pass) o.detail = "4 properties x " + std::to_string(kPropertyTrees) + " trees";
  return o;
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
  double seconds_limit;
};

}  // namespace

int main(int argc, char** argv) {
  std::set<int> expected_fail;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--expected-fail" && i + 1 < argc) {
      expected_fail.insert(std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: %s [--expected-fail N]...\n", argv[0]);
      return 64;
    }
  }

  const Criterion criteria[] = {
      {1, "example 1 first-order invariant", criterion1, kEx1Seconds},
      {2, "example 2 J, system and solutions", criterion2, kEx2Seconds},
      {3, "example 3 solutions (k=-1, k=2)", criterion3, 0},
      {4, "examples 4 and 5 system solutions", criterion4, kSystemsSeconds},
      {5, "invariance suite r=1,2", criterion5, 0},
      {6, "count and rank suite r<=2", criterion6, 0},
      {7, "field reconstruction and equivalence stability", criterion7, 0},
      {8, "fractional-linearity of first-order invariants", criterion8, 0},
      {9, "numeric vs symbolic J", criterion9, 0},
      {10, "property tests on random trees", criterion10, 0},
  };

  std::set<int> failed;
  for (const auto& c : criteria) {
    auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.seconds_limit > 0 && secs >= c.seconds_limit) fail(o, "runtime " + fmt("%.2f", secs) + " s");
    if (!o.pass) failed.insert(c.id);
    std::printf("criterion %2d: %s  %s (%.2f s)  %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }

  std::printf("%zu/%zu criteria passed\n", std::size(criteria) - failed.size(), std::size(criteria));
  if (failed != expected_fail) {
    for (int id : expected_fail) {
      if (!failed.count(id)) std::printf("criterion %d was expected to fail but passed\n", id);
    }
    return 1;
  }
  if (!expected_fail.empty()) std::printf("failures match the expected set\n");
  return 0;
}
