#include <benchmark/benchmark.h>

#include "diffinv/invariants.hpp"
#include "diffinv/parse.hpp"
#include "diffinv/problem.hpp"
#include "diffinv/quadrature.hpp"
#include "diffinv/riccati.hpp"

using namespace diffinv;

namespace {

UniversalInvariant fixture(const char* name) {
  std::mt19937_64 rng(0);
  return builtin_problem(name).universal_invariant(rng);
}

void BM_Parse(benchmark::State& state) {
  const char* text = "(x + u*u')/(-u + x*u')*sqrt(x^2 + u^2) - exp(-2*x - u)*u^2*(u' - u)/(u + u*u' - u')";
  for (auto _ : state) benchmark::DoNotOptimize(parse(text));
}
BENCHMARK(BM_Parse);

void BM_CompiledEval(benchmark::State& state) {
  CompiledExpr f(parse("arcsin(x/sqrt(x^2+u^2))*exp(x+u)/u"));
  std::vector<double> values(f.symbols().size(), 0.7);
  for (auto _ : state) benchmark::DoNotOptimize(f.evaluate(values));
}
BENCHMARK(BM_CompiledEval);

void BM_Prolong(benchmark::State& state) {
  VectorField q(1, 1, {parse("exp(-x-u)")}, {parse("u*exp(-x-u)")});
  const int r = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto qr = prolong(q, r);
    benchmark::DoNotOptimize(qr.coefficient(0, {r}));
  }
}
BENCHMARK(BM_Prolong)->DenseRange(1, 4);

void BM_UniversalDifferentialInvariant(benchmark::State& state) {
  auto ui = fixture("example1");
  const int r = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(universal_differential_invariant(ui, r));
}
BENCHMARK(BM_UniversalDifferentialInvariant)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_SyntheticN2Invariants(benchmark::State& state) {
  auto ui = fixture("synthetic_n2");
  for (auto _ : state) benchmark::DoNotOptimize(universal_differential_invariant(ui, 2));
}
BENCHMARK(BM_SyntheticN2Invariants)->Unit(benchmark::kMillisecond);

void BM_JNumeric(benchmark::State& state) {
  VectorField q(1, 1, {parse("u")}, {parse("-x")});
  std::vector<Expr> ilist{parse("sqrt(x^2+u^2)")};
  Bindings base{{"x", 0.8}, {"u", 0.6}};
  Bindings target{{"x", 0.6}, {"u", 0.8}};
  for (auto _ : state) benchmark::DoNotOptimize(J_numeric(q, ilist, base, target));
}
BENCHMARK(BM_JNumeric)->Unit(benchmark::kMicrosecond);

void BM_VerifySolution(benchmark::State& state) {
  ProblemSpec spec = builtin_problem("example2");
  std::mt19937_64 rng(0);
  auto ui = spec.universal_invariant(rng);
  auto sys = build_system(ui.q, *ui.level_set, spec.sampler(), rng);
  auto sol = general_solution_n1(ui, spec.sampler(), rng, spec.j_on_level_set(ui));
  for (auto _ : state) {
    std::mt19937_64 r(1);
    benchmark::DoNotOptimize(verify_solution(sys, sol, spec.grid, 1e-7, spec.sampler(), r));
  }
}
BENCHMARK(BM_VerifySolution)->Unit(benchmark::kMillisecond);

void BM_Example5Quadrature(benchmark::State& state) {
  auto ui = fixture("example5");
  CompiledExpr j(ui.j);
  std::vector<double> values(j.symbols().size(), 0.6);
  for (auto _ : state) benchmark::DoNotOptimize(j.evaluate(values));
}
BENCHMARK(BM_Example5Quadrature)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
