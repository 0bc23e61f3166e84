#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>
#include <stdexcept>

#include "diffinv/error.hpp"
#include "diffinv/invdiff.hpp"
#include "diffinv/jet.hpp"
#include "diffinv/parse.hpp"
#include "diffinv/quadrature.hpp"
#include "diffinv/riccati.hpp"

namespace diffinv::cli {

namespace {

std::string to_string(RiccatiVariant v) { return v == RiccatiVariant::Xi ? "xi" : "eta"; }

Report verdict_report(const std::string& expr, const InvarianceVerdict& v) {
  Report r;
  r["expr"] = expr;
  r["invariant"] = v.invariant;
  r["max_scaled_residual"] = v.max_scaled_residual;
  if (v.witness) {
    r["witness"] = to_report(*v.witness);
    r["witness_value"] = v.witness_value;
  }
  return r;
}

Report equivalence_report(const EquivalenceReport& e) {
  Report r;
  r["equivalent"] = e.equivalent;
  r["max_relative_error"] = e.max_relative_error;
  if (e.witness) r["witness"] = to_report(*e.witness);
  return r;
}

Report rank_report(const RankReport& rr) {
  Report r;
  r["expected_rank"] = rr.expected;
  r["points"] = rr.points;
  r["full_rank_points"] = rr.full_rank_points;
  r["fraction"] = rr.fraction();
  r["ok"] = rr.ok();
  return r;
}

std::set<std::string> first_order_symbols(int n, int m) {
  JetSpace js(n, m, 1);
  std::set<std::string> out;
  for (const auto& c : js.coordinates(1)) {
    if (js.dependent_coordinate(c) && order(js.dependent_coordinate(c)->alpha) == 1) out.insert(c);
  }
  return out;
}

// "equal", "equal up to factor -1" or "different".
std::string relation(const Expr& ours, const Expr& ref, const DomainSampler& sampler, std::size_t n,
                     std::mt19937_64& rng) {
  if (ours == ref) return "identical";
  if (compare_numeric(ours, ref, sampler, n, 1e-9, rng).equivalent) return "equal";
  if (compare_numeric(neg(ours), ref, sampler, n, 1e-9, rng).equivalent) return "equal up to factor -1";
  return "different";
}

Bindings level_point(const LevelSetParametrization& p, const Bindings& zc) {
  Bindings out;
  for (const auto& [name, e] : p.on_level_set()) out.bind(name, eval(e, zc));
  return out;
}

}  // namespace

Context::Context(ProblemSpec s, const RunOptions& options)
    : spec(std::move(s)),
      sampler(spec.sampler()),
      seed(options.seed.value_or(spec.seed.value_or(0))),
      rng(seed),
      samples(options.samples.value_or(spec.samples.value_or(200))),
      tol(options.tol.value_or(spec.tol.value_or(1e-8))) {
  JetSpace js(spec.n, spec.m, 0);
  for (const auto& [name, iv] : options.domains) sampler.set(js.canonicalize(Expr::symbol(name)).name(), iv);
}

ProblemSpec resolve_spec(const std::string& arg) {
  if (std::filesystem::exists(arg)) return load_problem(arg);
  const auto& names = builtin_problem_names();
  if (std::find(names.begin(), names.end(), arg) != names.end()) return builtin_problem(arg);
  throw ValidationError("no spec file or built-in problem named '" + arg + "'");
}

std::pair<std::string, Interval> parse_domain_flag(const std::string& text) {
  auto eq = text.rfind('=');
  auto colon = text.rfind(':');
  if (eq == std::string::npos || colon == std::string::npos || colon < eq) {
    throw std::invalid_argument("--domain expects SYM=LO:HI, got '" + text + "'");
  }
  Expr sym;
  try {
    sym = parse(text.substr(0, eq));
  } catch (const Error&) {
    throw std::invalid_argument("--domain: bad symbol in '" + text + "'");
  }
  if (!sym.is_symbol()) throw std::invalid_argument("--domain: bad symbol in '" + text + "'");
  try {
    std::size_t used = 0;
    std::string lo_text = text.substr(eq + 1, colon - eq - 1);
    std::string hi_text = text.substr(colon + 1);
    double lo = std::stod(lo_text, &used);
    if (used != lo_text.size()) throw std::invalid_argument("");
    double hi = std::stod(hi_text, &used);
    if (used != hi_text.size()) throw std::invalid_argument("");
    if (!(lo <= hi)) throw std::invalid_argument("");
    return {sym.name(), Interval{lo, hi}};
  } catch (const std::logic_error&) {
    throw std::invalid_argument("--domain: bad interval in '" + text + "'");
  }
}

Report invariance_section(Context& ctx, const UniversalInvariant& ui, bool& ok) {
  auto rep = validate(ui, ctx.sampler, ctx.samples, ctx.tol, ctx.rng);
  Report r;
  Report inv = Report::array();
  for (std::size_t q = 0; q < ui.ilist.size(); ++q) inv.push_back(verdict_report(render(ui.ilist[q]), rep.invariants[q]));
  r["invariants"] = inv;
  r["J"] = render(ui.j);
  r["QJ_equals_1"] = equivalence_report(rep.normalization);
  r["independence"] = rank_report(rep.independence);
  r["ok"] = rep.ok();
  ok = ok && rep.ok();
  return r;
}

Report first_order_section(Context& ctx, const UniversalInvariant& ui, bool& ok) {
  Report r;
  bool good = true;
  ExprMatrix fo = first_order_invariants(ui);
  Report mat = Report::array();
  for (std::size_t i = 0; i < fo.rows(); ++i) {
    Report row = Report::array();
    for (std::size_t a = 0; a < fo.cols(); ++a) row.push_back(render(fo(i, a)));
    mat.push_back(row);
  }
  r["D_y_I"] = mat;
  if (ui.n() == 1) {
    auto q1 = prolong(ui.q, 1);
    auto derivs = first_order_symbols(ui.n(), ui.m());
    Report items = Report::array();
    auto outs = first_order_n1(ui);
    for (std::size_t j = 0; j < outs.size(); ++j) {
      const auto& f = outs[j];
      Report item;
      item["numerator"] = render(f.numerator);
      item["denominator"] = render(f.denominator);
      item["ratio"] = render(f.ratio);
      auto dn = poly_degree(f.numerator, derivs);
      auto dd = poly_degree(f.denominator, derivs);
      bool linear = dn && dd && *dn <= 1 && *dd <= 1;
      item["fractionally_linear"] = linear;
      good = good && linear;
      auto v = is_invariant_numeric(q1, f.ratio, ctx.sampler, ctx.samples, ctx.tol, ctx.rng);
      item["invariance"] = verdict_report(render(f.ratio), v);
      good = good && v.invariant;
      if (j < ctx.spec.reference.first_order.size()) {
        const Expr& ref = ctx.spec.reference.first_order[j];
        std::string rel = relation(f.ratio, ref, ctx.sampler, ctx.samples, ctx.rng);
        item["published"] = render(ref);
        item["relation_to_published"] = rel;
        good = good && rel != "different";
      }
      if (j < ctx.spec.reference.first_order_reduced.size()) {
        const Expr& red = ctx.spec.reference.first_order_reduced[j];
        item["published_reduced"] = render(red);
        auto v2 = is_invariant_numeric(q1, red, ctx.sampler, ctx.samples, ctx.tol, ctx.rng);
        item["published_reduced_invariant"] = v2.invariant;
        good = good && v2.invariant;
      }
      items.push_back(item);
    }
    r["first_order_n1"] = items;
  }
  r["ok"] = good;
  ok = ok && good;
  return r;
}

Report system_section(Context& ctx, const RiccatiSystem& sys, bool& ok) {
  Report r;
  bool good = true;
  r["variant"] = to_string(sys.variant);
  r["z"] = sys.z;
  r["unknowns"] = sys.unknowns;
  r["rhs"] = to_report(sys.rhs);
  auto deg = riccati_degree(sys);
  r["degree"] = deg ? Report(*deg) : Report("not polynomial");
  good = good && deg && *deg <= 2;
  const auto& ref = ctx.spec.reference.system;
  if (!ref.empty()) {
    Report cmp = Report::array();
    for (std::size_t i = 0; i < ref.size() && i < sys.rhs.size(); ++i) {
      std::string how;
      if (expand(ref[i]) == sys.rhs[i]) {
        how = "structural";
      } else if (compare_numeric(ref[i], sys.rhs[i], ctx.sampler, ctx.samples, 1e-9, ctx.rng).equivalent) {
        how = "numeric";
      } else {
        how = "different";
        good = false;
      }
      Report c;
      c["published"] = render(ref[i]);
      c["agreement"] = how;
      cmp.push_back(c);
    }
    r["published"] = cmp;
  }
  r["ok"] = good;
  ok = ok && good;
  return r;
}

namespace {

RiccatiSolution solve(Context& ctx, const UniversalInvariant& ui) {
  if (ui.n() == 1) return general_solution_n1(ui, ctx.sampler, ctx.rng, ctx.spec.j_on_level_set(ui));
  return general_solution_general_n(ui, ctx.sampler, ctx.rng);
}

Report verification_report(const VerificationReport& v) {
  Report r;
  r["max_residual"] = v.max_residual;
  r["max_deviation"] = v.max_deviation;
  r["tol"] = v.tol;
  r["passed"] = v.passed;
  Report rows = Report::array();
  for (const auto& row : v.rows) {
    Report x;
    x["parameters"] = to_report(row.parameters);
    x["residual"] = row.max_residual;
    x["deviation"] = row.max_deviation;
    rows.push_back(x);
  }
  r["rows"] = rows;
  return r;
}

}  // namespace

Report verify_section(Context& ctx, const UniversalInvariant& ui, const RiccatiSystem& sys, bool& ok) {
  Report r;
  bool good = true;
  RiccatiSolution sol = solve(ctx, ui);
  DomainSampler ours_sampler = ctx.sampler;
  for (const auto& c : sol.constants)
    if (!ours_sampler.intervals().count(c)) ours_sampler.set(c, sol.constant_interval);

  auto general = verify_solution(sys, sol.family, sol.constants, ctx.spec.grid, ctx.tol, ours_sampler, ctx.rng, true);
  r["general"] = verification_report(general);
  good = good && general.passed;
  auto particular = verify_solution(sys, sol.particular(), {}, ctx.spec.grid, ctx.tol, ctx.sampler, ctx.rng, true);
  r["particular"] = verification_report(particular);
  good = good && particular.passed;

  ExprMatrix fo = first_order_invariants(ui);
  std::vector<Expr> invs;
  for (std::size_t i = 0; i < fo.rows(); ++i)
    for (std::size_t a = 0; a < fo.cols(); ++a) invs.push_back(fo(i, a));
  double spread = invariant_spread(invs, ui, sys, sol.family, sol.constants, ctx.spec.grid, ours_sampler, ctx.rng);
  r["invariant_spread"] = spread;
  good = good && spread <= 1e-7;

  Expr jb = ctx.spec.j_on_level_set(ui);
  Report fams = Report::array();
  for (const auto& f : ctx.spec.families) {
    auto comps = ctx.spec.resolve(f, jb);
    auto v = verify_solution(sys, comps, f.constants, ctx.spec.grid, f.tol, ctx.spec.family_sampler(f), ctx.rng, true);
    Report x = verification_report(v);
    x["label"] = f.label;
    fams.push_back(x);
    good = good && v.passed;
  }
  r["families"] = fams;
  r["ok"] = good;
  ok = ok && good;
  return r;
}

Report quadrature_section(Context& ctx, const UniversalInvariant& ui, std::size_t rows, bool& ok) {
  Report r;
  bool good = true;
  if (!ui.level_set) throw ValidationError("quadrature needs a level-set parametrization");
  const auto& p = *ui.level_set;
  if (ctx.spec.antiderivative) {
    Expr js = J_symbolic(ui.q, ui.ilist, p, *ctx.spec.antiderivative, ctx.sampler, 50, ctx.tol, ctx.rng);
    r["J_symbolic"] = render(js);
    if (ctx.spec.j) {
      std::string how = js == *ctx.spec.j ? "structural"
                        : compare_numeric(js, *ctx.spec.j, ctx.sampler, ctx.samples, 1e-9, ctx.rng).equivalent
                            ? "numeric"
                            : "different";
      r["agreement_with_J"] = how;
      good = good && how != "different";
    }
  }
  std::vector<std::string> zc{p.z};
  zc.insert(zc.end(), p.params.begin(), p.params.end());
  // Constants such as k in a field coefficient are sampled alongside (z, C).
  std::vector<std::string> extras;
  {
    std::vector<Expr> all(ui.q.xi());
    all.insert(all.end(), ui.q.eta().begin(), ui.q.eta().end());
    all.insert(all.end(), ui.ilist.begin(), ui.ilist.end());
    all.push_back(ui.j);
    for (const auto& [name, e] : p.on_level_set()) all.push_back(e);
    auto coords = ui.q.jet().coordinates(0);
    for (const auto& s : union_symbols(all)) {
      if (std::find(coords.begin(), coords.end(), s) != coords.end()) continue;
      if (std::find(zc.begin(), zc.end(), s) != zc.end()) continue;
      extras.push_back(s);
    }
  }
  zc.insert(zc.end(), extras.begin(), extras.end());
  CompiledExpr j(ui.j);
  Report table = Report::array();
  double worst = 0.0;
  std::size_t done = 0;
  auto z_iv = ctx.sampler.interval(p.z);
  std::uniform_real_distribution<double> zdist(z_iv.lo, z_iv.hi);
  for_each_sample(zc, ctx.sampler, rows, ctx.rng, [&](const Bindings& b0) {
    Bindings b1 = b0;
    b1.assign(p.z, zdist(ctx.rng));
    Bindings base = level_point(p, b0);
    Bindings target = level_point(p, b1);
    for (const auto& s : extras) {
      base.bind(s, b0.at(s));
      target.bind(s, b0.at(s));
    }
    double t = J_numeric(ui.q, ui.ilist, base, target);
    double expected = j(target) - j(base);
    double err = std::fabs(t - expected);
    worst = std::max(worst, err);
    Report row;
    row["base"] = to_report(base);
    row["target"] = to_report(target);
    row["flow_time"] = t;
    row["J_difference"] = expected;
    row["error"] = err;
    table.push_back(row);
    ++done;
    return true;
  });
  r["flow_table"] = table;
  r["max_error"] = worst;
  good = good && worst <= 1e-6;
  r["ok"] = good;
  ok = ok && good;
  return r;
}

Report reconstruct_section(Context& ctx, const UniversalInvariant& ui, bool& ok) {
  Report r;
  bool good = true;
  VectorField rq = reconstruct_field(ui.ilist, ui.j, ui.n(), ui.m(), ctx.sampler, ctx.rng);
  r["xi"] = to_report(rq.xi());
  r["eta"] = to_report(rq.eta());
  if (ctx.spec.has_field()) {
    Report cmp = Report::array();
    std::vector<Expr> mine(rq.xi());
    mine.insert(mine.end(), rq.eta().begin(), rq.eta().end());
    std::vector<Expr> given(ui.q.xi());
    given.insert(given.end(), ui.q.eta().begin(), ui.q.eta().end());
    for (std::size_t k = 0; k < mine.size(); ++k) {
      auto e = compare_numeric(mine[k], given[k], ctx.sampler, ctx.samples, ctx.tol, ctx.rng);
      cmp.push_back(equivalence_report(e));
      good = good && e.equivalent;
    }
    r["agreement_with_field"] = cmp;
  }
  r["ok"] = good;
  ok = ok && good;
  return r;
}

namespace {

Report start(const Context& ctx, const std::string& command) {
  Report r;
  r["command"] = command;
  r["problem"] = ctx.spec.name;
  r["n"] = ctx.spec.n;
  r["m"] = ctx.spec.m;
  r["seed"] = ctx.seed;
  r["samples"] = ctx.samples;
  r["tol"] = ctx.tol;
  return r;
}

}  // namespace

Outcome cmd_check(Context& ctx) {
  Outcome out;
  out.report = start(ctx, "check");
  bool ok = true;
  VectorField q = ctx.spec.field();
  check_nonzero(q, ctx.sampler, ctx.rng);
  out.report["field"] = {{"xi", to_report(q.xi())}, {"eta", to_report(q.eta())}};
  if (!ctx.spec.invariants.empty() && ctx.spec.has_invariant()) {
    auto ui = ctx.spec.universal_invariant(ctx.rng);
    out.report["universal_invariant"] = invariance_section(ctx, ui, ok);
    if (ui.level_set) {
      auto pr = validate_parametrization(ui.ilist, *ui.level_set, ctx.sampler, ctx.samples, ctx.tol, ctx.rng);
      Report lr;
      lr["ok"] = pr.ok;
      lr["max_residual"] = pr.max_residual;
      out.report["level_set"] = lr;
      ok = ok && pr.ok;
    }
  } else if (!ctx.spec.invariants.empty()) {
    auto q1 = prolong(q, 0);
    Report inv = Report::array();
    for (const auto& i : ctx.spec.invariants) {
      auto v = is_invariant_numeric(q1, i, ctx.sampler, ctx.samples, ctx.tol, ctx.rng);
      inv.push_back(verdict_report(render(i), v));
      ok = ok && v.invariant;
    }
    out.report["invariants"] = inv;
  }
  if (q.n() == 1 && q.m() == 1) out.report["planar_class"] = to_string(classify_planar(q, ctx.sampler, ctx.rng));
  out.report["ok"] = ok;
  out.code = ok ? 0 : 2;
  return out;
}

Outcome cmd_prolong(Context& ctx, int order) {
  Outcome out;
  out.report = start(ctx, "prolong");
  out.report["order"] = order;
  auto qr = prolong(ctx.spec.field(), order);
  Report coeffs = Report::array();
  for (const auto& [name, e] : qr.all_coefficients()) {
    coeffs.push_back({{"coordinate", name}, {"coefficient", render(e)}});
  }
  out.report["coefficients"] = coeffs;
  return out;
}

Outcome cmd_invariants(Context& ctx, int order) {
  Outcome out;
  out.report = start(ctx, "invariants");
  out.report["order"] = order;
  bool ok = true;
  auto ui = ctx.spec.universal_invariant(ctx.rng);
  auto list = universal_differential_invariant(ui, order, ctx.sampler, ctx.rng);
  auto qr = prolong(ui.q, order);
  Report items = Report::array();
  std::vector<Expr> exprs;
  for (const auto& d : list) {
    auto v = is_invariant_numeric(qr, d.expr, ctx.sampler, ctx.samples, ctx.tol, ctx.rng);
    Report x = verdict_report(render(d.expr), v);
    x["label"] = d.label;
    x["order"] = d.order;
    items.push_back(x);
    exprs.push_back(d.expr);
    ok = ok && v.invariant;
  }
  out.report["differential_invariants"] = items;
  auto coords = qr.jet().coordinates(order);
  auto rank = functional_rank(exprs, coords, ctx.sampler, 100, ctx.rng);
  out.report["count"] = list.size();
  out.report["rank"] = rank_report(rank);
  ok = ok && rank.ok();
  out.report["ok"] = ok;
  out.code = ok ? 0 : 2;
  return out;
}

Outcome cmd_first_order(Context& ctx) {
  Outcome out;
  out.report = start(ctx, "first-order");
  bool ok = true;
  auto ui = ctx.spec.universal_invariant(ctx.rng);
  out.report["first_order"] = first_order_section(ctx, ui, ok);
  out.report["ok"] = ok;
  out.code = ok ? 0 : 2;
  return out;
}

Outcome cmd_quadrature(Context& ctx) {
  Outcome out;
  out.report = start(ctx, "quadrature");
  bool ok = true;
  auto ui = ctx.spec.universal_invariant(ctx.rng);
  out.report["quadrature"] = quadrature_section(ctx, ui, std::min<std::size_t>(ctx.samples, 20), ok);
  out.report["ok"] = ok;
  out.code = ok ? 0 : 2;
  return out;
}

Outcome cmd_riccati_build(Context& ctx) {
  Outcome out;
  out.report = start(ctx, "riccati build");
  bool ok = true;
  if (!ctx.spec.level_set) throw ValidationError("riccati needs a level-set parametrization");
  auto sys = build_system(ctx.spec.field(), *ctx.spec.level_set, ctx.sampler, ctx.rng);
  out.report["system"] = system_section(ctx, sys, ok);
  out.report["ok"] = ok;
  out.code = ok ? 0 : 2;
  return out;
}

Outcome cmd_riccati_solve(Context& ctx) {
  Outcome out;
  out.report = start(ctx, "riccati solve");
  auto ui = ctx.spec.universal_invariant(ctx.rng);
  RiccatiSolution sol = solve(ctx, ui);
  out.report["unknowns"] = sol.unknowns;
  out.report["constants"] = sol.constants;
  out.report["family"] = to_report(sol.family);
  out.report["alternate_form"] = to_report(sol.alternate);
  out.report["particular"] = to_report(sol.particular());
  out.report["constant_interval"] = {sol.constant_interval.lo, sol.constant_interval.hi};
  out.report["note"] = sol.note;
  return out;
}

Outcome cmd_riccati_verify(Context& ctx) {
  Outcome out;
  out.report = start(ctx, "riccati verify");
  bool ok = true;
  auto ui = ctx.spec.universal_invariant(ctx.rng);
  if (!ui.level_set) throw ValidationError("riccati needs a level-set parametrization");
  auto sys = build_system(ui.q, *ui.level_set, ctx.sampler, ctx.rng);
  out.report["verification"] = verify_section(ctx, ui, sys, ok);
  out.report["ok"] = ok;
  out.code = ok ? 0 : 2;
  return out;
}

Outcome cmd_reconstruct(Context& ctx) {
  Outcome out;
  out.report = start(ctx, "reconstruct");
  bool ok = true;
  auto ui = ctx.spec.universal_invariant(ctx.rng);
  out.report["reconstruction"] = reconstruct_section(ctx, ui, ok);
  out.report["ok"] = ok;
  out.code = ok ? 0 : 2;
  return out;
}

}  // namespace diffinv::cli
