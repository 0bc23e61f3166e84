#include "diffinv/invariants.hpp"

#include <cmath>
#include <map>

#include "diffinv/error.hpp"

namespace diffinv {

Substitution LevelSetParametrization::on_level_set() const {
  Substitution s = solution;
  s[variable] = Expr::symbol(z);
  return s;
}

Substitution LevelSetParametrization::back_substitution(std::span<const Expr> ilist) const {
  if (ilist.size() != params.size()) throw std::invalid_argument("back_substitution: size mismatch");
  Substitution s;
  s[z] = Expr::symbol(variable);
  for (std::size_t q = 0; q < params.size(); ++q) s[params[q]] = ilist[q];
  return s;
}

UniversalInvariant::UniversalInvariant(VectorField field, std::vector<Expr> invariants, Expr companion,
                                       std::optional<LevelSetParametrization> ls)
    : q(std::move(field)), ilist(std::move(invariants)), j(std::move(companion)), level_set(std::move(ls)) {
  if (ilist.size() != static_cast<std::size_t>(q.m() + q.n() - 1)) {
    throw ValidationError("universal invariant needs m+n-1 = " + std::to_string(q.m() + q.n() - 1) +
                          " functions, got " + std::to_string(ilist.size()));
  }
  JetSpace js = q.jet();
  for (auto& e : ilist) e = js.canonicalize(e);
  j = js.canonicalize(j);
  if (level_set && level_set->params.size() != ilist.size()) {
    throw ValidationError("level set needs one constant per invariant");
  }
}

RankReport functional_rank(std::span<const Expr> funcs, std::span<const std::string> coords,
                           const DomainSampler& sampler, std::size_t n, std::mt19937_64& rng, double threshold) {
  RankReport report;
  report.expected = funcs.size();
  std::vector<CompiledExpr> partials;
  std::vector<Expr> all;
  for (const auto& f : funcs) {
    all.push_back(f);
    for (const auto& c : coords) {
      Expr d = diff(f, c);
      all.push_back(d);
      partials.emplace_back(d);
    }
  }
  std::vector<std::string> symbols = union_symbols(all);
  for (const auto& c : coords) {
    if (!std::binary_search(symbols.begin(), symbols.end(), c)) {
      symbols.insert(std::lower_bound(symbols.begin(), symbols.end(), c), c);
    }
  }
  std::vector<CompiledExpr> values(funcs.begin(), funcs.end());
  std::vector<double> jac(funcs.size() * coords.size());
  for_each_sample(symbols, sampler, n, rng, [&](const Bindings& b) {
    for (const auto& v : values) v(b);  // domain check of the functions themselves
    for (std::size_t k = 0; k < partials.size(); ++k) jac[k] = partials[k](b);
    // Rescaling a function does not change the rank; equilibrate the rows.
    const std::size_t cols = coords.size();
    for (std::size_t i = 0; i < funcs.size(); ++i) {
      double norm = 0.0;
      for (std::size_t j = 0; j < cols; ++j) norm += jac[i * cols + j] * jac[i * cols + j];
      norm = std::sqrt(norm);
      if (norm > 0.0)
        for (std::size_t j = 0; j < cols; ++j) jac[i * cols + j] /= norm;
    }
    ++report.points;
    if (numeric_rank(jac, funcs.size(), coords.size(), threshold) == funcs.size()) ++report.full_rank_points;
    return true;
  });
  return report;
}

bool UniversalInvariantReport::ok() const {
  for (const auto& v : invariants)
    if (!v.invariant) return false;
  return normalization.equivalent && independence.ok();
}

UniversalInvariantReport validate(const UniversalInvariant& ui, const DomainSampler& sampler, std::size_t n,
                                  double tol, std::mt19937_64& rng) {
  UniversalInvariantReport report;
  ProlongedField q0 = prolong(ui.q, 0);
  for (const auto& i : ui.ilist) report.invariants.push_back(is_invariant_numeric(q0, i, sampler, n, tol, rng));
  report.normalization = compare_numeric(apply(q0, ui.j), Expr(1), sampler, n, tol, rng);
  std::vector<Expr> funcs(ui.ilist);
  funcs.push_back(ui.j);
  auto coords = ui.q.jet().coordinates(0);
  report.independence = functional_rank(funcs, coords, sampler, 100, rng);
  return report;
}

Expr InvariantDerivation::apply(const Expr& e, const JetSpace& js) const {
  std::vector<Expr> terms;
  for (std::size_t b = 0; b < w.size(); ++b) {
    if (w[b].is_zero()) continue;
    terms.push_back(mul({w[b], total_derivative(e, static_cast<int>(b), js)}));
  }
  return add(std::move(terms));
}

namespace {

bool vanishes_everywhere(const Expr& e, const DomainSampler& sampler, std::size_t n, std::mt19937_64& rng) {
  CompiledExpr c(e);
  bool nonzero = false;
  for_each_sample(e.free_symbols(), sampler, n, rng, [&](const Bindings& b) {
    if (std::fabs(c(b)) > 1e-12) nonzero = true;
    return !nonzero;
  });
  return !nonzero;
}

}  // namespace

std::vector<InvariantDerivation> invariant_derivations(const UniversalInvariant& ui, const DomainSampler& sampler,
                                                       std::mt19937_64& rng) {
  const int n = ui.n();
  JetSpace js(n, ui.m(), 1);
  std::vector<Expr> frame(ui.ilist.begin(), ui.ilist.begin() + (n - 1));
  frame.push_back(ui.j);
  ExprMatrix mt(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
  for (int c = 0; c < n; ++c)
    for (int b = 0; b < n; ++b)
      mt(static_cast<std::size_t>(c), static_cast<std::size_t>(b)) = total_derivative(frame[static_cast<std::size_t>(c)], b, js);
  Expr delta = det(mt);
  if (delta.is_zero() || vanishes_everywhere(delta, sampler, 20, rng)) {
    throw DegenerateFrame("D(I^1..I^{n-1}, J)/D(x_1..x_n) vanishes on the sampled domain");
  }
  Expr inv_delta = pow(delta, Expr(-1));
  std::vector<InvariantDerivation> out;
  for (int c = 0; c < n; ++c) {
    InvariantDerivation d;
    d.index = c;
    for (int b = 0; b < n; ++b) {
      Expr cof = n == 1 ? Expr(1) : cofactor(mt, static_cast<std::size_t>(c), static_cast<std::size_t>(b));
      d.w.push_back(mul({cof, inv_delta}));
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<InvariantDerivation> invariant_derivations(const UniversalInvariant& ui) {
  std::mt19937_64 rng(0);
  return invariant_derivations(ui, DomainSampler(), rng);
}

namespace {

std::string alpha_label(const MultiIndex& alpha) {
  std::string s = "[";
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(alpha[k]);
  }
  return s + "]";
}

}  // namespace

std::vector<DifferentialInvariant> universal_differential_invariant(const UniversalInvariant& ui, int r,
                                                                   const DomainSampler& sampler,
                                                                   std::mt19937_64& rng) {
  if (r < 0) throw std::invalid_argument("universal_differential_invariant: negative order");
  const int n = ui.n();
  const int m = ui.m();
  JetSpace js(n, m, std::max(r, 1));
  auto ops = invariant_derivations(ui, sampler, rng);
  std::vector<DifferentialInvariant> out;
  for (int c = 0; c < n - 1; ++c) {
    out.push_back({"I" + std::to_string(c + 1), ui.ilist[static_cast<std::size_t>(c)], 0});
  }
  std::map<std::pair<int, MultiIndex>, Expr> memo;
  for (int k = 0; k <= r; ++k) {
    auto indices = multi_indices(n, k);
    for (int i = 0; i < m; ++i) {
      const int q = i + n - 1;
      for (const auto& alpha : indices) {
        Expr value;
        if (k == 0) {
          value = ui.ilist[static_cast<std::size_t>(q)];
        } else {
          std::size_t a = 0;
          while (alpha[a] == 0) ++a;
          MultiIndex beta = alpha;
          --beta[a];
          value = ops[a].apply(memo.at({i, beta}), js);
        }
        memo.emplace(std::make_pair(i, alpha), value);
        std::string label = "I" + std::to_string(q + 1);
        if (k > 0) label = "D_y" + alpha_label(alpha) + " " + label;
        out.push_back({label, value, k});
      }
    }
  }
  return out;
}

std::vector<DifferentialInvariant> universal_differential_invariant(const UniversalInvariant& ui, int r) {
  std::mt19937_64 rng(0);
  return universal_differential_invariant(ui, r, DomainSampler(), rng);
}

ExprMatrix first_order_invariants(const UniversalInvariant& ui) {
  const int n = ui.n();
  const int m = ui.m();
  JetSpace js(n, m, 1);
  auto ops = invariant_derivations(ui);
  ExprMatrix out(static_cast<std::size_t>(m), static_cast<std::size_t>(n));
  for (int i = 0; i < m; ++i)
    for (int a = 0; a < n; ++a)
      out(static_cast<std::size_t>(i), static_cast<std::size_t>(a)) =
          ops[static_cast<std::size_t>(a)].apply(ui.ilist[static_cast<std::size_t>(i + n - 1)], js);
  return out;
}

std::vector<FirstOrderInvariant> first_order_n1(const UniversalInvariant& ui) {
  if (ui.n() != 1) throw WrongArity("first_order_n1 requires n = 1");
  JetSpace js(1, ui.m(), 1);
  Expr den = total_derivative(ui.j, 0, js);
  Expr inv_den = pow(den, Expr(-1));
  std::vector<FirstOrderInvariant> out;
  for (const auto& i : ui.ilist) {
    Expr num = total_derivative(i, 0, js);
    out.push_back({num, den, mul({num, inv_den})});
  }
  return out;
}

std::vector<Expr> lie_chain(const Expr& i, const Expr& i1, const VectorField& q, int r,
                            const DomainSampler& sampler, std::mt19937_64& rng) {
  if (q.n() != 1 || q.m() != 1) throw WrongArity("lie_chain requires n = m = 1");
  if (r < 1) throw std::invalid_argument("lie_chain: r must be at least 1");
  JetSpace js(1, 1, r + 1);
  Expr dxi = total_derivative(i, 0, js);
  if (dxi.is_zero() || vanishes_everywhere(dxi, sampler, 20, rng)) {
    throw DegenerateFrame("D_x I vanishes on the sampled domain");
  }
  Expr w = pow(dxi, Expr(-1));
  std::vector<Expr> out{i, i1};
  Expr cur = i1;
  for (int s = 1; s < r; ++s) {
    cur = mul({w, total_derivative(cur, 0, js)});
    out.push_back(cur);
  }
  return out;
}

std::vector<Expr> lie_chain(const Expr& i, const Expr& i1, const VectorField& q, int r) {
  std::mt19937_64 rng(0);
  return lie_chain(i, i1, q, r, DomainSampler(), rng);
}

}  // namespace diffinv
