#include "diffinv/invdiff.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "diffinv/error.hpp"
#include "diffinv/linalg.hpp"

namespace diffinv {

std::string to_string(DifferentialType t) {
  switch (t) {
    case DifferentialType::FirstType: return "first_type";
    case DifferentialType::SecondType: return "second_type";
    case DifferentialType::NotInvariant: return "not_invariant";
  }
  return "?";
}

DifferentialClass classify_differential(const VectorField& q, const Expr& w, const DomainSampler& sampler,
                                        std::size_t n, double tol, std::mt19937_64& rng) {
  JetSpace js = q.jet();
  if (js.jet_order(w) > 0) throw ValidationError("classify_differential: W must depend on (x, u) only");
  std::vector<CompiledExpr> grads;
  std::vector<CompiledExpr> coeffs;
  std::vector<Expr> involved{w};
  for (const auto& s : w.free_symbols()) {
    auto c = q.coefficient_of(s);
    if (!c) continue;
    Expr g = diff(w, s);
    involved.push_back(g);
    involved.push_back(*c);
    grads.emplace_back(g);
    coeffs.emplace_back(*c);
  }
  auto symbols = union_symbols(involved);
  DifferentialClass out;
  std::vector<double> scales;
  std::vector<Bindings> points;
  for_each_sample(symbols, sampler, std::max<std::size_t>(n, 30), rng, [&](const Bindings& b) {
    double v = 0.0;
    double g2 = 0.0;
    double c2 = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      double g = grads[i](b);
      double c = coeffs[i](b);
      v += g * c;
      g2 += g * g;
      c2 += c * c;
    }
    if (!std::isfinite(v)) throw DomainError("overflow");
    out.evidence.push_back(v);
    scales.push_back(1.0 + std::sqrt(g2) * std::sqrt(c2));
    points.push_back(b);
    return true;
  });
  bool zero = true;
  for (std::size_t k = 0; k < out.evidence.size(); ++k) {
    if (std::fabs(out.evidence[k]) > tol * scales[k]) zero = false;
  }
  if (zero) {
    out.type = DifferentialType::FirstType;
    return out;
  }
  auto [lo, hi] = std::minmax_element(out.evidence.begin(), out.evidence.end());
  double mean = std::accumulate(out.evidence.begin(), out.evidence.end(), 0.0) / static_cast<double>(out.evidence.size());
  if (*hi - *lo <= tol * (1.0 + std::fabs(mean))) {
    out.type = DifferentialType::SecondType;
    out.constant = mean;
    return out;
  }
  out.type = DifferentialType::NotInvariant;
  out.witness_low = points[static_cast<std::size_t>(lo - out.evidence.begin())];
  out.witness_high = points[static_cast<std::size_t>(hi - out.evidence.begin())];
  return out;
}

std::vector<std::string> invariant_argument_names(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t q = 0; q < k; ++q) out.push_back("I" + std::to_string(q + 1));
  return out;
}

UniversalInvariant equivalence_transform(const UniversalInvariant& ui, std::span<const Expr> f, const Expr& h,
                                         const DomainSampler& sampler, std::size_t n, double tol,
                                         std::mt19937_64& rng) {
  const std::size_t k = ui.ilist.size();
  if (f.size() != k) throw std::invalid_argument("equivalence_transform: F needs one component per invariant");
  auto names = invariant_argument_names(k);
  Substitution to_x;
  for (std::size_t q = 0; q < k; ++q) to_x[names[q]] = ui.ilist[q];

  // dF/dI evaluated at I(x, u) for sampled (x, u).
  std::vector<Expr> jac_entries;
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t c = 0; c < k; ++c) jac_entries.push_back(substitute(diff(f[r], names[c]), to_x));
  std::vector<CompiledExpr> jac(jac_entries.begin(), jac_entries.end());
  std::vector<double> values(k * k);
  for_each_sample(union_symbols(jac_entries), sampler, n, rng, [&](const Bindings& b) {
    for (std::size_t i = 0; i < jac.size(); ++i) values[i] = jac[i](b);
    if (numeric_rank(values, k, k, 1e-10) < k) {
      throw SingularTransform("dF/dI is singular at a sampled point");
    }
    return true;
  });

  std::vector<Expr> new_i;
  for (const auto& fq : f) new_i.push_back(substitute(fq, to_x));
  Expr new_j = add({ui.j, substitute(h, to_x)});
  UniversalInvariant out(ui.q, std::move(new_i), new_j);
  auto report = validate(out, sampler, n, tol, rng);
  if (!report.ok()) throw ValidationError("transformed universal invariant failed validation");
  return out;
}

VectorField reconstruct_field(std::span<const Expr> ilist, const Expr& j, int n, int m,
                              const DomainSampler& sampler, std::mt19937_64& rng) {
  const std::size_t size = static_cast<std::size_t>(n + m);
  if (ilist.size() + 1 != size) throw ValidationError("reconstruct_field needs m+n-1 invariants");
  JetSpace js(n, m, 0);
  auto coords = js.coordinates(0);
  ExprMatrix grad(size, size);
  for (std::size_t r = 0; r < size; ++r) {
    Expr f = r + 1 < size ? js.canonicalize(ilist[r]) : js.canonicalize(j);
    for (std::size_t c = 0; c < size; ++c) grad(r, c) = diff(f, coords[c]);
  }
  Expr d = det(grad);
  if (d.is_zero() || [&] {
        CompiledExpr cd(d);
        bool nonzero = false;
        for_each_sample(d.free_symbols(), sampler, 20, rng, [&](const Bindings& b) {
          if (std::fabs(cd(b)) > 1e-12) nonzero = true;
          return !nonzero;
        });
        return !nonzero;
      }()) {
    throw SingularFrame("gradient matrix of (I, J) is singular on the sampled domain");
  }
  // Column c of the solution is cofactor(last row, c) / det.
  Expr inv_d = pow(d, Expr(-1));
  std::vector<Expr> comps;
  for (std::size_t c = 0; c < size; ++c) comps.push_back(mul({cofactor(grad, size - 1, c), inv_d}));
  std::vector<Expr> xi(comps.begin(), comps.begin() + n);
  std::vector<Expr> eta(comps.begin() + n, comps.end());
  return VectorField(n, m, std::move(xi), std::move(eta));
}

VectorField reconstruct_field(std::span<const Expr> ilist, const Expr& j, int n, int m) {
  std::mt19937_64 rng(0);
  return reconstruct_field(ilist, j, n, m, DomainSampler(), rng);
}

}  // namespace diffinv
