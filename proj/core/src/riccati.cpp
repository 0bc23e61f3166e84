#include "diffinv/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "diffinv/error.hpp"
#include "diffinv/linalg.hpp"
#include "diffinv/quadrature.hpp"
#include "ode.hpp"

namespace diffinv {

namespace {

// Evaluates an expression against a shared value array addressed by name.
class SlotEvaluator {
 public:
  SlotEvaluator(const std::vector<std::string>& slots, const Expr& e) : compiled_(e) {
    for (const auto& s : compiled_.symbols()) {
      auto it = std::find(slots.begin(), slots.end(), s);
      if (it == slots.end()) throw UnboundSymbol(s);
      index_.push_back(static_cast<std::size_t>(it - slots.begin()));
    }
  }
  double operator()(const std::vector<double>& values) const {
    std::vector<double> v(index_.size());
    for (std::size_t i = 0; i < index_.size(); ++i) v[i] = values[index_[i]];
    return compiled_.evaluate(v);
  }

 private:
  CompiledExpr compiled_;
  std::vector<std::size_t> index_;
};

bool vanishes_everywhere(const Expr& e, const DomainSampler& sampler, std::size_t n, std::mt19937_64& rng) {
  if (e.is_zero()) return true;
  CompiledExpr c(e);
  bool nonzero = false;
  for_each_sample(e.free_symbols(), sampler, n, rng, [&](const Bindings& b) {
    if (std::fabs(c(b)) > 1e-12) nonzero = true;
    return !nonzero;
  });
  return !nonzero;
}

Expr unit_derivative(const JetSpace& js, int dep, int axis) {
  MultiIndex e(static_cast<std::size_t>(js.n()), 0);
  e[static_cast<std::size_t>(axis)] = 1;
  return Expr::symbol(js.coordinate(dep, e));
}

std::vector<std::string> first_order_unknowns(const JetSpace& js) {
  std::vector<std::string> out;
  for (int k = 0; k < js.m(); ++k)
    for (int c = 0; c < js.n(); ++c) out.push_back(unit_derivative(js, k, c).name());
  return out;
}

std::vector<Expr> flatten(const ExprMatrix& m) {
  std::vector<Expr> out;
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  return out;
}

std::vector<Expr> substitute_all(const std::vector<Expr>& es, const Substitution& s) {
  std::vector<Expr> out;
  for (const auto& e : es) out.push_back(substitute(e, s));
  return out;
}

void require_nonsingular(const Expr& d, const char* block, const DomainSampler& sampler, std::mt19937_64& rng) {
  if (vanishes_everywhere(d, sampler, 20, rng)) throw SingularJacobiMatrix(block);
}

// Compares the two closed forms at sampled (z, C, C~); halves the C~
// interval when sampling keeps hitting singular points.
Interval check_forms(const std::vector<Expr>& a, const std::vector<Expr>& b, const std::vector<std::string>& constants,
                     const DomainSampler& sampler, std::mt19937_64& rng) {
  Interval iv{-1e-2, 1e-2};
  for (int attempt = 0; attempt <= 10; ++attempt) {
    DomainSampler s = sampler;
    for (const auto& c : constants) s.set(c, iv);
    try {
      for (std::size_t k = 0; k < a.size(); ++k) {
        auto report = compare_numeric(a[k], b[k], s, 40, 1e-7, rng);
        if (!report.equivalent) {
          throw Error("closed forms of the general solution disagree (relative error " +
                      std::to_string(report.max_relative_error) + ")");
        }
      }
      return iv;
    } catch (const SamplingExhausted&) {
      iv.lo *= 0.5;
      iv.hi *= 0.5;
    }
  }
  throw SingularForSampledCtilde("no sampled C~ gives invertible matrices after 10 halvings");
}

}  // namespace

RiccatiSystem build_system(const VectorField& q, const LevelSetParametrization& p, const DomainSampler& sampler,
                           std::mt19937_64& rng) {
  const int n = q.n();
  const int m = q.m();
  JetSpace js(n, m, 1);
  RiccatiSystem sys;
  sys.n = n;
  sys.m = m;
  sys.z = p.z;
  sys.params = p.params;
  if (auto a = js.independent_index(p.variable)) {
    sys.variant = RiccatiVariant::Xi;
    sys.index = *a;
  } else if (auto c = js.dependent_coordinate(p.variable); c && order(c->alpha) == 0) {
    sys.variant = RiccatiVariant::Eta;
    sys.index = c->dep;
  } else {
    throw ValidationError("'" + p.variable + "' is not an order-0 coordinate");
  }
  Expr kappa = distinguished_coefficient(q, p);
  if (vanishes_everywhere(kappa, sampler, 20, rng)) {
    throw ZeroCoefficient("coefficient of d/d" + p.variable + " vanishes on the sampled domain");
  }
  Expr inv_kappa = pow(kappa, Expr(-1));
  Substitution on = p.on_level_set();
  auto coef = [&](const Expr& e) {
    if (e.is_zero()) return Expr();
    return expand(substitute(expand(mul({e, inv_kappa})), on));
  };
  sys.unknowns = first_order_unknowns(js);
  for (int k = 0; k < m; ++k) {
    for (int c = 0; c < n; ++c) {
      std::vector<Expr> terms;
      const std::string& xc = js.x(c);
      for (int b = 0; b < n; ++b) {
        for (int j = 0; j < m; ++j) {
          Expr w = coef(diff(q.xi(b), js.u(j)));
          if (!w.is_zero()) terms.push_back(neg(mul({w, unit_derivative(js, j, c), unit_derivative(js, k, b)})));
        }
      }
      for (int j = 0; j < m; ++j) {
        Expr w = coef(diff(q.eta(k), js.u(j)));
        if (!w.is_zero()) terms.push_back(mul({w, unit_derivative(js, j, c)}));
      }
      for (int b = 0; b < n; ++b) {
        Expr w = coef(diff(q.xi(b), xc));
        if (!w.is_zero()) terms.push_back(neg(mul({w, unit_derivative(js, k, b)})));
      }
      terms.push_back(coef(diff(q.eta(k), xc)));
      sys.rhs.push_back(expand(add(std::move(terms))));
    }
  }
  return sys;
}

RiccatiSystem build_system(const VectorField& q, const LevelSetParametrization& p) {
  std::mt19937_64 rng(0);
  return build_system(q, p, DomainSampler(), rng);
}

std::optional<int> riccati_degree(const RiccatiSystem& sys) {
  std::set<std::string> vars(sys.unknowns.begin(), sys.unknowns.end());
  int best = 0;
  for (const auto& r : sys.rhs) {
    auto d = poly_degree(r, vars);
    if (!d) return std::nullopt;
    best = std::max(best, *d);
  }
  return best;
}

std::vector<Expr> RiccatiSolution::particular() const {
  Substitution zero;
  for (const auto& c : constants) zero[c] = Expr();
  return substitute_all(family, zero);
}

std::vector<std::string> ctilde_names(int n, int m) {
  std::vector<std::string> out;
  for (int j = 1; j <= m; ++j) {
    if (n == 1) {
      out.push_back("Ct" + std::to_string(j));
    } else {
      for (int d = 1; d <= n; ++d) out.push_back("Ct" + std::to_string(j) + "_" + std::to_string(d));
    }
  }
  return out;
}

RiccatiSolution general_solution_n1(const UniversalInvariant& ui, const DomainSampler& sampler, std::mt19937_64& rng,
                                    const std::optional<Expr>& j_bar) {
  if (ui.n() != 1) throw WrongArity("general_solution_n1 requires n = 1");
  if (!ui.level_set) throw ValidationError("general solution needs a level-set parametrization");
  const auto& p = *ui.level_set;
  const int m = ui.m();
  JetSpace js(1, m, 1);
  if (p.variable != js.x(0)) throw ValidationError("general solution needs the level set parametrized by x");
  const std::size_t mm = static_cast<std::size_t>(m);

  RiccatiSolution sol;
  sol.unknowns = first_order_unknowns(js);
  sol.constants = ctilde_names(1, m);
  std::vector<Expr> ct;
  for (const auto& c : sol.constants) ct.push_back(Expr::symbol(c));
  Substitution on = p.on_level_set();

  // -(I_u + C~ (x) J_u)^{-1} (I_x + C~ J_x) on the level set
  ExprMatrix iu(mm, mm), ix(mm, 1);
  for (std::size_t k = 0; k < mm; ++k) {
    for (std::size_t l = 0; l < mm; ++l) {
      iu(k, l) = add({diff(ui.ilist[k], js.u(static_cast<int>(l))), mul({ct[k], diff(ui.j, js.u(static_cast<int>(l)))})});
    }
    ix(k, 0) = add({diff(ui.ilist[k], js.x(0)), mul({ct[k], diff(ui.j, js.x(0))})});
  }
  sol.alternate = substitute_all(flatten(-(inverse(iu) * ix)), on);

  // U_z - U_C (E + C~ (x) Jbar_C)^{-1} C~ Jbar_z
  Expr jb = j_bar ? *j_bar : substitute(ui.j, on);
  ExprMatrix uz(mm, 1), uc(mm, mm), mid = ExprMatrix::identity(mm), v(mm, 1);
  for (std::size_t k = 0; k < mm; ++k) {
    const Expr& uk = p.solution.at(js.u(static_cast<int>(k)));
    uz(k, 0) = diff(uk, p.z);
    for (std::size_t l = 0; l < mm; ++l) {
      uc(k, l) = diff(uk, p.params[l]);
      mid(k, l) = add({mid(k, l), mul({ct[k], diff(jb, p.params[l])})});
    }
    v(k, 0) = mul({ct[k], diff(jb, p.z)});
  }
  sol.family = flatten(uz - uc * inverse(mid) * v);
  sol.constant_interval = check_forms(sol.family, sol.alternate, sol.constants, sampler, rng);
  sol.note = "valid for small C~; sampled in [" + std::to_string(sol.constant_interval.lo) + ", " +
             std::to_string(sol.constant_interval.hi) + "]";
  return sol;
}

RiccatiSolution general_solution_systems(const UniversalInvariant& ui, const DomainSampler& sampler,
                                         std::mt19937_64& rng, const std::optional<Expr>& j_bar) {
  if (ui.n() != 1 || ui.m() < 2) throw WrongArity("general_solution_systems requires n = 1, m >= 2");
  return general_solution_n1(ui, sampler, rng, j_bar);
}

RiccatiSolution general_solution_general_n(const UniversalInvariant& ui, const DomainSampler& sampler,
                                           std::mt19937_64& rng) {
  const int n = ui.n();
  const int m = ui.m();
  if (n < 2) throw WrongArity("general_solution_general_n requires n >= 2");
  if (!ui.level_set) throw ValidationError("general solution needs a level-set parametrization");
  const auto& p = *ui.level_set;
  JetSpace js(n, m, 1);
  auto a_opt = js.independent_index(p.variable);
  if (!a_opt) throw ValidationError("general solution needs the level set parametrized by some x_a");
  const int a = *a_opt;
  const std::size_t nb = static_cast<std::size_t>(n - 1);
  const std::size_t mm = static_cast<std::size_t>(m);

  std::vector<std::string> xbar;
  for (int d = 0; d < n; ++d)
    if (d != a) xbar.push_back(js.x(d));
  std::vector<std::string> cx(p.params.begin(), p.params.begin() + static_cast<std::ptrdiff_t>(nb));
  std::vector<std::string> cu(p.params.begin() + static_cast<std::ptrdiff_t>(nb), p.params.end());

  RiccatiSolution sol;
  sol.unknowns = first_order_unknowns(js);
  sol.constants = ctilde_names(n, m);
  ExprMatrix ct1(mm, nb), ct2(mm, 1);
  for (std::size_t j = 0; j < mm; ++j) {
    for (std::size_t d = 0; d < nb; ++d) ct1(j, d) = Expr::symbol(sol.constants[j * static_cast<std::size_t>(n) + d]);
    ct2(j, 0) = Expr::symbol(sol.constants[j * static_cast<std::size_t>(n) + nb]);
  }
  Substitution on = p.on_level_set();
  Expr jb = substitute(ui.j, on);

  ExprMatrix amat(nb, nb), bmat(nb, mm), xz(nb, 1);
  for (std::size_t d = 0; d < nb; ++d) {
    const Expr& xd = p.solution.at(xbar[d]);
    for (std::size_t e = 0; e < nb; ++e) amat(d, e) = diff(xd, cx[e]);
    for (std::size_t l = 0; l < mm; ++l) bmat(d, l) = diff(xd, cu[l]);
    xz(d, 0) = diff(xd, p.z);
  }
  ExprMatrix uz(mm, 1), ucx(mm, nb), ucu(mm, mm);
  for (std::size_t j = 0; j < mm; ++j) {
    const Expr& uj = p.solution.at(js.u(static_cast<int>(j)));
    uz(j, 0) = diff(uj, p.z);
    for (std::size_t e = 0; e < nb; ++e) ucx(j, e) = diff(uj, cx[e]);
    for (std::size_t l = 0; l < mm; ++l) ucu(j, l) = diff(uj, cu[l]);
  }
  ExprMatrix jcx(1, nb), jcu(1, mm);
  for (std::size_t e = 0; e < nb; ++e) jcx(0, e) = diff(jb, cx[e]);
  for (std::size_t l = 0; l < mm; ++l) jcu(0, l) = diff(jb, cu[l]);
  ExprMatrix jz(1, 1);
  jz(0, 0) = diff(jb, p.z);

  require_nonsingular(det(amat), "Xbar_{C^xbar}", sampler, rng);
  ExprMatrix ainv = inverse(amat);
  ExprMatrix k = ct1 + ct2 * jcx;
  ExprMatrix mid = ExprMatrix::identity(mm) + ct2 * jcu - k * ainv * bmat;
  // Only the C~ = 0 value is checked here; small C~ keeps it invertible.
  {
    Substitution zero;
    for (const auto& c : sol.constants) zero[c] = Expr();
    ExprMatrix mid0(mm, mm);
    for (std::size_t r = 0; r < mm; ++r)
      for (std::size_t c = 0; c < mm; ++c) mid0(r, c) = substitute(mid(r, c), zero);
    require_nonsingular(det(mid0), "E + C~'' Jbar_{C^u} - K Xbar_{C^xbar}^{-1} Xbar_{C^u}", sampler, rng);
  }
  ExprMatrix h = (ucu - ucx * ainv * bmat) * inverse(mid);
  ExprMatrix ua = uz - ucx * ainv * xz + h * (k * ainv * xz - ct2 * jz);
  ExprMatrix ub = ucx * ainv - h * k * ainv;

  for (std::size_t j = 0; j < mm; ++j) {
    std::size_t e = 0;
    for (int b = 0; b < n; ++b) {
      if (b == a) {
        sol.family.push_back(ua(j, 0));
      } else {
        sol.family.push_back(ub(j, e++));
      }
    }
  }

  // -Ihat_u^{-1} Ihat_x with Ihat = I^u + C~' I^xbar + C~'' J
  ExprMatrix ihu(mm, mm), ihx(mm, static_cast<std::size_t>(n));
  for (std::size_t j = 0; j < mm; ++j) {
    std::vector<Expr> parts{ui.ilist[nb + j], mul({ct2(j, 0), ui.j})};
    for (std::size_t d = 0; d < nb; ++d) parts.push_back(mul({ct1(j, d), ui.ilist[d]}));
    Expr ihat = add(std::move(parts));
    for (std::size_t l = 0; l < mm; ++l) ihu(j, l) = diff(ihat, js.u(static_cast<int>(l)));
    for (int b = 0; b < n; ++b) ihx(j, static_cast<std::size_t>(b)) = diff(ihat, js.x(b));
  }
  sol.alternate = substitute_all(flatten(-(inverse(ihu) * ihx)), on);
  sol.constant_interval = check_forms(sol.family, sol.alternate, sol.constants, sampler, rng);
  sol.note = "valid for small C~; sampled in [" + std::to_string(sol.constant_interval.lo) + ", " +
             std::to_string(sol.constant_interval.hi) + "]";
  return sol;
}

std::string to_string(PlanarClass c) {
  switch (c) {
    case PlanarClass::Linear: return "linear";
    case PlanarClass::Bernoulli: return "bernoulli";
    case PlanarClass::ConformalSeparable: return "conformal_separable";
    case PlanarClass::General: return "general";
  }
  return "?";
}

PlanarClass classify_planar(const VectorField& q, const DomainSampler& sampler, std::mt19937_64& rng) {
  if (q.n() != 1 || q.m() != 1) throw WrongArity("classify_planar requires n = m = 1");
  auto same = [&](const Expr& a, const Expr& b) {
    if (a == b) return true;
    return equivalent_numeric(a, b, sampler, 50, 1e-9, rng);
  };
  Expr xi_x = diff(q.xi(0), "x"), xi_u = diff(q.xi(0), "u");
  Expr eta_x = diff(q.eta(0), "x"), eta_u = diff(q.eta(0), "u");
  if (same(xi_u, Expr())) return PlanarClass::Linear;
  if (same(eta_x, Expr())) return PlanarClass::Bernoulli;
  if (same(xi_x, eta_u) && same(xi_u, neg(eta_x))) return PlanarClass::ConformalSeparable;
  return PlanarClass::General;
}

PlanarClass classify_planar(const VectorField& q) {
  std::mt19937_64 rng(0);
  return classify_planar(q, DomainSampler(), rng);
}

namespace {

std::vector<double> grid_points(const VerifyGrid& grid) {
  std::vector<double> zs;
  const std::size_t n = std::max<std::size_t>(grid.points, 2);
  for (std::size_t i = 0; i < n; ++i) {
    zs.push_back(grid.z0 + (grid.z1 - grid.z0) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  return zs;
}

std::vector<std::string> parameter_symbols(const std::vector<Expr>& exprs, const std::string& z,
                                           const std::vector<std::string>& unknowns) {
  std::vector<std::string> out;
  for (const auto& s : union_symbols(exprs)) {
    if (s == z || std::find(unknowns.begin(), unknowns.end(), s) != unknowns.end()) continue;
    out.push_back(s);
  }
  return out;
}

}  // namespace

VerificationReport verify_solution(const RiccatiSystem& sys, const std::vector<Expr>& family,
                                   const std::vector<std::string>& constants, const VerifyGrid& grid, double tol,
                                   const DomainSampler& sampler, std::mt19937_64& rng, bool integrate) {
  if (family.size() != sys.unknowns.size()) throw std::invalid_argument("verify_solution: family size mismatch");
  (void)constants;
  const std::size_t k = family.size();
  std::vector<Expr> all(family);
  all.insert(all.end(), sys.rhs.begin(), sys.rhs.end());
  auto params = parameter_symbols(all, sys.z, sys.unknowns);

  std::vector<std::string> slots{sys.z};
  slots.insert(slots.end(), sys.unknowns.begin(), sys.unknowns.end());
  slots.insert(slots.end(), params.begin(), params.end());
  const std::size_t param_base = 1 + k;

  std::vector<SlotEvaluator> fam, dfam, rhs;
  for (std::size_t i = 0; i < k; ++i) {
    fam.emplace_back(slots, family[i]);
    dfam.emplace_back(slots, diff(family[i], sys.z));
    rhs.emplace_back(slots, sys.rhs[i]);
  }
  auto zs = grid_points(grid);

  VerificationReport report;
  report.tol = tol;
  for_each_sample(params, sampler, grid.parameter_sets, rng, [&](const Bindings& b) {
    VerificationRow row;
    row.parameters = b;
    std::vector<double> values(slots.size(), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i) values[param_base + i] = b.at(params[i]);
    std::vector<std::vector<double>> sol_at(zs.size(), std::vector<double>(k));
    for (std::size_t g = 0; g < zs.size(); ++g) {
      values[0] = zs[g];
      for (std::size_t i = 0; i < k; ++i) sol_at[g][i] = fam[i](values);
      for (std::size_t i = 0; i < k; ++i) values[1 + i] = sol_at[g][i];
      for (std::size_t i = 0; i < k; ++i) {
        double lhs = dfam[i](values);
        double r = rhs[i](values);
        double res = std::fabs(lhs - r) / (1.0 + std::fabs(lhs) + std::fabs(r));
        row.max_residual = std::max(row.max_residual, res);
      }
    }
    if (integrate) {
      auto f = [&](const detail::State& y, detail::State& dydt, double t) {
        std::vector<double> v = values;
        v[0] = t;
        for (std::size_t i = 0; i < k; ++i) v[1 + i] = y[i];
        dydt.resize(k);
        for (std::size_t i = 0; i < k; ++i) dydt[i] = rhs[i](v);
      };
      std::vector<detail::State> ys;
      try {
        ys = detail::integrate_at(f, sol_at[0], zs[0], std::span<const double>(zs).subspan(1), 1e-13, 1e-13);
      } catch (const DomainError&) {
        throw;
      } catch (const std::exception& e) {
        throw DomainError(std::string("ode: ") + e.what());
      }
      for (std::size_t g = 1; g < zs.size(); ++g) {
        for (std::size_t i = 0; i < k; ++i) {
          double dev = std::fabs(ys[g - 1][i] - sol_at[g][i]) / (1.0 + std::fabs(sol_at[g][i]));
          row.max_deviation = std::max(row.max_deviation, dev);
        }
      }
    }
    report.max_residual = std::max(report.max_residual, row.max_residual);
    report.max_deviation = std::max(report.max_deviation, row.max_deviation);
    report.rows.push_back(std::move(row));
    return true;
  });
  report.passed = report.max_residual <= tol && (!integrate || report.max_deviation <= tol);
  return report;
}

VerificationReport verify_solution(const RiccatiSystem& sys, const RiccatiSolution& sol, const VerifyGrid& grid,
                                   double tol, const DomainSampler& sampler, std::mt19937_64& rng) {
  DomainSampler s = sampler;
  for (const auto& c : sol.constants) {
    if (!s.intervals().count(c)) s.set(c, sol.constant_interval);
  }
  return verify_solution(sys, sol.family, sol.constants, grid, tol, s, rng, true);
}

double invariant_spread(const std::vector<Expr>& invariants, const UniversalInvariant& ui, const RiccatiSystem& sys,
                        const std::vector<Expr>& family, const std::vector<std::string>& constants,
                        const VerifyGrid& grid, const DomainSampler& sampler, std::mt19937_64& rng) {
  if (!ui.level_set) throw ValidationError("invariant_spread needs a level-set parametrization");
  (void)constants;
  Substitution on = ui.level_set->on_level_set();
  for (std::size_t i = 0; i < sys.unknowns.size(); ++i) on[sys.unknowns[i]] = family[i];
  std::vector<Expr> lifted = substitute_all(invariants, on);
  auto params = parameter_symbols(lifted, sys.z, sys.unknowns);
  std::vector<std::string> slots{sys.z};
  slots.insert(slots.end(), params.begin(), params.end());
  std::vector<SlotEvaluator> evals;
  for (const auto& e : lifted) evals.emplace_back(slots, e);
  auto zs = grid_points(grid);
  double worst = 0.0;
  for_each_sample(params, sampler, grid.parameter_sets, rng, [&](const Bindings& b) {
    std::vector<double> values(slots.size());
    for (std::size_t i = 0; i < params.size(); ++i) values[1 + i] = b.at(params[i]);
    for (const auto& ev : evals) {
      double lo = INFINITY, hi = -INFINITY, sum = 0.0;
      for (double z : zs) {
        values[0] = z;
        double v = ev(values);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
      }
      double mean = sum / static_cast<double>(zs.size());
      worst = std::max(worst, (hi - lo) / (1.0 + std::fabs(mean)));
    }
    return true;
  });
  return worst;
}

}  // namespace diffinv
