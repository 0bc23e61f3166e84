#include "diffinv/quadrature.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "diffinv/error.hpp"
#include "ode.hpp"

namespace diffinv {

QuadratureIntegral::QuadratureIntegral(std::string name, Expr integrand, std::string var,
                                       std::vector<std::string> params, double lower)
    : name_(std::move(name)),
      integrand_(std::move(integrand)),
      var_(std::move(var)),
      params_(std::move(params)),
      lower_(lower),
      compiled_(integrand_) {
  for (const auto& s : compiled_.symbols()) {
    if (s == var_) {
      slot_.push_back(0);
      continue;
    }
    auto it = std::find(params_.begin(), params_.end(), s);
    if (it == params_.end()) {
      throw ValidationError("integrand of '" + name_ + "' depends on unlisted symbol '" + s + "'");
    }
    slot_.push_back(static_cast<std::size_t>(it - params_.begin()) + 1);
  }
}

double QuadratureIntegral::evaluate(std::span<const double> args) const {
  if (args.size() != arity()) throw std::invalid_argument(name_ + ": wrong number of arguments");
  std::vector<double> vals(slot_.size());
  for (std::size_t i = 0; i < slot_.size(); ++i) vals[i] = args[slot_[i]];
  std::vector<std::size_t> var_slots;
  for (std::size_t i = 0; i < slot_.size(); ++i)
    if (slot_[i] == 0) var_slots.push_back(i);
  auto f = [&](double s) {
    std::vector<double> v = vals;
    for (auto i : var_slots) v[i] = s;
    return compiled_.evaluate(v);
  };
  const double upper = args[0];
  if (upper == lower_) return 0.0;
  double err = 0.0;
  double value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, lower_, upper, 15, 1e-14, &err);
  if (!std::isfinite(value)) throw DomainError("overflow");
  return value;
}

Expr QuadratureIntegral::partial(std::size_t k, std::span<const Expr> args) const {
  if (k == 0) {
    Substitution s;
    s[var_] = args[0];
    for (std::size_t q = 0; q < params_.size(); ++q) s[params_[q]] = args[q + 1];
    return substitute(integrand_, s);
  }
  const std::string& param = params_.at(k - 1);
  Expr d = diff(integrand_, param);
  if (d.is_zero()) return Expr();
  auto fn = std::make_shared<QuadratureIntegral>(name_ + "_" + param, d, var_, params_, lower_);
  return apply_opaque(fn, std::vector<Expr>(args.begin(), args.end()));
}

Expr distinguished_coefficient(const VectorField& q, const LevelSetParametrization& p) {
  auto c = q.coefficient_of(p.variable);
  if (!c) throw ValidationError("'" + p.variable + "' is not an order-0 coordinate of the field");
  return *c;
}

ParametrizationReport validate_parametrization(std::span<const Expr> ilist, const LevelSetParametrization& p,
                                               const DomainSampler& sampler, std::size_t n, double tol,
                                               std::mt19937_64& rng) {
  ParametrizationReport report;
  Substitution on = p.on_level_set();
  std::vector<Expr> composed;
  for (const auto& i : ilist) composed.push_back(substitute(i, on));
  std::vector<Expr> params;
  for (const auto& c : p.params) params.push_back(Expr::symbol(c));
  std::vector<Expr> all(composed);
  all.insert(all.end(), params.begin(), params.end());
  auto symbols = union_symbols(all);
  std::vector<CompiledExpr> cc(composed.begin(), composed.end());
  report.max_residual.assign(ilist.size(), 0.0);
  for_each_sample(symbols, sampler, n, rng, [&](const Bindings& b) {
    std::vector<double> v(cc.size());
    for (std::size_t q = 0; q < cc.size(); ++q) v[q] = cc[q](b);
    for (std::size_t q = 0; q < cc.size(); ++q) {
      double c = b.at(p.params[q]);
      double r = std::fabs(v[q] - c) / (1.0 + std::fabs(c));
      report.max_residual[q] = std::max(report.max_residual[q], r);
    }
    return true;
  });
  for (std::size_t q = 0; q < ilist.size(); ++q) {
    if (report.max_residual[q] > tol) {
      report.ok = false;
      report.failing.push_back(q);
    }
  }
  return report;
}

Expr J_symbolic(const VectorField& q, std::span<const Expr> ilist, const LevelSetParametrization& p,
                const Expr& antiderivative, const DomainSampler& sampler, std::size_t n, double tol,
                std::mt19937_64& rng) {
  Expr kappa = distinguished_coefficient(q, p);
  Expr target = pow(substitute(kappa, p.on_level_set()), Expr(-1));
  Expr da = diff(antiderivative, p.z);

  // (z, C) points taken from sampled (x, u): z = variable, C = I(x, u).
  Substitution lift = p.back_substitution(ilist);
  Expr da_x = substitute(da, lift);
  Expr target_x = substitute(target, lift);
  std::vector<Expr> both{da_x, target_x};
  auto symbols = union_symbols(both);
  for (const auto& c : q.jet().coordinates(0)) {
    if (!std::binary_search(symbols.begin(), symbols.end(), c)) symbols.insert(std::lower_bound(symbols.begin(), symbols.end(), c), c);
  }
  CompiledExpr cda(da_x);
  CompiledExpr ctarget(target_x);
  double worst = 0.0;
  for_each_sample(symbols, sampler, n, rng, [&](const Bindings& b) {
    double lhs = cda(b);
    double rhs = ctarget(b);
    worst = std::max(worst, std::fabs(lhs - rhs) / (1.0 + std::max(std::fabs(lhs), std::fabs(rhs))));
    return true;
  });
  if (worst > tol) throw AntiderivativeMismatch("d(antiderivative)/dz differs from 1/" + render(kappa), worst);

  Expr j = substitute(antiderivative, lift);
  Expr qj = apply(prolong(q, 0), j);
  auto report = compare_numeric(qj, Expr(1), sampler, n, tol, rng);
  if (!report.equivalent) throw AntiderivativeMismatch("QJ differs from 1", report.max_relative_error);
  return j;
}

Expr J_quadrature(const VectorField& q, std::span<const Expr> ilist, const LevelSetParametrization& p,
                  const std::string& name, double lower) {
  Expr kappa = distinguished_coefficient(q, p);
  Expr integrand = pow(substitute(kappa, p.on_level_set()), Expr(-1));
  auto fn = std::make_shared<QuadratureIntegral>(name, integrand, p.z, p.params, lower);
  std::vector<Expr> args{Expr::symbol(p.variable)};
  args.insert(args.end(), ilist.begin(), ilist.end());
  return apply_opaque(fn, std::move(args));
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double distance(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

double J_numeric(const VectorField& q, std::span<const Expr> ilist, const Bindings& base, const Bindings& target,
                 const FlowOptions& options) {
  auto coords = q.jet().coordinates(0);
  for (const auto& i : ilist) {
    double a = eval(i, base);
    double b = eval(i, target);
    if (std::fabs(a - b) > options.level_tol) {
      throw NotOnLevelSet("I differs between base and target: " + std::to_string(a) + " vs " + std::to_string(b));
    }
  }
  // Parameters other than coordinates are taken from the base bindings.
  std::vector<Expr> field(q.xi());
  field.insert(field.end(), q.eta().begin(), q.eta().end());
  std::vector<CompiledExpr> compiled(field.begin(), field.end());
  Bindings params = base;
  std::vector<double> y0, y1;
  for (const auto& c : coords) {
    y0.push_back(base.at(c));
    y1.push_back(target.at(c));
  }
  const double scale = 1.0 + std::sqrt(dot(y1, y1));
  if (distance(y0, y1) <= options.hit_tol * scale) return 0.0;

  auto velocity = [&](const std::vector<double>& y, double sign, std::vector<double>& dydt) {
    Bindings b = params;
    for (std::size_t k = 0; k < coords.size(); ++k) b.assign(coords[k], y[k]);
    dydt.resize(y.size());
    for (std::size_t k = 0; k < compiled.size(); ++k) dydt[k] = sign * compiled[k](b);
  };

  double best = std::numeric_limits<double>::infinity();
  bool escaped = false;
  for (double sign : {1.0, -1.0}) {
    detail::DenseFlow flow([&](const detail::State& y, detail::State& dydt, double) { velocity(y, sign, dydt); },
                           y0, 0.0, 1e-3, options.tol_ode, options.tol_ode);
    // g(t) = (y(t) - target) . y'(t); a sign change from - to + is a local
    // minimum of the distance to the target.
    auto g = [&](const std::vector<double>& y) {
      std::vector<double> v;
      velocity(y, sign, v);
      std::vector<double> d(y.size());
      for (std::size_t k = 0; k < y.size(); ++k) d[k] = y[k] - y1[k];
      return dot(d, v);
    };
    try {
      double g_prev = g(y0);
      // Backwards, only |t| < best is of interest.
      while (flow.time() < std::min(options.horizon, best)) {
        auto [t0, t1] = flow.step();
        const auto& y = flow.current();
        bool finite = std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
        if (!finite || std::sqrt(dot(y, y)) > 1e8) {
          escaped = true;
          break;
        }
        double g_cur = g(y);
        if (g_prev < 0.0 && g_cur >= 0.0) {
          double lo = t0, hi = t1;
          for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::fabs(hi)); ++it) {
            double mid = 0.5 * (lo + hi);
            if (g(flow.state_at(mid)) < 0.0) lo = mid; else hi = mid;
          }
          double t_star = 0.5 * (lo + hi);
          if (distance(flow.state_at(t_star), y1) <= options.hit_tol * scale) {
            best = std::min(best, t_star);
            if (sign < 0) return -t_star;
            break;
          }
        }
        g_prev = g_cur;
      }
    } catch (const DomainError&) {
      escaped = true;
    }
  }
  if (std::isfinite(best)) return best;
  throw FlowEscaped(escaped ? "flow left the domain before reaching the target"
                            : "target not reached within the time horizon");
}

}  // namespace diffinv
