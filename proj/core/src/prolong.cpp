#include "diffinv/prolong.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "diffinv/error.hpp"

namespace diffinv {

namespace {

void require_order_zero(const Expr& e, const JetSpace& js, const char* what) {
  for (const auto& s : e.free_symbols()) {
    auto c = js.dependent_coordinate(s);
    if (c && order(c->alpha) > 0) {
      throw ValidationError(std::string(what) + " depends on derivative coordinate '" + s + "'");
    }
  }
}

}  // namespace

VectorField::VectorField(int n, int m, std::vector<Expr> xi, std::vector<Expr> eta)
    : xi_(std::move(xi)), eta_(std::move(eta)) {
  if (n < 1 || m < 1 || xi_.size() != static_cast<std::size_t>(n) || eta_.size() != static_cast<std::size_t>(m)) {
    throw ValidationError("vector field needs n xi and m eta coefficients");
  }
  JetSpace js(n, m, 0);
  bool all_zero = true;
  for (auto& c : xi_) {
    c = js.canonicalize(c);
    require_order_zero(c, js, "xi");
    all_zero = all_zero && c.is_zero();
  }
  for (auto& c : eta_) {
    c = js.canonicalize(c);
    require_order_zero(c, js, "eta");
    all_zero = all_zero && c.is_zero();
  }
  if (all_zero) throw ValidationError("vector field is identically zero");
}

std::optional<Expr> VectorField::coefficient_of(const std::string& name) const {
  JetSpace js = jet();
  if (auto a = js.independent_index(name)) return xi(*a);
  if (auto c = js.dependent_coordinate(name); c && order(c->alpha) == 0) return eta(c->dep);
  return std::nullopt;
}

void check_nonzero(const VectorField& q, const DomainSampler& sampler, std::mt19937_64& rng) {
  std::vector<Expr> all(q.xi());
  all.insert(all.end(), q.eta().begin(), q.eta().end());
  auto symbols = union_symbols(all);
  std::vector<CompiledExpr> compiled(all.begin(), all.end());
  bool nonzero = false;
  for_each_sample(symbols, sampler, 10, rng, [&](const Bindings& b) {
    for (const auto& c : compiled) {
      if (c(b) != 0.0) nonzero = true;
    }
    return !nonzero;
  });
  if (!nonzero) throw ValidationError("vector field vanishes at every sampled point");
}

struct ProlongedField::State {
  VectorField base;
  int r;
  JetSpace js;
  JetSpace js_up;  // order r+1, room for one more total derivative
  std::mutex mutex;
  std::map<std::pair<int, MultiIndex>, Expr> cache;

  State(VectorField q, int order)
      : base(std::move(q)), r(order), js(base.n(), base.m(), order), js_up(base.n(), base.m(), order + 1) {}

  // eta^i_{beta+e_a} = D_a eta^i_beta - sum_b (D_a xi^b) u^i_{beta+e_b}
  Expr compute(int dep, const MultiIndex& alpha) {
    if (diffinv::order(alpha) == 0) return base.eta(dep);
    std::size_t a = 0;
    while (alpha[a] == 0) ++a;
    MultiIndex beta = alpha;
    --beta[a];
    Expr prev = get(dep, beta);
    std::vector<Expr> terms{total_derivative(prev, static_cast<int>(a), js_up)};
    for (int b = 0; b < base.n(); ++b) {
      Expr dxi = total_derivative(base.xi(b), static_cast<int>(a), js_up);
      if (dxi.is_zero()) continue;
      Expr coord = Expr::symbol(js.coordinate(dep, raised(beta, b)));
      terms.push_back(neg(mul({dxi, coord})));
    }
    return add(std::move(terms));
  }

  Expr get(int dep, const MultiIndex& alpha) {
    auto key = std::make_pair(dep, alpha);
    {
      std::lock_guard lock(mutex);
      if (auto it = cache.find(key); it != cache.end()) return it->second;
    }
    Expr value = compute(dep, alpha);
    std::lock_guard lock(mutex);
    return cache.emplace(key, value).first->second;
  }
};

ProlongedField::ProlongedField(VectorField base, int r) {
  if (r < 0) throw std::invalid_argument("prolong: negative order");
  state_ = std::make_shared<State>(std::move(base), r);
}

const VectorField& ProlongedField::base() const { return state_->base; }
int ProlongedField::order() const { return state_->r; }
const JetSpace& ProlongedField::jet() const { return state_->js; }

Expr ProlongedField::coefficient(int dep, const MultiIndex& alpha) const {
  if (dep < 0 || dep >= state_->base.m() || alpha.size() != static_cast<std::size_t>(state_->base.n())) {
    throw std::invalid_argument("coefficient: bad jet coordinate");
  }
  if (diffinv::order(alpha) > state_->r) {
    throw OrderExceeded("coefficient of order " + std::to_string(diffinv::order(alpha)) + " requested from a prolongation of order " +
                        std::to_string(state_->r));
  }
  return state_->get(dep, alpha);
}

Expr ProlongedField::coefficient_of(const std::string& name) const {
  if (auto a = state_->js.independent_index(name)) return state_->base.xi(*a);
  auto c = state_->js.dependent_coordinate(name);
  if (!c) throw std::invalid_argument("coefficient_of: '" + name + "' is not a jet coordinate");
  return coefficient(c->dep, c->alpha);
}

std::vector<std::pair<std::string, Expr>> ProlongedField::all_coefficients() const {
  std::vector<std::pair<std::string, Expr>> out;
  for (const auto& name : state_->js.coordinates(state_->r)) out.emplace_back(name, coefficient_of(name));
  return out;
}

ProlongedField prolong(const VectorField& q, int r) { return ProlongedField(q, r); }

Expr first_prolongation_closed_form(const VectorField& q, int k, int c) {
  JetSpace js(q.n(), q.m(), 1);
  auto d1 = [&](int dep, int axis) {
    MultiIndex e(static_cast<std::size_t>(q.n()), 0);
    e[static_cast<std::size_t>(axis)] = 1;
    return Expr::symbol(js.coordinate(dep, e));
  };
  const std::string& xc = js.x(c);
  std::vector<Expr> terms{diff(q.eta(k), xc)};
  for (int j = 0; j < q.m(); ++j) terms.push_back(mul({diff(q.eta(k), js.u(j)), d1(j, c)}));
  for (int b = 0; b < q.n(); ++b) {
    terms.push_back(neg(mul({diff(q.xi(b), xc), d1(k, b)})));
    for (int j = 0; j < q.m(); ++j) {
      terms.push_back(neg(mul({diff(q.xi(b), js.u(j)), d1(j, c), d1(k, b)})));
    }
  }
  return add(std::move(terms));
}

Expr apply(const ProlongedField& qr, const Expr& e) {
  const JetSpace& js = qr.jet();
  std::vector<Expr> terms;
  for (const auto& s : e.free_symbols()) {
    if (!js.is_coordinate(s)) continue;
    auto c = js.dependent_coordinate(s);
    if (c && order(c->alpha) > qr.order()) {
      throw OrderExceeded("apply: '" + s + "' exceeds prolongation order " + std::to_string(qr.order()));
    }
    terms.push_back(mul({qr.coefficient_of(s), diff(e, s)}));
  }
  return add(std::move(terms));
}

InvarianceVerdict is_invariant_numeric(const ProlongedField& qr, const Expr& e, const DomainSampler& sampler,
                                       std::size_t n, double tol, std::mt19937_64& rng) {
  const JetSpace& js = qr.jet();
  std::vector<CompiledExpr> grads;
  std::vector<CompiledExpr> coeffs;
  std::vector<Expr> involved;
  for (const auto& s : e.free_symbols()) {
    if (!js.is_coordinate(s)) continue;
    auto c = js.dependent_coordinate(s);
    if (c && order(c->alpha) > qr.order()) {
      throw OrderExceeded("is_invariant_numeric: '" + s + "' exceeds prolongation order " + std::to_string(qr.order()));
    }
    Expr g = diff(e, s);
    Expr k = qr.coefficient_of(s);
    involved.push_back(g);
    involved.push_back(k);
    grads.emplace_back(g);
    coeffs.emplace_back(k);
  }
  involved.push_back(e);
  auto symbols = union_symbols(involved);
  InvarianceVerdict verdict;
  for_each_sample(symbols, sampler, n, rng, [&](const Bindings& b) {
    double residual = 0.0;
    double g2 = 0.0;
    double c2 = 0.0;
    for (std::size_t i = 0; i < grads.size(); ++i) {
      double g = grads[i](b);
      double c = coeffs[i](b);
      residual += g * c;
      g2 += g * g;
      c2 += c * c;
    }
    if (!std::isfinite(residual)) throw DomainError("overflow");
    double scaled = std::fabs(residual) / (1.0 + std::sqrt(g2) * std::sqrt(c2));
    verdict.max_scaled_residual = std::max(verdict.max_scaled_residual, scaled);
    if (scaled > tol) {
      verdict.invariant = false;
      verdict.witness = b;
      verdict.witness_value = residual;
      return false;
    }
    return true;
  });
  return verdict;
}

}  // namespace diffinv
