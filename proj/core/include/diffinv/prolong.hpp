#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "diffinv/eval.hpp"
#include "diffinv/expr.hpp"
#include "diffinv/jet.hpp"

namespace diffinv {

/// Q = xi^a d/dx_a + eta^i d/du^i with coefficients depending on (x, u) only.
class VectorField {
 public:
  /// Throws ValidationError on size mismatch, derivative coordinates in a
  /// coefficient, or when every coefficient is structurally zero.
  VectorField(int n, int m, std::vector<Expr> xi, std::vector<Expr> eta);

  int n() const { return static_cast<int>(xi_.size()); }
  int m() const { return static_cast<int>(eta_.size()); }
  /// Order-0 jet space of the field.
  JetSpace jet() const { return JetSpace(n(), m(), 0); }
  const std::vector<Expr>& xi() const { return xi_; }
  const std::vector<Expr>& eta() const { return eta_; }
  const Expr& xi(int a) const { return xi_.at(static_cast<std::size_t>(a)); }
  const Expr& eta(int i) const { return eta_.at(static_cast<std::size_t>(i)); }

  /// Coefficient of d/d(name) for an order-0 coordinate name.
  std::optional<Expr> coefficient_of(const std::string& name) const;

 private:
  std::vector<Expr> xi_;
  std::vector<Expr> eta_;
};

/// Throws ValidationError if all coefficients vanish at every one of 10
/// sampled points.
void check_nonzero(const VectorField& q, const DomainSampler& sampler, std::mt19937_64& rng);

/// The r-th prolongation. Coefficients are computed on first use and cached;
/// concurrent readers are safe. Copies share the cache.
class ProlongedField {
 public:
  ProlongedField(VectorField base, int r);

  const VectorField& base() const;
  int order() const;
  /// Jet space of order r.
  const JetSpace& jet() const;

  /// eta^i_alpha for |alpha| <= r (alpha = 0 gives eta^i).
  Expr coefficient(int dep, const MultiIndex& alpha) const;
  /// Coefficient of d/d(name) for any coordinate of order <= r.
  Expr coefficient_of(const std::string& name) const;
  /// (coordinate, coefficient) for every coordinate, in coordinates() order.
  std::vector<std::pair<std::string, Expr>> all_coefficients() const;

 private:
  struct State;
  std::shared_ptr<State> state_;
};

ProlongedField prolong(const VectorField& q, int r);

/// First-prolongation coefficient of d/du^k_c from the closed formula
/// eta^k_c + eta^k_{u^j} u^j_c - xi^b_{x_c} u^k_b - xi^b_{u^j} u^j_c u^k_b.
Expr first_prolongation_closed_form(const VectorField& q, int k, int c);

/// Q^(r) e. Throws OrderExceeded if e has coordinates of order > r.
Expr apply(const ProlongedField& qr, const Expr& e);

struct InvarianceVerdict {
  bool invariant = true;
  /// Largest |Q e| / (1 + |grad e| * |coefficients|) seen.
  double max_scaled_residual = 0.0;
  std::optional<Bindings> witness;
  double witness_value = 0.0;
};

/// Q^(r) e = 0 within tol at n sampled points, using the scaled residual
/// |Q e| <= tol * (1 + |grad e|_2 * |c|_2) where grad e and c range over the
/// coordinates on which e depends.
InvarianceVerdict is_invariant_numeric(const ProlongedField& qr, const Expr& e, const DomainSampler& sampler,
                                       std::size_t n, double tol, std::mt19937_64& rng);

}  // namespace diffinv
