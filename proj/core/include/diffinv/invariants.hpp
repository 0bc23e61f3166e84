#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "diffinv/eval.hpp"
#include "diffinv/expr.hpp"
#include "diffinv/jet.hpp"
#include "diffinv/linalg.hpp"
#include "diffinv/prolong.hpp"

namespace diffinv {

/// Explicit solution of I(x, u) = C for every order-0 coordinate except the
/// distinguished one, which becomes the parameter z.
struct LevelSetParametrization {
  /// Distinguished coordinate: some x_a with xi^a != 0 or u^i with eta^i != 0.
  std::string variable;
  /// Level constants, params[q] standing for I^q.
  std::vector<std::string> params;
  /// Every other order-0 coordinate as an expression in z and params.
  Substitution solution;
  std::string z = "z";

  /// solution plus variable -> z.
  Substitution on_level_set() const;
  /// variable -> name of the distinguished coordinate, z -> that coordinate,
  /// params[q] -> ilist[q]; maps (z, C) expressions back to (x, u).
  Substitution back_substitution(std::span<const Expr> ilist) const;
};

/// m+n-1 invariants I^q of Q plus J with QJ = 1.
struct UniversalInvariant {
  UniversalInvariant(VectorField q, std::vector<Expr> ilist, Expr j,
                     std::optional<LevelSetParametrization> level_set = std::nullopt);

  VectorField q;
  std::vector<Expr> ilist;
  Expr j;
  std::optional<LevelSetParametrization> level_set;

  int n() const { return q.n(); }
  int m() const { return q.m(); }
};

struct RankReport {
  std::size_t expected = 0;
  std::size_t points = 0;
  std::size_t full_rank_points = 0;
  double fraction() const { return points ? static_cast<double>(full_rank_points) / static_cast<double>(points) : 0.0; }
  bool ok(double required = 0.95) const { return fraction() >= required; }
};

/// Counts the sampled points at which the Jacobian of funcs with respect to
/// coords has rank funcs.size() (singular values below threshold*sigma_max
/// count as zero). Rows are scaled to unit norm first.
RankReport functional_rank(std::span<const Expr> funcs, std::span<const std::string> coords,
                           const DomainSampler& sampler, std::size_t n, std::mt19937_64& rng,
                           double threshold = 1e-8);

struct UniversalInvariantReport {
  std::vector<InvarianceVerdict> invariants;
  EquivalenceReport normalization;  // QJ against 1
  RankReport independence;
  bool ok() const;
};

/// Checks QI^q = 0, QJ = 1 and functional independence of (I, J) in (x, u).
UniversalInvariantReport validate(const UniversalInvariant& ui, const DomainSampler& sampler, std::size_t n,
                                  double tol, std::mt19937_64& rng);

/// D_{y_index} = sum_b w[b] D_{x_b}.
struct InvariantDerivation {
  int index = 0;
  std::vector<Expr> w;

  Expr apply(const Expr& e, const JetSpace& js) const;
};

/// The n operators of invariant differentiation built from the total
/// Jacobian matrix M = [D_{x_b} F_c] with F = (I^1, ..., I^{n-1}, J):
/// w_cb = cofactor(M, c, b) / det M. Throws DegenerateFrame when det M
/// vanishes at all 20 sampled points.
std::vector<InvariantDerivation> invariant_derivations(const UniversalInvariant& ui, const DomainSampler& sampler,
                                                       std::mt19937_64& rng);
std::vector<InvariantDerivation> invariant_derivations(const UniversalInvariant& ui);

struct DifferentialInvariant {
  std::string label;
  Expr expr;
  int order = 0;
};

/// I^c (c < n) followed by D_y^alpha I^{i+n-1} for |alpha| <= r ordered by
/// (|alpha|, i, alpha). Size (n-1) + m*C(n+r, r).
std::vector<DifferentialInvariant> universal_differential_invariant(const UniversalInvariant& ui, int r,
                                                                   const DomainSampler& sampler,
                                                                   std::mt19937_64& rng);
std::vector<DifferentialInvariant> universal_differential_invariant(const UniversalInvariant& ui, int r);

/// m x n matrix with entries D_{y_a} I^{i+n-1}.
ExprMatrix first_order_invariants(const UniversalInvariant& ui);

struct FirstOrderInvariant {
  Expr numerator;    // D_x I^j
  Expr denominator;  // D_x J
  Expr ratio;        // numerator / denominator
};

/// n = 1 only (WrongArity otherwise).
std::vector<FirstOrderInvariant> first_order_n1(const UniversalInvariant& ui);

/// [I, I1, ((1/D_x I) D_x)^s I1 for s = 1..r-1]; n = m = 1.
/// Throws DegenerateFrame when D_x I vanishes at every sampled point.
std::vector<Expr> lie_chain(const Expr& i, const Expr& i1, const VectorField& q, int r,
                            const DomainSampler& sampler, std::mt19937_64& rng);
std::vector<Expr> lie_chain(const Expr& i, const Expr& i1, const VectorField& q, int r);

}  // namespace diffinv
