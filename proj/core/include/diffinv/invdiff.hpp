#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "diffinv/eval.hpp"
#include "diffinv/expr.hpp"
#include "diffinv/invariants.hpp"
#include "diffinv/prolong.hpp"

namespace diffinv {

enum class DifferentialType { FirstType, SecondType, NotInvariant };

std::string to_string(DifferentialType t);

struct DifferentialClass {
  DifferentialType type = DifferentialType::NotInvariant;
  /// Common value of QW for the second type.
  double constant = 0.0;
  /// Sampled values of QW.
  std::vector<double> evidence;
  /// Two points with different QW values (not-invariant case).
  std::optional<Bindings> witness_low;
  std::optional<Bindings> witness_high;
};

/// Classifies dW by the values of QW at max(n, 30) sampled points:
/// first type when QW = 0 (scaled as in is_invariant_numeric), second type
/// when max - min <= tol*(1 + |mean|) with a nonzero mean, not invariant otherwise.
DifferentialClass classify_differential(const VectorField& q, const Expr& w, const DomainSampler& sampler,
                                        std::size_t n, double tol, std::mt19937_64& rng);

/// Symbols standing for I^1..I^k inside F and H: "I1", "I2", ...
std::vector<std::string> invariant_argument_names(std::size_t k);

/// I -> F(I), J -> J + H(I). F and H are expressions in I1..Ik. Throws
/// SingularTransform if dF/dI is singular at a sampled point and
/// ValidationError if the result fails validation.
UniversalInvariant equivalence_transform(const UniversalInvariant& ui, std::span<const Expr> f, const Expr& h,
                                         const DomainSampler& sampler, std::size_t n, double tol,
                                         std::mt19937_64& rng);

/// Solves Q I^q = 0, Q J = 1 for (xi, eta) by Cramer's rule. Throws
/// SingularFrame when det of the gradient matrix vanishes at every sampled point.
VectorField reconstruct_field(std::span<const Expr> ilist, const Expr& j, int n, int m,
                              const DomainSampler& sampler, std::mt19937_64& rng);
VectorField reconstruct_field(std::span<const Expr> ilist, const Expr& j, int n, int m);

}  // namespace diffinv
