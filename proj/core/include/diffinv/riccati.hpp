#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "diffinv/eval.hpp"
#include "diffinv/expr.hpp"
#include "diffinv/invariants.hpp"
#include "diffinv/prolong.hpp"

namespace diffinv {

enum class RiccatiVariant { Xi, Eta };

/// du^k_c/dz = rhs, z being the distinguished variable restricted to a level
/// set of the universal invariant.
struct RiccatiSystem {
  RiccatiVariant variant = RiccatiVariant::Xi;
  int index = 0;  // a for the xi variant, i for the eta variant
  std::string z;
  std::vector<std::string> params;
  /// u^k_c names, k-major, then c.
  std::vector<std::string> unknowns;
  /// Right-hand sides in (z, unknowns, params), expanded.
  std::vector<Expr> rhs;
  int n = 1;
  int m = 1;
};

/// du^k_c/dz = -(xi^b_{u^j}/kappa) u^j_c u^k_b + (eta^k_{u^j}/kappa) u^j_c
///             - (xi^b_{x_c}/kappa) u^k_b + eta^k_{x_c}/kappa
/// on the level set p, with kappa = xi^a or eta^i per the distinguished
/// variable. Throws ZeroCoefficient if kappa vanishes at all sampled points.
RiccatiSystem build_system(const VectorField& q, const LevelSetParametrization& p, const DomainSampler& sampler,
                           std::mt19937_64& rng);
RiccatiSystem build_system(const VectorField& q, const LevelSetParametrization& p);

/// Largest polynomial degree of the right-hand sides in the unknowns
/// (nullopt if some right-hand side is not polynomial in them).
std::optional<int> riccati_degree(const RiccatiSystem& sys);

struct RiccatiSolution {
  std::vector<std::string> unknowns;
  /// Solution family in (z, params, constants).
  std::vector<Expr> family;
  /// An independently derived closed form of the same family, when available.
  std::vector<Expr> alternate;
  /// Free constants of the family.
  std::vector<std::string> constants;
  /// Sampling interval used for the constants.
  Interval constant_interval{-1e-2, 1e-2};
  std::string note;

  /// The family with every constant set to zero.
  std::vector<Expr> particular() const;
};

/// Names of the constants C~: "Ct<j>" for n = 1, "Ct<j>_<d>" (d = 1..n) otherwise.
std::vector<std::string> ctilde_names(int n, int m);

/// n = 1 general solution in two forms:
///   family    = U_z - U_C (E + C~ (x) Jbar_C)^{-1} C~ Jbar_z
///   alternate = -(I_u + C~ (x) J_u)^{-1} (I_x + C~ J_x) on u = U(z, C)
/// with Jbar(z, C) = J on the level set (or `j_bar` when supplied). The two
/// forms are compared at sampled (z, C, C~); on failure the C~ interval is
/// halved up to 10 times before SingularForSampledCtilde is thrown.
RiccatiSolution general_solution_n1(const UniversalInvariant& ui, const DomainSampler& sampler, std::mt19937_64& rng,
                                    const std::optional<Expr>& j_bar = std::nullopt);

/// n = 1 with m >= 2; same construction as general_solution_n1.
RiccatiSolution general_solution_systems(const UniversalInvariant& ui, const DomainSampler& sampler,
                                         std::mt19937_64& rng, const std::optional<Expr>& j_bar = std::nullopt);

/// n >= 2 general solution. family is the explicit block form with
///   H = (U_{C^u} - U_{C^x} A^{-1} Xbar_{C^u}) (E + C~'' Jbar_{C^u} - K A^{-1} Xbar_{C^u})^{-1},
///   A = Xbar_{C^x}, K = C~' + C~'' Jbar_{C^x},
///   u_a = U_z - U_{C^x} A^{-1} Xbar_z + H (K A^{-1} Xbar_z - C~'' Jbar_z),
///   u_b = U_{C^x} A^{-1} - H K A^{-1}   (b != a),
/// alternate is -Ihat_u^{-1} Ihat_x on the level set. Throws
/// SingularJacobiMatrix naming the block that is singular.
RiccatiSolution general_solution_general_n(const UniversalInvariant& ui, const DomainSampler& sampler,
                                           std::mt19937_64& rng);

enum class PlanarClass { Linear, Bernoulli, ConformalSeparable, General };
std::string to_string(PlanarClass c);

/// First match of: xi_u = 0 (linear), eta_x = 0 (Bernoulli),
/// xi_x = eta_u and xi_u = -eta_x (conformal). n = m = 1.
PlanarClass classify_planar(const VectorField& q, const DomainSampler& sampler, std::mt19937_64& rng);
PlanarClass classify_planar(const VectorField& q);

struct VerifyGrid {
  double z0 = 0.5;
  double z1 = 1.5;
  std::size_t points = 41;
  std::size_t parameter_sets = 8;
};

struct VerificationRow {
  Bindings parameters;
  double max_residual = 0.0;
  double max_deviation = 0.0;
};

struct VerificationReport {
  /// max |d sol/dz - rhs(sol)| / (1 + |d sol/dz| + |rhs(sol)|)
  double max_residual = 0.0;
  /// max |y(z) - sol(z)| / (1 + |sol(z)|) for y integrated from sol(z0)
  double max_deviation = 0.0;
  std::vector<VerificationRow> rows;
  double tol = 0.0;
  bool passed = false;
};

/// Residual of the family against the system on the grid for sampled
/// parameters and constants, plus an adaptive Dormand-Prince integration
/// of the system started from the family's value at z0.
VerificationReport verify_solution(const RiccatiSystem& sys, const std::vector<Expr>& family,
                                   const std::vector<std::string>& constants, const VerifyGrid& grid, double tol,
                                   const DomainSampler& sampler, std::mt19937_64& rng, bool integrate = true);
VerificationReport verify_solution(const RiccatiSystem& sys, const RiccatiSolution& sol, const VerifyGrid& grid,
                                   double tol, const DomainSampler& sampler, std::mt19937_64& rng);

/// Largest relative spread max-min / (1 + |mean|) along the grid of each
/// expression evaluated on the curve x = z, u = U(z, C), u_x = family.
double invariant_spread(const std::vector<Expr>& invariants, const UniversalInvariant& ui, const RiccatiSystem& sys,
                        const std::vector<Expr>& family, const std::vector<std::string>& constants,
                        const VerifyGrid& grid, const DomainSampler& sampler, std::mt19937_64& rng);

}  // namespace diffinv
