#pragma once

#include <cstddef>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "diffinv/eval.hpp"
#include "diffinv/expr.hpp"
#include "diffinv/invariants.hpp"
#include "diffinv/prolong.hpp"

namespace diffinv {

/// F(z, C) = integral from `lower` to z of integrand(s, C) ds, evaluated by
/// adaptive Gauss-Kronrod quadrature. Derivatives: dF/dz is the integrand,
/// dF/dC_q is the integral of d(integrand)/dC_q.
class QuadratureIntegral final : public OpaqueFunction {
 public:
  QuadratureIntegral(std::string name, Expr integrand, std::string var, std::vector<std::string> params,
                     double lower = 0.0);

  const std::string& name() const override { return name_; }
  std::size_t arity() const override { return params_.size() + 1; }
  double evaluate(std::span<const double> args) const override;
  Expr partial(std::size_t k, std::span<const Expr> args) const override;

  const Expr& integrand() const { return integrand_; }

 private:
  std::string name_;
  Expr integrand_;
  std::string var_;
  std::vector<std::string> params_;
  double lower_;
  CompiledExpr compiled_;
  std::vector<std::size_t> slot_;  // compiled symbol -> argument index
};

/// The coefficient divided by in the quadrature and the Riccati system:
/// xi^a when the distinguished variable is x_a, eta^i when it is u^i.
Expr distinguished_coefficient(const VectorField& q, const LevelSetParametrization& p);

struct ParametrizationReport {
  bool ok = true;
  std::vector<double> max_residual;  // per invariant, relative
  std::vector<std::size_t> failing;  // indices q with I^q o p != C_q
};

/// Samples (z, C) and checks I^q(p(z, C)) = C_q.
ParametrizationReport validate_parametrization(std::span<const Expr> ilist, const LevelSetParametrization& p,
                                               const DomainSampler& sampler, std::size_t n, double tol,
                                               std::mt19937_64& rng);

/// J from a user-supplied antiderivative A(z, C) of 1/(kappa o p), where kappa is
/// the distinguished coefficient. Verifies dA/dz and then QJ = 1 at points
/// (z, C) = (x_a, I(x, u)) for sampled (x, u). Throws AntiderivativeMismatch.
Expr J_symbolic(const VectorField& q, std::span<const Expr> ilist, const LevelSetParametrization& p,
                const Expr& antiderivative, const DomainSampler& sampler, std::size_t n, double tol,
                std::mt19937_64& rng);

/// J(x, u) = F(x_a, I(x, u)) with F the QuadratureIntegral of 1/(kappa o p)
/// from `lower` along the distinguished variable.
Expr J_quadrature(const VectorField& q, std::span<const Expr> ilist, const LevelSetParametrization& p,
                  const std::string& name, double lower = 0.0);

struct FlowOptions {
  double tol_ode = 1e-10;
  double horizon = 50.0;
  double level_tol = 1e-8;
  /// A flow point counts as reaching the target within this distance
  /// (scaled by 1 + |target|).
  double hit_tol = 1e-6;
};

/// Flow time t* with flow_Q(t*, base) = target, the smallest |t*| found in
/// either direction. Throws NotOnLevelSet or FlowEscaped.
double J_numeric(const VectorField& q, std::span<const Expr> ilist, const Bindings& base, const Bindings& target,
                 const FlowOptions& options = {});

}  // namespace diffinv
