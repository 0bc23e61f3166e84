#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "diffinv/eval.hpp"
#include "diffinv/expr.hpp"
#include "diffinv/invariants.hpp"
#include "diffinv/prolong.hpp"
#include "diffinv/riccati.hpp"

namespace diffinv {

/// A closed-form solution family of the Riccati system, written in z and the
/// level constants. The symbols J and J_<param> inside components stand for
/// J on the level set and its partial derivatives.
struct SolutionFamily {
  std::string label;
  std::vector<Expr> components;
  std::vector<std::string> constants;
  std::map<std::string, Interval> domains;
  double tol = 1e-7;
};

/// Published closed forms a run can be compared against.
struct ReferenceData {
  std::vector<Expr> first_order;
  std::vector<Expr> first_order_reduced;
  std::vector<Expr> system;
};

/// A problem description: the field, optionally its universal invariant and
/// level-set parametrization, and sampling domains.
struct ProblemSpec {
  std::string name;
  int n = 1;
  int m = 1;
  std::vector<Expr> xi;
  std::vector<Expr> eta;
  std::vector<Expr> invariants;
  std::optional<Expr> j;
  std::optional<LevelSetParametrization> level_set;
  /// Antiderivative A(z, C) of 1/kappa on the level set.
  std::optional<Expr> antiderivative;
  /// Lower limit when J is defined by numeric quadrature.
  std::optional<double> quadrature_lower;
  std::map<std::string, Interval> domains;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<double> tol;
  VerifyGrid grid;
  std::vector<SolutionFamily> families;
  ReferenceData reference;

  bool has_field() const { return !xi.empty(); }
  bool has_invariant() const { return !invariants.empty() && (j || antiderivative || quadrature_lower); }

  DomainSampler sampler() const;
  /// The field, reconstructed from invariants and J when xi/eta are absent.
  VectorField field() const;
  /// Resolves J: explicit, then from the antiderivative, then by quadrature.
  UniversalInvariant universal_invariant(std::mt19937_64& rng) const;
  /// J restricted to the level set, as a function of (z, C).
  Expr j_on_level_set(const UniversalInvariant& ui) const;
  /// Family components with J and J_<param> replaced.
  std::vector<Expr> resolve(const SolutionFamily& f, const Expr& j_bar) const;
  /// sampler() extended by the family's constant domains.
  DomainSampler family_sampler(const SolutionFamily& f) const;
};

/// Parses a JSON problem description. Throws ValidationError.
ProblemSpec parse_problem(std::string_view json_text);
ProblemSpec load_problem(const std::filesystem::path& path);

/// Built-in fixtures: example1 .. example5 (example3_k2, example3_km1),
/// translation, synthetic_n2.
const std::vector<std::string>& builtin_problem_names();
ProblemSpec builtin_problem(std::string_view name);
/// JSON text of a built-in fixture.
std::string_view builtin_problem_source(std::string_view name);

}  // namespace diffinv
