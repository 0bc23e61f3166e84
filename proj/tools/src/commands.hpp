#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "diffinv/problem.hpp"
#include "report.hpp"

namespace diffinv::cli {

struct RunOptions {
  std::optional<std::size_t> samples;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::vector<std::pair<std::string, Interval>> domains;
};

/// A loaded problem with its effective sampling settings.
struct Context {
  Context(ProblemSpec spec, const RunOptions& options);

  ProblemSpec spec;
  DomainSampler sampler;
  std::uint64_t seed;
  std::mt19937_64 rng;
  std::size_t samples;
  double tol;
};

/// A finished command: the report and its exit code (0 or 2).
struct Outcome {
  Report report;
  int code = 0;
};

/// Loads a spec file, or a built-in fixture when no such file exists.
ProblemSpec resolve_spec(const std::string& arg);

/// Parses SYM=LO:HI. Throws std::invalid_argument.
std::pair<std::string, Interval> parse_domain_flag(const std::string& text);

Outcome cmd_check(Context& ctx);
Outcome cmd_prolong(Context& ctx, int order);
Outcome cmd_invariants(Context& ctx, int order);
Outcome cmd_first_order(Context& ctx);
Outcome cmd_quadrature(Context& ctx);
Outcome cmd_riccati_build(Context& ctx);
Outcome cmd_riccati_solve(Context& ctx);
Outcome cmd_riccati_verify(Context& ctx);
Outcome cmd_reconstruct(Context& ctx);

/// which: "1".."5" or "all".
Outcome cmd_examples(const std::string& which, const RunOptions& options);

// Building blocks shared with the example pipeline.
Report invariance_section(Context& ctx, const UniversalInvariant& ui, bool& ok);
Report first_order_section(Context& ctx, const UniversalInvariant& ui, bool& ok);
Report system_section(Context& ctx, const RiccatiSystem& sys, bool& ok);
Report verify_section(Context& ctx, const UniversalInvariant& ui, const RiccatiSystem& sys, bool& ok);
Report quadrature_section(Context& ctx, const UniversalInvariant& ui, std::size_t rows, bool& ok);
Report reconstruct_section(Context& ctx, const UniversalInvariant& ui, bool& ok);

}  // namespace diffinv::cli
