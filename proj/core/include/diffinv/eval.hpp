#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "diffinv/expr.hpp"

namespace diffinv {

/// Symbol name -> finite real value.
class Bindings {
 public:
  Bindings() = default;
  /// Throws InvalidBinding on duplicate names or non-finite values.
  Bindings(std::initializer_list<std::pair<std::string, double>> values);

  /// Adds a new binding; throws InvalidBinding if the name is already bound.
  void bind(const std::string& name, double value);
  /// Adds or replaces a binding.
  void assign(const std::string& name, double value);

  std::optional<double> find(const std::string& name) const;
  double at(const std::string& name) const;
  bool contains(const std::string& name) const { return values_.count(name) != 0; }
  const std::map<std::string, double>& values() const { return values_; }

 private:
  std::map<std::string, double> values_;
};

/// Linearized form of an expression for repeated evaluation. Shared
/// subexpressions are evaluated once per call.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  explicit CompiledExpr(const Expr& e);

  /// Free symbols in the order expected by evaluate(span).
  const std::vector<std::string>& symbols() const { return symbols_; }

  double evaluate(std::span<const double> symbol_values) const;
  double operator()(const Bindings& b) const;

 private:
  struct Instr {
    NodeKind kind;
    FuncKind func = FuncKind::Exp;
    double value = 0.0;               // constants
    std::uint32_t symbol = 0;         // symbols
    std::vector<std::uint32_t> args;  // operand slots
    const OpaqueFunction* opaque = nullptr;
  };
  std::vector<Instr> program_;
  std::vector<std::string> symbols_;
  std::vector<Expr> keep_alive_;
};

/// Evaluates in IEEE double precision. Throws UnboundSymbol or DomainError.
double eval(const Expr& e, const Bindings& b);

struct Interval {
  double lo = 0.5;
  double hi = 1.5;
};

/// Uniform per-symbol sampling. Symbols without an explicit interval use the
/// fallback interval, [0.5, 1.5] by default.
class DomainSampler {
 public:
  DomainSampler() = default;
  explicit DomainSampler(std::map<std::string, Interval> intervals, Interval fallback = {});

  void set(const std::string& symbol, Interval interval) { intervals_[symbol] = interval; }
  Interval interval(const std::string& symbol) const;
  const std::map<std::string, Interval>& intervals() const { return intervals_; }

  Bindings sample(std::span<const std::string> symbols, std::mt19937_64& rng) const;

 private:
  std::map<std::string, Interval> intervals_;
  Interval fallback_{};
};

/// Draws `n` accepted sample points over `symbols`, calling `visit` on each.
/// A point is rejected when `visit` throws DomainError; at most 100*n
/// rejections are tolerated before SamplingExhausted. `visit` returns false to
/// stop early.
void for_each_sample(std::span<const std::string> symbols, const DomainSampler& sampler,
                     std::size_t n, std::mt19937_64& rng,
                     const std::function<bool(const Bindings&)>& visit);

/// Sorted union of the free symbols of several expressions.
std::vector<std::string> union_symbols(std::span<const Expr> exprs);

struct EquivalenceReport {
  bool equivalent = true;
  double max_relative_error = 0.0;
  std::optional<Bindings> witness;
};

/// |e1-e2| <= tol*(1+max(|e1|,|e2|)) at n sampled points.
EquivalenceReport compare_numeric(const Expr& e1, const Expr& e2, const DomainSampler& sampler,
                                  std::size_t n, double tol, std::mt19937_64& rng);

bool equivalent_numeric(const Expr& e1, const Expr& e2, const DomainSampler& sampler,
                        std::size_t n, double tol, std::mt19937_64& rng);

/// Convenience overload with a fixed seed.
bool equivalent_numeric(const Expr& e1, const Expr& e2, const DomainSampler& sampler,
                        std::size_t n = 200, double tol = 1e-9, std::uint64_t seed = 0);

}  // namespace diffinv
