#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diffinv/number.hpp"

namespace diffinv {

// Canonical operand order: node kinds rank in the order listed here; within a
// kind, constants compare by value, symbols by name, functions by kind then
// argument, powers by base then exponent, sums/products lexicographically
// over their operands (then by length), negations by operand, opaque nodes
// by name then arguments. This order is part of the stable output format.
enum class NodeKind : std::uint8_t { Constant, Symbol, Opaque, Func, Power, Product, Sum, Neg };

enum class FuncKind : std::uint8_t { Exp, Ln, Sin, Cos, Tan, Arcsin, Arctan, Sqrt };

std::string_view func_name(FuncKind kind);
std::optional<FuncKind> func_from_name(std::string_view name);

class Expr;
struct Node;

/// A function defined outside the expression language (e.g. by a numeric
/// quadrature). It is applied to argument expressions; the toolkit only needs
/// its value and its partial derivatives with respect to each argument.
class OpaqueFunction {
 public:
  virtual ~OpaqueFunction() = default;
  /// Unique display name; two opaque nodes with equal names and arguments are equal.
  virtual const std::string& name() const = 0;
  virtual std::size_t arity() const = 0;
  virtual double evaluate(std::span<const double> args) const = 0;
  /// Partial derivative with respect to argument k, as an expression in `args`.
  virtual Expr partial(std::size_t k, std::span<const Expr> args) const = 0;
};

/// Immutable symbolic expression. Copies share structure.
class Expr {
 public:
  /// The constant zero.
  Expr();
  Expr(int value);
  Expr(std::int64_t value);
  Expr(const Number& value);

  static Expr constant(const Number& value) { return Expr(value); }
  static Expr decimal(double value) { return Expr(Number::decimal(value)); }
  static Expr rational(std::int64_t num, std::int64_t den) { return Expr(Number(Rational(num, den))); }
  static Expr symbol(std::string name);

  // Unnormalized constructors. Used to build arbitrary trees (tests, parser
  // internals); everything else goes through the normalizing builders below.
  static Expr raw_sum(std::vector<Expr> operands);
  static Expr raw_product(std::vector<Expr> operands);
  static Expr raw_power(Expr base, Expr exponent);
  static Expr raw_neg(Expr operand);
  static Expr raw_func(FuncKind kind, Expr argument);
  static Expr raw_opaque(std::shared_ptr<const OpaqueFunction> fn, std::vector<Expr> args);

  NodeKind kind() const;
  bool is_constant() const { return kind() == NodeKind::Constant; }
  bool is_symbol() const { return kind() == NodeKind::Symbol; }
  bool is_zero() const;
  bool is_one() const;
  std::optional<Number> as_constant() const;

  const Number& number() const;         // Constant
  const std::string& name() const;      // Symbol or Opaque
  FuncKind func() const;                // Func
  std::span<const Expr> operands() const;  // Sum, Product, Func/Neg (1), Power (2), Opaque (args)
  const Expr& operand(std::size_t i) const { return operands()[i]; }
  const Expr& base() const { return operand(0); }      // Power
  const Expr& exponent() const { return operand(1); }  // Power
  const Expr& argument() const { return operand(0); }  // Func, Neg
  const std::shared_ptr<const OpaqueFunction>& opaque() const;

  std::size_t hash() const;
  /// Number of nodes counted as a tree.
  std::size_t tree_size() const;
  /// Sorted set of free symbol names.
  const std::vector<std::string>& free_symbols() const;
  bool depends_on(std::string_view symbol) const;

  const Node* node() const { return node_.get(); }

  friend bool operator==(const Expr& a, const Expr& b);
  friend bool operator!=(const Expr& a, const Expr& b) { return !(a == b); }

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  friend struct NodeFactory;
  std::shared_ptr<const Node> node_;
};

/// Three-way structural comparison in canonical order.
int compare(const Expr& a, const Expr& b);

struct ExprLess {
  bool operator()(const Expr& a, const Expr& b) const { return compare(a, b) < 0; }
};

using Substitution = std::map<std::string, Expr>;

// Normalizing builders. Inputs must already be normalized; the result is.
Expr add(std::vector<Expr> operands);
Expr mul(std::vector<Expr> operands);
Expr pow(const Expr& base, const Expr& exponent);
Expr neg(const Expr& operand);
Expr apply_func(FuncKind kind, const Expr& argument);
Expr apply_opaque(std::shared_ptr<const OpaqueFunction> fn, std::vector<Expr> args);

Expr exp(const Expr& a);
Expr ln(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr arcsin(const Expr& a);
Expr arctan(const Expr& a);
Expr sqrt(const Expr& a);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);

/// Flatten, fold constants, collect identical terms and factors, sort operands.
/// Products of exponentials merge into one exp and exp(a)^b becomes exp(a*b).
/// Idempotent. No factoring, no expansion, no trigonometric rewriting.
Expr normalize(const Expr& e);

/// Exact partial derivative; every other symbol is held constant.
Expr diff(const Expr& e, std::string_view symbol);

/// Simultaneous substitution of symbols by expressions.
Expr substitute(const Expr& e, const Substitution& map);

/// Distribute products over sums and multiply out small positive integer
/// powers of sums. Negative powers are kept (no common denominators).
Expr expand(const Expr& e);

/// Deterministic, parseable text. Opaque nodes render as name(args) and do
/// not re-parse.
std::string render(const Expr& e);
std::ostream& operator<<(std::ostream& os, const Expr& e);

/// Polynomial degree of `e` in the given symbols when `e` is polynomial in
/// them (coefficients arbitrary expressions free of those symbols).
std::optional<int> poly_degree(const Expr& e, const std::set<std::string>& symbols);

}  // namespace diffinv
