#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace diffinv {

/// Exact rational with 64-bit parts. Arithmetic reports overflow through
/// std::nullopt so callers can fall back to floating point.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1);

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  bool is_integer() const { return den_ == 1; }
  bool is_zero() const { return num_ == 0; }
  double to_double() const { return static_cast<double>(num_) / static_cast<double>(den_); }

  static std::optional<Rational> add(const Rational& a, const Rational& b);
  static std::optional<Rational> mul(const Rational& a, const Rational& b);
  static std::optional<Rational> pow(const Rational& base, std::int64_t exponent);
  /// Exact square root when both parts are perfect squares.
  static std::optional<Rational> sqrt(const Rational& a);

  Rational negated() const { return Rational(-num_, den_); }

  friend bool operator==(const Rational&, const Rational&) = default;

 private:
  struct Reduced {};
  constexpr Rational(Reduced, std::int64_t num, std::int64_t den) : num_(num), den_(den) {}
  static std::optional<Rational> make(__int128 num, __int128 den);

  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

/// A numeric constant: exact rational or IEEE double ("decimal").
class Number {
 public:
  Number() = default;
  Number(Rational q) : exact_(true), q_(q) {}
  static Number decimal(double d) {
    Number n;
    n.exact_ = false;
    n.d_ = d;
    return n;
  }
  static Number integer(std::int64_t v) { return Number(Rational(v)); }

  bool exact() const { return exact_; }
  const Rational& rational() const { return q_; }
  double value() const { return exact_ ? q_.to_double() : d_; }

  bool is_zero() const { return exact_ ? q_.is_zero() : d_ == 0.0; }
  bool is_one() const { return exact_ && q_ == Rational(1); }
  bool is_minus_one() const { return exact_ && q_ == Rational(-1); }
  bool is_integer() const { return exact_ && q_.is_integer(); }
  bool is_negative() const { return value() < 0.0; }

  Number operator-() const;
  friend Number operator+(const Number& a, const Number& b);
  friend Number operator*(const Number& a, const Number& b);

  /// Total order: by numeric value, exact before decimal on ties.
  static int compare(const Number& a, const Number& b);
  friend bool operator==(const Number& a, const Number& b) { return compare(a, b) == 0; }

  /// Parseable text. Decimals always carry a '.' or exponent so they re-parse as decimals.
  std::string to_string() const;

 private:
  bool exact_ = true;
  Rational q_{};
  double d_ = 0.0;
};

}  // namespace diffinv
