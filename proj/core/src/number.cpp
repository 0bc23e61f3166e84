#include "diffinv/number.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace diffinv {

namespace {

constexpr __int128 kMax = std::numeric_limits<std::int64_t>::max();

}  // namespace

std::optional<Rational> Rational::make(__int128 num, __int128 den) {
  if (den == 0) return std::nullopt;
  if (den < 0) {
    num = -num;
    den = -den;
  }
  __int128 a = num < 0 ? -num : num;
  __int128 b = den;
  while (b != 0) {
    __int128 t = a % b;
    a = b;
    b = t;
  }
  if (a > 1) {
    num /= a;
    den /= a;
  }
  if (num > kMax || num < -kMax || den > kMax) return std::nullopt;
  return Rational(Reduced{}, static_cast<std::int64_t>(num), static_cast<std::int64_t>(den));
}

namespace {

std::optional<std::int64_t> isqrt(std::int64_t v) {
  if (v < 0) return std::nullopt;
  auto r = static_cast<std::int64_t>(std::llround(std::sqrt(static_cast<double>(v))));
  for (std::int64_t c = r > 1 ? r - 1 : 0; c <= r + 1; ++c) {
    if (static_cast<__int128>(c) * c == v) return c;
  }
  return std::nullopt;
}

}  // namespace

Rational::Rational(std::int64_t num, std::int64_t den) {
  if (den == 0) throw std::invalid_argument("Rational: zero denominator");
  auto r = make(num, den);
  if (!r) throw std::overflow_error("Rational: out of range");
  num_ = r->num_;
  den_ = r->den_;
}

std::optional<Rational> Rational::add(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.den_ + static_cast<__int128>(b.num_) * a.den_,
              static_cast<__int128>(a.den_) * b.den_);
}

std::optional<Rational> Rational::mul(const Rational& a, const Rational& b) {
  return make(static_cast<__int128>(a.num_) * b.num_, static_cast<__int128>(a.den_) * b.den_);
}

std::optional<Rational> Rational::pow(const Rational& base, std::int64_t exponent) {
  if (exponent == 0) return Rational(1);
  Rational b = base;
  if (exponent < 0) {
    if (b.num_ == 0) return std::nullopt;
    b = Rational(b.den_, b.num_);
    exponent = -exponent;
  }
  if (exponent > 128) return std::nullopt;
  Rational acc(1);
  for (std::int64_t i = 0; i < exponent; ++i) {
    auto next = mul(acc, b);
    if (!next) return std::nullopt;
    acc = *next;
  }
  return acc;
}

std::optional<Rational> Rational::sqrt(const Rational& a) {
  auto n = isqrt(a.num_);
  auto d = isqrt(a.den_);
  if (!n || !d) return std::nullopt;
  return Rational(*n, *d);
}

Number Number::operator-() const {
  if (exact_) return Number(q_.negated());
  return decimal(-d_);
}

Number operator+(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (auto r = Rational::add(a.q_, b.q_)) return Number(*r);
  }
  return Number::decimal(a.value() + b.value());
}

Number operator*(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (auto r = Rational::mul(a.q_, b.q_)) return Number(*r);
  }
  return Number::decimal(a.value() * b.value());
}

int Number::compare(const Number& a, const Number& b) {
  if (a.exact_ && b.exact_) {
    if (a.q_ == b.q_) return 0;
    auto lhs = static_cast<__int128>(a.q_.num()) * b.q_.den();
    auto rhs = static_cast<__int128>(b.q_.num()) * a.q_.den();
    return lhs < rhs ? -1 : 1;
  }
  double x = a.value();
  double y = b.value();
  if (x < y) return -1;
  if (x > y) return 1;
  if (a.exact_ != b.exact_) return a.exact_ ? -1 : 1;
  return 0;
}

std::string Number::to_string() const {
  if (exact_) {
    if (q_.is_integer()) return std::to_string(q_.num());
    return std::to_string(q_.num()) + "/" + std::to_string(q_.den());
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", d_);
  std::string s(buf);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

}  // namespace diffinv
