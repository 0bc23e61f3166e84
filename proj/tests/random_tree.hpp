#pragma once

#include <random>
#include <string>
#include <vector>

#include "diffinv/expr.hpp"

namespace diffinv::testing {

/// Seeded generator of random expression trees.
class TreeGenerator {
 public:
  TreeGenerator(std::vector<std::string> symbols, std::uint64_t seed) : symbols_(std::move(symbols)), rng_(seed) {}

  /// Unnormalized tree of depth <= depth over every node kind.
  Expr any(int depth) {
    if (depth == 0 || chance(0.25)) return leaf(true);
    switch (pick(6)) {
      case 0:
        return Expr::raw_sum(children(depth));
      case 1:
        return Expr::raw_product(children(depth));
      case 2:
        return Expr::raw_power(any(depth - 1), exponent(depth));
      case 3:
        return Expr::raw_neg(any(depth - 1));
      case 4:
        return Expr::raw_func(static_cast<FuncKind>(pick(8)), any(depth - 1));
      default:
        return Expr::raw_sum({any(depth - 1), Expr::raw_neg(any(depth - 1))});
    }
  }

  /// Normalized tree built from operations that stay finite on bounded boxes.
  Expr smooth(int depth) {
    if (depth == 0 || chance(0.2)) return leaf(false);
    switch (pick(7)) {
      case 0:
        return smooth(depth - 1) + smooth(depth - 1);
      case 1:
        return smooth(depth - 1) * smooth(depth - 1);
      case 2:
        return pow(smooth(depth - 1), Expr(2));
      case 3:
        return -smooth(depth - 1);
      case 4:
        return smooth(depth - 1) / (Expr(2) + sin(smooth(depth - 1)));
      case 5:
        return exp(sin(smooth(depth - 1)));
      default: {
        Expr a = smooth(depth - 1);
        switch (pick(3)) {
          case 0:
            return sin(a);
          case 1:
            return cos(a);
          default:
            return arctan(a);
        }
      }
    }
  }

 private:
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < p; }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  Expr leaf(bool decimals) {
    switch (pick(decimals ? 4 : 3)) {
      case 0:
        return Expr(pick(7) - 3);
      case 1:
        return Expr::rational(pick(9) + 1, pick(4) + 1);
      case 3:
        return Expr::decimal(std::uniform_real_distribution<double>(-2.0, 2.0)(rng_));
      default:
        return Expr::symbol(symbols_[static_cast<std::size_t>(pick(static_cast<int>(symbols_.size())))]);
    }
  }

  std::vector<Expr> children(int depth) {
    std::vector<Expr> out;
    int k = 2 + pick(2);
    for (int i = 0; i < k; ++i) out.push_back(any(depth - 1));
    return out;
  }

  Expr exponent(int depth) {
    switch (pick(3)) {
      case 0:
        return Expr(pick(6) - 2);
      case 1:
        return Expr::rational(1, 2);
      default:
        return any(depth - 1);
    }
  }

  std::vector<std::string> symbols_;
  std::mt19937_64 rng_;
};

}  // namespace diffinv::testing
