#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "diffinv/expr.hpp"

namespace diffinv {

using MultiIndex = std::vector<int>;

int order(const MultiIndex& alpha);
/// alpha + e_a
MultiIndex raised(MultiIndex alpha, int a);
/// All multi-indices of length n and order exactly k, first axis varying slowest
/// (for n=2, k=1: [1,0] then [0,1]).
std::vector<MultiIndex> multi_indices(int n, int k);

/// A dependent coordinate u^i_alpha (i is 0-based; alpha may be all zeros).
struct JetCoordinate {
  int dep = 0;
  MultiIndex alpha;
  friend bool operator==(const JetCoordinate&, const JetCoordinate&) = default;
};

/// Independent variables x (n=1) or x1..xn, dependent variables u (m=1) or
/// u1..um, derivative coordinates u<i>[a1,...,an] with 1-based i (u1[1] is
/// u_x when n=m=1). Any other symbol is a parameter.
class JetSpace {
 public:
  JetSpace(int n, int m, int r);

  int n() const { return n_; }
  int m() const { return m_; }
  int r() const { return r_; }
  JetSpace with_order(int r) const { return JetSpace(n_, m_, r); }

  const std::string& x(int a) const { return x_names_.at(static_cast<std::size_t>(a)); }
  const std::string& u(int i) const { return u_names_.at(static_cast<std::size_t>(i)); }
  std::string coordinate(int dep, const MultiIndex& alpha) const;
  std::string coordinate(const JetCoordinate& c) const { return coordinate(c.dep, c.alpha); }

  std::optional<int> independent_index(std::string_view name) const;
  /// Recognizes u^i (alpha zero) and u^i_alpha names of this space (any order).
  std::optional<JetCoordinate> dependent_coordinate(std::string_view name) const;
  bool is_coordinate(std::string_view name) const;

  /// x's, then u^i_alpha ordered by (|alpha|, i, alpha as in multi_indices).
  /// Size n + m*C(n+upTo, upTo). Throws OrderExceeded when upTo > r.
  std::vector<std::string> coordinates(int upTo) const;

  /// Highest derivative order among the free symbols of e (0 if none).
  int jet_order(const Expr& e) const;

  /// Rewrites the aliases u1 (m=1) and x1 (n=1) to u and x.
  Expr canonicalize(const Expr& e) const;

 private:
  int n_;
  int m_;
  int r_;
  std::vector<std::string> x_names_;
  std::vector<std::string> u_names_;
};

/// D_{x_a} e, summing the chain rule over the coordinates present in e.
/// Throws OrderExceeded if e contains a coordinate of order >= r.
Expr total_derivative(const Expr& e, int a, const JetSpace& js);

/// det[D_{axes_j} funcs_i]. Requires funcs.size() == axes.size() <= 6.
Expr total_jacobian(std::span<const Expr> funcs, std::span<const int> axes, const JetSpace& js);

}  // namespace diffinv
