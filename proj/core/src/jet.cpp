#include "diffinv/jet.hpp"

#include <charconv>
#include <stdexcept>

#include "diffinv/error.hpp"
#include "diffinv/linalg.hpp"

namespace diffinv {

int order(const MultiIndex& alpha) {
  int s = 0;
  for (int a : alpha) s += a;
  return s;
}

MultiIndex raised(MultiIndex alpha, int a) {
  ++alpha.at(static_cast<std::size_t>(a));
  return alpha;
}

namespace {

void gen_indices(int n, int k, std::size_t pos, MultiIndex& cur, std::vector<MultiIndex>& out) {
  if (pos + 1 == static_cast<std::size_t>(n)) {
    cur[pos] = k;
    out.push_back(cur);
    return;
  }
  for (int v = k; v >= 0; --v) {
    cur[pos] = v;
    gen_indices(n, k - v, pos + 1, cur, out);
  }
}

}  // namespace

std::vector<MultiIndex> multi_indices(int n, int k) {
  std::vector<MultiIndex> out;
  if (n <= 0 || k < 0) return out;
  MultiIndex cur(static_cast<std::size_t>(n), 0);
  gen_indices(n, k, 0, cur, out);
  return out;
}

JetSpace::JetSpace(int n, int m, int r) : n_(n), m_(m), r_(r) {
  if (n < 1 || m < 1 || r < 0) throw std::invalid_argument("JetSpace: need n >= 1, m >= 1, r >= 0");
  for (int a = 0; a < n; ++a) x_names_.push_back(n == 1 ? "x" : "x" + std::to_string(a + 1));
  for (int i = 0; i < m; ++i) u_names_.push_back(m == 1 ? "u" : "u" + std::to_string(i + 1));
}

std::string JetSpace::coordinate(int dep, const MultiIndex& alpha) const {
  if (order(alpha) == 0) return u(dep);
  std::string s = "u" + std::to_string(dep + 1) + "[";
  for (std::size_t k = 0; k < alpha.size(); ++k) {
    if (k) s += ',';
    s += std::to_string(alpha[k]);
  }
  return s + "]";
}

std::optional<int> JetSpace::independent_index(std::string_view name) const {
  for (int a = 0; a < n_; ++a) {
    if (x_names_[static_cast<std::size_t>(a)] == name) return a;
  }
  return std::nullopt;
}

std::optional<JetCoordinate> JetSpace::dependent_coordinate(std::string_view name) const {
  for (int i = 0; i < m_; ++i) {
    if (u_names_[static_cast<std::size_t>(i)] == name) return JetCoordinate{i, MultiIndex(static_cast<std::size_t>(n_), 0)};
  }
  auto open = name.find('[');
  if (open == std::string_view::npos || name.size() < 4 || name[0] != 'u' || name.back() != ']') {
    return std::nullopt;
  }
  int dep = 0;
  auto head = name.substr(1, open - 1);
  auto [p, ec] = std::from_chars(head.data(), head.data() + head.size(), dep);
  if (ec != std::errc() || p != head.data() + head.size() || dep < 1 || dep > m_) return std::nullopt;
  MultiIndex alpha;
  std::string_view body = name.substr(open + 1, name.size() - open - 2);
  while (true) {
    auto comma = body.find(',');
    auto part = body.substr(0, comma);
    int v = 0;
    auto [q, ec2] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec2 != std::errc() || q != part.data() + part.size() || v < 0) return std::nullopt;
    alpha.push_back(v);
    if (comma == std::string_view::npos) break;
    body = body.substr(comma + 1);
  }
  if (alpha.size() != static_cast<std::size_t>(n_) || order(alpha) == 0) return std::nullopt;
  return JetCoordinate{dep - 1, std::move(alpha)};
}

bool JetSpace::is_coordinate(std::string_view name) const {
  return independent_index(name).has_value() || dependent_coordinate(name).has_value();
}

std::vector<std::string> JetSpace::coordinates(int upTo) const {
  if (upTo > r_) {
    throw OrderExceeded("coordinates: order " + std::to_string(upTo) + " exceeds jet order " +
                        std::to_string(r_));
  }
  std::vector<std::string> out(x_names_.begin(), x_names_.end());
  for (int k = 0; k <= upTo; ++k) {
    auto idx = multi_indices(n_, k);
    for (int i = 0; i < m_; ++i)
      for (const auto& alpha : idx) out.push_back(coordinate(i, alpha));
  }
  return out;
}

int JetSpace::jet_order(const Expr& e) const {
  int best = 0;
  for (const auto& s : e.free_symbols()) {
    if (auto c = dependent_coordinate(s)) best = std::max(best, order(c->alpha));
  }
  return best;
}

Expr JetSpace::canonicalize(const Expr& e) const {
  Substitution sub;
  if (m_ == 1 && e.depends_on("u1")) sub.emplace("u1", Expr::symbol("u"));
  if (n_ == 1 && e.depends_on("x1")) sub.emplace("x1", Expr::symbol("x"));
  return sub.empty() ? e : substitute(e, sub);
}

Expr total_derivative(const Expr& e, int a, const JetSpace& js) {
  if (a < 0 || a >= js.n()) throw std::invalid_argument("total_derivative: axis out of range");
  std::vector<Expr> terms;
  for (const auto& s : e.free_symbols()) {
    if (auto xi = js.independent_index(s)) {
      if (*xi == a) terms.push_back(diff(e, s));
      continue;
    }
    auto c = js.dependent_coordinate(s);
    if (!c) continue;
    if (order(c->alpha) >= js.r()) {
      throw OrderExceeded("total_derivative: '" + s + "' has order " + std::to_string(order(c->alpha)) +
                          " but the jet space has order " + std::to_string(js.r()));
    }
    Expr next = Expr::symbol(js.coordinate(c->dep, raised(c->alpha, a)));
    terms.push_back(mul({diff(e, s), next}));
  }
  return add(std::move(terms));
}

Expr total_jacobian(std::span<const Expr> funcs, std::span<const int> axes, const JetSpace& js) {
  if (funcs.empty() || funcs.size() != axes.size()) {
    throw std::invalid_argument("total_jacobian: need as many axes as functions");
  }
  for (std::size_t i = 0; i < axes.size(); ++i)
    for (std::size_t j = i + 1; j < axes.size(); ++j)
      if (axes[i] == axes[j]) throw std::invalid_argument("total_jacobian: axes must be distinct");
  ExprMatrix m(funcs.size(), axes.size());
  for (std::size_t i = 0; i < funcs.size(); ++i)
    for (std::size_t j = 0; j < axes.size(); ++j) m(i, j) = total_derivative(funcs[i], axes[j], js);
  return det(m);
}

}  // namespace diffinv
