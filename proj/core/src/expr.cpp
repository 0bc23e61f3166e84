#include "diffinv/expr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <utility>

namespace diffinv {

struct Node {
  NodeKind kind = NodeKind::Constant;
  Number number;
  std::string name;
  FuncKind func = FuncKind::Exp;
  std::vector<Expr> children;
  std::shared_ptr<const OpaqueFunction> fn;
  std::size_t hash = 0;
  std::size_t size = 1;
  std::shared_ptr<const std::vector<std::string>> symbols;
};

namespace {

constexpr std::array<std::string_view, 8> kFuncNames = {"exp",    "ln",     "sin",  "cos",
                                                        "tan",    "arcsin", "arctan", "sqrt"};

std::size_t mix(std::size_t h, std::size_t v) {
  return h ^ (v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2));
}

const std::shared_ptr<const std::vector<std::string>>& empty_symbols() {
  static const auto empty = std::make_shared<const std::vector<std::string>>();
  return empty;
}

}  // namespace

struct NodeFactory {
  static Expr make(Node n) {
    std::size_t h = std::hash<int>{}(static_cast<int>(n.kind));
    switch (n.kind) {
      case NodeKind::Constant:
        h = mix(h, std::hash<double>{}(n.number.value()));
        h = mix(h, n.number.exact() ? 1 : 2);
        n.symbols = empty_symbols();
        break;
      case NodeKind::Symbol:
        h = mix(h, std::hash<std::string>{}(n.name));
        n.symbols = std::make_shared<const std::vector<std::string>>(1, n.name);
        break;
      default:
        break;
    }
    if (n.kind == NodeKind::Func) h = mix(h, static_cast<std::size_t>(n.func) + 17);
    if (n.kind == NodeKind::Opaque) h = mix(h, std::hash<std::string>{}(n.fn->name()));
    if (!n.children.empty()) {
      std::size_t size = 1;
      const std::vector<std::string>* single = nullptr;
      bool need_merge = false;
      for (const auto& c : n.children) {
        h = mix(h, c.hash());
        size += c.tree_size();
        const auto& syms = c.free_symbols();
        if (syms.empty()) continue;
        if (single == nullptr) {
          single = &syms;
        } else if (*single != syms) {
          need_merge = true;
        }
      }
      n.size = size;
      if (!need_merge) {
        if (single == nullptr) {
          n.symbols = empty_symbols();
        } else {
          for (const auto& c : n.children) {
            if (&c.free_symbols() == single) {
              n.symbols = c.node_->symbols;
              break;
            }
          }
        }
      } else {
        std::vector<std::string> merged;
        for (const auto& c : n.children) {
          const auto& syms = c.free_symbols();
          std::vector<std::string> out;
          out.reserve(merged.size() + syms.size());
          std::set_union(merged.begin(), merged.end(), syms.begin(), syms.end(),
                         std::back_inserter(out));
          merged.swap(out);
        }
        n.symbols = std::make_shared<const std::vector<std::string>>(std::move(merged));
      }
    }
    n.hash = h;
    return Expr(std::make_shared<const Node>(std::move(n)));
  }
};

std::string_view func_name(FuncKind kind) { return kFuncNames[static_cast<std::size_t>(kind)]; }

std::optional<FuncKind> func_from_name(std::string_view name) {
  for (std::size_t i = 0; i < kFuncNames.size(); ++i) {
    if (kFuncNames[i] == name) return static_cast<FuncKind>(i);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Expr accessors and raw constructors

namespace {

Expr make_constant(const Number& v) {
  Node n;
  n.kind = NodeKind::Constant;
  n.number = v;
  return NodeFactory::make(std::move(n));
}

const Expr& zero_expr() {
  static const Expr z = make_constant(Number::integer(0));
  return z;
}

const Expr& one_expr() {
  static const Expr o = make_constant(Number::integer(1));
  return o;
}

const Expr& minus_one_expr() {
  static const Expr m = make_constant(Number::integer(-1));
  return m;
}

}  // namespace

Expr::Expr() : Expr(zero_expr()) {}
Expr::Expr(int value) : Expr(static_cast<std::int64_t>(value)) {}
Expr::Expr(std::int64_t value) {
  if (value == 0) {
    node_ = zero_expr().node_;
  } else if (value == 1) {
    node_ = one_expr().node_;
  } else {
    node_ = make_constant(Number::integer(value)).node_;
  }
}
Expr::Expr(const Number& value) : node_(make_constant(value).node_) {}

Expr Expr::symbol(std::string name) {
  Node n;
  n.kind = NodeKind::Symbol;
  n.name = std::move(name);
  return NodeFactory::make(std::move(n));
}

Expr Expr::raw_sum(std::vector<Expr> operands) {
  Node n;
  n.kind = NodeKind::Sum;
  n.children = std::move(operands);
  return NodeFactory::make(std::move(n));
}

Expr Expr::raw_product(std::vector<Expr> operands) {
  Node n;
  n.kind = NodeKind::Product;
  n.children = std::move(operands);
  return NodeFactory::make(std::move(n));
}

Expr Expr::raw_power(Expr base, Expr exponent) {
  Node n;
  n.kind = NodeKind::Power;
  n.children = {std::move(base), std::move(exponent)};
  return NodeFactory::make(std::move(n));
}

Expr Expr::raw_neg(Expr operand) {
  Node n;
  n.kind = NodeKind::Neg;
  n.children = {std::move(operand)};
  return NodeFactory::make(std::move(n));
}

Expr Expr::raw_func(FuncKind kind, Expr argument) {
  Node n;
  n.kind = NodeKind::Func;
  n.func = kind;
  n.children = {std::move(argument)};
  return NodeFactory::make(std::move(n));
}

Expr Expr::raw_opaque(std::shared_ptr<const OpaqueFunction> fn, std::vector<Expr> args) {
  if (!fn) throw std::invalid_argument("raw_opaque: null function");
  if (args.size() != fn->arity()) throw std::invalid_argument("raw_opaque: arity mismatch");
  Node n;
  n.kind = NodeKind::Opaque;
  n.name = fn->name();
  n.fn = std::move(fn);
  n.children = std::move(args);
  return NodeFactory::make(std::move(n));
}

NodeKind Expr::kind() const { return node_->kind; }
bool Expr::is_zero() const { return is_constant() && node_->number.is_zero(); }
bool Expr::is_one() const { return is_constant() && node_->number.is_one(); }
std::optional<Number> Expr::as_constant() const {
  if (!is_constant()) return std::nullopt;
  return node_->number;
}
const Number& Expr::number() const { return node_->number; }
const std::string& Expr::name() const { return node_->name; }
FuncKind Expr::func() const { return node_->func; }
std::span<const Expr> Expr::operands() const { return node_->children; }
const std::shared_ptr<const OpaqueFunction>& Expr::opaque() const { return node_->fn; }
std::size_t Expr::hash() const { return node_->hash; }
std::size_t Expr::tree_size() const { return node_->size; }
const std::vector<std::string>& Expr::free_symbols() const { return *node_->symbols; }
bool Expr::depends_on(std::string_view symbol) const {
  const auto& s = *node_->symbols;
  return std::binary_search(s.begin(), s.end(), symbol,
                            [](const auto& a, const auto& b) { return std::string_view(a) < std::string_view(b); });
}

bool operator==(const Expr& a, const Expr& b) {
  if (a.node_ == b.node_) return true;
  if (a.hash() != b.hash()) return false;
  return compare(a, b) == 0;
}

int compare(const Expr& a, const Expr& b) {
  if (a.node() == b.node()) return 0;
  if (a.kind() != b.kind()) return a.kind() < b.kind() ? -1 : 1;
  switch (a.kind()) {
    case NodeKind::Constant:
      return Number::compare(a.number(), b.number());
    case NodeKind::Symbol: {
      int c = a.name().compare(b.name());
      return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    case NodeKind::Opaque: {
      int c = a.name().compare(b.name());
      if (c != 0) return c < 0 ? -1 : 1;
      break;
    }
    case NodeKind::Func:
      if (a.func() != b.func()) return a.func() < b.func() ? -1 : 1;
      break;
    default:
      break;
  }
  auto ca = a.operands();
  auto cb = b.operands();
  std::size_t n = std::min(ca.size(), cb.size());
  for (std::size_t i = 0; i < n; ++i) {
    int c = compare(ca[i], cb[i]);
    if (c != 0) return c;
  }
  if (ca.size() != cb.size()) return ca.size() < cb.size() ? -1 : 1;
  return 0;
}

// ---------------------------------------------------------------------------
// Normalizing builders

namespace {

struct Term {
  Number coeff;
  std::optional<Expr> monomial;  // nullopt for the constant term
};

// Splits a normalized term into numeric coefficient and monomial.
Term split_term(const Expr& t) {
  switch (t.kind()) {
    case NodeKind::Constant:
      return {t.number(), std::nullopt};
    case NodeKind::Neg: {
      Term inner = split_term(t.argument());
      inner.coeff = -inner.coeff;
      return inner;
    }
    case NodeKind::Product: {
      auto ops = t.operands();
      if (!ops.empty() && ops[0].is_constant()) {
        std::vector<Expr> rest(ops.begin() + 1, ops.end());
        if (rest.size() == 1) return {ops[0].number(), rest[0]};
        return {ops[0].number(), Expr::raw_product(std::move(rest))};
      }
      return {Number::integer(1), t};
    }
    default:
      return {Number::integer(1), t};
  }
}

// coeff * monomial where the monomial is normalized, not a constant and has no
// numeric coefficient.
Expr make_term(const Number& coeff, const Expr& monomial) {
  if (coeff.is_zero()) return Expr();
  if (coeff.is_one()) return monomial;
  if (coeff.is_minus_one()) return Expr::raw_neg(monomial);
  std::vector<Expr> ops;
  ops.emplace_back(coeff);
  if (monomial.kind() == NodeKind::Product) {
    for (const auto& f : monomial.operands()) ops.push_back(f);
  } else {
    ops.push_back(monomial);
  }
  return Expr::raw_product(std::move(ops));
}

std::optional<Number> fold_power(const Number& b, const Number& e) {
  if (b.exact() && e.exact()) {
    const Rational& q = e.rational();
    if (q.is_integer()) {
      if (auto r = Rational::pow(b.rational(), q.num())) return Number(*r);
      if (b.is_zero()) return std::nullopt;
      // Overflow: fall back to floating point below.
    } else {
      if (q.den() != 2 || b.rational().num() < 0) return std::nullopt;
      auto root = Rational::sqrt(b.rational());
      if (!root) return std::nullopt;
      if (auto r = Rational::pow(*root, q.num())) return Number(*r);
      return std::nullopt;
    }
  }
  double bv = b.value();
  double ev = e.value();
  if (bv == 0.0 && ev < 0.0) return std::nullopt;
  if (bv < 0.0 && std::floor(ev) != ev) return std::nullopt;
  double r = std::pow(bv, ev);
  if (!std::isfinite(r)) return std::nullopt;
  return Number::decimal(r);
}

}  // namespace

Expr add(std::vector<Expr> operands) {
  std::vector<Expr> flat;
  flat.reserve(operands.size());
  for (auto& op : operands) {
    if (op.kind() == NodeKind::Sum) {
      for (const auto& c : op.operands()) flat.push_back(c);
    } else {
      flat.push_back(std::move(op));
    }
  }
  Number constant = Number::integer(0);
  std::map<Expr, Number, ExprLess> collected;
  for (const auto& t : flat) {
    Term term = split_term(t);
    if (!term.monomial) {
      constant = constant + term.coeff;
      continue;
    }
    auto [it, inserted] = collected.emplace(*term.monomial, term.coeff);
    if (!inserted) it->second = it->second + term.coeff;
  }
  std::vector<Expr> terms;
  if (!constant.is_zero()) terms.emplace_back(constant);
  for (const auto& [mono, coeff] : collected) {
    if (coeff.is_zero()) continue;
    terms.push_back(make_term(coeff, mono));
  }
  if (terms.empty()) {
    // A decimal constant that summed to exactly zero stays decimal.
    if (!constant.exact()) return Expr(constant);
    return Expr();
  }
  if (terms.size() == 1) return terms[0];
  std::sort(terms.begin(), terms.end(), ExprLess{});
  return Expr::raw_sum(std::move(terms));
}

Expr mul(std::vector<Expr> operands) {
  Number coeff = Number::integer(1);
  std::vector<std::pair<Expr, Expr>> factors;  // (base, exponent)
  std::vector<Expr> exp_args;                   // exp(a)*exp(b) -> exp(a+b)
  std::vector<Expr> stack(operands.rbegin(), operands.rend());
  while (!stack.empty()) {
    Expr op = std::move(stack.back());
    stack.pop_back();
    switch (op.kind()) {
      case NodeKind::Constant:
        coeff = coeff * op.number();
        break;
      case NodeKind::Product:
        for (auto it = op.operands().rbegin(); it != op.operands().rend(); ++it) stack.push_back(*it);
        break;
      case NodeKind::Neg:
        coeff = -coeff;
        stack.push_back(op.argument());
        break;
      case NodeKind::Power:
        factors.emplace_back(op.base(), op.exponent());
        break;
      case NodeKind::Func:
        if (op.func() == FuncKind::Exp) {
          exp_args.push_back(op.argument());
          break;
        }
        factors.emplace_back(op, Expr(1));
        break;
      default:
        factors.emplace_back(op, Expr(1));
        break;
    }
  }
  if (exp_args.size() > 1) {
    Expr merged = exp(add(std::move(exp_args)));
    if (merged.is_constant()) {
      coeff = coeff * merged.number();
    } else {
      factors.emplace_back(merged, Expr(1));
    }
  } else if (exp_args.size() == 1) {
    factors.emplace_back(exp(exp_args[0]), Expr(1));
  }
  if (coeff.is_zero()) {
    return coeff.exact() ? Expr() : Expr(coeff);
  }
  std::map<Expr, std::vector<Expr>, ExprLess> by_base;
  for (auto& [b, e] : factors) by_base[b].push_back(e);

  std::vector<Expr> out;
  bool renormalize = false;
  for (auto& [b, exps] : by_base) {
    Expr e = exps.size() == 1 ? exps[0] : add(exps);
    Expr f = pow(b, e);
    switch (f.kind()) {
      case NodeKind::Constant:
        coeff = coeff * f.number();
        break;
      case NodeKind::Product:
      case NodeKind::Neg:
        renormalize = true;
        out.push_back(f);
        break;
      default:
        out.push_back(f);
        break;
    }
  }
  if (renormalize) {
    out.insert(out.begin(), Expr(coeff));
    return mul(std::move(out));
  }
  if (coeff.is_zero()) return coeff.exact() ? Expr() : Expr(coeff);
  if (out.empty()) return Expr(coeff);
  std::sort(out.begin(), out.end(), ExprLess{});
  // A numeric coefficient in front of a single sum is distributed so that
  // sums never hide under Neg or a bare coefficient.
  if (out.size() == 1 && out[0].kind() == NodeKind::Sum && !coeff.is_one()) {
    std::vector<Expr> terms;
    for (const auto& t : out[0].operands()) terms.push_back(mul({Expr(coeff), t}));
    return add(std::move(terms));
  }
  Expr mono = out.size() == 1 ? out[0] : Expr::raw_product(std::move(out));
  return make_term(coeff, mono);
}

Expr pow(const Expr& base, const Expr& exponent) {
  if (auto e = exponent.as_constant()) {
    if (e->is_zero()) return Expr(1);
    if (e->is_one()) return base;
  }
  if (auto b = base.as_constant()) {
    if (b->is_one()) return Expr(1);
    if (b->is_zero()) {
      if (auto e = exponent.as_constant(); e && !e->is_negative() && !e->is_zero()) return Expr();
      return Expr::raw_power(base, exponent);
    }
    if (auto e = exponent.as_constant()) {
      if (auto folded = fold_power(*b, *e)) return Expr(*folded);
    }
    return Expr::raw_power(base, exponent);
  }
  if (base.kind() == NodeKind::Func && base.func() == FuncKind::Exp) {
    return exp(mul({base.argument(), exponent}));
  }
  auto e = exponent.as_constant();
  bool integer_exponent = e && e->is_integer();
  if (integer_exponent) {
    switch (base.kind()) {
      case NodeKind::Power:
        return pow(base.base(), mul({base.exponent(), exponent}));
      case NodeKind::Product: {
        std::vector<Expr> fs;
        for (const auto& f : base.operands()) fs.push_back(pow(f, exponent));
        return mul(std::move(fs));
      }
      case NodeKind::Neg: {
        Expr inner = pow(base.argument(), exponent);
        return (e->rational().num() % 2 == 0) ? inner : neg(inner);
      }
      case NodeKind::Func:
        if (base.func() == FuncKind::Sqrt && e->rational().num() % 2 == 0) {
          return pow(base.argument(), Expr(e->rational().num() / 2));
        }
        break;
      default:
        break;
    }
  }
  return Expr::raw_power(base, exponent);
}

Expr neg(const Expr& operand) { return mul({minus_one_expr(), operand}); }

Expr apply_func(FuncKind kind, const Expr& argument) {
  if (auto c = argument.as_constant()) {
    if (c->exact()) {
      const Rational& q = c->rational();
      switch (kind) {
        case FuncKind::Exp:
          if (q.is_zero()) return Expr(1);
          break;
        case FuncKind::Ln:
          if (q == Rational(1)) return Expr();
          break;
        case FuncKind::Sin:
        case FuncKind::Tan:
        case FuncKind::Arcsin:
        case FuncKind::Arctan:
          if (q.is_zero()) return Expr();
          break;
        case FuncKind::Cos:
          if (q.is_zero()) return Expr(1);
          break;
        case FuncKind::Sqrt:
          if (q.num() >= 0) {
            if (auto r = Rational::sqrt(q)) return Expr(Number(*r));
          }
          break;
      }
    } else {
      double x = c->value();
      double r = std::nan("");
      switch (kind) {
        case FuncKind::Exp: r = std::exp(x); break;
        case FuncKind::Ln: if (x > 0) r = std::log(x); break;
        case FuncKind::Sin: r = std::sin(x); break;
        case FuncKind::Cos: r = std::cos(x); break;
        case FuncKind::Tan: r = std::tan(x); break;
        case FuncKind::Arcsin: if (std::fabs(x) <= 1) r = std::asin(x); break;
        case FuncKind::Arctan: r = std::atan(x); break;
        case FuncKind::Sqrt: if (x >= 0) r = std::sqrt(x); break;
      }
      if (std::isfinite(r)) return Expr::decimal(r);
    }
  }
  return Expr::raw_func(kind, argument);
}

Expr apply_opaque(std::shared_ptr<const OpaqueFunction> fn, std::vector<Expr> args) {
  return Expr::raw_opaque(std::move(fn), std::move(args));
}

Expr exp(const Expr& a) { return apply_func(FuncKind::Exp, a); }
Expr ln(const Expr& a) { return apply_func(FuncKind::Ln, a); }
Expr sin(const Expr& a) { return apply_func(FuncKind::Sin, a); }
Expr cos(const Expr& a) { return apply_func(FuncKind::Cos, a); }
Expr tan(const Expr& a) { return apply_func(FuncKind::Tan, a); }
Expr arcsin(const Expr& a) { return apply_func(FuncKind::Arcsin, a); }
Expr arctan(const Expr& a) { return apply_func(FuncKind::Arctan, a); }
Expr sqrt(const Expr& a) { return apply_func(FuncKind::Sqrt, a); }

Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return add({a, neg(b)}); }
Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return mul({a, pow(b, minus_one_expr())}); }
Expr operator-(const Expr& a) { return neg(a); }

// ---------------------------------------------------------------------------
// Tree transformations

namespace {

using Memo = std::unordered_map<const Node*, Expr>;

Expr rebuild(const Expr& e, std::vector<Expr> kids) {
  switch (e.kind()) {
    case NodeKind::Constant:
    case NodeKind::Symbol:
      return e;
    case NodeKind::Sum:
      return add(std::move(kids));
    case NodeKind::Product:
      return mul(std::move(kids));
    case NodeKind::Power:
      return pow(kids[0], kids[1]);
    case NodeKind::Neg:
      return neg(kids[0]);
    case NodeKind::Func:
      return apply_func(e.func(), kids[0]);
    case NodeKind::Opaque:
      return apply_opaque(e.opaque(), std::move(kids));
  }
  return e;
}

Expr normalize_rec(const Expr& e, Memo& memo) {
  if (e.kind() == NodeKind::Constant || e.kind() == NodeKind::Symbol) return e;
  if (auto it = memo.find(e.node()); it != memo.end()) return it->second;
  std::vector<Expr> kids;
  kids.reserve(e.operands().size());
  for (const auto& c : e.operands()) kids.push_back(normalize_rec(c, memo));
  Expr out = rebuild(e, std::move(kids));
  memo.emplace(e.node(), out);
  return out;
}

Expr diff_rec(const Expr& e, std::string_view s, Memo& memo) {
  if (!e.depends_on(s)) return Expr();
  if (e.kind() == NodeKind::Symbol) return Expr(1);
  if (auto it = memo.find(e.node()); it != memo.end()) return it->second;
  Expr out;
  switch (e.kind()) {
    case NodeKind::Sum: {
      std::vector<Expr> terms;
      for (const auto& t : e.operands()) terms.push_back(diff_rec(t, s, memo));
      out = add(std::move(terms));
      break;
    }
    case NodeKind::Neg:
      out = neg(diff_rec(e.argument(), s, memo));
      break;
    case NodeKind::Product: {
      auto ops = e.operands();
      std::vector<Expr> terms;
      for (std::size_t i = 0; i < ops.size(); ++i) {
        if (!ops[i].depends_on(s)) continue;
        std::vector<Expr> fs;
        fs.reserve(ops.size());
        for (std::size_t j = 0; j < ops.size(); ++j) {
          fs.push_back(i == j ? diff_rec(ops[i], s, memo) : ops[j]);
        }
        terms.push_back(mul(std::move(fs)));
      }
      out = add(std::move(terms));
      break;
    }
    case NodeKind::Power: {
      const Expr& b = e.base();
      const Expr& x = e.exponent();
      if (!x.depends_on(s)) {
        out = mul({x, pow(b, add({x, minus_one_expr()})), diff_rec(b, s, memo)});
      } else {
        Expr db = diff_rec(b, s, memo);
        Expr dx = diff_rec(x, s, memo);
        out = mul({e, add({mul({dx, ln(b)}), mul({x, db, pow(b, minus_one_expr())})})});
      }
      break;
    }
    case NodeKind::Func: {
      const Expr& a = e.argument();
      Expr da = diff_rec(a, s, memo);
      Expr outer;
      switch (e.func()) {
        case FuncKind::Exp: outer = e; break;
        case FuncKind::Ln: outer = pow(a, minus_one_expr()); break;
        case FuncKind::Sin: outer = cos(a); break;
        case FuncKind::Cos: outer = neg(sin(a)); break;
        case FuncKind::Tan: outer = pow(cos(a), Expr(-2)); break;
        case FuncKind::Arcsin:
          outer = pow(add({Expr(1), neg(pow(a, Expr(2)))}), Expr::rational(-1, 2));
          break;
        case FuncKind::Arctan: outer = pow(add({Expr(1), pow(a, Expr(2))}), minus_one_expr()); break;
        case FuncKind::Sqrt: outer = mul({Expr::rational(1, 2), pow(e, minus_one_expr())}); break;
      }
      out = mul({outer, da});
      break;
    }
    case NodeKind::Opaque: {
      auto args = e.operands();
      std::vector<Expr> terms;
      for (std::size_t k = 0; k < args.size(); ++k) {
        if (!args[k].depends_on(s)) continue;
        terms.push_back(mul({e.opaque()->partial(k, args), diff_rec(args[k], s, memo)}));
      }
      out = add(std::move(terms));
      break;
    }
    default:
      break;
  }
  memo.emplace(e.node(), out);
  return out;
}

Expr substitute_rec(const Expr& e, const Substitution& map, Memo& memo) {
  if (e.kind() == NodeKind::Symbol) {
    auto it = map.find(e.name());
    return it == map.end() ? e : it->second;
  }
  if (e.kind() == NodeKind::Constant) return e;
  bool touched = false;
  for (const auto& s : e.free_symbols()) {
    if (map.count(s)) {
      touched = true;
      break;
    }
  }
  if (!touched) return normalize_rec(e, memo);
  if (auto it = memo.find(e.node()); it != memo.end()) return it->second;
  std::vector<Expr> kids;
  for (const auto& c : e.operands()) kids.push_back(substitute_rec(c, map, memo));
  Expr out = rebuild(e, std::move(kids));
  memo.emplace(e.node(), out);
  return out;
}

constexpr std::size_t kExpandTermCap = 20000;

std::vector<Expr> sum_terms(const Expr& e) {
  if (e.kind() == NodeKind::Sum) return {e.operands().begin(), e.operands().end()};
  return {e};
}

Expr multiply_out(const std::vector<Expr>& input) {
  std::vector<Expr> factors;
  for (const auto& f : input) {
    if (f.kind() == NodeKind::Power && f.base().kind() == NodeKind::Sum) {
      auto k = f.exponent().as_constant();
      if (k && k->is_integer() && k->rational().num() > 1 && k->rational().num() <= 12) {
        for (std::int64_t i = 0; i < k->rational().num(); ++i) factors.push_back(f.base());
        continue;
      }
    }
    factors.push_back(f);
  }
  std::vector<Expr> acc{Expr(1)};
  for (const auto& f : factors) {
    auto terms = sum_terms(f);
    if (acc.size() * terms.size() > kExpandTermCap) return mul(factors);
    std::vector<Expr> next;
    next.reserve(acc.size() * terms.size());
    for (const auto& a : acc) {
      for (const auto& t : terms) next.push_back(mul({a, t}));
    }
    acc.swap(next);
  }
  return add(std::move(acc));
}

Expr expand_rec(const Expr& e, Memo& memo) {
  if (e.kind() == NodeKind::Constant || e.kind() == NodeKind::Symbol) return e;
  if (auto it = memo.find(e.node()); it != memo.end()) return it->second;
  std::vector<Expr> kids;
  for (const auto& c : e.operands()) kids.push_back(expand_rec(c, memo));
  Expr out;
  switch (e.kind()) {
    case NodeKind::Product: {
      Expr p = mul(kids);
      if (p.kind() == NodeKind::Product) {
        std::vector<Expr> fs(p.operands().begin(), p.operands().end());
        out = multiply_out(fs);
      } else if (p.kind() == NodeKind::Neg && p.argument().kind() == NodeKind::Product) {
        std::vector<Expr> fs(p.argument().operands().begin(), p.argument().operands().end());
        fs.push_back(minus_one_expr());
        out = multiply_out(fs);
      } else {
        out = p;
      }
      break;
    }
    case NodeKind::Power: {
      Expr p = pow(kids[0], kids[1]);
      auto k = p.kind() == NodeKind::Power ? p.exponent().as_constant() : std::nullopt;
      if (k && k->is_integer() && k->rational().num() > 1 && k->rational().num() <= 12 &&
          p.base().kind() == NodeKind::Sum) {
        out = multiply_out(std::vector<Expr>(static_cast<std::size_t>(k->rational().num()), p.base()));
      } else if (p.kind() == NodeKind::Product) {
        out = expand_rec(p, memo);
      } else {
        out = p;
      }
      break;
    }
    case NodeKind::Neg:
      out = neg(kids[0]);
      break;
    default:
      out = rebuild(e, std::move(kids));
      break;
  }
  memo.emplace(e.node(), out);
  return out;
}

}  // namespace

Expr normalize(const Expr& e) {
  Memo memo;
  return normalize_rec(e, memo);
}

Expr diff(const Expr& e, std::string_view symbol) {
  Memo memo;
  return diff_rec(e, symbol, memo);
}

Expr substitute(const Expr& e, const Substitution& map) {
  Memo memo;
  return substitute_rec(e, map, memo);
}

Expr expand(const Expr& e) {
  Memo memo;
  return expand_rec(e, memo);
}

// ---------------------------------------------------------------------------
// Rendering

namespace {

constexpr int kPrecSum = 1;
constexpr int kPrecProduct = 2;
constexpr int kPrecNeg = 3;
constexpr int kPrecPower = 4;
constexpr int kPrecAtom = 5;

struct Rendered {
  std::string text;
  int prec;
};

Rendered render_rec(const Expr& e);

std::string wrap(const Rendered& r, int min_prec) {
  if (r.prec >= min_prec) return r.text;
  return "(" + r.text + ")";
}

Rendered render_constant(const Number& n) {
  std::string s = n.to_string();
  if (n.is_negative()) return {s, kPrecNeg};
  if (n.exact() && !n.rational().is_integer()) return {s, kPrecProduct};
  return {s, kPrecAtom};
}

Rendered render_product(const Expr& e) {
  std::vector<std::string> num;
  std::vector<std::string> den;
  bool negative = false;
  for (const auto& f : e.operands()) {
    if (f.is_constant()) {
      Number c = f.number();
      if (c.is_negative()) {
        negative = true;
        c = -c;
      }
      if (c.exact()) {
        if (c.rational().num() != 1) num.push_back(std::to_string(c.rational().num()));
        if (c.rational().den() != 1) den.push_back(std::to_string(c.rational().den()));
      } else {
        num.push_back(c.to_string());
      }
      continue;
    }
    if (f.kind() == NodeKind::Power) {
      auto k = f.exponent().as_constant();
      if (k && k->is_negative()) {
        Expr positive = pow(f.base(), Expr(-*k));
        den.push_back(wrap(render_rec(positive), kPrecNeg));
        continue;
      }
    }
    num.push_back(wrap(render_rec(f), kPrecNeg));
  }
  std::string text;
  if (num.empty()) {
    text = "1";
  } else {
    for (std::size_t i = 0; i < num.size(); ++i) {
      if (i) text += "*";
      text += num[i];
    }
  }
  if (!den.empty()) {
    text += "/";
    if (den.size() == 1) {
      text += den[0];
    } else {
      text += "(";
      for (std::size_t i = 0; i < den.size(); ++i) {
        if (i) text += "*";
        text += den[i];
      }
      text += ")";
    }
  }
  if (negative) text = "-" + text;
  return {text, kPrecProduct};
}

Rendered render_rec(const Expr& e) {
  switch (e.kind()) {
    case NodeKind::Constant:
      return render_constant(e.number());
    case NodeKind::Symbol:
      return {e.name(), kPrecAtom};
    case NodeKind::Opaque: {
      std::string s = e.name() + "(";
      auto args = e.operands();
      for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) s += ", ";
        s += render_rec(args[i]).text;
      }
      return {s + ")", kPrecAtom};
    }
    case NodeKind::Func:
      return {std::string(func_name(e.func())) + "(" + render_rec(e.argument()).text + ")", kPrecAtom};
    case NodeKind::Power: {
      Rendered b = render_rec(e.base());
      Rendered x = render_rec(e.exponent());
      return {wrap(b, kPrecAtom) + "^" + wrap(x, kPrecPower), kPrecPower};
    }
    case NodeKind::Neg: {
      Rendered a = render_rec(e.argument());
      if (e.argument().kind() == NodeKind::Product) return {"-" + a.text, kPrecProduct};
      return {"-" + wrap(a, kPrecNeg), kPrecNeg};
    }
    case NodeKind::Product:
      return render_product(e);
    case NodeKind::Sum: {
      std::string s;
      bool first = true;
      for (const auto& t : e.operands()) {
        std::string part = wrap(render_rec(t), kPrecProduct);
        if (first) {
          s = part;
          first = false;
        } else if (!part.empty() && part[0] == '-') {
          s += " - " + part.substr(1);
        } else {
          s += " + " + part;
        }
      }
      return {s, kPrecSum};
    }
  }
  return {"?", kPrecAtom};
}

}  // namespace

std::string render(const Expr& e) { return render_rec(e).text; }

std::ostream& operator<<(std::ostream& os, const Expr& e) { return os << render(e); }

std::optional<int> poly_degree(const Expr& e, const std::set<std::string>& symbols) {
  bool depends = false;
  for (const auto& s : e.free_symbols()) {
    if (symbols.count(s)) {
      depends = true;
      break;
    }
  }
  if (!depends) return 0;
  switch (e.kind()) {
    case NodeKind::Symbol:
      return 1;
    case NodeKind::Sum: {
      int best = 0;
      for (const auto& t : e.operands()) {
        auto d = poly_degree(t, symbols);
        if (!d) return std::nullopt;
        best = std::max(best, *d);
      }
      return best;
    }
    case NodeKind::Neg:
      return poly_degree(e.argument(), symbols);
    case NodeKind::Product: {
      int total = 0;
      for (const auto& f : e.operands()) {
        auto d = poly_degree(f, symbols);
        if (!d) return std::nullopt;
        total += *d;
      }
      return total;
    }
    case NodeKind::Power: {
      auto k = e.exponent().as_constant();
      if (!k || !k->is_integer() || k->is_negative()) return std::nullopt;
      auto d = poly_degree(e.base(), symbols);
      if (!d) return std::nullopt;
      return *d * static_cast<int>(k->rational().num());
    }
    default:
      return std::nullopt;
  }
}

}  // namespace diffinv
