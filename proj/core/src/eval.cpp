#include "diffinv/eval.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "diffinv/error.hpp"

namespace diffinv {

Bindings::Bindings(std::initializer_list<std::pair<std::string, double>> values) {
  for (const auto& [k, v] : values) bind(k, v);
}

void Bindings::bind(const std::string& name, double value) {
  if (values_.count(name)) throw InvalidBinding("duplicate binding for '" + name + "'");
  assign(name, value);
}

void Bindings::assign(const std::string& name, double value) {
  if (!std::isfinite(value)) throw InvalidBinding("non-finite value for '" + name + "'");
  values_[name] = value;
}

std::optional<double> Bindings::find(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

double Bindings::at(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) throw UnboundSymbol(name);
  return it->second;
}

CompiledExpr::CompiledExpr(const Expr& e) {
  symbols_ = e.free_symbols();
  keep_alive_.push_back(e);
  std::unordered_map<const Node*, std::uint32_t> slot;
  // Iterative post-order over the DAG.
  std::vector<std::pair<Expr, bool>> stack{{e, false}};
  while (!stack.empty()) {
    auto [cur, expanded] = stack.back();
    stack.pop_back();
    if (slot.count(cur.node())) continue;
    if (!expanded) {
      stack.emplace_back(cur, true);
      for (const auto& c : cur.operands()) {
        if (!slot.count(c.node())) stack.emplace_back(c, false);
      }
      continue;
    }
    Instr ins;
    ins.kind = cur.kind();
    switch (cur.kind()) {
      case NodeKind::Constant:
        ins.value = cur.number().value();
        break;
      case NodeKind::Symbol: {
        auto it = std::lower_bound(symbols_.begin(), symbols_.end(), cur.name());
        ins.symbol = static_cast<std::uint32_t>(it - symbols_.begin());
        break;
      }
      case NodeKind::Func:
        ins.func = cur.func();
        break;
      case NodeKind::Opaque:
        ins.opaque = cur.opaque().get();
        keep_alive_.push_back(cur);
        break;
      default:
        break;
    }
    for (const auto& c : cur.operands()) ins.args.push_back(slot.at(c.node()));
    slot.emplace(cur.node(), static_cast<std::uint32_t>(program_.size()));
    program_.push_back(std::move(ins));
  }
}

namespace {

double checked(double v) {
  if (!std::isfinite(v)) throw DomainError("overflow");
  return v;
}

double power(double b, double e) {
  if (b == 0.0 && e < 0.0) throw DomainError(e == -1.0 ? "division by zero" : "zero to negative power");
  if (b < 0.0 && std::floor(e) != e) throw DomainError("power");
  return checked(std::pow(b, e));
}

double func(FuncKind k, double x) {
  switch (k) {
    case FuncKind::Exp: return checked(std::exp(x));
    case FuncKind::Ln:
      if (x <= 0.0) throw DomainError("ln");
      return std::log(x);
    case FuncKind::Sin: return std::sin(x);
    case FuncKind::Cos: return std::cos(x);
    case FuncKind::Tan: return checked(std::tan(x));
    case FuncKind::Arcsin:
      if (std::fabs(x) > 1.0) throw DomainError("arcsin");
      return std::asin(x);
    case FuncKind::Arctan: return std::atan(x);
    case FuncKind::Sqrt:
      if (x < 0.0) throw DomainError("sqrt");
      return std::sqrt(x);
  }
  return x;
}

}  // namespace

double CompiledExpr::evaluate(std::span<const double> symbol_values) const {
  std::vector<double> reg(program_.size());
  for (std::size_t i = 0; i < program_.size(); ++i) {
    const Instr& ins = program_[i];
    double v = 0.0;
    switch (ins.kind) {
      case NodeKind::Constant: v = ins.value; break;
      case NodeKind::Symbol: v = symbol_values[ins.symbol]; break;
      case NodeKind::Sum:
        for (auto a : ins.args) v += reg[a];
        v = checked(v);
        break;
      case NodeKind::Product:
        v = 1.0;
        for (auto a : ins.args) v *= reg[a];
        v = checked(v);
        break;
      case NodeKind::Neg: v = -reg[ins.args[0]]; break;
      case NodeKind::Power: v = power(reg[ins.args[0]], reg[ins.args[1]]); break;
      case NodeKind::Func: v = func(ins.func, reg[ins.args[0]]); break;
      case NodeKind::Opaque: {
        std::vector<double> args;
        args.reserve(ins.args.size());
        for (auto a : ins.args) args.push_back(reg[a]);
        v = checked(ins.opaque->evaluate(args));
        break;
      }
    }
    reg[i] = v;
  }
  return reg.back();
}

double CompiledExpr::operator()(const Bindings& b) const {
  std::vector<double> vals;
  vals.reserve(symbols_.size());
  for (const auto& s : symbols_) vals.push_back(b.at(s));
  return evaluate(vals);
}

double eval(const Expr& e, const Bindings& b) { return CompiledExpr(e)(b); }

DomainSampler::DomainSampler(std::map<std::string, Interval> intervals, Interval fallback)
    : intervals_(std::move(intervals)), fallback_(fallback) {}

Interval DomainSampler::interval(const std::string& symbol) const {
  auto it = intervals_.find(symbol);
  return it == intervals_.end() ? fallback_ : it->second;
}

Bindings DomainSampler::sample(std::span<const std::string> symbols, std::mt19937_64& rng) const {
  Bindings b;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& s : symbols) {
    Interval iv = interval(s);
    b.assign(s, iv.lo + (iv.hi - iv.lo) * unit(rng));
  }
  return b;
}

void for_each_sample(std::span<const std::string> symbols, const DomainSampler& sampler,
                     std::size_t n, std::mt19937_64& rng,
                     const std::function<bool(const Bindings&)>& visit) {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  while (accepted < n) {
    Bindings b = sampler.sample(symbols, rng);
    try {
      if (!visit(b)) return;
      ++accepted;
    } catch (const DomainError&) {
      if (++rejected > 100 * n) {
        throw SamplingExhausted("sampling exhausted after " + std::to_string(rejected) +
                                " rejected points");
      }
    }
  }
}

std::vector<std::string> union_symbols(std::span<const Expr> exprs) {
  std::vector<std::string> out;
  for (const auto& e : exprs) {
    std::vector<std::string> merged;
    std::set_union(out.begin(), out.end(), e.free_symbols().begin(), e.free_symbols().end(),
                   std::back_inserter(merged));
    out.swap(merged);
  }
  return out;
}

EquivalenceReport compare_numeric(const Expr& e1, const Expr& e2, const DomainSampler& sampler,
                                  std::size_t n, double tol, std::mt19937_64& rng) {
  EquivalenceReport report;
  std::vector<Expr> both{e1, e2};
  auto symbols = union_symbols(both);
  CompiledExpr c1(e1);
  CompiledExpr c2(e2);
  for_each_sample(symbols, sampler, n, rng, [&](const Bindings& b) {
    double v1 = c1(b);
    double v2 = c2(b);
    double rel = std::fabs(v1 - v2) / (1.0 + std::max(std::fabs(v1), std::fabs(v2)));
    report.max_relative_error = std::max(report.max_relative_error, rel);
    if (rel > tol) {
      report.equivalent = false;
      report.witness = b;
      return false;
    }
    return true;
  });
  return report;
}

bool equivalent_numeric(const Expr& e1, const Expr& e2, const DomainSampler& sampler,
                        std::size_t n, double tol, std::mt19937_64& rng) {
  return compare_numeric(e1, e2, sampler, n, tol, rng).equivalent;
}

bool equivalent_numeric(const Expr& e1, const Expr& e2, const DomainSampler& sampler,
                        std::size_t n, double tol, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return equivalent_numeric(e1, e2, sampler, n, tol, rng);
}

}  // namespace diffinv
