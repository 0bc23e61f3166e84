#include "diffinv/problem.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "diffinv/error.hpp"
#include "diffinv/invdiff.hpp"
#include "diffinv/jet.hpp"
#include "diffinv/parse.hpp"
#include "diffinv/quadrature.hpp"

namespace diffinv {

namespace detail {
// Generated from specs/*.json at configure time.
extern const std::vector<std::pair<std::string, std::string_view>> kBuiltinSources;
}  // namespace detail

namespace {

using nlohmann::json;

Expr parse_field(const json& v, const std::string& what, const JetSpace& js) {
  if (!v.is_string()) throw ValidationError(what + ": expected an expression string");
  try {
    return js.canonicalize(parse(v.get<std::string>()));
  } catch (const Error& e) {
    throw ValidationError(what + ": " + e.what());
  }
}

std::vector<Expr> parse_list(const json& v, const std::string& what, const JetSpace& js) {
  std::vector<Expr> out;
  if (v.is_string()) {
    out.push_back(parse_field(v, what, js));
    return out;
  }
  if (!v.is_array()) throw ValidationError(what + ": expected a list of expression strings");
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_field(v[i], what + "[" + std::to_string(i) + "]", js));
  return out;
}

std::string symbol_name(const std::string& key, const JetSpace& js) {
  Expr e;
  try {
    e = js.canonicalize(parse(key));
  } catch (const Error&) {
    throw ValidationError("domain key '" + key + "' is not a symbol");
  }
  if (!e.is_symbol()) throw ValidationError("domain key '" + key + "' is not a symbol");
  return e.name();
}

std::map<std::string, Interval> parse_domains(const json& v, const JetSpace& js) {
  std::map<std::string, Interval> out;
  if (!v.is_object()) throw ValidationError("domains: expected an object");
  for (const auto& [key, range] : v.items()) {
    if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number()) {
      throw ValidationError("domains." + key + ": expected [lo, hi]");
    }
    Interval iv{range[0].get<double>(), range[1].get<double>()};
    if (!(iv.lo <= iv.hi)) throw ValidationError("domains." + key + ": lo > hi");
    out[symbol_name(key, js)] = iv;
  }
  return out;
}

std::vector<std::string> default_params(std::size_t k) {
  if (k == 1) return {"C"};
  std::vector<std::string> out;
  for (std::size_t q = 1; q <= k; ++q) out.push_back("C" + std::to_string(q));
  return out;
}

LevelSetParametrization parse_level_set(const json& v, const JetSpace& js) {
  if (!v.is_object() || !v.contains("variable")) throw ValidationError("level_set: expected {variable, ...}");
  LevelSetParametrization p;
  p.variable = symbol_name(v.at("variable").get<std::string>(), js);
  auto is_x = js.independent_index(p.variable).has_value();
  auto dep = js.dependent_coordinate(p.variable);
  if (!is_x && !(dep && order(dep->alpha) == 0)) {
    throw ValidationError("level_set.variable: '" + p.variable + "' is not an order-0 coordinate");
  }
  const std::size_t k = static_cast<std::size_t>(js.n() + js.m() - 1);
  if (v.contains("params")) {
    for (const auto& s : v.at("params")) p.params.push_back(s.get<std::string>());
    if (p.params.size() != k) throw ValidationError("level_set.params: expected " + std::to_string(k) + " names");
  } else {
    p.params = default_params(k);
  }
  if (v.contains("z")) p.z = v.at("z").get<std::string>();

  std::vector<std::string> xs, us;
  for (int d = 0; d < js.n(); ++d)
    if (js.x(d) != p.variable) xs.push_back(js.x(d));
  for (int j = 0; j < js.m(); ++j)
    if (js.u(j) != p.variable) us.push_back(js.u(j));
  auto take = [&](const char* key, const std::vector<std::string>& names) {
    if (!v.contains(key)) {
      if (!names.empty()) throw ValidationError(std::string("level_set.") + key + " missing");
      return;
    }
    auto exprs = parse_list(v.at(key), std::string("level_set.") + key, js);
    if (exprs.size() != names.size()) {
      throw ValidationError(std::string("level_set.") + key + ": expected " + std::to_string(names.size()) +
                            " expressions");
    }
    for (std::size_t i = 0; i < names.size(); ++i) p.solution[names[i]] = exprs[i];
  };
  if (v.contains("solution")) {
    for (const auto& [key, e] : v.at("solution").items()) {
      p.solution[symbol_name(key, js)] = parse_field(e, "level_set.solution." + key, js);
    }
  } else {
    take("X", xs);
    take("U", us);
  }
  for (const auto& s : xs)
    if (!p.solution.count(s)) throw ValidationError("level_set: no expression for " + s);
  for (const auto& s : us)
    if (!p.solution.count(s)) throw ValidationError("level_set: no expression for " + s);
  return p;
}

template <class T>
T number_or(const json& v, const char* key, T fallback) {
  if (!v.contains(key)) return fallback;
  if (!v.at(key).is_number()) throw ValidationError(std::string(key) + ": expected a number");
  return v.at(key).get<T>();
}

}  // namespace

DomainSampler ProblemSpec::sampler() const { return DomainSampler(domains); }

VectorField ProblemSpec::field() const {
  if (has_field()) return VectorField(n, m, xi, eta);
  if (invariants.empty() || !j) throw ValidationError(name + ": no field and nothing to reconstruct it from");
  std::mt19937_64 rng(seed.value_or(0));
  return reconstruct_field(invariants, *j, n, m, sampler(), rng);
}

UniversalInvariant ProblemSpec::universal_invariant(std::mt19937_64& rng) const {
  if (invariants.empty()) throw ValidationError(name + ": no invariants given");
  VectorField q = field();
  if (j) return UniversalInvariant(q, invariants, *j, level_set);
  if (!level_set) throw ValidationError(name + ": J needs a level-set parametrization");
  if (antiderivative) {
    Expr jj = J_symbolic(q, invariants, *level_set, *antiderivative, sampler(), 50, 1e-8, rng);
    return UniversalInvariant(q, invariants, jj, level_set);
  }
  if (quadrature_lower) {
    Expr jj = J_quadrature(q, invariants, *level_set, "F", *quadrature_lower);
    return UniversalInvariant(q, invariants, jj, level_set);
  }
  throw ValidationError(name + ": no J, antiderivative or quadrature given");
}

Expr ProblemSpec::j_on_level_set(const UniversalInvariant& ui) const {
  if (!level_set) throw ValidationError(name + ": no level-set parametrization");
  const auto& p = *level_set;
  if (ui.j.kind() == NodeKind::Opaque) {
    std::vector<Expr> args{Expr::symbol(p.z)};
    for (const auto& c : p.params) args.push_back(Expr::symbol(c));
    return apply_opaque(ui.j.opaque(), std::move(args));
  }
  if (antiderivative) return *antiderivative;
  return substitute(ui.j, p.on_level_set());
}

std::vector<Expr> ProblemSpec::resolve(const SolutionFamily& f, const Expr& j_bar) const {
  Substitution s;
  s["J"] = j_bar;
  if (level_set) {
    for (const auto& c : level_set->params) s["J_" + c] = diff(j_bar, c);
  }
  std::vector<Expr> out;
  for (const auto& c : f.components) out.push_back(substitute(c, s));
  return out;
}

DomainSampler ProblemSpec::family_sampler(const SolutionFamily& f) const {
  DomainSampler s = sampler();
  for (const auto& [k, v] : f.domains) s.set(k, v);
  return s;
}

ProblemSpec parse_problem(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("spec: expected a JSON object");
  try {
    ProblemSpec spec;
    spec.name = doc.value("name", std::string("problem"));
    if (!doc.contains("n") || !doc.contains("m")) throw ValidationError("spec: n and m are required");
    spec.n = doc.at("n").get<int>();
    spec.m = doc.at("m").get<int>();
    if (spec.n < 1 || spec.m < 1) throw ValidationError("spec: n and m must be positive");
    JetSpace js(spec.n, spec.m, 0);

    if (doc.contains("xi") || doc.contains("eta")) {
      if (!doc.contains("xi") || !doc.contains("eta")) throw ValidationError("spec: xi and eta go together");
      spec.xi = parse_list(doc.at("xi"), "xi", js);
      spec.eta = parse_list(doc.at("eta"), "eta", js);
      if (spec.xi.size() != static_cast<std::size_t>(spec.n)) throw ValidationError("xi: expected n expressions");
      if (spec.eta.size() != static_cast<std::size_t>(spec.m)) throw ValidationError("eta: expected m expressions");
    }
    if (doc.contains("invariants")) {
      spec.invariants = parse_list(doc.at("invariants"), "invariants", js);
      if (spec.invariants.size() != static_cast<std::size_t>(spec.n + spec.m - 1)) {
        throw ValidationError("invariants: expected m+n-1 = " + std::to_string(spec.n + spec.m - 1) +
                              " expressions");
      }
    }
    if (doc.contains("J")) spec.j = parse_field(doc.at("J"), "J", js);
    if (doc.contains("level_set")) spec.level_set = parse_level_set(doc.at("level_set"), js);
    if (doc.contains("antiderivative")) spec.antiderivative = parse_field(doc.at("antiderivative"), "antiderivative", js);
    if (doc.contains("J_quadrature")) spec.quadrature_lower = number_or(doc.at("J_quadrature"), "lower", 0.0);
    if (doc.contains("domains")) spec.domains = parse_domains(doc.at("domains"), js);
    if (doc.contains("seed")) spec.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("samples")) spec.samples = doc.at("samples").get<std::size_t>();
    if (doc.contains("tol")) spec.tol = doc.at("tol").get<double>();
    if (doc.contains("grid")) {
      const auto& g = doc.at("grid");
      spec.grid.z0 = number_or(g, "z0", spec.grid.z0);
      spec.grid.z1 = number_or(g, "z1", spec.grid.z1);
      spec.grid.points = number_or(g, "points", spec.grid.points);
      spec.grid.parameter_sets = number_or(g, "parameter_sets", spec.grid.parameter_sets);
    }
    if (doc.contains("families")) {
      for (const auto& f : doc.at("families")) {
        SolutionFamily fam;
        fam.label = f.value("label", std::string("family"));
        fam.components = parse_list(f.at("components"), "families." + fam.label, js);
        if (fam.components.size() != static_cast<std::size_t>(spec.n * spec.m)) {
          throw ValidationError("families." + fam.label + ": expected n*m components");
        }
        if (f.contains("constants"))
          for (const auto& c : f.at("constants")) fam.constants.push_back(c.get<std::string>());
        if (f.contains("domains")) fam.domains = parse_domains(f.at("domains"), js);
        fam.tol = number_or(f, "tol", fam.tol);
        spec.families.push_back(std::move(fam));
      }
    }
    if (doc.contains("reference")) {
      const auto& r = doc.at("reference");
      if (r.contains("first_order")) spec.reference.first_order = parse_list(r.at("first_order"), "reference.first_order", js);
      if (r.contains("first_order_reduced")) {
        spec.reference.first_order_reduced = parse_list(r.at("first_order_reduced"), "reference.first_order_reduced", js);
      }
      if (r.contains("system")) spec.reference.system = parse_list(r.at("system"), "reference.system", js);
    }
    if (spec.xi.empty() && (spec.invariants.empty() || !spec.j)) {
      throw ValidationError("spec: xi/eta are required unless invariants and J are given");
    }
    return spec;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("spec: ") + e.what());
  }
}

ProblemSpec load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_problem(ss.str());
}

const std::vector<std::string>& builtin_problem_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& [name, src] : detail::kBuiltinSources) out.push_back(name);
    return out;
  }();
  return names;
}

std::string_view builtin_problem_source(std::string_view name) {
  for (const auto& [n, src] : detail::kBuiltinSources)
    if (n == name) return src;
  throw ValidationError("unknown built-in problem '" + std::string(name) + "'");
}

ProblemSpec builtin_problem(std::string_view name) { return parse_problem(builtin_problem_source(name)); }

}  // namespace diffinv
