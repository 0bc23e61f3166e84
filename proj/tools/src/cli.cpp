#include "cli.hpp"

#include <functional>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "commands.hpp"
#include "diffinv/error.hpp"

namespace diffinv::cli {

namespace {

constexpr int kUsage = 64;

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Differential invariants, quadratures and Riccati-type systems of one-parameter groups", "diffinv"};
  app.require_subcommand(1);
  app.fallthrough();

  std::size_t samples = 200;
  double tol = 1e-8;
  std::uint64_t seed = 0;
  std::string format = "text";
  std::vector<std::string> domains;
  auto* samples_opt = app.add_option("--samples", samples, "Sample points per numeric check")->check(CLI::PositiveNumber);
  auto* tol_opt = app.add_option("--tol", tol, "Tolerance of numeric checks")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--format", format, "Report format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--domain", domains, "Sampling interval SYM=LO:HI (repeatable)");

  std::string spec_arg;
  int order = 1;
  std::function<Outcome(Context&)> action;
  std::function<Outcome(const RunOptions&)> direct;

  auto spec_command = [&](CLI::App* parent, const std::string& name, const std::string& help,
                          std::function<Outcome(Context&)> f) {
    auto* sub = parent->add_subcommand(name, help);
    sub->add_option("spec", spec_arg, "Spec file or built-in problem name")->required();
    sub->callback([&action, f] { action = f; });
    return sub;
  };

  spec_command(&app, "check", "Validate a problem and its universal invariant", cmd_check);
  auto* prolong_cmd = spec_command(&app, "prolong", "Print prolonged coefficients",
                                   [&order](Context& c) { return cmd_prolong(c, order); });
  prolong_cmd->add_option("--order", order, "Prolongation order")->check(CLI::NonNegativeNumber);
  auto* inv_cmd = spec_command(&app, "invariants", "Universal differential invariant up to an order",
                               [&order](Context& c) { return cmd_invariants(c, order); });
  inv_cmd->add_option("--order", order, "Differential order")->check(CLI::NonNegativeNumber);
  spec_command(&app, "first-order", "First-order differential invariants", cmd_first_order);
  spec_command(&app, "quadrature", "J from an antiderivative and by flow times", cmd_quadrature);
  auto* riccati = app.add_subcommand("riccati", "Riccati-type system of the first derivatives");
  riccati->require_subcommand(1);
  spec_command(riccati, "build", "Build the system", cmd_riccati_build);
  spec_command(riccati, "solve", "General solution in closed form", cmd_riccati_solve);
  spec_command(riccati, "verify", "Residual and integration check of solutions", cmd_riccati_verify);
  spec_command(&app, "reconstruct", "Recover the field from its invariants and J", cmd_reconstruct);
  auto* examples = app.add_subcommand("examples", "Built-in worked examples");
  examples->require_subcommand(1);
  auto* run = examples->add_subcommand("run", "Run examples end to end");
  std::string which = "all";
  run->add_option("which", which, "1..5 or all")->check(CLI::IsMember({"1", "2", "3", "4", "5", "all"}));
  run->callback([&] { direct = [&which](const RunOptions& o) { return cmd_examples(which, o); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kUsage;
  }

  RunOptions options;
  if (samples_opt->count()) options.samples = samples;
  if (tol_opt->count()) options.tol = tol;
  if (seed_opt->count()) options.seed = seed;
  try {
    for (const auto& d : domains) options.domains.push_back(parse_domain_flag(d));
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  auto emit = [&](const Outcome& o) {
    out << (format == "json" ? render_json(o.report) : render_text(o.report));
    return o.code;
  };
  try {
    if (direct) return emit(direct(options));
    Context ctx(resolve_spec(spec_arg), options);
    return emit(action(ctx));
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const SyntaxError& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const UnknownFunction& e) {
    err << "invalid input: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    Report r;
    r["error"] = e.what();
    r["ok"] = false;
    out << (format == "json" ? render_json(r) : render_text(r));
    err << "failed: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace diffinv::cli
