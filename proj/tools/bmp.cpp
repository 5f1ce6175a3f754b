#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bmp/errors.hpp"
#include "bmp/harness.hpp"

namespace {

enum Exit { ok = 0, validation = 2, nonconvergence = 3, invalid_estimate = 4, verify_failed = 5, io = 6 };

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;
  std::optional<unsigned> workers;
  std::vector<std::string> checks;
};

int execute(bmp::harness::Command command, const Options& o) {
  using namespace bmp::harness;
  ExperimentSpec spec = load_spec(o.config);
  if (o.seed) {
    spec.monte_carlo.master_seed = *o.seed;
    spec.monte_carlo.seed_given = true;
  }
  if (o.workers) {
    if (*o.workers == 0) throw bmp::ValidationError("--workers must be at least 1");
    spec.monte_carlo.workers = *o.workers;
  }
  if (!o.checks.empty()) spec.checks = o.checks;

  const ResultBundle bundle = run_experiment(spec, command);

  const std::string dir = o.out.empty() ? spec.outputs.directory : o.out;
  std::vector<std::string> formats = spec.outputs.formats;
  if (!o.format.empty()) formats = {o.format};
  if (!dir.empty())
    for (const std::string& f : formats) export_results(bundle, dir, f);

  if (command == Command::verify) {
    std::cout << bundle.summary["text"].get<std::string>();
    return bundle.summary["passed"].get<bool>() ? ok : verify_failed;
  }
  std::cout << canonical_json(bundle.summary);
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Branching Markov processes: solvers, simulation and verification"};
  app.require_subcommand(1);
  Options o;

  const std::vector<std::pair<std::string, std::string>> commands{
      {"solve-h", "solve the nonlinear equation for H_t phi"},
      {"solve-q", "solve the linear first-moment semigroup Q_t f"},
      {"cumulant", "cumulant V_t f (offspring law) or N_t f (mechanism)"},
      {"simulate", "Monte Carlo estimate of a functional of mu_t"},
      {"verify", "run identity checks; exit 5 on any FAIL"},
      {"compose", "discrete branching over superprocess-valued particles"}};

  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", o.config, "experiment file (YAML or JSON)")->required();
    sub->add_option("--seed", o.seed, "master seed, overrides the config");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--workers", o.workers, "worker threads");
    if (name == "verify")
      sub->add_option("--checks", o.checks, "subset of checks")
          ->check(CLI::IsMember(bmp::harness::known_checks()))
          ->delimiter(',');
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ok : validation;
  }

  try {
    const CLI::App* chosen = app.get_subcommands().front();
    return execute(bmp::harness::parse_command(chosen->get_name()), o);
  } catch (const bmp::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return validation;
  } catch (const bmp::DomainError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return validation;
  } catch (const bmp::ConvergenceError& e) {
    std::cerr << "non-convergence: " << e.what() << "\n";
    return nonconvergence;
  } catch (const bmp::InvalidEstimate& e) {
    std::cerr << "invalid estimate: " << e.what() << "\n";
    return invalid_estimate;
  } catch (const bmp::IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return io;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return validation;
  } catch (const std::logic_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
