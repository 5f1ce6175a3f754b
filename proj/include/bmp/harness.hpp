#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "bmp/base_process.hpp"
#include "bmp/branching_mechanism.hpp"
#include "bmp/config_space.hpp"
#include "bmp/nonlinear_solver.hpp"
#include "bmp/particle_engine.hpp"
#include "bmp/semigroup_table.hpp"
#include "bmp/superprocess.hpp"

namespace bmp::harness {

struct MonteCarloSpec {
  std::size_t replicas = 10000;
  std::size_t cap = 1'000'000;
  std::uint64_t master_seed = 0;
  bool seed_given = false;
  unsigned workers = 1;
};

struct ExperimentBlock {
  double t = 1.0;
  Configuration initial;
  Configuration nu;
  ScalarField f;
  std::optional<ScalarField> phi;  ///< defaults to e^{-f}
  FunctionalKind functional = FunctionalKind::exponential;
  std::size_t n_scale = 200;
  double composition_rate = 1.0;
  std::vector<MeasureState> measures;  ///< defaults to unit point masses at `initial`
};

struct Tolerances {
  double quadrature = 1e-5;
  double sigmas = 3.0;
  double iterate_slack = 1e-6;
  double invariant = 1e-3;
  double probe_dt = 1e-3;
  double gradient = 5e-3;
  double composition_relative = 0.10;
};

struct OutputSpec {
  std::string directory;
  std::vector<std::string> formats{"csv"};
  std::size_t stride = 1;  ///< keep every stride-th mesh time in solver tables
};

/// A fully validated experiment description.
struct ExperimentSpec {
  std::optional<BaseModel> model;
  std::optional<OffspringLaw> law;
  std::optional<MechanismPhi> mechanism;
  SolverMesh mesh;
  PicardScheme scheme = PicardScheme::automatic;
  MonteCarloSpec monte_carlo;
  ExperimentBlock experiment;
  Tolerances tolerances;
  OutputSpec outputs;
  std::vector<std::string> checks;

  const BaseModel& base() const;
  const OffspringLaw& offspring() const;
  const MechanismPhi& phi_mechanism() const;
  ScalarField phi() const;
};

/// Parses YAML text (JSON is accepted as well). Throws ValidationError.
ExperimentSpec parse_spec(const std::string& text);
/// Throws IoError when the file cannot be read.
ExperimentSpec load_spec(const std::filesystem::path& path);

struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<nlohmann::json>> rows;
};

struct ResultBundle {
  std::string command;
  std::vector<Table> tables;
  nlohmann::json summary = nlohmann::json::object();
  nlohmann::json metadata = nlohmann::json::object();  ///< seed, versions, runtimes, residuals
};

enum class Command { solve_h, solve_q, cumulant, simulate, verify, compose };

Command parse_command(const std::string& name);
const char* to_string(Command command);

ResultBundle run_experiment(const ExperimentSpec& spec, Command command);

inline const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"mass",      "iterate_bound", "laplace",     "moment",
                                              "branching", "extinction",    "cumulant",    "composition",
                                              "gradient",  "superprocess"};
  return names;
}

struct CheckResult {
  std::string name;
  std::string identity;  ///< the identity being checked, in words
  bool passed = false;
  double statistic = 0.0;
  double tolerance = 0.0;
  double reference = 0.0;
  std::string detail;
};

std::vector<CheckResult> run_checks(const ExperimentSpec& spec, const std::vector<std::string>& checks);
/// Bundle with summary.checks, summary.passed and a "checks" table.
ResultBundle verify_suite(const ExperimentSpec& spec, const std::vector<std::string>& checks);
std::string render_text(const std::vector<CheckResult>& results);

/// Shortest round-trip decimal text of x ('.' separator).
std::string format_number(double x);
std::string to_csv(const Table& table);
/// Canonical JSON: sorted keys, two-space indent, trailing newline.
std::string canonical_json(const nlohmann::json& value);
nlohmann::json bundle_json(const ResultBundle& bundle);

/// Writes <name>.csv per table plus summary.json (csv) or bundle.json (json),
/// and metadata.json in both cases. Throws IoError.
std::vector<std::filesystem::path> export_results(const ResultBundle& bundle, const std::filesystem::path& dir,
                                                  const std::string& format);

nlohmann::json to_json(const Estimate& e);

}  // namespace bmp::harness
