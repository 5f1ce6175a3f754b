#include <chrono>
#include <cmath>

#include <Eigen/Core>

#include "bmp/errors.hpp"
#include "bmp/harness.hpp"
#include "bmp/linear_solver.hpp"
#include "bmp/nonlinear_solver.hpp"
#include "bmp/particle_engine.hpp"
#include "bmp/superprocess.hpp"

#ifndef BMP_VERSION
#define BMP_VERSION "0.0.0"
#endif

namespace bmp::harness {

namespace {

Table table_of(const SemigroupTable& s, std::size_t stride) {
  Table t;
  t.name = to_string(s.kind);
  const bool periodic = s.domain.is_periodic();
  t.header = {"t", periodic ? "x" : "state_index", "value"};
  for (std::size_t k = 0; k < s.size(); k += stride) {
    for (std::size_t j = 0; j < s.domain.size; ++j) {
      nlohmann::json where = periodic ? nlohmann::json(s.domain.node(j)) : nlohmann::json(j);
      t.rows.push_back({s.times[static_cast<Eigen::Index>(k)], where,
                        s.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k))});
    }
  }
  if ((s.size() - 1) % stride != 0) {
    const std::size_t k = s.size() - 1;
    for (std::size_t j = 0; j < s.domain.size; ++j) {
      nlohmann::json where = periodic ? nlohmann::json(s.domain.node(j)) : nlohmann::json(j);
      t.rows.push_back({s.times[static_cast<Eigen::Index>(k)], where,
                        s.values(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k))});
    }
  }
  return t;
}

nlohmann::json report_json(const SolveReport& r) {
  return {{"iterations", r.iterations},
          {"converged", r.converged},
          {"final_residual", r.final_residual},
          {"warnings", r.warnings}};
}

nlohmann::json field_json(const ScalarField& f) {
  std::vector<double> v(f.values().data(), f.values().data() + f.values().size());
  return {{"domain", f.domain().is_periodic() ? "periodic" : "discrete"},
          {"grid", f.domain().size},
          {"length", f.domain().length},
          {"values", v}};
}

Table estimates_table(const std::vector<std::pair<std::string, Estimate>>& estimates) {
  Table t;
  t.name = "estimates";
  t.header = {"name", "mean", "stderr", "replicas", "capped"};
  for (const auto& [name, e] : estimates) t.rows.push_back({name, e.mean, e.std_error, e.replicas, e.capped});
  return t;
}

void require_seed(const ExperimentSpec& spec) {
  if (!spec.monte_carlo.seed_given)
    throw ValidationError("config: monte_carlo.master_seed (or --seed) is required for Monte Carlo runs");
}

EngineOptions engine_options(const ExperimentSpec& spec) {
  EngineOptions o;
  o.cap = spec.monte_carlo.cap;
  o.workers = spec.monte_carlo.workers;
  return o;
}

void note_solve(ResultBundle& b, const SemigroupTable& s, std::size_t stride) {
  b.tables.push_back(table_of(s, stride));
  b.summary["solve"] = report_json(s.report);
  b.summary["final"] = field_json(s.final());
  b.metadata["residuals"] = s.report.residuals;
  b.metadata["bound_trace"] = s.report.bound_trace;
}

// Deterministic value the Monte Carlo estimate targets.
double functional_reference(const ExperimentSpec& spec) {
  const ExperimentBlock& e = spec.experiment;
  const BaseModel& m = spec.base();
  const OffspringLaw& law = spec.offspring();
  if (e.t == 0.0) {
    switch (e.functional) {
      case FunctionalKind::exponential:
        return eval_exponential(e.f, e.initial);
      case FunctionalKind::linear:
        return eval_linear(e.f, e.initial);
      case FunctionalKind::multiplicative:
        return eval_multiplicative(spec.phi(), e.initial);
    }
  }
  SolverMesh mesh = spec.mesh;
  mesh.t_max = e.t;
  switch (e.functional) {
    case FunctionalKind::exponential:
      return std::exp(-eval_linear(cumulant_V(m, law, e.f, mesh).final(), e.initial));
    case FunctionalKind::linear:
      return eval_linear(moment_operator(m, law, e.f, e.t, mesh), e.initial);
    case FunctionalKind::multiplicative:
      return eval_multiplicative(solve_H(m, law, spec.phi(), mesh, spec.scheme).final(), e.initial);
  }
  return 0.0;
}

}  // namespace

Command parse_command(const std::string& name) {
  if (name == "solve-h") return Command::solve_h;
  if (name == "solve-q") return Command::solve_q;
  if (name == "cumulant") return Command::cumulant;
  if (name == "simulate") return Command::simulate;
  if (name == "verify") return Command::verify;
  if (name == "compose") return Command::compose;
  throw ValidationError("unknown command '" + name + "'");
}

const char* to_string(Command command) {
  switch (command) {
    case Command::solve_h:
      return "solve-h";
    case Command::solve_q:
      return "solve-q";
    case Command::cumulant:
      return "cumulant";
    case Command::simulate:
      return "simulate";
    case Command::verify:
      return "verify";
    case Command::compose:
      return "compose";
  }
  return "unknown";
}

ResultBundle run_experiment(const ExperimentSpec& spec, Command command) {
  const auto start = std::chrono::steady_clock::now();
  ResultBundle b;
  b.command = to_string(command);
  const BaseModel& m = spec.base();
  const ExperimentBlock& e = spec.experiment;
  const std::size_t stride = spec.outputs.stride;

  switch (command) {
    case Command::solve_h: {
      const SemigroupTable h = solve_H(m, spec.offspring(), spec.phi(), spec.mesh, spec.scheme);
      note_solve(b, h, stride);
      const MechanismConstants k = constants(spec.offspring(), m.killing());
      b.summary["beta0"] = k.beta0;
      b.summary["beta1"] = k.beta1;
      b.summary["markovian"] = spec.offspring().markovian();
      break;
    }
    case Command::solve_q: {
      const SemigroupTable q = solve_Q_picard(m, spec.offspring(), e.f, spec.mesh);
      note_solve(b, q, stride);
      const PerturbationSpec p = make_perturbation(m, spec.offspring());
      b.summary["beta1"] = p.constants.beta1;
      b.summary["hypotheses_hold"] = p.hypotheses_hold();
      b.summary["moment"] =
          field_json(ScalarField(e.f.domain(), std::exp(p.constants.beta1 * spec.mesh.t_max) * q.final().values()));
      break;
    }
    case Command::cumulant: {
      if (spec.mechanism) {
        note_solve(b, solve_cumulant_N(m, *spec.mechanism, e.f, spec.mesh), stride);
      } else {
        note_solve(b, cumulant_V(m, spec.offspring(), e.f, spec.mesh), stride);
      }
      break;
    }
    case Command::simulate: {
      require_seed(spec);
      const SeededStream stream(spec.monte_carlo.master_seed);
      if (!spec.law && spec.mechanism) {
        if (e.measures.empty()) throw ValidationError("config: experiment.initial or measures is required");
        MeasureState mu;
        for (const MeasureState& s : e.measures) mu.atoms.insert(mu.atoms.end(), s.atoms.begin(), s.atoms.end());
        const SuperprocessRun run = estimate_superprocess(m, *spec.mechanism, mu, e.t, e.f, e.n_scale,
                                                          spec.monte_carlo.replicas, stream, engine_options(spec));
        b.tables.push_back(estimates_table({{"laplace", run.laplace}, {"mass", run.mass}}));
        b.summary["laplace"] = to_json(run.laplace);
        b.summary["mass"] = to_json(run.mass);
        if (e.t > 0.0) {
          SolverMesh mesh = spec.mesh;
          mesh.t_max = e.t;
          b.summary["reference"] = std::exp(-mu.integrate(solve_cumulant_N(m, *spec.mechanism, e.f, mesh).final()));
        }
        break;
      }
      const ScalarField f = e.functional == FunctionalKind::multiplicative ? spec.phi() : e.f;
      const FunctionalRun run = estimate_functional(m, spec.offspring(), e.initial, e.t, f, e.functional,
                                                    spec.monte_carlo.replicas, stream, engine_options(spec));
      Table replicas;
      replicas.name = "replicas";
      replicas.header = {"replica", "value", "terminal_size", "capped"};
      for (std::size_t r = 0; r < run.records.size(); ++r)
        replicas.rows.push_back({r, run.records[r].value, run.records[r].terminal_size, run.records[r].capped ? 1 : 0});
      b.tables.push_back(std::move(replicas));
      b.tables.push_back(estimates_table({{to_string(e.functional), run.estimate}}));
      b.summary["estimate"] = to_json(run.estimate);
      b.summary["functional"] = to_string(e.functional);
      b.summary["reference"] = functional_reference(spec);
      break;
    }
    case Command::compose: {
      require_seed(spec);
      const CompositionRun run =
          compose_discrete_over_measure(m, spec.phi_mechanism(), spec.offspring(), e.composition_rate, e.measures, e.t,
                                        e.f, e.n_scale, spec.monte_carlo.replicas,
                                        SeededStream(spec.monte_carlo.master_seed), engine_options(spec));
      b.tables.push_back(
          estimates_table({{"laplace", run.laplace}, {"mass", run.mass}, {"particles", run.particles}}));
      b.summary["laplace"] = to_json(run.laplace);
      b.summary["mass"] = to_json(run.mass);
      b.summary["particles"] = to_json(run.particles);
      b.summary["hypothesis_holds"] = run.hypothesis_holds;
      b.summary["beta_ceiling"] = run.beta_ceiling;
      break;
    }
    case Command::verify: {
      std::vector<std::string> checks = spec.checks;
      if (checks.empty()) throw ValidationError("verify: no checks requested");
      ResultBundle v = verify_suite(spec, checks);
      b.tables = std::move(v.tables);
      b.summary = std::move(v.summary);
      break;
    }
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  b.metadata["command"] = b.command;
  b.metadata["version"] = BMP_VERSION;
  b.metadata["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION);
  b.metadata["compiler"] = __VERSION__;
  b.metadata["runtime_seconds"] = seconds;
  b.metadata["workers"] = spec.monte_carlo.workers;
  if (spec.monte_carlo.seed_given) b.metadata["master_seed"] = spec.monte_carlo.master_seed;
  return b;
}

}  // namespace bmp::harness
