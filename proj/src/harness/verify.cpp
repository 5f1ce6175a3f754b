#include <algorithm>
#include <cmath>
#include <sstream>

#include "bmp/errors.hpp"
#include "bmp/harness.hpp"
#include "bmp/linear_solver.hpp"
#include "bmp/nonlinear_solver.hpp"
#include "bmp/particle_engine.hpp"
#include "bmp/superprocess.hpp"

namespace bmp::harness {

namespace {

SeededStream check_stream(const ExperimentSpec& spec, const std::string& name) {
  if (!spec.monte_carlo.seed_given)
    throw ValidationError("config: monte_carlo.master_seed (or --seed) is required for check '" + name + "'");
  const auto& names = known_checks();
  const auto index = static_cast<std::uint64_t>(std::find(names.begin(), names.end(), name) - names.begin());
  return SeededStream(spec.monte_carlo.master_seed).derive(index);
}

EngineOptions engine(const ExperimentSpec& spec) {
  EngineOptions o;
  o.cap = spec.monte_carlo.cap;
  o.workers = spec.monte_carlo.workers;
  return o;
}

SolverMesh mesh_at(const ExperimentSpec& spec, double t) {
  SolverMesh m = spec.mesh;
  m.t_max = t;
  return m;
}

double horizon(const ExperimentSpec& spec) {
  if (!(spec.experiment.t > 0.0)) throw ValidationError("verify: experiment.t must be positive");
  return spec.experiment.t;
}

const Configuration& initial(const ExperimentSpec& spec) {
  if (spec.experiment.initial.empty()) throw ValidationError("verify: experiment.initial must be nonempty");
  return spec.experiment.initial;
}

CheckResult named(std::string name, std::string identity) {
  CheckResult r;
  r.name = std::move(name);
  r.identity = std::move(identity);
  return r;
}

bool law_is_constant(const OffspringLaw& law) {
  const Eigen::MatrixXd& q = law.probabilities();
  for (Eigen::Index r = 1; r < q.rows(); ++r)
    if (q.row(r) != q.row(0)) return false;
  return true;
}

CheckResult mass(const ExperimentSpec& spec) {
  const OffspringLaw& law = spec.offspring();
  if (!law.markovian()) throw ValidationError("verify mass: requires a Markovian offspring law");
  const SemigroupTable h =
      solve_H(spec.base(), law, ScalarField::constant(spec.base().domain(), 1.0), spec.mesh, spec.scheme);
  CheckResult r = named("mass", "H_t 1 = 1 for a Markovian law");
  r.statistic = (h.values.array() - 1.0).abs().maxCoeff();
  r.tolerance = spec.tolerances.quadrature;
  r.reference = 1.0;
  r.passed = r.statistic <= r.tolerance;
  r.detail = "max over mesh of |H_t 1 - 1|";
  return r;
}

CheckResult iterate_bound(const ExperimentSpec& spec) {
  const BaseModel& m = spec.base();
  const OffspringLaw& law = spec.offspring();
  const ScalarField phi = spec.phi();
  const double t = spec.mesh.t_max;
  const double beta0t = constants(law, m.killing()).beta0 * t;
  const bool zero_offspring = (law.probabilities().col(0).array() > 0.0).any();
  const double norm = zero_offspring ? 1.0 : phi.sup_norm();
  SemigroupTable it = initial_iterate(m, law, phi, spec.mesh, PicardScheme::plain);
  CheckResult r = named("iterate_bound", "successive Picard iterates differ by at most (beta0 t)^n / n! |phi|");
  r.statistic = -1e300;
  std::ostringstream detail;
  for (std::size_t n = 0; n <= 10; ++n) {
    it = picard_step(m, law, it, phi);
    const double bound = power_over_factorial(beta0t, n) * norm;
    r.statistic = std::max(r.statistic, it.report.final_residual - bound);
    detail << (n ? " " : "") << format_number(it.report.final_residual);
  }
  r.tolerance = spec.tolerances.iterate_slack;
  r.reference = 0.0;
  r.passed = r.statistic <= r.tolerance;
  r.detail = "max_n (gap_n - bound_n); gaps " + detail.str();
  return r;
}

CheckResult laplace(const ExperimentSpec& spec) {
  const double t = horizon(spec);
  const ExperimentBlock& e = spec.experiment;
  const Estimate est = estimate_functional(spec.base(), spec.offspring(), initial(spec), t, e.f,
                                           FunctionalKind::exponential, spec.monte_carlo.replicas,
                                           check_stream(spec, "laplace"), engine(spec))
                           .estimate;
  const ScalarField v = cumulant_V(spec.base(), spec.offspring(), e.f, mesh_at(spec, t)).final();
  CheckResult r = named("laplace", "E exp(-<mu_t, f>) = exp(-<mu_0, V_t f>)");
  r.reference = std::exp(-eval_linear(v, initial(spec)));
  r.statistic = std::abs(est.mean - r.reference);
  r.tolerance = spec.tolerances.sigmas * est.std_error;
  r.passed = est.valid() && r.statistic <= r.tolerance;
  r.detail = "mc mean " + format_number(est.mean) + ", stderr " + format_number(est.std_error);
  return r;
}

CheckResult moment(const ExperimentSpec& spec) {
  const double t = horizon(spec);
  const BaseModel& m = spec.base();
  const OffspringLaw& law = spec.offspring();
  const ExperimentBlock& e = spec.experiment;
  const SeededStream stream = check_stream(spec, "moment");
  const Estimate est = estimate_functional(m, law, initial(spec), t, e.f, FunctionalKind::linear,
                                           spec.monte_carlo.replicas, stream.derive(0), engine(spec))
                           .estimate;
  const double beta1 = constants(law, m.killing()).beta1;
  const ScalarField q = solve_Q_picard(m, law, e.f, mesh_at(spec, t)).final();
  const double scale = std::exp(-beta1 * t);
  CheckResult r = named("moment", "exp(-beta1 t) E <mu_t, f> = <mu_0, Q_t f>");
  r.reference = eval_linear(q, initial(spec));
  r.statistic = std::abs(scale * est.mean - r.reference);
  r.tolerance = spec.tolerances.sigmas * scale * est.std_error;
  r.passed = est.valid() && r.statistic <= r.tolerance;
  r.detail = "mc mean " + format_number(est.mean) + ", stderr " + format_number(est.std_error);

  const MechanismConstants k = constants(law, m.killing());
  if (k.constant_killing && !law.displaced()) {
    std::vector<Estimate> fk = solve_Q_feynman_kac(m, law, e.f, t, spec.monte_carlo.replicas, stream.derive(1),
                                                   spec.monte_carlo.workers);
    double worst = 0.0;
    bool agree = true;
    for (std::size_t s = 0; s < fk.size(); ++s) {
      const double gap = std::abs(fk[s].mean - q[s]);
      worst = std::max(worst, gap);
      agree = agree && gap <= spec.tolerances.quadrature + spec.tolerances.sigmas * fk[s].std_error;
    }
    r.passed = r.passed && agree;
    r.detail += "; Feynman-Kac vs Picard max gap " + format_number(worst) + (agree ? " (agree)" : " (disagree)");
  }
  return r;
}

CheckResult branching(const ExperimentSpec& spec) {
  const double t = horizon(spec);
  const BranchingReport b =
      verify_branching_property(spec.base(), spec.offspring(), initial(spec), spec.experiment.nu, t,
                                spec.experiment.f, spec.monte_carlo.replicas, check_stream(spec, "branching"),
                                engine(spec));
  CheckResult r = named("branching", "H_t e_f(mu + nu) = H_t e_f(mu) H_t e_f(nu)");
  r.statistic = std::abs(b.z);
  r.tolerance = spec.tolerances.sigmas;
  r.reference = 0.0;
  r.passed = b.joint.valid() && b.left.valid() && b.right.valid() && r.statistic <= r.tolerance;
  r.detail = "log gap " + format_number(b.log_gap) + ", stderr " + format_number(b.std_error);
  return r;
}

CheckResult extinction(const ExperimentSpec& spec) {
  const double t = horizon(spec);
  const BaseModel& m = spec.base();
  const OffspringLaw& law = spec.offspring();
  const ScalarField zero = ScalarField::constant(m.domain(), 0.0);
  const Estimate est = estimate_functional(m, law, initial(spec), t, zero, FunctionalKind::multiplicative,
                                           spec.monte_carlo.replicas, check_stream(spec, "extinction"), engine(spec))
                           .estimate;
  const ScalarField h = solve_H(m, law, zero, mesh_at(spec, t), spec.scheme).final();
  CheckResult r = named("extinction", "P(mu_t = 0) = prod over mu_0 of H_t 0; the extinction fixed point is invariant");
  r.reference = eval_multiplicative(h, initial(spec));
  r.statistic = std::abs(est.mean - r.reference);
  r.tolerance = spec.tolerances.sigmas * est.std_error;
  r.passed = est.valid() && r.statistic <= r.tolerance;
  r.detail = "mc mean " + format_number(est.mean) + ", stderr " + format_number(est.std_error);
  if (law_is_constant(law)) {
    const Eigen::VectorXd q = law.probabilities().row(0).transpose();
    auto g = [&](double v) {
      double s = 0.0;
      for (Eigen::Index k = q.size(); k-- > 0;) s = s * v + q[k];
      return s;
    };
    double v = 0.0;
    for (int i = 0; i < 1'000'000; ++i) {
      const double next = g(v);
      if (std::abs(next - v) < 1e-16) break;
      v = next;
    }
    const ScalarField fixed = ScalarField::constant(m.domain(), v);
    const double residual = invariant_residual(m, law, fixed, spec.tolerances.probe_dt).sup_norm();
    const bool ok = residual <= spec.tolerances.invariant;
    r.passed = r.passed && ok;
    r.detail += "; fixed point " + format_number(v) + ", invariant residual " + format_number(residual) +
                (ok ? " (ok)" : " (too large)");
  }
  return r;
}

// Independent oracle: RK4 on v' = L v + Φ(v) with the discrete generator L.
Eigen::VectorXd cumulant_rk4(const BaseModel& m, const MechanismPhi& phi, const Eigen::VectorXd& f, double t) {
  const Eigen::MatrixXd l = m.generator();
  const double rate = l.size() ? l.cwiseAbs().rowwise().sum().maxCoeff() : 0.0;
  const double step = std::min(1e-4, rate > 0.0 ? 1.0 / rate : 1e-4);
  const auto n = static_cast<std::size_t>(std::ceil(t / step));
  const double h = t / static_cast<double>(n);
  auto rhs = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return l * v + v.unaryExpr([&](double x) { return phi(x); });
  };
  Eigen::VectorXd v = f;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd k1 = rhs(v);
    const Eigen::VectorXd k2 = rhs(v + 0.5 * h * k1);
    const Eigen::VectorXd k3 = rhs(v + 0.5 * h * k2);
    const Eigen::VectorXd k4 = rhs(v + h * k3);
    v += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return v;
}

CheckResult cumulant(const ExperimentSpec& spec) {
  const double t = horizon(spec);
  const BaseModel& m = spec.base();
  const MechanismPhi& phi = spec.phi_mechanism();
  const ScalarField n = solve_cumulant_N(m, phi, spec.experiment.f, mesh_at(spec, t)).final();
  const Eigen::VectorXd oracle = cumulant_rk4(m, phi, spec.experiment.f.values(), t);
  CheckResult r = named("cumulant", "N_t f = P_t f + int_0^t P_s Phi(N_{t-s} f) ds agrees with v' = L v + Phi(v)");
  r.statistic = (n.values() - oracle).cwiseAbs().maxCoeff();
  r.tolerance = spec.tolerances.quadrature;
  r.reference = oracle.cwiseAbs().maxCoeff();
  r.passed = r.statistic <= r.tolerance;
  r.detail = "sup |Picard - RK4|";
  return r;
}

CheckResult composition(const ExperimentSpec& spec) {
  const double t = horizon(spec);
  const ExperimentBlock& e = spec.experiment;
  const MechanismPhi& phi = spec.phi_mechanism();
  const OffspringLaw& law = spec.offspring();
  const CompositionRun run =
      compose_discrete_over_measure(spec.base(), phi, law, e.composition_rate, e.measures, t, e.f, e.n_scale,
                                    spec.monte_carlo.replicas, check_stream(spec, "composition"), engine(spec));
  double mass0 = 0.0;
  for (const MeasureState& s : e.measures) mass0 += s.total_mass();
  const double q_o = law.mean_offspring()[0];
  CheckResult r = named("composition", "E total mass = exp((q_o - 1) c t - b t) times the initial mass");
  r.reference = mass0 * std::exp((q_o - 1.0) * e.composition_rate * t - phi.b * t);
  r.statistic = r.reference > 0.0 ? std::abs(run.mass.mean - r.reference) / r.reference : run.mass.mean;
  r.tolerance = spec.tolerances.composition_relative;
  r.passed = run.mass.valid() && r.statistic <= r.tolerance;
  r.detail = "mc mean mass " + format_number(run.mass.mean) + ", stderr " + format_number(run.mass.std_error) +
             (run.hypothesis_holds ? "; hypothesis holds" : "; hypothesis fails");
  return r;
}

CheckResult gradient(const ExperimentSpec& spec) {
  const double t = horizon(spec);
  const BaseModel& m = spec.base();
  const OffspringLaw& law = spec.offspring();
  const ScalarField picard = cumulant_V(m, law, spec.experiment.f, mesh_at(spec, t)).final();
  const ScalarField lines = solve_cumulant_gradient_form(m, law, spec.experiment.f, t, spec.mesh.dt);
  CheckResult r = named("gradient", "V_t f solves dV/dt = D Lap V - D |grad V|^2 + c (1 - sum_k q_k e^{(1-k) V})");
  r.statistic = (picard.values() - lines.values()).cwiseAbs().maxCoeff();
  r.tolerance = spec.tolerances.gradient;
  r.reference = lines.sup_norm();
  r.passed = r.statistic <= r.tolerance;
  r.detail = "sup |Picard - method of lines|";
  return r;
}

CheckResult superprocess(const ExperimentSpec& spec) {
  const double t = horizon(spec);
  const ExperimentBlock& e = spec.experiment;
  const MechanismPhi& phi = spec.phi_mechanism();
  MeasureState mu;
  for (const MeasureState& s : e.measures) mu.atoms.insert(mu.atoms.end(), s.atoms.begin(), s.atoms.end());
  const SuperprocessRun run = estimate_superprocess(spec.base(), phi, mu, t, e.f, e.n_scale, spec.monte_carlo.replicas,
                                                    check_stream(spec, "superprocess"), engine(spec));
  const ScalarField n = solve_cumulant_N(spec.base(), phi, e.f, mesh_at(spec, t)).final();
  CheckResult r = named("superprocess", "E exp(-<X_t, f>) = exp(-<mu_0, N_t f>) up to O(1/n) bias");
  r.reference = std::exp(-mu.integrate(n));
  r.statistic = std::abs(run.laplace.mean - r.reference);
  r.tolerance = spec.tolerances.sigmas * run.laplace.std_error + 1.0 / static_cast<double>(e.n_scale);
  r.passed = run.laplace.valid() && r.statistic <= r.tolerance;
  r.detail = "mc mean " + format_number(run.laplace.mean) + ", stderr " + format_number(run.laplace.std_error);
  return r;
}

}  // namespace

std::vector<CheckResult> run_checks(const ExperimentSpec& spec, const std::vector<std::string>& checks) {
  if (checks.empty()) throw ValidationError("verify: no checks requested");
  std::vector<CheckResult> out;
  for (const std::string& c : checks) {
    if (c == "mass") out.push_back(mass(spec));
    else if (c == "iterate_bound") out.push_back(iterate_bound(spec));
    else if (c == "laplace") out.push_back(laplace(spec));
    else if (c == "moment") out.push_back(moment(spec));
    else if (c == "branching") out.push_back(branching(spec));
    else if (c == "extinction") out.push_back(extinction(spec));
    else if (c == "cumulant") out.push_back(cumulant(spec));
    else if (c == "composition") out.push_back(composition(spec));
    else if (c == "gradient") out.push_back(gradient(spec));
    else if (c == "superprocess") out.push_back(superprocess(spec));
    else throw ValidationError("verify: unknown check '" + c + "'");
  }
  return out;
}

ResultBundle verify_suite(const ExperimentSpec& spec, const std::vector<std::string>& checks) {
  const std::vector<CheckResult> results = run_checks(spec, checks);
  ResultBundle b;
  b.command = "verify";
  Table t;
  t.name = "checks";
  t.header = {"check", "status", "statistic", "tolerance", "reference"};
  nlohmann::json list = nlohmann::json::array();
  bool all = true;
  for (const CheckResult& r : results) {
    all = all && r.passed;
    t.rows.push_back({r.name, r.passed ? "PASS" : "FAIL", r.statistic, r.tolerance, r.reference});
    list.push_back({{"name", r.name},
                    {"identity", r.identity},
                    {"status", r.passed ? "PASS" : "FAIL"},
                    {"statistic", r.statistic},
                    {"tolerance", r.tolerance},
                    {"reference", r.reference},
                    {"detail", r.detail}});
  }
  b.tables.push_back(std::move(t));
  b.summary["checks"] = std::move(list);
  b.summary["passed"] = all;
  b.summary["text"] = render_text(results);
  return b;
}

std::string render_text(const std::vector<CheckResult>& results) {
  std::string out;
  for (const CheckResult& r : results) {
    out += r.passed ? "PASS " : "FAIL ";
    out += r.name + "  statistic=" + format_number(r.statistic) + " tolerance=" + format_number(r.tolerance) +
           " reference=" + format_number(r.reference) + "\n     " + r.identity + "\n     " + r.detail + "\n";
  }
  return out;
}

}  // namespace bmp::harness
