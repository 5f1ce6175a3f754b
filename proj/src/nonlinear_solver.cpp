#include "bmp/nonlinear_solver.hpp"

#include <algorithm>
#include <cmath>

#include "bmp/errors.hpp"
#include "bmp/picard.hpp"

namespace bmp {

namespace {

void check_compatible(const BaseModel& model, const OffspringLaw& law, const ScalarField& field) {
  if (!(law.domain() == model.domain()) || !(field.domain() == model.domain()))
    throw ValidationError("model, offspring law and field must share one state space");
}

// c · B ĥ with h projected onto [0, 1].
detail::Reaction branching_reaction(const BaseModel& model, const OffspringLaw& law) {
  const Eigen::VectorXd c = model.killing().values();
  return [c, &law](const Eigen::VectorXd& h) -> Eigen::VectorXd {
    const Eigen::VectorXd clamped = h.cwiseMax(0.0).cwiseMin(1.0);
    return c.cwiseProduct(generating_function(law, clamped));
  };
}

PicardScheme resolve(PicardScheme scheme, const OffspringLaw& law) {
  if (scheme != PicardScheme::automatic) return scheme;
  return law.markovian() ? PicardScheme::primed : PicardScheme::plain;
}

Eigen::MatrixXd start_table(const Propagator& p, const ScalarField& phi, std::size_t steps, PicardScheme scheme,
                            const detail::Reaction& reaction) {
  if (scheme == PicardScheme::plain) return detail::free_evolution(p, phi.values(), steps);
  const Eigen::MatrixXd constant = phi.values().replicate(1, static_cast<Eigen::Index>(steps + 1));
  return detail::duhamel_sweep(p, phi.values(), constant, reaction);
}

}  // namespace

double power_over_factorial(double x, std::size_t n) {
  if (n == 0) return 1.0;
  if (x <= 0.0) return 0.0;
  const auto nd = static_cast<double>(n);
  return std::exp(nd * std::log(x) - std::lgamma(nd + 1.0));
}

SemigroupTable initial_iterate(const BaseModel& model, const OffspringLaw& law, const ScalarField& phi,
                               const SolverMesh& mesh, PicardScheme scheme) {
  mesh.validate();
  check_compatible(model, law, phi);
  if (!phi.in_unit_range()) throw DomainError("solve_H: phi must take values in [0, 1]");
  const Propagator p(model, model.killing().values(), mesh.dt);
  SemigroupTable table;
  table.kind = TableKind::H_of_phi;
  table.domain = model.domain();
  table.mesh = mesh;
  table.times = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(mesh.steps() + 1), 0.0, mesh.t_max);
  table.values = start_table(p, phi, mesh.steps(), resolve(scheme, law), branching_reaction(model, law));
  return table;
}

SemigroupTable picard_step(const BaseModel& model, const OffspringLaw& law, const SemigroupTable& prev,
                           const ScalarField& phi) {
  check_compatible(model, law, phi);
  if (!phi.in_unit_range()) throw DomainError("picard_step: phi must take values in [0, 1]");
  if (static_cast<std::size_t>(prev.values.cols()) != prev.mesh.steps() + 1)
    throw std::invalid_argument("picard_step: previous iterate is not defined on its mesh");
  const Propagator p(model, model.killing().values(), prev.mesh.dt);
  SemigroupTable next = prev;
  next.values = detail::duhamel_sweep(p, phi.values(), prev.values, branching_reaction(model, law));
  const double gap = detail::table_gap(next.values, prev.values);
  next.report.iterations = prev.report.iterations + 1;
  next.report.residuals.push_back(gap);
  next.report.final_residual = gap;
  return next;
}

SemigroupTable solve_H(const BaseModel& model, const OffspringLaw& law, const ScalarField& phi,
                       const SolverMesh& mesh, PicardScheme scheme) {
  mesh.validate();
  check_compatible(model, law, phi);
  if (!phi.in_unit_range()) throw DomainError("solve_H: phi must take values in [0, 1]");
  scheme = resolve(scheme, law);
  const Propagator p(model, model.killing().values(), mesh.dt);
  const auto reaction = branching_reaction(model, law);
  const double beta0_t = constants(law, model.killing()).beta0 * mesh.t_max;
  // With mass on zero offspring the first gap is only bounded by 1.
  const bool zero_offspring = (law.probabilities().col(0).array() > 0.0).any();
  const double norm = zero_offspring ? 1.0 : phi.sup_norm();
  std::function<double(std::size_t)> bound;
  if (scheme == PicardScheme::plain) {
    bound = [=](std::size_t n) { return power_over_factorial(beta0_t, n) * norm; };
  } else {
    bound = [=](std::size_t n) {
      return norm * (2.0 * power_over_factorial(beta0_t, n + 1) + power_over_factorial(beta0_t, n + 2));
    };
  }
  SemigroupTable table = detail::picard_solve(TableKind::H_of_phi, model.domain(), mesh, p, phi.values(),
                                              start_table(p, phi, mesh.steps(), scheme, reaction), reaction, bound);
  if (!law.markovian() && scheme == PicardScheme::primed)
    table.report.warnings.emplace_back("primed scheme requested for a sub-Markovian law");
  return table;
}

SemigroupTable cumulant_V(const BaseModel& model, const OffspringLaw& law, const ScalarField& f,
                          const SolverMesh& mesh) {
  if (!f.nonnegative()) throw DomainError("cumulant_V: f must be nonnegative");
  const ScalarField phi = f.map([](double v) { return std::exp(-v); });
  SemigroupTable table = solve_H(model, law, phi, mesh);
  table.kind = TableKind::V_of_f;
  table.values = -(table.values.array().max(1e-300).min(1.0).log()).matrix();
  return table;
}

ScalarField invariant_residual(const BaseModel& model, const OffspringLaw& law, const ScalarField& v,
                               double probe_dt) {
  if (!(probe_dt > 0.0)) throw std::invalid_argument("invariant_residual: probe_dt must be positive");
  SolverMesh mesh;
  mesh.t_max = probe_dt;
  mesh.dt = probe_dt / 8.0;
  mesh.picard_tol = 1e-15;
  mesh.max_iters = 100;
  const SemigroupTable table = solve_H(model, law, v, mesh);
  return ScalarField(v.domain(), (table.final().values() - v.values()) / probe_dt);
}

ScalarField solve_cumulant_gradient_form(const BaseModel& model, const OffspringLaw& law, const ScalarField& f,
                                         double t, double max_dt) {
  check_compatible(model, law, f);
  if (model.kind() == ModelKind::finite_chain)
    throw ValidationError("gradient form: defined for brownian_torus and single_site models");
  if (law.displaced()) throw ValidationError("gradient form: requires a local law (no displacement)");
  if (!f.nonnegative()) throw DomainError("gradient form: f must be nonnegative");
  if (t < 0.0 || !(max_dt > 0.0)) throw std::invalid_argument("gradient form: bad time arguments");

  const Eigen::VectorXd c = model.killing().values();
  const Eigen::MatrixXd& q = law.probabilities();
  const auto n = static_cast<Eigen::Index>(model.domain().size);
  const bool torus = model.kind() == ModelKind::brownian_torus;
  const double h = model.domain().spacing();
  const double d = model.diffusion();

  auto rhs = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      double reaction = 1.0;
      for (Eigen::Index k = 0; k < q.cols(); ++k)
        reaction -= q(j, k) * std::exp((1.0 - static_cast<double>(k)) * v[j]);
      out[j] = c[j] * reaction;
      if (torus) {
        const double right = v[(j + 1) % n];
        const double left = v[(j + n - 1) % n];
        const double grad = (right - left) / (2.0 * h);
        out[j] += d * (right - 2.0 * v[j] + left) / (h * h) - d * grad * grad;
      }
    }
    return out;
  };

  double step = max_dt;
  if (torus) step = std::min(step, 0.5 * h * h / d);
  const auto count = static_cast<std::size_t>(std::max(1.0, std::ceil(t / step - 1e-9)));
  const double dt = t / static_cast<double>(count);
  Eigen::VectorXd v = f.values();
  for (std::size_t s = 0; s < count && t > 0.0; ++s) {
    const Eigen::VectorXd k1 = rhs(v);
    const Eigen::VectorXd k2 = rhs(v + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = rhs(v + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = rhs(v + dt * k3);
    v += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return ScalarField(f.domain(), v);
}

}  // namespace bmp
