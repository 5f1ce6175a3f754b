#include "bmp/linear_solver.hpp"

#include <cmath>

#include "bmp/errors.hpp"
#include "bmp/nonlinear_solver.hpp"
#include "bmp/picard.hpp"

namespace bmp {

PerturbationSpec make_perturbation(const BaseModel& model, const OffspringLaw& law) {
  if (!(law.domain() == model.domain())) throw ValidationError("model and offspring law must share one state space");
  PerturbationSpec spec;
  spec.constants = constants(law, model.killing());
  const Eigen::VectorXd& c = model.killing().values();
  const double beta1 = spec.constants.beta1;
  spec.base_killing = (c.array() + beta1).matrix();
  spec.kernel_rate = c.cwiseProduct(law.mean_offspring());
  if (!law.markovian()) spec.warnings.emplace_back("B1 = 1 fails: offspring law is sub-Markovian");
  if (!spec.constants.supercritical) spec.warnings.emplace_back("beta1 > 1 fails");
  else if (!spec.constants.killing_below_bound) spec.warnings.emplace_back("c < beta1/(beta1-1) fails");
  // K 1 = c q_o / (c + β₁) must stay <= 1.
  const Eigen::ArrayXd k_one = spec.kernel_rate.array() / spec.base_killing.array().max(1e-300);
  if ((k_one > 1.0 + 1e-12).any()) spec.warnings.emplace_back("kernel K is not sub-Markovian");
  return spec;
}

SemigroupTable solve_Q_picard(const BaseModel& model, const OffspringLaw& law, const ScalarField& f,
                              const SolverMesh& mesh) {
  mesh.validate();
  if (!(f.domain() == model.domain())) throw ValidationError("solve_Q: f must live on the model's state space");
  const PerturbationSpec spec = make_perturbation(model, law);
  const Propagator p(model, spec.base_killing, mesh.dt);
  const Eigen::VectorXd rate = spec.kernel_rate;
  const OffspringLaw* lawp = &law;
  const detail::Reaction reaction = [rate, lawp](const Eigen::VectorXd& r) -> Eigen::VectorXd {
    if (lawp->displaced()) return rate.cwiseProduct(lawp->averaging_operator() * r);
    return rate.cwiseProduct(r);
  };
  // Gap bound for the linear scheme: ‖c q_o‖_∞ t acts as the Lipschitz constant.
  const double lt = rate.cwiseAbs().maxCoeff() * mesh.t_max;
  const double norm = f.sup_norm();
  SemigroupTable table =
      detail::picard_solve(TableKind::Q_of_f, model.domain(), mesh, p, f.values(),
                           detail::free_evolution(p, f.values(), mesh.steps()), reaction,
                           [=](std::size_t n) { return power_over_factorial(lt, n + 1) * norm; });
  table.report.warnings = spec.warnings;
  return table;
}

std::vector<Estimate> solve_Q_feynman_kac(const BaseModel& model, const OffspringLaw& law, const ScalarField& f,
                                          double t, std::size_t replicas, const SeededStream& stream,
                                          unsigned workers) {
  const PerturbationSpec spec = make_perturbation(model, law);
  if (!spec.constants.constant_killing)
    throw std::logic_error("solve_Q_feynman_kac: requires a constant killing rate");
  if (law.displaced()) throw std::logic_error("solve_Q_feynman_kac: requires a local law (no displacement)");
  const Eigen::VectorXd potential = spec.base_killing - spec.kernel_rate;
  std::vector<Estimate> out;
  out.reserve(model.domain().size);
  for (std::size_t s = 0; s < model.domain().size; ++s) {
    const Point x0 = model.domain().is_periodic() ? Point::at(model.domain().node(s)) : Point::at_site(s);
    out.push_back(feynman_kac_estimate(model, potential, f, x0, t, replicas, stream.derive(s), 200, workers));
  }
  return out;
}

ScalarField moment_operator(const BaseModel& model, const OffspringLaw& law, const ScalarField& f, double t,
                            const SolverMesh& mesh) {
  if (t == 0.0) return f;
  SolverMesh m = mesh;
  m.t_max = t;
  const SemigroupTable q = solve_Q_picard(model, law, f, m);
  const double beta1 = constants(law, model.killing()).beta1;
  return ScalarField(f.domain(), std::exp(beta1 * t) * q.final().values());
}

}  // namespace bmp
