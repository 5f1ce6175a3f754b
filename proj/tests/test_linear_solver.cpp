#include <cmath>

#include "bmp/linear_solver.hpp"
#include "doctest.h"

using namespace bmp;

TEST_CASE("single-site binary fission: Q_t f = e^{-t} f and M_t f = e^t f") {
  const BaseModel m = BaseModel::single_site(1.0);
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.0, 0.0, 1.0});
  SolverMesh mesh;
  mesh.dt = 1e-3;
  mesh.t_max = 1.5;
  const ScalarField f = ScalarField::constant(m.domain(), 2.0);
  const SemigroupTable q = solve_Q_picard(m, law, f, mesh);
  for (std::size_t k = 0; k < q.size(); k += 100)
    CHECK(q.values(0, k) == doctest::Approx(2.0 * std::exp(-q.times[k])).epsilon(1e-6));
  CHECK(moment_operator(m, law, f, 1.5, mesh)[0] == doctest::Approx(2.0 * std::exp(1.5)).epsilon(1e-6));
  CHECK(moment_operator(m, law, f, 0.0, mesh)[0] == 2.0);
  CHECK(make_perturbation(m, law).hypotheses_hold());
}

TEST_CASE("Picard Q matches the killed-semigroup closed form on a chain") {
  Eigen::MatrixXd l(3, 3);
  l << -1.0, 0.6, 0.4, 0.5, -0.8, 0.3, 0.2, 0.7, -0.9;
  const Domain d = Domain::discrete(3);
  Eigen::VectorXd c(3), fv(3);
  c << 0.5, 1.0, 0.8;
  fv << 1.0, 0.3, 2.0;
  const BaseModel m = BaseModel::finite_chain(l, ScalarField(d, c));
  Eigen::MatrixXd q(3, 3);
  q << 0.1, 0.2, 0.7, 0.3, 0.0, 0.7, 0.2, 0.4, 0.4;
  const OffspringLaw law(d, q);
  SolverMesh mesh;
  mesh.dt = 1e-3;
  mesh.t_max = 1.0;
  const ScalarField f(d, fv);
  const SemigroupTable table = solve_Q_picard(m, law, f, mesh);
  const PerturbationSpec spec = make_perturbation(m, law);
  const ScalarField exact = apply_killed_semigroup(m, 1.0, f, spec.base_killing - spec.kernel_rate);
  CHECK((table.final().values() - exact.values()).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("Feynman-Kac Q agrees with Picard Q") {
  Eigen::MatrixXd l(2, 2);
  l << -1.0, 1.0, 2.0, -2.0;
  const Domain d = Domain::discrete(2);
  const BaseModel m = BaseModel::finite_chain(l, ScalarField::constant(d, 1.0));
  Eigen::MatrixXd q(2, 3);
  q << 0.0, 0.0, 1.0, 0.5, 0.0, 0.5;
  const OffspringLaw law(d, q);
  Eigen::VectorXd fv(2);
  fv << 1.0, 3.0;
  const ScalarField f(d, fv);
  SolverMesh mesh;
  mesh.dt = 1e-3;
  mesh.t_max = 1.0;
  const ScalarField picard = solve_Q_picard(m, law, f, mesh).final();
  const auto fk = solve_Q_feynman_kac(m, law, f, 1.0, 20000, SeededStream(3));
  for (std::size_t s = 0; s < 2; ++s) CHECK(std::abs(fk[s].mean - picard[s]) < 1e-5 + 3.0 * fk[s].std_error);
}

TEST_CASE("hypothesis violations become warnings") {
  const BaseModel m = BaseModel::single_site(3.0);
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.0, 0.0, 1.0});
  const PerturbationSpec spec = make_perturbation(m, law);
  CHECK_FALSE(spec.hypotheses_hold());
  SolverMesh mesh;
  mesh.dt = 1e-3;
  mesh.t_max = 0.5;
  const SemigroupTable t = solve_Q_picard(m, law, ScalarField::constant(m.domain(), 1.0), mesh);
  CHECK_FALSE(t.report.warnings.empty());
  CHECK(t.final()[0] == doctest::Approx(std::exp(0.5)).epsilon(1e-5));  // c + β₁ - c q_o = -1
}
