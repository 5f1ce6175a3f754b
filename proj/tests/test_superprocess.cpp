#include <chrono>
#include <cmath>

#include "bmp/errors.hpp"
#include "bmp/superprocess.hpp"
#include "doctest.h"

using namespace bmp;

namespace {

SolverMesh mesh_to(double t, double dt = 1e-3) {
  SolverMesh m;
  m.dt = dt;
  m.t_max = t;
  return m;
}

}  // namespace

TEST_CASE("mechanism evaluation and validation") {
  MechanismPhi phi{1.0, 0.5, {{2.0, 0.3}}};
  CHECK(phi(0.0) == 0.0);
  CHECK(phi(1.0) == doctest::Approx(-0.5 - 1.0 + 0.3 * (1.0 - std::exp(-2.0) - 2.0)));
  CHECK_NOTHROW(phi.validate());
  CHECK_THROWS_AS((MechanismPhi{-1.0, 0.0, {}}).validate(), ValidationError);
  CHECK_THROWS_AS((MechanismPhi{1.0, -0.1, {}}).validate(), ValidationError);
  CHECK_THROWS_AS((MechanismPhi{1.0, 0.0, {{0.0, 1.0}}}).validate(), ValidationError);
}

TEST_CASE("cumulant of the quadratic mechanism is θ/(1+θt)") {
  const BaseModel y = BaseModel::single_site(0.0);
  const MechanismPhi phi{1.0, 0.0, {}};
  for (double theta : {0.5, 1.0, 2.0}) {
    const SemigroupTable n = solve_cumulant_N(y, phi, ScalarField::constant(y.domain(), theta), mesh_to(2.0));
    double worst = 0.0;
    for (std::size_t k = 0; k < n.size(); ++k)
      worst = std::max(worst, std::abs(n.values(0, k) - theta / (1.0 + theta * n.times[k])));
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("trivial cumulant cases") {
  Eigen::MatrixXd l(2, 2);
  l << -1.0, 1.0, 1.0, -1.0;
  const BaseModel y = BaseModel::finite_chain(l, ScalarField::constant(Domain::discrete(2), 0.0));
  Eigen::VectorXd fv(2);
  fv << 0.5, 1.5;
  const ScalarField f(y.domain(), fv);
  const SemigroupTable free = solve_cumulant_N(y, MechanismPhi{}, f, mesh_to(1.0, 1e-2));
  CHECK((free.final().values() - apply_semigroup(y, 1.0, f).values()).cwiseAbs().maxCoeff() < 1e-12);
  const SemigroupTable zero =
      solve_cumulant_N(y, MechanismPhi{1.0, 0.5, {{1.0, 1.0}}}, ScalarField::constant(y.domain(), 0.0), mesh_to(1.0));
  CHECK(zero.values.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cumulant semigroup is order preserving and has the semigroup law") {
  Eigen::MatrixXd l(2, 2);
  l << -1.0, 1.0, 2.0, -2.0;
  const BaseModel y = BaseModel::finite_chain(l, ScalarField::constant(Domain::discrete(2), 0.0));
  const MechanismPhi phi{0.7, 0.2, {{0.5, 1.0}}};
  Eigen::VectorXd fv(2), gv(2);
  fv << 0.5, 1.0;
  gv << 0.6, 1.4;
  const ScalarField f(y.domain(), fv), g(y.domain(), gv);
  const SemigroupTable nf = solve_cumulant_N(y, phi, f, mesh_to(1.0));
  const SemigroupTable ng = solve_cumulant_N(y, phi, g, mesh_to(1.0));
  CHECK((ng.values - nf.values).minCoeff() >= 0.0);

  const ScalarField half = solve_cumulant_N(y, phi, f, mesh_to(0.5)).final();
  const ScalarField twice = solve_cumulant_N(y, phi, half, mesh_to(0.5)).final();
  CHECK((twice.values() - nf.final().values()).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("without branching the particle approximation only transports mass") {
  const Domain d = Domain::periodic(16, 1.0);
  const BaseModel y = BaseModel::brownian_torus(0.1, 1.0, 16, ScalarField::constant(d, 0.0));
  const MeasureState mu{{{Point::at(0.25), 0.5}, {Point::at(0.75), 1.0}}};
  const SuperprocessSample s = approx_superprocess_path(y, MechanismPhi{}, mu, 1.0, 40, SeededStream(1));
  CHECK(s.state.atoms.size() == 60);
  CHECK(s.state.total_mass() == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("particle approximation: Laplace functional and mean mass") {
  const BaseModel y = BaseModel::single_site(0.0);
  const MechanismPhi phi{1.0, 0.5, {}};
  const MeasureState mu = MeasureState::point_mass(Point::at_site(0), 1.0);
  const ScalarField f = ScalarField::constant(y.domain(), 1.0);
  const SuperprocessRun run = estimate_superprocess(y, phi, mu, 1.0, f, 50, 4000, SeededStream(2));
  const double n_tf = solve_cumulant_N(y, phi, f, mesh_to(1.0)).final()[0];
  CHECK(std::abs(run.laplace.mean - std::exp(-n_tf)) < 3.0 * run.laplace.std_error + 0.01);
  CHECK(std::abs(run.mass.mean - std::exp(-0.5)) < 3.0 * run.mass.std_error);
}

TEST_CASE("jump births conserve the mean mass") {
  const BaseModel y = BaseModel::single_site(0.0);
  const MechanismPhi phi{0.0, 0.0, {{0.5, 2.0}}};
  const MeasureState mu = MeasureState::point_mass(Point::at_site(0), 1.0);
  const SuperprocessRun run =
      estimate_superprocess(y, phi, mu, 1.0, ScalarField::constant(y.domain(), 1.0), 20, 4000, SeededStream(3));
  CHECK(std::abs(run.mass.mean - 1.0) < 3.0 * run.mass.std_error);
}

TEST_CASE("composition over measure-valued particles") {
  const BaseModel y = BaseModel::single_site(0.0);
  const MechanismPhi phi{1.0, 0.0, {}};
  const OffspringLaw law = OffspringLaw::constant(y.domain(), {0.0, 0.0, 1.0});
  const ScalarField f = ScalarField::constant(y.domain(), 0.3);
  const std::vector<MeasureState> mu{MeasureState::point_mass(Point::at_site(0), 1.0),
                                     MeasureState::point_mass(Point::at_site(0), 0.123)};

  SUBCASE("t = 0 is exact") {
    const CompositionRun r = compose_discrete_over_measure(y, phi, law, 1.0, mu, 0.0, f, 50, 10, SeededStream(4));
    CHECK(r.laplace.mean == doctest::Approx(std::exp(-0.3 * 1.123)).epsilon(1e-14));
    CHECK(r.laplace.std_error == 0.0);
    CHECK(r.hypothesis_holds);
  }
  SUBCASE("mean mass grows like e^t") {
    const CompositionRun r =
        compose_discrete_over_measure(y, phi, law, 1.0, {mu[0]}, 0.5, f, 20, 4000, SeededStream(5));
    CHECK(std::abs(r.mass.mean - std::exp(0.5)) < 3.0 * r.mass.std_error);
    CHECK(std::abs(r.particles.mean - std::exp(0.5)) < 3.0 * r.particles.std_error);
  }
  SUBCASE("c = 0 reduces to a single superprocess path") {
    const CompositionRun r = compose_discrete_over_measure(y, phi, law, 0.0, {mu[0]}, 1.0, f, 50, 2000, SeededStream(6));
    CHECK(r.particles.mean == 1.0);
    const double n_tf = 0.3 / 1.3;
    CHECK(std::abs(r.laplace.mean - std::exp(-n_tf)) < 3.0 * r.laplace.std_error + 0.005);
  }
}

TEST_CASE("throughput probe" * doctest::skip()) {
  const BaseModel y = BaseModel::single_site(0.0);
  const MechanismPhi phi{1.0, 0.0, {}};
  const MeasureState mu = MeasureState::point_mass(Point::at_site(0), 1.0);
  const auto t0 = std::chrono::steady_clock::now();
  estimate_superprocess(y, phi, mu, 1.0, ScalarField::constant(y.domain(), 1.0), 200, 1000, SeededStream(7));
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  MESSAGE("1000 replicas at n = 200: " << s << " s");
}
