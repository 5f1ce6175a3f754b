#include <algorithm>
#include <cmath>
#include <set>

#include "bmp/errors.hpp"
#include "bmp/linear_solver.hpp"
#include "bmp/nonlinear_solver.hpp"
#include "bmp/particle_engine.hpp"
#include "doctest.h"

using namespace bmp;

namespace {

BaseModel two_state() {
  Eigen::MatrixXd l(2, 2);
  l << -1.0, 1.0, 0.5, -0.5;
  return BaseModel::finite_chain(l, ScalarField::constant(Domain::discrete(2), 1.0));
}

}  // namespace

TEST_CASE("the empty configuration is a trap") {
  const BaseModel m = two_state();
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.0, 0.0, 1.0});
  for (double t : {0.0, 1.0, 5.0}) CHECK(simulate_forest(m, law, Configuration{}, t, SeededStream(1)).alive.empty());
}

TEST_CASE("without killing exactly one particle survives") {
  Eigen::MatrixXd l(2, 2);
  l << -1.0, 1.0, 0.5, -0.5;
  const BaseModel m = BaseModel::finite_chain(l, ScalarField::constant(Domain::discrete(2), 0.0));
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.0, 0.0, 1.0});
  int at_zero = 0;
  const int reps = 20000;
  const SeededStream root(8);
  for (int r = 0; r < reps; ++r) {
    const Forest f = simulate_forest(m, law, Configuration::single(Point::at_site(0)), 1.0, root.derive(r));
    REQUIRE(f.alive.size() == 1);
    at_zero += f.alive.points()[0].site == 0;
  }
  // P_00(1) = 1/3 + 2/3 e^{-1.5}
  const double p = 1.0 / 3.0 + 2.0 / 3.0 * std::exp(-1.5);
  CHECK(std::abs(at_zero / double(reps) - p) < 4.0 * std::sqrt(p * (1 - p) / reps));
}

TEST_CASE("binary fission population has mean e^t") {
  const BaseModel m = BaseModel::single_site(1.0);
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.0, 0.0, 1.0});
  const ScalarField one = ScalarField::constant(m.domain(), 1.0);
  const FunctionalRun run = estimate_functional(m, law, Configuration::single(Point::at_site(0)), 1.0, one,
                                                FunctionalKind::linear, 20000, SeededStream(2));
  SolverMesh mesh;
  mesh.dt = 1e-3;
  mesh.t_max = 1.0;
  const double oracle = moment_operator(m, law, one, 1.0, mesh)[0];
  CHECK(oracle == doctest::Approx(std::exp(1.0)).epsilon(1e-6));
  CHECK(std::abs(run.estimate.mean - oracle) < 3.0 * run.estimate.std_error);
}

TEST_CASE("t = 0 returns e_f of the initial configuration exactly") {
  const BaseModel m = two_state();
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.0, 0.0, 1.0});
  Eigen::VectorXd fv(2);
  fv << 0.3, 0.9;
  const ScalarField f(m.domain(), fv);
  const Configuration mu({Point::at_site(0), Point::at_site(1), Point::at_site(1)});
  const Estimate e =
      estimate_functional(m, law, mu, 0.0, f, FunctionalKind::exponential, 50, SeededStream(3)).estimate;
  CHECK(e.mean == doctest::Approx(std::exp(-2.1)).epsilon(1e-15));
  CHECK(e.std_error == 0.0);
  const BranchingReport b = verify_branching_property(m, law, mu, mu, 0.0, f, 20, SeededStream(3));
  CHECK(b.z == 0.0);
}

TEST_CASE("Laplace functional against the logistic cumulant") {
  const BaseModel m = BaseModel::single_site(1.0);
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.0, 0.0, 1.0});
  const double theta = 0.7, t = 1.0;
  const double h0 = std::exp(-theta);
  const double oracle = h0 * std::exp(-t) / (1.0 - h0 * (1.0 - std::exp(-t)));
  const Estimate e = estimate_functional(m, law, Configuration::single(Point::at_site(0)), t,
                                         ScalarField::constant(m.domain(), theta), FunctionalKind::exponential,
                                         20000, SeededStream(4))
                         .estimate;
  CHECK(std::abs(e.mean - oracle) < 3.0 * e.std_error);
}

TEST_CASE("identical seeds give identical results for any worker count") {
  const BaseModel m = two_state();
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.2, 0.3, 0.5});
  const ScalarField f = ScalarField::constant(m.domain(), 0.4);
  const Configuration mu({Point::at_site(0), Point::at_site(1)});
  EngineOptions one, four;
  four.workers = 4;
  const FunctionalRun a = estimate_functional(m, law, mu, 1.5, f, FunctionalKind::exponential, 500, SeededStream(5), one);
  const FunctionalRun b =
      estimate_functional(m, law, mu, 1.5, f, FunctionalKind::exponential, 500, SeededStream(5), four);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t r = 0; r < a.records.size(); ++r) {
    CHECK(a.records[r].value == b.records[r].value);
    CHECK(a.records[r].terminal_size == b.records[r].terminal_size);
  }
  CHECK(a.estimate.mean == b.estimate.mean);
}

TEST_CASE("lineage labels are unique and rooted at the initial points") {
  const BaseModel m = BaseModel::single_site(1.0);
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.1, 0.0, 0.6, 0.3});
  ForestOptions opts;
  opts.record_lineage = true;
  const Configuration mu({Point::at_site(0), Point::at_site(0)});
  const Forest f = simulate_forest(m, law, mu, 2.0, SeededStream(6), opts);
  REQUIRE(f.particles.size() == f.alive.size());
  std::set<std::vector<std::uint32_t>> labels;
  for (const Particle& p : f.particles) {
    REQUIRE_FALSE(p.lineage.empty());
    CHECK(p.lineage.front() < 2);
    labels.insert(p.lineage);
  }
  CHECK(labels.size() == f.particles.size());
}

TEST_CASE("population cap flags and rejects") {
  const BaseModel m = BaseModel::single_site(2.0);
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.0, 0.0, 1.0});
  ForestOptions opts;
  opts.cap = 50;
  const Forest f = simulate_forest(m, law, Configuration::single(Point::at_site(0)), 5.0, SeededStream(7), opts);
  CHECK(f.capped);
  EngineOptions eo;
  eo.cap = 50;
  CHECK_THROWS_AS(estimate_functional(m, law, Configuration::single(Point::at_site(0)), 5.0,
                                      ScalarField::constant(m.domain(), 1.0), FunctionalKind::linear, 100,
                                      SeededStream(7), eo),
                  InvalidEstimate);
}

TEST_CASE("extinction probability approaches the invariant fixed point") {
  const BaseModel m = BaseModel::single_site(1.0);
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.25, 0.0, 0.75});
  const ScalarField zero = ScalarField::constant(m.domain(), 0.0);
  SolverMesh mesh;
  mesh.dt = 1e-2;
  mesh.t_max = 3.0;
  const double oracle = solve_H(m, law, zero, mesh).final()[0];
  const Estimate e = estimate_functional(m, law, Configuration::single(Point::at_site(0)), 3.0, zero,
                                         FunctionalKind::multiplicative, 20000, SeededStream(8))
                         .estimate;
  CHECK(oracle < 1.0 / 3.0);
  CHECK(std::abs(e.mean - oracle) < 3.0 * e.std_error);
}

TEST_CASE("neutral element in the branching property") {
  const BaseModel m = two_state();
  const OffspringLaw law = OffspringLaw::constant(m.domain(), {0.2, 0.3, 0.5});
  const BranchingReport r = verify_branching_property(m, law, Configuration::single(Point::at_site(0)), Configuration{},
                                                      1.0, ScalarField::constant(m.domain(), 0.5), 20000,
                                                      SeededStream(9));
  CHECK(r.right.mean == 1.0);
  CHECK(std::abs(r.z) < 3.0);
}
