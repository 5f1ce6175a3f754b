#include <cmath>
#include <numbers>

#include "bmp/base_process.hpp"
#include "bmp/errors.hpp"
#include "doctest.h"

using namespace bmp;

namespace {

BaseModel two_state(double killing) {
  Eigen::MatrixXd l(2, 2);
  l << -1.0, 1.0, 1.0, -1.0;
  return BaseModel::finite_chain(l, ScalarField::constant(Domain::discrete(2), killing));
}

}  // namespace

TEST_CASE("two-state chain semigroup matches the closed form") {
  const BaseModel m = two_state(0.0);
  Eigen::VectorXd e0(2);
  e0 << 1.0, 0.0;
  const ScalarField f(m.domain(), e0);
  const ScalarField p = apply_semigroup(m, 1.0, f);
  // P_00(t) = (1 + e^{-2t}) / 2
  CHECK(p[0] == doctest::Approx(0.5 * (1.0 + std::exp(-2.0))).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.5 * (1.0 - std::exp(-2.0))).epsilon(1e-12));
  CHECK(p[0] == doctest::Approx(0.567668).epsilon(1e-6));

  const ScalarField k = apply_killed_semigroup(two_state(0.7), 1.0, f);
  CHECK(k[0] == doctest::Approx(std::exp(-0.7) * p[0]).epsilon(1e-12));
}

TEST_CASE("chain validation") {
  Eigen::MatrixXd bad(2, 2);
  bad << -1.0, 0.5, 1.0, -1.0;
  CHECK_THROWS_AS(BaseModel::finite_chain(bad, ScalarField::constant(Domain::discrete(2), 0.0)), ValidationError);
  CHECK_THROWS_AS(two_state(-1.0), ValidationError);
  CHECK_THROWS_AS(BaseModel::brownian_torus(1.0, 1.0, 2, ScalarField::constant(Domain::periodic(2, 1.0), 0.0)),
                  ValidationError);
}

TEST_CASE("torus heat semigroup damps a Fourier mode") {
  const std::size_t n = 128;
  const double d = 0.05;
  const Domain dom = Domain::periodic(n, 1.0);
  const BaseModel m = BaseModel::brownian_torus(d, 1.0, n, ScalarField::constant(dom, 0.0), 1e-3);
  Eigen::VectorXd v(n);
  for (std::size_t j = 0; j < n; ++j) v[j] = std::sin(2.0 * std::numbers::pi * dom.node(j));
  const ScalarField out = apply_semigroup(m, 0.5, ScalarField(dom, v));
  const double decay = std::exp(-d * 4.0 * std::numbers::pi * std::numbers::pi * 0.5);
  CHECK((out.values() - decay * v).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("Feynman-Kac Monte Carlo agrees with the matrix exponential") {
  const BaseModel m = two_state(0.0);
  Eigen::VectorXd pot(2), fv(2);
  pot << 0.5, 1.5;
  fv << 1.0, 2.0;
  const ScalarField f(m.domain(), fv);
  const ScalarField exact = apply_killed_semigroup(m, 1.0, f, pot);
  const Estimate e = feynman_kac_estimate(m, pot, f, Point::at_site(0), 1.0, 40000, SeededStream(5));
  CHECK(std::abs(e.mean - exact[0]) < 4.0 * e.std_error);
}

TEST_CASE("advance on a single site is the identity") {
  const BaseModel m = BaseModel::single_site(1.0);
  SeededStream s(1);
  CHECK(advance(m, Point::at_site(0), 3.0, s) == Point::at_site(0));
}

TEST_CASE("torus paths have Gaussian increments") {
  const Domain dom = Domain::periodic(16, 1.0);
  const BaseModel m = BaseModel::brownian_torus(0.5, 1.0, 16, ScalarField::constant(dom, 0.0));
  SeededStream s(11);
  double sum2 = 0.0;
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const Path p = sample_path(m, Point::at(0.2), 0.1, 10, s);
    const double dx = p.unwrapped.back() - p.unwrapped.front();
    sum2 += dx * dx;
  }
  // Var = 2 D t for generator D·Δ
  CHECK(sum2 / reps == doctest::Approx(1.0).epsilon(0.06));
}
