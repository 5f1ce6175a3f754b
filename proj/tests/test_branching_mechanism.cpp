#include <cmath>

#include "bmp/branching_mechanism.hpp"
#include "bmp/errors.hpp"
#include "doctest.h"

using namespace bmp;

TEST_CASE("generating function and linear action") {
  const Domain d = Domain::discrete(2);
  Eigen::MatrixXd q(2, 3);
  q << 0.25, 0.0, 0.75,
       0.0, 1.0, 0.0;
  const OffspringLaw law(d, q);
  CHECK(law.markovian());
  CHECK(law.mean_offspring()[0] == doctest::Approx(1.5));
  CHECK(law.mean_offspring()[1] == doctest::Approx(1.0));

  Eigen::VectorXd h(2);
  h << 0.5, 0.3;
  const Eigen::VectorXd g = generating_function(law, h);
  CHECK(g[0] == doctest::Approx(0.25 + 0.75 * 0.25));
  CHECK(g[1] == doctest::Approx(0.3));

  const ScalarField f(d, h);
  const ScalarField lf = apply_to_linear(law, f);
  CHECK(lf[0] == doctest::Approx(0.75));
  CHECK(lf[1] == doctest::Approx(0.3));
  CHECK_THROWS_AS(apply_to_multiplicative(law, ScalarField::constant(d, 2.0)), DomainError);
}

TEST_CASE("constants") {
  const Domain d = Domain::discrete(1);
  const OffspringLaw binary = OffspringLaw::constant(d, {0.0, 0.0, 1.0});
  const MechanismConstants k = constants(binary, ScalarField::constant(d, 1.0));
  CHECK(k.beta1 == doctest::Approx(2.0));
  CHECK(k.beta0 == doctest::Approx(2.0));
  CHECK(k.supercritical);
  CHECK(k.killing_below_bound);  // 1 < 2/(2-1)
  CHECK(k.constant_killing);
  const MechanismConstants k3 = constants(binary, ScalarField::constant(d, 3.0));
  CHECK_FALSE(k3.killing_below_bound);
}

TEST_CASE("validation") {
  const Domain d = Domain::discrete(1);
  CHECK_THROWS_AS(OffspringLaw::constant(d, {-0.1, 1.1}), ValidationError);
  CHECK_THROWS_AS(OffspringLaw::constant(d, {0.6, 0.6}), ValidationError);
  CHECK_THROWS(OffspringLaw::constant(d, {0.0, 1.0}, {DisplacementKind::gaussian, 0.1}));
  const OffspringLaw sub = OffspringLaw::constant(d, {0.2, 0.3});
  CHECK_FALSE(sub.markovian());
  SeededStream s(1);
  CHECK_THROWS_AS(sample_litter_size(sub, Point::at_site(0), s), std::logic_error);
}

TEST_CASE("litter sizes follow q") {
  const Domain d = Domain::discrete(1);
  const OffspringLaw law = OffspringLaw::constant(d, {0.25, 0.0, 0.75});
  SeededStream s(3);
  const int n = 40000;
  int zeros = 0, twos = 0;
  for (int i = 0; i < n; ++i) {
    const std::size_t k = sample_litter_size(law, Point::at_site(0), s);
    zeros += k == 0;
    twos += k == 2;
  }
  CHECK(zeros + twos == n);
  CHECK(zeros / double(n) == doctest::Approx(0.25).epsilon(0.04));
}

TEST_CASE("displacement averaging operator is stochastic and centred") {
  const Domain d = Domain::periodic(32, 1.0);
  const OffspringLaw law = OffspringLaw::constant(d, {0.0, 0.0, 1.0}, {DisplacementKind::gaussian, 0.05});
  const Eigen::MatrixXd& a = law.averaging_operator();
  for (Eigen::Index i = 0; i < a.rows(); ++i) CHECK(a.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(a(3, 3) == doctest::Approx(a(4, 4)));
  CHECK(a(5, 6) == doctest::Approx(a(5, 4)));

  SeededStream s(9);
  const Configuration kids = sample_offspring(law, Point::at(0.5), s);
  CHECK(kids.size() == 2);
  for (const Point& p : kids.points()) CHECK(contains(d, p));
}
