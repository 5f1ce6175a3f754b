#include "bmp/branching_mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bmp/errors.hpp"

namespace bmp {

namespace {

// Offset weights of D on a periodic grid: w[m] = E[hat_m(Y / h)] where Y is the
// displacement and hat_m the piecewise-linear basis function centred at offset m.
// Evaluated by midpoint quadrature on a sub-grid of each cell.
Eigen::MatrixXd periodic_averaging(const Domain& domain, const Displacement& d) {
  const std::size_t n = domain.size;
  const double h = domain.spacing();
  double reach = d.kind == DisplacementKind::gaussian ? 8.0 * d.parameter : d.parameter;
  reach = std::min(reach, 16.0 * domain.length);
  constexpr int kSub = 64;
  const auto cells = static_cast<long>(std::ceil(reach / h)) + 1;
  std::vector<double> w(n, 0.0);
  double total = 0.0;
  for (long cell = -cells; cell < cells; ++cell) {
    for (int s = 0; s < kSub; ++s) {
      const double frac = (s + 0.5) / kSub;
      const double y = (static_cast<double>(cell) + frac) * h;
      double density = 0.0;
      if (d.kind == DisplacementKind::gaussian) {
        const double z = y / d.parameter;
        density = std::exp(-0.5 * z * z);
      } else {
        density = std::abs(y) <= d.parameter ? 1.0 : 0.0;
      }
      if (density == 0.0) continue;
      // y lies between offsets `cell` and `cell + 1`.
      const auto lo = static_cast<std::size_t>(((cell % static_cast<long>(n)) + static_cast<long>(n)) %
                                               static_cast<long>(n));
      const std::size_t hi = (lo + 1) % n;
      w[lo] += density * (1.0 - frac);
      w[hi] += density * frac;
      total += density;
    }
  }
  if (total <= 0.0) {
    // Radius below the sub-grid resolution: children land on the parent.
    return Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  }
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t m = 0; m < n; ++m)
      op(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>((j + m) % n)) += w[m] / total;
  return op;
}

}  // namespace

OffspringLaw::OffspringLaw(Domain domain, Eigen::MatrixXd probabilities, Displacement displacement)
    : domain_(domain), q_(std::move(probabilities)), displacement_(displacement) {
  if (static_cast<std::size_t>(q_.rows()) != domain_.size)
    throw ValidationError("offspring law: one probability row per state is required");
  if (q_.cols() < 1) throw ValidationError("offspring law: empty probability vector");
  if (q_.minCoeff() < 0.0) throw ValidationError("offspring law: negative probability");
  const Eigen::VectorXd mass = q_.rowwise().sum();
  if (mass.maxCoeff() > 1.0 + kMarkovTolerance)
    throw ValidationError("offspring law: probabilities sum above 1");
  markovian_ = (mass.array() - 1.0).abs().maxCoeff() <= kMarkovTolerance;
  const Eigen::VectorXd k = Eigen::VectorXd::LinSpaced(q_.cols(), 0.0, static_cast<double>(q_.cols() - 1));
  mean_offspring_ = q_ * k;

  if (displacement_.kind != DisplacementKind::none) {
    if (!domain_.is_periodic())
      throw ValidationError("offspring law: displacement requires a continuous state space");
    if (!(displacement_.parameter > 0.0))
      throw ValidationError("offspring law: displacement parameter must be positive");
    averaging_ = periodic_averaging(domain_, displacement_);
  } else {
    averaging_ = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(domain_.size),
                                           static_cast<Eigen::Index>(domain_.size));
  }
}

OffspringLaw OffspringLaw::constant(Domain domain, const std::vector<double>& q, Displacement displacement) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(domain.size), static_cast<Eigen::Index>(q.size()));
  for (Eigen::Index j = 0; j < rows.cols(); ++j) rows.col(j).setConstant(q[static_cast<std::size_t>(j)]);
  return OffspringLaw(domain, std::move(rows), displacement);
}

Eigen::VectorXd OffspringLaw::probabilities_at(const Point& x) const {
  if (!domain_.is_periodic()) return q_.row(static_cast<Eigen::Index>(x.site)).transpose();
  const double s = wrap(x.x, domain_.length) / domain_.spacing();
  auto lo = static_cast<std::size_t>(std::floor(s));
  if (lo >= domain_.size) lo = domain_.size - 1;
  const std::size_t hi = (lo + 1) % domain_.size;
  const double w = s - static_cast<double>(lo);
  return ((1.0 - w) * q_.row(static_cast<Eigen::Index>(lo)) + w * q_.row(static_cast<Eigen::Index>(hi)))
      .transpose();
}

Eigen::VectorXd generating_function(const OffspringLaw& law, const Eigen::VectorXd& h) {
  const Eigen::VectorXd g = law.displaced() ? (law.averaging_operator() * h).eval() : h;
  const Eigen::MatrixXd& q = law.probabilities();
  Eigen::VectorXd acc = q.col(q.cols() - 1);
  for (Eigen::Index k = q.cols() - 2; k >= 0; --k) acc = acc.cwiseProduct(g) + q.col(k);
  return acc;
}

ScalarField apply_to_multiplicative(const OffspringLaw& law, const ScalarField& h) {
  if (!h.in_unit_range()) throw DomainError("apply_to_multiplicative: h must take values in [0, 1]");
  return ScalarField(h.domain(), generating_function(law, h.values()));
}

ScalarField apply_to_linear(const OffspringLaw& law, const ScalarField& f) {
  const Eigen::VectorXd g = law.displaced() ? (law.averaging_operator() * f.values()).eval() : f.values();
  return ScalarField(f.domain(), law.mean_offspring().cwiseProduct(g));
}

std::size_t sample_litter_size(const OffspringLaw& law, const Point& x, SeededStream& stream) {
  if (!law.markovian())
    throw std::logic_error("sample_offspring: the sampler requires a Markovian offspring law");
  const Eigen::VectorXd q = law.probabilities_at(x);
  return stream.categorical(q);
}

Point displace(const OffspringLaw& law, const Point& x, SeededStream& stream) {
  const Displacement& d = law.displacement();
  switch (d.kind) {
    case DisplacementKind::none:
      return x;
    case DisplacementKind::gaussian:
      return Point::at(wrap(x.x + d.parameter * stream.normal(), law.domain().length));
    case DisplacementKind::uniform_ball:
      return Point::at(wrap(x.x + d.parameter * (2.0 * stream.uniform() - 1.0), law.domain().length));
  }
  return x;
}

Configuration sample_offspring(const OffspringLaw& law, const Point& x, SeededStream& stream) {
  const std::size_t k = sample_litter_size(law, x, stream);
  Configuration children;
  for (std::size_t i = 0; i < k; ++i) children.push_back(displace(law, x, stream));
  return children;
}

MechanismConstants constants(const OffspringLaw& law, const ScalarField& killing) {
  if (!killing.nonnegative()) throw DomainError("constants: killing rate must be nonnegative");
  MechanismConstants out;
  out.beta1 = law.mean_offspring().maxCoeff();
  out.q_bar = out.beta1;
  out.beta0 = killing.sup_norm() * out.beta1;
  out.supercritical = out.beta1 > 1.0;
  out.constant_killing = killing.max() == killing.min();
  out.killing_below_bound = out.supercritical && killing.max() < out.beta1 / (out.beta1 - 1.0);
  return out;
}

}  // namespace bmp
