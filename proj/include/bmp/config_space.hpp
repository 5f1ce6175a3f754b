#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "bmp/errors.hpp"

namespace bmp {

enum class DomainKind { discrete, periodic };

/// State space E: either {0, ..., size-1} or the circle [0, length) sampled
/// on `size` equally spaced nodes.
struct Domain {
  DomainKind kind = DomainKind::discrete;
  std::size_t size = 1;
  double length = 1.0;

  static Domain discrete(std::size_t n) { return {DomainKind::discrete, n, 1.0}; }
  static Domain periodic(std::size_t n, double length) {
    return {DomainKind::periodic, n, length};
  }

  bool is_periodic() const { return kind == DomainKind::periodic; }
  double spacing() const { return length / static_cast<double>(size); }
  double node(std::size_t j) const { return spacing() * static_cast<double>(j); }

  friend bool operator==(const Domain& a, const Domain& b) {
    return a.kind == b.kind && a.size == b.size &&
           (a.kind == DomainKind::discrete || a.length == b.length);
  }
};

/// A point of E. `site` is meaningful on discrete domains, `x` on periodic ones.
struct Point {
  std::size_t site = 0;
  double x = 0.0;

  static Point at_site(std::size_t s) { return {s, 0.0}; }
  static Point at(double coordinate) { return {0, coordinate}; }

  friend bool operator==(const Point& a, const Point& b) { return a.site == b.site && a.x == b.x; }
};

/// Wraps a coordinate into [0, length).
inline double wrap(double x, double length) {
  double r = std::fmod(x, length);
  if (r < 0.0) r += length;
  if (r >= length) r = 0.0;
  return r;
}

bool contains(const Domain& domain, const Point& p);

/// Function on E stored per state (discrete) or per grid node with periodic
/// linear interpolation between nodes.
template <typename Scalar>
class BasicField {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  BasicField() = default;
  BasicField(Domain domain, Vector values) : domain_(domain), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.size()) != domain_.size)
      throw std::invalid_argument("field: value count does not match domain size");
  }

  static BasicField constant(Domain domain, Scalar value) {
    return BasicField(domain, Vector::Constant(static_cast<Eigen::Index>(domain.size), value));
  }

  const Domain& domain() const { return domain_; }
  const Vector& values() const { return values_; }
  std::size_t size() const { return domain_.size; }

  Scalar operator[](std::size_t j) const { return values_[static_cast<Eigen::Index>(j)]; }

  Scalar operator()(const Point& p) const {
    if (!domain_.is_periodic()) return values_[static_cast<Eigen::Index>(p.site)];
    const double h = domain_.spacing();
    const double s = wrap(p.x, domain_.length) / h;
    auto lo = static_cast<std::size_t>(std::floor(s));
    if (lo >= domain_.size) lo = domain_.size - 1;
    const std::size_t hi = (lo + 1) % domain_.size;
    const Scalar w = static_cast<Scalar>(s - static_cast<double>(lo));
    return (Scalar(1) - w) * values_[static_cast<Eigen::Index>(lo)] +
           w * values_[static_cast<Eigen::Index>(hi)];
  }

  Scalar sup_norm() const { return values_.size() == 0 ? Scalar(0) : values_.cwiseAbs().maxCoeff(); }
  Scalar min() const { return values_.minCoeff(); }
  Scalar max() const { return values_.maxCoeff(); }

  /// Membership in B_u: 0 <= phi <= 1 everywhere.
  bool in_unit_range() const {
    return values_.size() == 0 || (values_.minCoeff() >= Scalar(0) && values_.maxCoeff() <= Scalar(1));
  }
  bool nonnegative() const { return values_.size() == 0 || values_.minCoeff() >= Scalar(0); }

  template <typename Op>
  BasicField map(Op op) const {
    return BasicField(domain_, values_.unaryExpr(op).eval());
  }

 private:
  Domain domain_;
  Vector values_;
};

using ScalarField = BasicField<double>;

/// Element of Ê: a finite multiset of points, possibly empty (the zero measure).
class Configuration {
 public:
  Configuration() = default;
  explicit Configuration(std::vector<Point> points) : points_(std::move(points)) {}

  static Configuration single(const Point& p) { return Configuration({p}); }

  const std::vector<Point>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  void push_back(const Point& p) { points_.push_back(p); }
  void append(const Configuration& other) {
    points_.insert(points_.end(), other.points_.begin(), other.points_.end());
  }

 private:
  std::vector<Point> points_;
};

/// Multiset union μ + ν.
Configuration add_configurations(const Configuration& mu, const Configuration& nu);

/// φ̂(μ) = ∏ φ(x_k); 1 on the empty configuration. A zero factor gives exactly 0.
template <typename Scalar>
Scalar eval_multiplicative(const BasicField<Scalar>& phi, const Configuration& mu) {
  if (!phi.in_unit_range()) throw DomainError("eval_multiplicative: phi must take values in [0, 1]");
  Scalar product(1);
  for (const Point& p : mu.points()) {
    const Scalar v = phi(p);
    if (v == Scalar(0)) return Scalar(0);
    product *= v;
  }
  return product;
}

/// l_f(μ) = ⟨μ, f⟩.
template <typename Scalar>
Scalar eval_linear(const BasicField<Scalar>& f, const Configuration& mu) {
  Scalar sum(0);
  for (const Point& p : mu.points()) sum += f(p);
  return sum;
}

/// e_f(μ) = exp(-⟨μ, f⟩) for f >= 0.
template <typename Scalar>
Scalar eval_exponential(const BasicField<Scalar>& f, const Configuration& mu) {
  if (!f.nonnegative()) throw DomainError("eval_exponential: f must be nonnegative");
  using std::exp;
  return exp(-eval_linear(f, mu));
}

}  // namespace bmp
