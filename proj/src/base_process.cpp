#include "bmp/base_process.hpp"

#include <cmath>
#include <string>

#include <Eigen/LU>
#include <unsupported/Eigen/MatrixFunctions>

#include "bmp/errors.hpp"
#include "bmp/parallel.hpp"

namespace bmp {

namespace {

bool is_constant(const Eigen::VectorXd& v) {
  return v.size() == 0 || v.maxCoeff() == v.minCoeff();
}

Eigen::MatrixXd chain_exponential(const Eigen::MatrixXd& a, double t) {
  const Eigen::MatrixXd full = (a * t).exp();
  if (!full.allFinite()) throw ConvergenceError("matrix exponential produced non-finite entries");
  const Eigen::MatrixXd half = (a * (0.5 * t)).exp();
  const double scale = std::max(1.0, full.cwiseAbs().maxCoeff());
  const double defect = (half * half - full).cwiseAbs().maxCoeff() / scale;
  if (defect > BaseModel::kChainTolerance)
    throw ConvergenceError("matrix exponential failed the half-step consistency tolerance (defect " +
                           std::to_string(defect) + ")");
  return full;
}

}  // namespace

BaseModel BaseModel::single_site(double killing) {
  BaseModel m;
  m.kind_ = ModelKind::single_site;
  m.domain_ = Domain::discrete(1);
  m.killing_ = ScalarField::constant(m.domain_, killing);
  m.rates_ = Eigen::MatrixXd::Zero(1, 1);
  m.validate();
  return m;
}

BaseModel BaseModel::finite_chain(Eigen::MatrixXd rate_matrix, ScalarField killing) {
  BaseModel m;
  m.kind_ = ModelKind::finite_chain;
  m.domain_ = Domain::discrete(static_cast<std::size_t>(rate_matrix.rows()));
  m.rates_ = std::move(rate_matrix);
  m.killing_ = std::move(killing);
  m.validate();
  return m;
}

BaseModel BaseModel::brownian_torus(double diffusion, double length, std::size_t grid, ScalarField killing,
                                    double step) {
  BaseModel m;
  m.kind_ = ModelKind::brownian_torus;
  m.domain_ = Domain::periodic(grid, length);
  m.diffusion_ = diffusion;
  m.killing_ = std::move(killing);
  m.step_ = step;
  m.validate();
  return m;
}

void BaseModel::validate() const {
  if (killing_.size() != domain_.size || !(killing_.domain() == domain_))
    throw ValidationError("base model: killing field does not live on the model's state space");
  if (!killing_.nonnegative()) throw ValidationError("base model: killing rate must be nonnegative");
  if (!killing_.values().allFinite()) throw ValidationError("base model: killing rate must be bounded");
  switch (kind_) {
    case ModelKind::single_site:
      break;
    case ModelKind::finite_chain: {
      if (rates_.rows() != rates_.cols() || rates_.rows() == 0)
        throw ValidationError("finite_chain: rate matrix must be square and nonempty");
      for (Eigen::Index i = 0; i < rates_.rows(); ++i) {
        double row = 0.0;
        double scale = 0.0;
        for (Eigen::Index j = 0; j < rates_.cols(); ++j) {
          if (i != j && rates_(i, j) < 0.0)
            throw ValidationError("finite_chain: off-diagonal rates must be nonnegative");
          row += rates_(i, j);
          scale += std::abs(rates_(i, j));
        }
        if (std::abs(row) > 1e-12 * std::max(1.0, scale))
          throw ValidationError("finite_chain: rows must sum to zero (conservative chain)");
      }
      break;
    }
    case ModelKind::brownian_torus:
      if (!(diffusion_ > 0.0) || !(domain_.length > 0.0))
        throw ValidationError("brownian_torus: diffusion and length must be positive");
      if (domain_.size < 3) throw ValidationError("brownian_torus: grid needs at least 3 nodes");
      if (!(step_ > 0.0)) throw ValidationError("brownian_torus: time step must be positive");
      break;
  }
}

BaseModel BaseModel::with_killing(ScalarField killing) const {
  BaseModel m = *this;
  m.killing_ = std::move(killing);
  m.validate();
  return m;
}

Eigen::MatrixXd BaseModel::generator() const {
  const auto n = static_cast<Eigen::Index>(domain_.size);
  switch (kind_) {
    case ModelKind::single_site:
      return Eigen::MatrixXd::Zero(1, 1);
    case ModelKind::finite_chain:
      return rates_;
    case ModelKind::brownian_torus: {
      const double h = domain_.spacing();
      const double k = diffusion_ / (h * h);
      Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
      for (Eigen::Index j = 0; j < n; ++j) {
        lap(j, j) = -2.0 * k;
        lap(j, (j + 1) % n) += k;
        lap(j, (j + n - 1) % n) += k;
      }
      return lap;
    }
  }
  return {};
}

Propagator::Propagator(const BaseModel& model, const Eigen::VectorXd& potential, double dt) : dt_(dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagator: dt must be positive");
  const Eigen::MatrixXd a = model.generator() - Eigen::MatrixXd(potential.asDiagonal());
  switch (model.kind()) {
    case ModelKind::single_site:
      matrix_ = Eigen::MatrixXd::Constant(1, 1, std::exp(-potential[0] * dt));
      break;
    case ModelKind::finite_chain:
      matrix_ = chain_exponential(a, dt);
      break;
    case ModelKind::brownian_torus: {
      const auto n = a.rows();
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
      matrix_ = (id - 0.5 * dt * a).partialPivLu().solve(id + 0.5 * dt * a);
      break;
    }
  }
}

Eigen::VectorXd Propagator::apply(const Eigen::VectorXd& v, std::size_t steps) const {
  Eigen::VectorXd out = v;
  for (std::size_t i = 0; i < steps; ++i) out = matrix_ * out;
  return out;
}

ScalarField apply_killed_semigroup(const BaseModel& model, double t, const ScalarField& f,
                                   const Eigen::VectorXd& potential) {
  if (t < 0.0) throw std::invalid_argument("semigroup: t must be nonnegative");
  if (static_cast<std::size_t>(potential.size()) != model.domain().size)
    throw std::invalid_argument("semigroup: potential size mismatch");
  if (t == 0.0) return f;

  if (is_constant(potential) && potential[0] != 0.0) {
    const ScalarField moved = apply_killed_semigroup(model, t, f, Eigen::VectorXd::Zero(potential.size()));
    return ScalarField(f.domain(), std::exp(-potential[0] * t) * moved.values());
  }

  switch (model.kind()) {
    case ModelKind::single_site:
      return ScalarField(f.domain(), std::exp(-potential[0] * t) * f.values());
    case ModelKind::finite_chain: {
      const Eigen::MatrixXd a = model.generator() - Eigen::MatrixXd(potential.asDiagonal());
      return ScalarField(f.domain(), chain_exponential(a, t) * f.values());
    }
    case ModelKind::brownian_torus: {
      const auto steps = static_cast<std::size_t>(std::ceil(t / model.step() - 1e-9));
      const Propagator p(model, potential, t / static_cast<double>(steps));
      return ScalarField(f.domain(), p.apply(f.values(), steps));
    }
  }
  return f;
}

ScalarField apply_killed_semigroup(const BaseModel& model, double t, const ScalarField& f) {
  return apply_killed_semigroup(model, t, f, model.killing().values());
}

ScalarField apply_semigroup(const BaseModel& model, double t, const ScalarField& f) {
  return apply_killed_semigroup(model, t, f, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(model.domain().size)));
}

namespace {

// Jump chain from site i for `duration`; accumulates ∫ κ(X_s) ds exactly when
// `integral` is non-null.
std::size_t run_chain(const Eigen::MatrixXd& rates, std::size_t i, double duration, SeededStream& stream,
                      const Eigen::VectorXd* potential, double* integral) {
  double remaining = duration;
  const auto n = rates.rows();
  while (true) {
    const double out_rate = -rates(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    const double hold = out_rate > 0.0 ? stream.exponential(out_rate) : remaining;
    if (hold >= remaining) {
      if (integral) *integral += (*potential)[static_cast<Eigen::Index>(i)] * remaining;
      return i;
    }
    if (integral) *integral += (*potential)[static_cast<Eigen::Index>(i)] * hold;
    remaining -= hold;
    double u = stream.uniform() * out_rate;
    std::size_t next = i;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == static_cast<Eigen::Index>(i)) continue;
      const double r = rates(static_cast<Eigen::Index>(i), j);
      if (r <= 0.0) continue;
      next = static_cast<std::size_t>(j);
      if (u < r) break;
      u -= r;
    }
    i = next;
  }
}

}  // namespace

Point advance(const BaseModel& model, const Point& x, double duration, SeededStream& stream) {
  if (duration <= 0.0) return x;
  switch (model.kind()) {
    case ModelKind::single_site:
      return x;
    case ModelKind::finite_chain:
      return Point::at_site(run_chain(model.rate_matrix(), x.site, duration, stream, nullptr, nullptr));
    case ModelKind::brownian_torus:
      return Point::at(wrap(x.x + std::sqrt(2.0 * model.diffusion() * duration) * stream.normal(),
                            model.domain().length));
  }
  return x;
}

Path sample_path(const BaseModel& model, const Point& x0, double dt, std::size_t n_steps, SeededStream& stream) {
  if (!(dt > 0.0)) throw std::invalid_argument("sample_path: dt must be positive");
  Path path;
  path.times.reserve(n_steps + 1);
  path.points.reserve(n_steps + 1);
  Point x = x0;
  double unwrapped = x0.x;
  const bool torus = model.kind() == ModelKind::brownian_torus;
  const double scale = torus ? std::sqrt(2.0 * model.diffusion() * dt) : 0.0;
  for (std::size_t k = 0; k <= n_steps; ++k) {
    path.times.push_back(static_cast<double>(k) * dt);
    path.points.push_back(x);
    if (torus) path.unwrapped.push_back(unwrapped);
    if (k == n_steps) break;
    if (torus) {
      const double dx = scale * stream.normal();
      unwrapped += dx;
      x = Point::at(wrap(x.x + dx, model.domain().length));
    } else {
      x = advance(model, x, dt, stream);
    }
  }
  return path;
}

Estimate feynman_kac_estimate(const BaseModel& model, const Eigen::VectorXd& potential, const ScalarField& f,
                              const Point& x0, double t, std::size_t replicas, const SeededStream& stream,
                              std::size_t steps, unsigned workers) {
  const ScalarField kappa(model.domain(), potential);
  std::vector<double> values(replicas);
  for_each_index(replicas, workers, [&](std::size_t r) {
    SeededStream s = stream.derive(r);
    double integral = 0.0;
    Point end = x0;
    switch (model.kind()) {
      case ModelKind::single_site:
        integral = potential[0] * t;
        break;
      case ModelKind::finite_chain:
        end = Point::at_site(run_chain(model.rate_matrix(), x0.site, t, s, &potential, &integral));
        break;
      case ModelKind::brownian_torus: {
        const double dt = t / static_cast<double>(steps);
        Point x = x0;
        double prev = kappa(x);
        for (std::size_t k = 0; k < steps; ++k) {
          x = advance(model, x, dt, s);
          const double cur = kappa(x);
          integral += 0.5 * (prev + cur) * dt;
          prev = cur;
        }
        end = x;
        break;
      }
    }
    values[r] = std::exp(-integral) * f(end);
  });
  return summarize(values);
}

}  // namespace bmp
