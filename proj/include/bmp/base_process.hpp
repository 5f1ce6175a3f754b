#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "bmp/config_space.hpp"
#include "bmp/estimate.hpp"
#include "bmp/random.hpp"

namespace bmp {

enum class ModelKind { single_site, finite_chain, brownian_torus };

/// Base Markov process X together with its killing rate c.
///
/// finite_chain: conservative rate matrix L (nonnegative off-diagonal, zero
/// row sums). brownian_torus: generator D·d²/dx² on a circle of length L,
/// discretised on `grid` nodes with the periodic three-point Laplacian and
/// integrated by Crank–Nicolson steps of at most `step`. single_site: one
/// state, L = 0.
class BaseModel {
 public:
  static constexpr double kChainTolerance = 1e-10;

  static BaseModel single_site(double killing);
  static BaseModel finite_chain(Eigen::MatrixXd rate_matrix, ScalarField killing);
  static BaseModel brownian_torus(double diffusion, double length, std::size_t grid, ScalarField killing,
                                  double step = 1e-3);

  ModelKind kind() const { return kind_; }
  const Domain& domain() const { return domain_; }
  const ScalarField& killing() const { return killing_; }
  const Eigen::MatrixXd& rate_matrix() const { return rates_; }
  double diffusion() const { return diffusion_; }
  double step() const { return step_; }

  /// Same motion, different killing field.
  BaseModel with_killing(ScalarField killing) const;

  /// Dense discrete generator (rate matrix, D·Laplacian, or the 1×1 zero).
  Eigen::MatrixXd generator() const;

 private:
  BaseModel() = default;
  void validate() const;

  ModelKind kind_ = ModelKind::single_site;
  Domain domain_;
  ScalarField killing_;
  Eigen::MatrixXd rates_;
  double diffusion_ = 0.0;
  double step_ = 1e-3;
};

/// Linear one-step operator v ↦ T^κ_dt v for a fixed potential κ (which may
/// be negative) and time step dt, stored densely.
class Propagator {
 public:
  Propagator(const BaseModel& model, const Eigen::VectorXd& potential, double dt);

  double dt() const { return dt_; }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return matrix_ * v; }
  Eigen::VectorXd apply(const Eigen::VectorXd& v, std::size_t steps) const;

 private:
  double dt_;
  Eigen::MatrixXd matrix_;
};

/// T_t f.
ScalarField apply_semigroup(const BaseModel& model, double t, const ScalarField& f);
/// T^c_t f with the model's killing field (Feynman–Kac semigroup).
ScalarField apply_killed_semigroup(const BaseModel& model, double t, const ScalarField& f);
/// E^x[exp(-∫_0^t κ(X_s) ds) f(X_t)] for an arbitrary bounded potential κ.
ScalarField apply_killed_semigroup(const BaseModel& model, double t, const ScalarField& f,
                                   const Eigen::VectorXd& potential);

struct Path {
  std::vector<double> times;
  std::vector<Point> points;
  /// Unwrapped coordinates (brownian_torus only).
  std::vector<double> unwrapped;
};

/// Samples X at times k·dt, k = 0..n_steps.
Path sample_path(const BaseModel& model, const Point& x0, double dt, std::size_t n_steps, SeededStream& stream);

/// Position after `duration` time units, started at x (exact in law for all
/// three models).
Point advance(const BaseModel& model, const Point& x, double duration, SeededStream& stream);

/// Monte Carlo estimate of E^x[exp(-∫_0^t κ(X_s) ds) f(X_t)]. The path integral
/// is exact for piecewise-constant chains and trapezoidal on `steps` Euler
/// increments for the torus.
Estimate feynman_kac_estimate(const BaseModel& model, const Eigen::VectorXd& potential, const ScalarField& f,
                              const Point& x0, double t, std::size_t replicas, const SeededStream& stream,
                              std::size_t steps = 200, unsigned workers = 1);

}  // namespace bmp
