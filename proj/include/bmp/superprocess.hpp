#pragma once

#include <cstddef>
#include <vector>

#include "bmp/base_process.hpp"
#include "bmp/branching_mechanism.hpp"
#include "bmp/config_space.hpp"
#include "bmp/estimate.hpp"
#include "bmp/particle_engine.hpp"
#include "bmp/random.hpp"
#include "bmp/semigroup_table.hpp"

namespace bmp {

struct JumpAtom {
  double size = 0.0;  ///< s_i > 0
  double rate = 0.0;  ///< n_i >= 0
};

/// Φ(λ) = -bλ - aλ² + Σ n_i (1 - e^{-λ s_i} - λ s_i), state independent.
struct MechanismPhi {
  double a = 0.0;
  double b = 0.0;
  std::vector<JumpAtom> jumps;

  double operator()(double lambda) const;
  /// Throws ValidationError unless a >= 0, b >= 0, s_i > 0, n_i >= 0 and Φ is
  /// concave and nonpositive on a λ grid.
  void validate() const;
  bool is_zero() const;
};

struct MeasureAtom {
  Point point;
  double weight = 0.0;
};

/// Finite atomic measure on the state space of Y.
struct MeasureState {
  std::vector<MeasureAtom> atoms;

  double total_mass() const;
  double integrate(const ScalarField& f) const;
  static MeasureState point_mass(const Point& p, double mass) { return {{{p, mass}}}; }
};

/// N_t f from v_t = P_t f + ∫_0^t P_{t-u} Φ(v_u) du by Picard iteration. The
/// linear part -bλ is moved into the propagator as a constant potential; the
/// model supplies the motion of Y and its killing field is not used.
SemigroupTable solve_cumulant_N(const BaseModel& model, const MechanismPhi& phi, const ScalarField& f,
                                const SolverMesh& mesh);

struct SuperprocessSample {
  MeasureState state;
  bool capped = false;
};

/// One path of the weight-1/n branching particle approximation: every atom of
/// weight w becomes round(w·n) particles moving per Y. Each particle splits
/// into 0 or 2 at rate 2a·n, dies at rate b + Σ n_i s_i, and at rate n_i / n
/// adds round(s_i n) particles at its position.
SuperprocessSample approx_superprocess_path(const BaseModel& model, const MechanismPhi& phi, const MeasureState& mu0,
                                            double t, std::size_t n_scale, const SeededStream& stream,
                                            std::size_t cap = 1'000'000);

struct SuperprocessRun {
  Estimate laplace;  ///< E exp(-⟨X_t, f⟩)
  Estimate mass;     ///< E ⟨X_t, 1⟩
};

SuperprocessRun estimate_superprocess(const BaseModel& model, const MechanismPhi& phi, const MeasureState& mu0,
                                      double t, const ScalarField& f, std::size_t n_scale, std::size_t replicas,
                                      const SeededStream& stream, const EngineOptions& options = {});

struct CompositionRun {
  Estimate laplace;     ///< E exp(-Σ_i ⟨X_t^{(i)}, f⟩)
  Estimate mass;        ///< E Σ_i ⟨X_t^{(i)}, 1⟩
  Estimate particles;   ///< E (number of measure-valued particles)
  /// c > 0, q_0 = 0 and c + q_o - c q_o > 0, so that some β > 0 fits below it.
  bool hypothesis_holds = false;
  double beta_ceiling = 0.0;  ///< c + q_o - c q_o
};

/// Discrete branching over measure-valued particles: each particle is a
/// MeasureState evolved by approx_superprocess_path; after an Exp(c) lifetime
/// it is replaced by k copies of itself, k ~ q.
CompositionRun compose_discrete_over_measure(const BaseModel& model, const MechanismPhi& phi,
                                             const OffspringLaw& law, double c,
                                             const std::vector<MeasureState>& mu0, double t, const ScalarField& f,
                                             std::size_t n_scale, std::size_t replicas, const SeededStream& stream,
                                             const EngineOptions& options = {});

}  // namespace bmp
