#pragma once

#include <string>
#include <vector>

#include "bmp/base_process.hpp"
#include "bmp/branching_mechanism.hpp"
#include "bmp/estimate.hpp"
#include "bmp/semigroup_table.hpp"

namespace bmp {

/// Linear perturbation behind the first-moment semigroup: base killing c + β₁
/// and kernel K f = (c / (c + β₁)) B(l_f), so that (c + β₁) K f = c q_o D f.
struct PerturbationSpec {
  Eigen::VectorXd base_killing;  ///< c + β₁
  Eigen::VectorXd kernel_rate;   ///< c · q_o; the kernel acts as f ↦ kernel_rate ⊙ D f
  MechanismConstants constants;
  /// Violated hypotheses (β₁ > 1, c < β₁/(β₁ - 1), K sub-Markovian); empty when all hold.
  std::vector<std::string> warnings;

  bool hypotheses_hold() const { return warnings.empty(); }
};

PerturbationSpec make_perturbation(const BaseModel& model, const OffspringLaw& law);

/// Q_t f by Picard iteration of
///   r_t = T^{c+β₁}_t f + ∫_0^t T^{c+β₁}_{t-u}((c+β₁) K r_u) du.
/// Hypothesis violations are recorded as warnings in the report; the solve still runs.
SemigroupTable solve_Q_picard(const BaseModel& model, const OffspringLaw& law, const ScalarField& f,
                              const SolverMesh& mesh);

/// Q_t f(x) = e^{-(c+β₁)t} E^x[exp(∫_0^t c q_o(X_s) ds) f(X_t)] by Monte Carlo,
/// one estimate per starting state (grid node). Requires constant c and a local law.
std::vector<Estimate> solve_Q_feynman_kac(const BaseModel& model, const OffspringLaw& law, const ScalarField& f,
                                          double t, std::size_t replicas, const SeededStream& stream,
                                          unsigned workers = 1);

/// M_t f = e^{β₁ t} Q_t f, the expected ⟨μ_t, f⟩ started from δ_x.
ScalarField moment_operator(const BaseModel& model, const OffspringLaw& law, const ScalarField& f, double t,
                            const SolverMesh& mesh);

}  // namespace bmp
