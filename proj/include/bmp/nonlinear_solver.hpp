#pragma once

#include "bmp/base_process.hpp"
#include "bmp/branching_mechanism.hpp"
#include "bmp/config_space.hpp"
#include "bmp/semigroup_table.hpp"

namespace bmp {

/// plain: H^0 = T^c φ, H^{n+1} = T^c φ + ∫ T^c_{t-u} c B Ĥ^n_u du.
/// primed: same recursion started from H'^0 = T^c φ + ∫ T^c_{t-u} c B φ̂ du,
/// which keeps H'^n 1 = 1 at every iterate when Σ q_k = 1.
/// automatic: primed for Markovian laws, plain otherwise.
enum class PicardScheme { automatic, plain, primed };

/// Starting table of the chosen scheme on the mesh.
SemigroupTable initial_iterate(const BaseModel& model, const OffspringLaw& law, const ScalarField& phi,
                               const SolverMesh& mesh, PicardScheme scheme = PicardScheme::plain);

/// Next Picard iterate of the nonlinear equation, on prev's mesh.
SemigroupTable picard_step(const BaseModel& model, const OffspringLaw& law, const SemigroupTable& prev,
                           const ScalarField& phi);

/// H_t φ on the mesh. Records the per-iteration gap and its a priori bound.
SemigroupTable solve_H(const BaseModel& model, const OffspringLaw& law, const ScalarField& phi,
                       const SolverMesh& mesh, PicardScheme scheme = PicardScheme::automatic);

/// V_t f = -ln H_t(e^{-f}).
SemigroupTable cumulant_V(const BaseModel& model, const OffspringLaw& law, const ScalarField& f,
                          const SolverMesh& mesh);

/// (H_δ v - v) / δ, the finite-horizon drift of v under the nonlinear semigroup.
ScalarField invariant_residual(const BaseModel& model, const OffspringLaw& law, const ScalarField& v,
                               double probe_dt);

/// V_t f by the method of lines on the gradient form
///   dV/dt = D ΔV - D |∇V|² + c (1 - Σ_k q_k e^{(1-k) V}),
/// central differences in space and classical RK4 in time with step at most
/// `max_dt` (and within the explicit stability limit). Local laws only;
/// brownian_torus or single_site models.
ScalarField solve_cumulant_gradient_form(const BaseModel& model, const OffspringLaw& law, const ScalarField& f,
                                         double t, double max_dt);

/// (x)^n / n!, evaluated in log space.
double power_over_factorial(double x, std::size_t n);

}  // namespace bmp
