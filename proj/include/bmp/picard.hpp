#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>

#include <Eigen/Core>

#include "bmp/base_process.hpp"
#include "bmp/errors.hpp"
#include "bmp/semigroup_table.hpp"

namespace bmp::detail {

/// Reaction term evaluated at one mesh point: g(h_u) in h_t = P_t φ + ∫ P_{t-u} g(h_u) du.
using Reaction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Free evolution u_j = P^j φ on every mesh point.
inline Eigen::MatrixXd free_evolution(const Propagator& p, const Eigen::VectorXd& phi, std::size_t steps) {
  Eigen::MatrixXd out(phi.size(), static_cast<Eigen::Index>(steps + 1));
  out.col(0) = phi;
  for (std::size_t j = 1; j <= steps; ++j)
    out.col(static_cast<Eigen::Index>(j)) = p.apply(out.col(static_cast<Eigen::Index>(j - 1)));
  return out;
}

/// One Picard sweep: next_j = P^j φ + trapezoid over i ≤ j of P^{j-i} g(prev_i) dt.
///
/// Uses C_j = P^j φ + dt (½ P^j g_0 + Σ_{0<i≤j} P^{j-i} g_i), for which
/// C_j = P C_{j-1} + dt g_j and next_j = P C_{j-1} + dt/2 g_j, so a sweep costs
/// one propagator application per mesh point.
inline Eigen::MatrixXd duhamel_sweep(const Propagator& p, const Eigen::VectorXd& phi, const Eigen::MatrixXd& prev,
                                     const Reaction& reaction) {
  const Eigen::Index cols = prev.cols();
  const double dt = p.dt();
  Eigen::MatrixXd next(prev.rows(), cols);
  next.col(0) = phi;
  Eigen::VectorXd carry = phi + 0.5 * dt * reaction(prev.col(0));
  for (Eigen::Index j = 1; j < cols; ++j) {
    const Eigen::VectorXd g = reaction(prev.col(j));
    const Eigen::VectorXd moved = p.apply(carry);
    next.col(j) = moved + 0.5 * dt * g;
    carry = moved + dt * g;
  }
  return next;
}

/// Sup over all mesh points and states of |a - b|.
inline double table_gap(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// Iterates sweeps from `start` until the gap drops below mesh.picard_tol.
/// `bound(n)` is the a priori bound recorded for the n-th gap.
inline SemigroupTable picard_solve(TableKind kind, const Domain& domain, const SolverMesh& mesh, const Propagator& p,
                                   const Eigen::VectorXd& phi, Eigen::MatrixXd start, const Reaction& reaction,
                                   const std::function<double(std::size_t)>& bound) {
  SemigroupTable table;
  table.kind = kind;
  table.domain = domain;
  table.mesh = mesh;
  const std::size_t steps = mesh.steps();
  table.times = Eigen::VectorXd::LinSpaced(static_cast<Eigen::Index>(steps + 1), 0.0, mesh.t_max);
  Eigen::MatrixXd current = std::move(start);
  for (std::size_t n = 0; n < mesh.max_iters; ++n) {
    Eigen::MatrixXd next = duhamel_sweep(p, phi, current, reaction);
    const double gap = table_gap(next, current);
    table.report.residuals.push_back(gap);
    table.report.bound_trace.push_back(bound(n));
    current = std::move(next);
    table.report.iterations = n + 1;
    table.report.final_residual = gap;
    if (!std::isfinite(gap)) break;
    if (gap < mesh.picard_tol) {
      table.report.converged = true;
      break;
    }
  }
  table.values = std::move(current);
  if (!table.report.converged)
    throw ConvergenceError(std::string("Picard iteration did not converge for ") + to_string(kind) +
                           " (residual " + std::to_string(table.report.final_residual) + " after " +
                           std::to_string(table.report.iterations) + " iterations)");
  return table;
}

}  // namespace bmp::detail
