#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "bmp/config_space.hpp"

namespace bmp {

/// Uniform time mesh on [0, t_max] plus Picard stopping rule.
struct SolverMesh {
  double dt = 1e-3;
  double t_max = 1.0;
  double picard_tol = 1e-12;
  std::size_t max_iters = 200;

  std::size_t steps() const;
  /// Throws ValidationError unless dt > 0, t_max a positive multiple of dt, tol > 0.
  void validate() const;
};

enum class TableKind { H_of_phi, V_of_f, Q_of_f, N_of_f };

const char* to_string(TableKind kind);

struct SolveReport {
  std::size_t iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  /// sup-norm gap between consecutive iterates, one entry per iteration.
  std::vector<double> residuals;
  /// Theoretical a priori bound on each gap.
  std::vector<double> bound_trace;
  std::vector<std::string> warnings;
};

/// t ↦ field on the solver mesh; column k of `values` is the field at times[k].
struct SemigroupTable {
  TableKind kind = TableKind::H_of_phi;
  Domain domain;
  SolverMesh mesh;
  Eigen::VectorXd times;
  Eigen::MatrixXd values;
  SolveReport report;

  std::size_t size() const { return static_cast<std::size_t>(times.size()); }
  ScalarField at(std::size_t k) const {
    return ScalarField(domain, values.col(static_cast<Eigen::Index>(k)));
  }
  ScalarField final() const { return at(size() - 1); }
  /// Index of the mesh point closest to t.
  std::size_t index_of(double t) const;
};

}  // namespace bmp
