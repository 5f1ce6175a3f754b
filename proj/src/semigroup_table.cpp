#include "bmp/semigroup_table.hpp"

#include <cmath>

#include "bmp/errors.hpp"

namespace bmp {

std::size_t SolverMesh::steps() const {
  return static_cast<std::size_t>(std::llround(t_max / dt));
}

void SolverMesh::validate() const {
  if (!(dt > 0.0)) throw ValidationError("mesh: dt must be positive");
  if (!(t_max > 0.0)) throw ValidationError("mesh: t_max must be positive");
  const double ratio = t_max / dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw ValidationError("mesh: t_max must be a multiple of dt");
  if (!(picard_tol > 0.0)) throw ValidationError("mesh: picard_tol must be positive");
  if (max_iters == 0) throw ValidationError("mesh: max_iters must be positive");
}

const char* to_string(TableKind kind) {
  switch (kind) {
    case TableKind::H_of_phi:
      return "H_of_phi";
    case TableKind::V_of_f:
      return "V_of_f";
    case TableKind::Q_of_f:
      return "Q_of_f";
    case TableKind::N_of_f:
      return "N_of_f";
  }
  return "unknown";
}

std::size_t SemigroupTable::index_of(double t) const {
  if (size() == 0) return 0;
  const double k = std::round(t / mesh.dt);
  if (k <= 0.0) return 0;
  return std::min(size() - 1, static_cast<std::size_t>(k));
}

}  // namespace bmp
