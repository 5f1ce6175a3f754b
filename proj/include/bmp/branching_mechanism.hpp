#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "bmp/config_space.hpp"
#include "bmp/random.hpp"

namespace bmp {

enum class DisplacementKind { none, gaussian, uniform_ball };

/// How children are placed relative to the parent. `parameter` is sigma for
/// gaussian and the radius for uniform_ball (state units).
struct Displacement {
  DisplacementKind kind = DisplacementKind::none;
  double parameter = 0.0;
};

/// Local branching law: q_k(x) for k = 0..K_max at every state, plus an
/// i.i.d. displacement rule for the children.
class OffspringLaw {
 public:
  static constexpr std::size_t kDefaultMaxLitter = 8;
  static constexpr double kMarkovTolerance = 1e-12;

  /// `probabilities` is states × (K_max + 1).
  OffspringLaw(Domain domain, Eigen::MatrixXd probabilities, Displacement displacement = {});
  /// Same q at every state.
  static OffspringLaw constant(Domain domain, const std::vector<double>& q, Displacement displacement = {});

  const Domain& domain() const { return domain_; }
  const Eigen::MatrixXd& probabilities() const { return q_; }
  const Displacement& displacement() const { return displacement_; }
  std::size_t max_litter() const { return static_cast<std::size_t>(q_.cols()) - 1; }

  /// Σ_k q_k = 1 at every state.
  bool markovian() const { return markovian_; }
  /// q_o(x) = Σ_k k q_k(x).
  const Eigen::VectorXd& mean_offspring() const { return mean_offspring_; }
  /// Σ_k q_k(x).
  Eigen::VectorXd total_mass() const { return q_.rowwise().sum(); }

  /// Row of probabilities at x (linear interpolation between grid nodes on periodic domains).
  Eigen::VectorXd probabilities_at(const Point& x) const;

  /// Single-child displacement averaging operator D as a dense matrix on the
  /// grid; identity when displacement is none.
  const Eigen::MatrixXd& averaging_operator() const { return averaging_; }
  bool displaced() const { return displacement_.kind != DisplacementKind::none; }

 private:
  Domain domain_;
  Eigen::MatrixXd q_;
  Displacement displacement_;
  Eigen::VectorXd mean_offspring_;
  Eigen::MatrixXd averaging_;
  bool markovian_ = false;
};

struct MechanismConstants {
  double beta1 = 0.0;  ///< ‖B l_1‖_∞ = sup q_o
  double beta0 = 0.0;  ///< ‖c‖_∞ · beta1
  double q_bar = 0.0;
  bool supercritical = false;     ///< beta1 > 1
  bool killing_below_bound = false;  ///< c < beta1 / (beta1 - 1) everywhere
  bool constant_killing = false;

  /// Hypotheses under which the linear perturbation Q_t is defined.
  bool perturbation_hypotheses() const { return supercritical && killing_below_bound; }
};

/// x ↦ Σ_k q_k(x) (D h)(x)^k, i.e. B ĥ for the local kernel with i.i.d. displacement.
ScalarField apply_to_multiplicative(const OffspringLaw& law, const ScalarField& h);

/// Same as apply_to_multiplicative on raw grid values, no range check.
Eigen::VectorXd generating_function(const OffspringLaw& law, const Eigen::VectorXd& h);

/// x ↦ q_o(x) (D f)(x), i.e. B(l_f).
ScalarField apply_to_linear(const OffspringLaw& law, const ScalarField& f);

/// Draws the offspring configuration of a particle destroyed at x.
Configuration sample_offspring(const OffspringLaw& law, const Point& x, SeededStream& stream);

/// Litter size only (no positions); used by engines that place children themselves.
std::size_t sample_litter_size(const OffspringLaw& law, const Point& x, SeededStream& stream);
/// Position of one child of a parent at x.
Point displace(const OffspringLaw& law, const Point& x, SeededStream& stream);

MechanismConstants constants(const OffspringLaw& law, const ScalarField& killing);

}  // namespace bmp
