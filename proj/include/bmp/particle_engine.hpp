#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "bmp/base_process.hpp"
#include "bmp/branching_mechanism.hpp"
#include "bmp/config_space.hpp"
#include "bmp/estimate.hpp"
#include "bmp/random.hpp"

namespace bmp {

/// A live particle with its Ulam–Harris label (child indices from its root).
struct Particle {
  Point position;
  std::vector<std::uint32_t> lineage;
  double birth_time = 0.0;
};

struct ForestOptions {
  std::size_t cap = 1'000'000;
  /// Keep Ulam–Harris labels of the survivors (costs one vector per particle).
  bool record_lineage = false;
};

struct Forest {
  Configuration alive;
  /// Filled only with ForestOptions::record_lineage.
  std::vector<Particle> particles;
  bool capped = false;
  std::size_t branching_events = 0;
};

/// Runs the branching particle system from mu0 up to time t.
///
/// Each particle follows the base process; its killing clock is realised by
/// thinning a rate-‖c‖_∞ Poisson stream (accept with probability c(x)/‖c‖_∞).
/// At death it is replaced by sample_offspring children. Every particle draws
/// from its own stream, derived from `stream` by its Ulam–Harris label, so the
/// result is independent of traversal order.
Forest simulate_forest(const BaseModel& model, const OffspringLaw& law, const Configuration& mu0, double t,
                       const SeededStream& stream, const ForestOptions& options = {});

enum class FunctionalKind { exponential, linear, multiplicative };

const char* to_string(FunctionalKind kind);

struct ReplicaRecord {
  double value = 0.0;
  std::size_t terminal_size = 0;
  bool capped = false;
};

struct FunctionalRun {
  Estimate estimate;
  std::vector<ReplicaRecord> records;
};

struct EngineOptions {
  std::size_t cap = 1'000'000;
  unsigned workers = 1;
  /// Fraction of capped replicas above which the estimate is rejected.
  double max_capped_fraction = 0.01;
};

/// Averages e_f, l_f or φ̂ (f read as φ) over independent replicas; replica r
/// uses stream.derive(r). Capped replicas are excluded and counted; throws
/// InvalidEstimate when they exceed max_capped_fraction of the total.
FunctionalRun estimate_functional(const BaseModel& model, const OffspringLaw& law, const Configuration& mu0,
                                  double t, const ScalarField& f, FunctionalKind functional, std::size_t replicas,
                                  const SeededStream& stream, const EngineOptions& options = {});

struct BranchingReport {
  Estimate joint;  ///< from μ + ν
  Estimate left;   ///< from μ
  Estimate right;  ///< from ν
  double log_gap = 0.0;  ///< log joint - log left - log right
  double std_error = 0.0;
  double z = 0.0;
};

/// Checks Ĥ_t e_f(μ+ν) = Ĥ_t e_f(μ) · Ĥ_t e_f(ν) with three independent estimates
/// and a delta-method z-score.
BranchingReport verify_branching_property(const BaseModel& model, const OffspringLaw& law, const Configuration& mu,
                                          const Configuration& nu, double t, const ScalarField& f,
                                          std::size_t replicas, const SeededStream& stream,
                                          const EngineOptions& options = {});

}  // namespace bmp
