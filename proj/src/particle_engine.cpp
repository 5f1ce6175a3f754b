#include "bmp/particle_engine.hpp"

#include <cmath>
#include <algorithm>
#include <string>

#include "bmp/errors.hpp"
#include "bmp/parallel.hpp"

namespace bmp {

namespace {

struct Pending {
  Point position;
  double time;
  SeededStream stream;
  std::vector<std::uint32_t> lineage;
};

}  // namespace

const char* to_string(FunctionalKind kind) {
  switch (kind) {
    case FunctionalKind::exponential:
      return "exponential";
    case FunctionalKind::linear:
      return "linear";
    case FunctionalKind::multiplicative:
      return "multiplicative";
  }
  return "unknown";
}

Forest simulate_forest(const BaseModel& model, const OffspringLaw& law, const Configuration& mu0, double t,
                       const SeededStream& stream, const ForestOptions& options) {
  if (!law.markovian()) throw std::logic_error("simulate_forest: the sampler requires a Markovian offspring law");
  if (!(law.domain() == model.domain())) throw ValidationError("model and offspring law must share one state space");
  if (options.cap < mu0.size()) throw std::invalid_argument("simulate_forest: cap below initial population");

  const ScalarField& c = model.killing();
  const double c_bar = c.sup_norm();
  const bool constant_rate = c.max() == c.min();

  Forest forest;
  std::vector<Pending> stack;
  for (std::size_t i = 0; i < mu0.size(); ++i) {
    std::vector<std::uint32_t> label;
    if (options.record_lineage) label.push_back(static_cast<std::uint32_t>(i));
    stack.push_back({mu0.points()[i], 0.0, stream.derive(i), std::move(label)});
  }
  // Reverse so the first root is processed first; order does not affect results.
  std::reverse(stack.begin(), stack.end());

  while (!stack.empty()) {
    if (forest.alive.size() + stack.size() > options.cap) {
      forest.capped = true;
      break;
    }
    Pending item = std::move(stack.back());
    stack.pop_back();
    Point x = item.position;
    double now = item.time;
    SeededStream& s = item.stream;
    bool died = false;
    while (!died) {
      const double wait = c_bar > 0.0 ? s.exponential(c_bar) : t - now;
      if (now + wait >= t) {
        x = advance(model, x, t - now, s);
        forest.alive.push_back(x);
        if (options.record_lineage) forest.particles.push_back({x, item.lineage, item.time});
        break;
      }
      x = advance(model, x, wait, s);
      now += wait;
      if (!constant_rate && s.uniform() * c_bar >= c(x)) continue;
      died = true;
      ++forest.branching_events;
      const std::size_t k = sample_litter_size(law, x, s);
      for (std::size_t j = k; j-- > 0;) {
        SeededStream child = s.derive(j);
        const Point at = displace(law, x, child);
        std::vector<std::uint32_t> label;
        if (options.record_lineage) {
          label = item.lineage;
          label.push_back(static_cast<std::uint32_t>(j));
        }
        stack.push_back({at, now, std::move(child), std::move(label)});
      }
    }
  }
  return forest;
}

FunctionalRun estimate_functional(const BaseModel& model, const OffspringLaw& law, const Configuration& mu0,
                                  double t, const ScalarField& f, FunctionalKind functional, std::size_t replicas,
                                  const SeededStream& stream, const EngineOptions& options) {
  if (functional == FunctionalKind::exponential && !f.nonnegative())
    throw DomainError("estimate_functional: e_f needs f >= 0");
  if (functional == FunctionalKind::multiplicative && !f.in_unit_range())
    throw DomainError("estimate_functional: multiplicative functional needs 0 <= phi <= 1");

  FunctionalRun run;
  run.records.resize(replicas);
  ForestOptions forest_options;
  forest_options.cap = options.cap;
  for_each_index(replicas, options.workers, [&](std::size_t r) {
    const Forest forest = simulate_forest(model, law, mu0, t, stream.derive(r), forest_options);
    ReplicaRecord& rec = run.records[r];
    rec.capped = forest.capped;
    rec.terminal_size = forest.alive.size();
    if (forest.capped) return;
    switch (functional) {
      case FunctionalKind::exponential:
        rec.value = eval_exponential(f, forest.alive);
        break;
      case FunctionalKind::linear:
        rec.value = eval_linear(f, forest.alive);
        break;
      case FunctionalKind::multiplicative:
        rec.value = eval_multiplicative(f, forest.alive);
        break;
    }
  });

  std::vector<double> values;
  values.reserve(replicas);
  std::size_t capped = 0;
  for (const ReplicaRecord& rec : run.records) {
    if (rec.capped) ++capped;
    else values.push_back(rec.value);
  }
  run.estimate = summarize(values, capped);
  run.estimate.replicas = values.size();
  if (replicas > 0 && static_cast<double>(capped) > options.max_capped_fraction * static_cast<double>(replicas))
    throw InvalidEstimate("estimate_functional: " + std::to_string(capped) + " of " + std::to_string(replicas) +
                          " replicas exceeded the population cap");
  return run;
}

BranchingReport verify_branching_property(const BaseModel& model, const OffspringLaw& law, const Configuration& mu,
                                          const Configuration& nu, double t, const ScalarField& f,
                                          std::size_t replicas, const SeededStream& stream,
                                          const EngineOptions& options) {
  BranchingReport report;
  const Configuration joint = add_configurations(mu, nu);
  report.joint =
      estimate_functional(model, law, joint, t, f, FunctionalKind::exponential, replicas, stream.derive(0), options)
          .estimate;
  report.left =
      estimate_functional(model, law, mu, t, f, FunctionalKind::exponential, replicas, stream.derive(1), options)
          .estimate;
  report.right =
      estimate_functional(model, law, nu, t, f, FunctionalKind::exponential, replicas, stream.derive(2), options)
          .estimate;
  report.log_gap = std::log(report.joint.mean) - std::log(report.left.mean) - std::log(report.right.mean);
  auto rel = [](const Estimate& e) { return e.std_error / e.mean; };
  report.std_error = std::sqrt(rel(report.joint) * rel(report.joint) + rel(report.left) * rel(report.left) +
                               rel(report.right) * rel(report.right));
  report.z = report.std_error > 0.0 ? report.log_gap / report.std_error : 0.0;
  return report;
}

}  // namespace bmp
