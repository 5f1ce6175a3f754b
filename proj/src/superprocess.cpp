#include "bmp/superprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bmp/errors.hpp"
#include "bmp/nonlinear_solver.hpp"
#include "bmp/parallel.hpp"
#include "bmp/picard.hpp"

namespace bmp {

double MechanismPhi::operator()(double lambda) const {
  double v = -b * lambda - a * lambda * lambda;
  for (const JumpAtom& j : jumps) v += j.rate * (-std::expm1(-lambda * j.size) - lambda * j.size);
  return v;
}

void MechanismPhi::validate() const {
  if (!(a >= 0.0) || !std::isfinite(a)) throw ValidationError("mechanism: a must be >= 0");
  if (!(b >= 0.0) || !std::isfinite(b)) throw ValidationError("mechanism: b must be >= 0 (shift b before use)");
  for (const JumpAtom& j : jumps) {
    if (!(j.size > 0.0) || !std::isfinite(j.size)) throw ValidationError("mechanism: jump sizes must be positive");
    if (!(j.rate >= 0.0) || !std::isfinite(j.rate)) throw ValidationError("mechanism: jump rates must be >= 0");
  }
  const double h = 0.05;
  for (int i = 1; i < 200; ++i) {
    const double x = i * h;
    const double second = (*this)(x + h) - 2.0 * (*this)(x) + (*this)(x - h);
    if (second > 1e-12 * (1.0 + std::abs((*this)(x)))) throw ValidationError("mechanism: Phi is not concave");
    if ((*this)(x) > 1e-12) throw ValidationError("mechanism: Phi must be nonpositive");
  }
}

bool MechanismPhi::is_zero() const {
  return a == 0.0 && b == 0.0 && std::all_of(jumps.begin(), jumps.end(), [](const JumpAtom& j) { return j.rate == 0.0; });
}

double MeasureState::total_mass() const {
  double m = 0.0;
  for (const MeasureAtom& at : atoms) m += at.weight;
  return m;
}

double MeasureState::integrate(const ScalarField& f) const {
  double s = 0.0;
  for (const MeasureAtom& at : atoms) s += at.weight * f(at.point);
  return s;
}

SemigroupTable solve_cumulant_N(const BaseModel& model, const MechanismPhi& phi, const ScalarField& f,
                                const SolverMesh& mesh) {
  mesh.validate();
  phi.validate();
  if (!(f.domain() == model.domain())) throw ValidationError("solve_cumulant_N: f must live on the model's state space");
  if (!f.nonnegative()) throw DomainError("solve_cumulant_N: f must be nonnegative");
  const auto n = static_cast<Eigen::Index>(model.domain().size);
  const Propagator p(model, Eigen::VectorXd::Constant(n, phi.b), mesh.dt);
  MechanismPhi rest = phi;
  rest.b = 0.0;
  const detail::Reaction reaction = [rest](const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return v.unaryExpr([&](double x) { return rest(std::max(x, 0.0)); });
  };
  const double norm = f.sup_norm();
  double lipschitz = 2.0 * phi.a * norm;
  for (const JumpAtom& j : phi.jumps) lipschitz += j.rate * j.size;
  const double lt = lipschitz * mesh.t_max;
  return detail::picard_solve(TableKind::N_of_f, model.domain(), mesh, p, f.values(),
                              detail::free_evolution(p, f.values(), mesh.steps()), reaction,
                              [=](std::size_t k) { return power_over_factorial(lt, k + 1) * norm; });
}

namespace {

struct Approximation {
  BaseModel model;
  OffspringLaw law;
};

// Constant-rate branching system whose weight-1/n empirical measure
// approximates the (Y, Φ)-superprocess.
Approximation particle_system(const BaseModel& model, const MechanismPhi& phi, std::size_t n_scale) {
  const double n = static_cast<double>(n_scale);
  const double split = 2.0 * phi.a * n;
  double death = phi.b;
  std::size_t max_litter = 2;
  for (const JumpAtom& j : phi.jumps) {
    death += j.rate * j.size;
    max_litter = std::max(max_litter, 1 + static_cast<std::size_t>(std::max(1.0, std::round(j.size * n))));
  }
  double total = split + death;
  for (const JumpAtom& j : phi.jumps) total += j.rate / n;

  const Domain& d = model.domain();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.size), static_cast<Eigen::Index>(max_litter + 1));
  if (total > 0.0) {
    q.col(0).setConstant((0.5 * split + death) / total);
    q.col(2).array() += 0.5 * split / total;
    for (const JumpAtom& j : phi.jumps) {
      const auto k = static_cast<Eigen::Index>(1 + std::max(1.0, std::round(j.size * n)));
      q.col(k).array() += j.rate / n / total;
    }
    // Absorb rounding so rows sum to exactly one.
    q.col(0).array() += 1.0 - q.rowwise().sum().array();
  } else {
    q.col(1).setConstant(1.0);
  }
  return {model.with_killing(ScalarField::constant(d, total)), OffspringLaw(d, q)};
}

Configuration to_particles(const MeasureState& mu, std::size_t n_scale, const Domain& d) {
  Configuration config;
  for (const MeasureAtom& at : mu.atoms) {
    if (!(at.weight >= 0.0)) throw ValidationError("measure: weights must be nonnegative");
    if (!contains(d, at.point)) throw ValidationError("measure: atom outside the state space");
    const auto count = static_cast<std::size_t>(std::llround(at.weight * static_cast<double>(n_scale)));
    for (std::size_t i = 0; i < count; ++i) config.push_back(at.point);
  }
  return config;
}

MeasureState to_measure(const Configuration& config, std::size_t n_scale) {
  MeasureState out;
  out.atoms.reserve(config.size());
  const double w = 1.0 / static_cast<double>(n_scale);
  for (const Point& p : config.points()) out.atoms.push_back({p, w});
  return out;
}

SuperprocessSample run_path(const Approximation& sys, const MeasureState& mu0, double t, std::size_t n_scale,
                            const SeededStream& stream, std::size_t cap) {
  if (t == 0.0) return {mu0, false};
  const Configuration start = to_particles(mu0, n_scale, sys.model.domain());
  if (start.size() > cap) return {{}, true};
  ForestOptions options;
  options.cap = cap;
  const Forest forest = simulate_forest(sys.model, sys.law, start, t, stream, options);
  if (forest.capped) return {{}, true};
  return {to_measure(forest.alive, n_scale), false};
}

}  // namespace

SuperprocessSample approx_superprocess_path(const BaseModel& model, const MechanismPhi& phi, const MeasureState& mu0,
                                            double t, std::size_t n_scale, const SeededStream& stream,
                                            std::size_t cap) {
  phi.validate();
  if (n_scale == 0) throw ValidationError("superprocess: n_scale must be >= 1");
  if (t < 0.0) throw std::invalid_argument("superprocess: t must be nonnegative");
  return run_path(particle_system(model, phi, n_scale), mu0, t, n_scale, stream, cap);
}

namespace {

void check_capped(std::size_t capped, std::size_t replicas, const EngineOptions& options) {
  if (replicas > 0 && static_cast<double>(capped) > options.max_capped_fraction * static_cast<double>(replicas))
    throw InvalidEstimate(std::to_string(capped) + " of " + std::to_string(replicas) +
                          " replicas exceeded the population cap");
}

struct PairRecord {
  double laplace = 0.0;
  double mass = 0.0;
  double count = 0.0;
  bool capped = false;
};

std::vector<Estimate> reduce(const std::vector<PairRecord>& records, const EngineOptions& options) {
  std::vector<double> a, b, c;
  std::size_t capped = 0;
  for (const PairRecord& r : records) {
    if (r.capped) {
      ++capped;
      continue;
    }
    a.push_back(r.laplace);
    b.push_back(r.mass);
    c.push_back(r.count);
  }
  check_capped(capped, records.size(), options);
  return {summarize(a, capped), summarize(b, capped), summarize(c, capped)};
}

}  // namespace

SuperprocessRun estimate_superprocess(const BaseModel& model, const MechanismPhi& phi, const MeasureState& mu0,
                                      double t, const ScalarField& f, std::size_t n_scale, std::size_t replicas,
                                      const SeededStream& stream, const EngineOptions& options) {
  phi.validate();
  if (n_scale == 0) throw ValidationError("superprocess: n_scale must be >= 1");
  if (!f.nonnegative()) throw DomainError("superprocess: f must be nonnegative");
  const Approximation sys = particle_system(model, phi, n_scale);
  std::vector<PairRecord> records(replicas);
  for_each_index(replicas, options.workers, [&](std::size_t r) {
    const SuperprocessSample s = run_path(sys, mu0, t, n_scale, stream.derive(r), options.cap);
    records[r] = {std::exp(-s.state.integrate(f)), s.state.total_mass(), 0.0, s.capped};
  });
  const auto e = reduce(records, options);
  return {e[0], e[1]};
}

CompositionRun compose_discrete_over_measure(const BaseModel& model, const MechanismPhi& phi,
                                             const OffspringLaw& law, double c,
                                             const std::vector<MeasureState>& mu0, double t, const ScalarField& f,
                                             std::size_t n_scale, std::size_t replicas, const SeededStream& stream,
                                             const EngineOptions& options) {
  phi.validate();
  if (n_scale == 0) throw ValidationError("composition: n_scale must be >= 1");
  if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("composition: c must be >= 0");
  if (!law.markovian()) throw ValidationError("composition: the offspring law must be Markovian");
  if (!f.nonnegative()) throw DomainError("composition: f must be nonnegative");
  const Eigen::MatrixXd& q = law.probabilities();
  for (Eigen::Index k = 0; k < q.cols(); ++k)
    if ((q.col(k).array() != q(0, k)).any()) throw ValidationError("composition: q must be constant");
  const Eigen::VectorXd qrow = q.row(0).transpose();
  const double q_o = law.mean_offspring()[0];

  CompositionRun run;
  run.beta_ceiling = c + q_o - c * q_o;
  run.hypothesis_holds = c > 0.0 && qrow[0] == 0.0 && run.beta_ceiling > 0.0;

  const Approximation sys = particle_system(model, phi, n_scale);
  struct Item {
    MeasureState state;
    double time;
    SeededStream stream;
  };

  std::vector<PairRecord> records(replicas);
  for_each_index(replicas, options.workers, [&](std::size_t r) {
    const SeededStream replica = stream.derive(r);
    std::vector<Item> stack;
    for (std::size_t i = mu0.size(); i-- > 0;) stack.push_back({mu0[i], 0.0, replica.derive(i)});
    PairRecord rec;
    double exponent = 0.0;
    std::size_t alive = 0;
    while (!stack.empty()) {
      if (alive + stack.size() > options.cap) {
        rec.capped = true;
        break;
      }
      Item item = std::move(stack.back());
      stack.pop_back();
      const double life = c > 0.0 ? item.stream.exponential(c) : t - item.time;
      const double span = std::min(life, t - item.time);
      const SuperprocessSample moved = run_path(sys, item.state, span, n_scale, item.stream.derive(0), options.cap);
      if (moved.capped) {
        rec.capped = true;
        break;
      }
      if (item.time + life >= t) {
        ++alive;
        exponent += moved.state.integrate(f);
        rec.mass += moved.state.total_mass();
        continue;
      }
      const std::size_t k = item.stream.categorical(qrow);
      for (std::size_t j = k; j-- > 0;) stack.push_back({moved.state, item.time + life, item.stream.derive(1 + j)});
    }
    rec.laplace = std::exp(-exponent);
    rec.count = static_cast<double>(alive);
    records[r] = rec;
  });
  const auto e = reduce(records, options);
  run.laplace = e[0];
  run.mass = e[1];
  run.particles = e[2];
  return run;
}

}  // namespace bmp
