#include <algorithm>
#include <fstream>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "bmp/errors.hpp"
#include "bmp/harness.hpp"

namespace bmp::harness {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ValidationError("config " + where + ": " + what);
}

template <typename T>
T read(const YAML::Node& node, const std::string& where) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(where, "has the wrong type");
  }
}

template <typename T>
T read_or(const YAML::Node& parent, const char* key, T fallback, const std::string& where) {
  const YAML::Node n = parent[key];
  if (!n) return fallback;
  return read<T>(n, where + "." + key);
}

const YAML::Node& need(const YAML::Node& n, const std::string& where) {
  if (!n) fail(where, "is required");
  return n;
}

std::vector<double> read_vector(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) fail(where, "must be a list of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(read<double>(node[i], where));
  return out;
}

Eigen::MatrixXd read_matrix(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence() || node.size() == 0) fail(where, "must be a nonempty list of rows");
  const std::size_t rows = node.size();
  std::size_t cols = 0;
  std::vector<std::vector<double>> data;
  for (std::size_t i = 0; i < rows; ++i) {
    data.push_back(read_vector(node[i], where));
    cols = std::max(cols, data.back().size());
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < data[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = data[i][j];
  return m;
}

// A scalar, a list of node values, or {constant | values | sin: {offset, amplitude, mode}}.
ScalarField read_field(const YAML::Node& node, const Domain& domain, const std::string& where) {
  if (node.IsScalar()) return ScalarField::constant(domain, read<double>(node, where));
  if (node.IsSequence()) {
    const std::vector<double> v = read_vector(node, where);
    if (v.size() != domain.size) fail(where, "needs one value per state (" + std::to_string(domain.size) + ")");
    return ScalarField(domain, Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  }
  if (node.IsMap()) {
    if (node["constant"]) return ScalarField::constant(domain, read<double>(node["constant"], where + ".constant"));
    if (node["values"]) return read_field(node["values"], domain, where + ".values");
    if (const YAML::Node s = node["sin"]) {
      if (!domain.is_periodic()) fail(where, "sin fields need a periodic state space");
      const double offset = read_or(s, "offset", 0.0, where);
      const double amplitude = read_or(s, "amplitude", 1.0, where);
      const double mode = read_or(s, "mode", 1.0, where);
      Eigen::VectorXd v(static_cast<Eigen::Index>(domain.size));
      for (std::size_t j = 0; j < domain.size; ++j)
        v[static_cast<Eigen::Index>(j)] =
            offset + amplitude * std::sin(2.0 * 3.14159265358979323846 * mode * domain.node(j) / domain.length);
      return ScalarField(domain, v);
    }
  }
  fail(where, "must be a number, a list, or a map with constant/values/sin");
}

Point read_point(const YAML::Node& node, const Domain& domain, const std::string& where) {
  Point p;
  if (domain.is_periodic()) {
    p = Point::at(wrap(read<double>(node, where), domain.length));
  } else {
    const auto s = read<long long>(node, where);
    if (s < 0) fail(where, "site index must be nonnegative");
    p = Point::at_site(static_cast<std::size_t>(s));
  }
  if (!contains(domain, p)) fail(where, "point outside the state space");
  return p;
}

Configuration read_configuration(const YAML::Node& node, const Domain& domain, const std::string& where) {
  Configuration c;
  if (!node) return c;
  if (!node.IsSequence()) fail(where, "must be a list of points");
  for (std::size_t i = 0; i < node.size(); ++i) c.push_back(read_point(node[i], domain, where));
  return c;
}

BaseModel read_model(const YAML::Node& root) {
  const YAML::Node bp = need(root["base_process"], "base_process");
  const std::string kind = read<std::string>(need(bp["kind"], "base_process.kind"), "base_process.kind");
  const YAML::Node killing = root["killing"];
  if (kind == "single_site") {
    const double c = killing ? read<double>(killing.IsMap() ? killing["constant"] : killing, "killing") : 0.0;
    return BaseModel::single_site(c);
  }
  if (kind == "finite_chain") {
    const Eigen::MatrixXd rates = read_matrix(need(bp["rates"], "base_process.rates"), "base_process.rates");
    const Domain d = Domain::discrete(static_cast<std::size_t>(rates.rows()));
    const ScalarField c = killing ? read_field(killing, d, "killing") : ScalarField::constant(d, 0.0);
    return BaseModel::finite_chain(rates, c);
  }
  if (kind == "brownian_torus") {
    const double diffusion = read<double>(need(bp["diffusion"], "base_process.diffusion"), "base_process.diffusion");
    const double length = read_or(bp, "length", 1.0, "base_process");
    const auto grid = read_or<std::size_t>(bp, "grid", 64, "base_process");
    const double step = read_or(bp, "step", 1e-3, "base_process");
    if (!(length > 0.0)) fail("base_process.length", "must be positive");
    if (grid < 3) fail("base_process.grid", "must be at least 3");
    const Domain d = Domain::periodic(grid, length);
    const ScalarField c = killing ? read_field(killing, d, "killing") : ScalarField::constant(d, 0.0);
    return BaseModel::brownian_torus(diffusion, length, grid, c, step);
  }
  fail("base_process.kind", "unknown kind '" + kind + "'");
}

OffspringLaw read_law(const YAML::Node& node, const Domain& domain) {
  const YAML::Node q = need(node["q"], "branching.q");
  Displacement disp;
  if (const YAML::Node dn = node["displacement"]) {
    const std::string k = read_or<std::string>(dn, "kind", "none", "branching.displacement");
    if (k == "gaussian") disp.kind = DisplacementKind::gaussian;
    else if (k == "uniform_ball") disp.kind = DisplacementKind::uniform_ball;
    else if (k != "none") fail("branching.displacement.kind", "unknown kind '" + k + "'");
    disp.parameter = read_or(dn, "parameter", 0.0, "branching.displacement");
  }
  if (q.IsSequence() && q.size() > 0 && q[0].IsSequence()) {
    const Eigen::MatrixXd rows = read_matrix(q, "branching.q");
    if (static_cast<std::size_t>(rows.rows()) != domain.size) fail("branching.q", "needs one row per state");
    return OffspringLaw(domain, rows, disp);
  }
  return OffspringLaw::constant(domain, read_vector(q, "branching.q"), disp);
}

MechanismPhi read_mechanism(const YAML::Node& node) {
  MechanismPhi phi;
  phi.a = read_or(node, "a", 0.0, "mechanism");
  phi.b = read_or(node, "b", 0.0, "mechanism");
  if (const YAML::Node jumps = node["jumps"]) {
    if (!jumps.IsSequence()) fail("mechanism.jumps", "must be a list");
    for (std::size_t i = 0; i < jumps.size(); ++i) {
      const std::string w = "mechanism.jumps[" + std::to_string(i) + "]";
      phi.jumps.push_back({read<double>(need(jumps[i]["size"], w + ".size"), w + ".size"),
                           read<double>(need(jumps[i]["rate"], w + ".rate"), w + ".rate")});
    }
  }
  phi.validate();
  return phi;
}

std::vector<MeasureState> read_measures(const YAML::Node& node, const Domain& domain) {
  std::vector<MeasureState> out;
  if (!node.IsSequence()) fail("experiment.measures", "must be a list of atom lists");
  for (std::size_t i = 0; i < node.size(); ++i) {
    const std::string w = "experiment.measures[" + std::to_string(i) + "]";
    if (!node[i].IsSequence()) fail(w, "must be a list of atoms");
    MeasureState m;
    for (std::size_t j = 0; j < node[i].size(); ++j) {
      const YAML::Node atom = node[i][j];
      const double weight = read<double>(need(atom["weight"], w + ".weight"), w + ".weight");
      if (!(weight >= 0.0)) fail(w, "weights must be nonnegative");
      m.atoms.push_back({read_point(need(atom["point"], w + ".point"), domain, w + ".point"), weight});
    }
    out.push_back(std::move(m));
  }
  return out;
}

FunctionalKind read_functional(const std::string& name) {
  if (name == "exponential" || name == "e_f") return FunctionalKind::exponential;
  if (name == "linear" || name == "l_f") return FunctionalKind::linear;
  if (name == "multiplicative") return FunctionalKind::multiplicative;
  fail("experiment.functional", "unknown functional '" + name + "'");
}

}  // namespace

const BaseModel& ExperimentSpec::base() const {
  if (!model) throw ValidationError("config: base_process is required");
  return *model;
}

const OffspringLaw& ExperimentSpec::offspring() const {
  if (!law) throw ValidationError("config: branching.q is required for this command");
  return *law;
}

const MechanismPhi& ExperimentSpec::phi_mechanism() const {
  if (!mechanism) throw ValidationError("config: mechanism is required for this command");
  return *mechanism;
}

ScalarField ExperimentSpec::phi() const {
  if (experiment.phi) return *experiment.phi;
  return experiment.f.map([](double v) { return std::exp(-v); });
}

ExperimentSpec parse_spec(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ValidationError(std::string("config: parse error: ") + e.what());
  }
  if (!root.IsMap()) throw ValidationError("config: top level must be a map");

  ExperimentSpec spec;
  spec.model = read_model(root);
  const Domain& domain = spec.model->domain();

  if (const YAML::Node b = root["branching"]) spec.law = read_law(b, domain);
  if (const YAML::Node m = root["mechanism"]) spec.mechanism = read_mechanism(m);
  if (spec.law && spec.law->displaced() && spec.model->kind() != ModelKind::brownian_torus)
    fail("branching.displacement", "needs a brownian_torus base process");

  const YAML::Node solver = root["solver"];
  if (solver) {
    spec.mesh.dt = read_or(solver, "dt", spec.mesh.dt, "solver");
    spec.mesh.picard_tol = read_or(solver, "picard_tol", spec.mesh.picard_tol, "solver");
    spec.mesh.max_iters = read_or(solver, "max_iters", spec.mesh.max_iters, "solver");
    const std::string scheme = read_or<std::string>(solver, "scheme", "automatic", "solver");
    if (scheme == "plain") spec.scheme = PicardScheme::plain;
    else if (scheme == "primed") spec.scheme = PicardScheme::primed;
    else if (scheme != "automatic") fail("solver.scheme", "must be automatic, plain or primed");
  }

  if (const YAML::Node mc = root["monte_carlo"]) {
    spec.monte_carlo.replicas = read_or(mc, "replicas", spec.monte_carlo.replicas, "monte_carlo");
    spec.monte_carlo.cap = read_or(mc, "cap", spec.monte_carlo.cap, "monte_carlo");
    spec.monte_carlo.workers = read_or(mc, "workers", spec.monte_carlo.workers, "monte_carlo");
    if (mc["master_seed"]) {
      spec.monte_carlo.master_seed = read<std::uint64_t>(mc["master_seed"], "monte_carlo.master_seed");
      spec.monte_carlo.seed_given = true;
    }
  }
  if (spec.monte_carlo.workers == 0) fail("monte_carlo.workers", "must be at least 1");
  if (spec.monte_carlo.cap == 0) fail("monte_carlo.cap", "must be at least 1");

  const YAML::Node ex = need(root["experiment"], "experiment");
  ExperimentBlock& e = spec.experiment;
  e.t = read<double>(need(ex["t"], "experiment.t"), "experiment.t");
  if (!(e.t >= 0.0) || !std::isfinite(e.t)) fail("experiment.t", "must be finite and >= 0");
  e.initial = read_configuration(ex["initial"], domain, "experiment.initial");
  e.nu = ex["nu"] ? read_configuration(ex["nu"], domain, "experiment.nu") : e.initial;
  e.f = ex["f"] ? read_field(ex["f"], domain, "experiment.f") : ScalarField::constant(domain, 1.0);
  if (!e.f.nonnegative()) fail("experiment.f", "must be nonnegative");
  if (ex["phi"]) {
    e.phi = read_field(ex["phi"], domain, "experiment.phi");
    if (!e.phi->in_unit_range()) fail("experiment.phi", "must take values in [0, 1]");
  }
  e.functional = read_functional(read_or<std::string>(ex, "functional", "exponential", "experiment"));
  e.n_scale = read_or(ex, "n_scale", e.n_scale, "experiment");
  if (e.n_scale == 0) fail("experiment.n_scale", "must be at least 1");
  e.composition_rate = read_or(ex, "composition_rate", e.composition_rate, "experiment");
  if (!(e.composition_rate >= 0.0)) fail("experiment.composition_rate", "must be >= 0");
  if (ex["measures"]) {
    e.measures = read_measures(ex["measures"], domain);
  } else {
    for (const Point& p : e.initial.points()) e.measures.push_back(MeasureState::point_mass(p, 1.0));
  }

  // The solver horizon defaults to the experiment horizon.
  spec.mesh.t_max = solver && solver["t_max"] ? read<double>(solver["t_max"], "solver.t_max") : e.t;
  if (spec.mesh.t_max == 0.0) spec.mesh.t_max = spec.mesh.dt;
  spec.mesh.validate();

  if (const YAML::Node tol = root["tolerances"]) {
    Tolerances& t = spec.tolerances;
    t.quadrature = read_or(tol, "quadrature", t.quadrature, "tolerances");
    t.sigmas = read_or(tol, "sigmas", t.sigmas, "tolerances");
    t.iterate_slack = read_or(tol, "iterate_slack", t.iterate_slack, "tolerances");
    t.invariant = read_or(tol, "invariant", t.invariant, "tolerances");
    t.probe_dt = read_or(tol, "probe_dt", t.probe_dt, "tolerances");
    t.gradient = read_or(tol, "gradient", t.gradient, "tolerances");
    t.composition_relative = read_or(tol, "composition_relative", t.composition_relative, "tolerances");
  }

  if (const YAML::Node out = root["outputs"]) {
    spec.outputs.directory = read_or<std::string>(out, "directory", "", "outputs");
    if (out["formats"]) {
      spec.outputs.formats.clear();
      for (std::size_t i = 0; i < out["formats"].size(); ++i) {
        const auto f = read<std::string>(out["formats"][i], "outputs.formats");
        if (f != "csv" && f != "json") fail("outputs.formats", "must be csv or json");
        spec.outputs.formats.push_back(f);
      }
    }
    spec.outputs.stride = read_or(out, "stride", spec.outputs.stride, "outputs");
    if (spec.outputs.stride == 0) fail("outputs.stride", "must be at least 1");
  }

  if (const YAML::Node checks = root["checks"]) {
    for (std::size_t i = 0; i < checks.size(); ++i) {
      const auto c = read<std::string>(checks[i], "checks");
      if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end())
        fail("checks", "unknown check '" + c + "'");
      spec.checks.push_back(c);
    }
  }
  return spec;
}

ExperimentSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_spec(text.str());
}

}  // namespace bmp::harness
