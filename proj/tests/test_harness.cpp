#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bmp/errors.hpp"
#include "bmp/harness.hpp"
#include "doctest.h"

using namespace bmp;
using namespace bmp::harness;

namespace {

const char* kFission = R"(
base_process: {kind: single_site}
killing: 1.0
branching: {q: [0, 0, 1]}
solver: {dt: 0.001}
experiment: {t: 1.0, initial: [0], f: 0.5}
monte_carlo: {replicas: 2000, master_seed: 17}
)";

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto p = std::filesystem::temp_directory_path() / ("bmp_harness_" + name);
  std::filesystem::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const ExperimentSpec spec = parse_spec(kFission);
  CHECK(spec.base().kind() == ModelKind::single_site);
  CHECK(spec.offspring().markovian());
  CHECK(spec.mesh.t_max == 1.0);
  CHECK(spec.monte_carlo.seed_given);
  CHECK(spec.experiment.initial.size() == 1);

  CHECK_THROWS_AS(parse_spec("base_process: {kind: nowhere}\nexperiment: {t: 1}"), ValidationError);
  CHECK_THROWS_AS(parse_spec("experiment: {t: 1}"), ValidationError);
  CHECK_THROWS_AS(parse_spec("base_process: {kind: single_site}\nexperiment: {t: 1, f: -1}"), ValidationError);
  CHECK_THROWS_AS(parse_spec("base_process: {kind: single_site}\nbranching: {q: [0.7, 0.7]}\nexperiment: {t: 1}"),
                  ValidationError);
  CHECK_THROWS_AS(parse_spec("base_process: {kind: single_site}\nmechanism: {a: 1, b: -1}\nexperiment: {t: 1}"),
                  ValidationError);
  CHECK_THROWS_AS(parse_spec("base_process: {kind: single_site}\nexperiment: {t: 1, initial: [3]}"),
                  ValidationError);
  CHECK_THROWS_AS(parse_spec("{{{"), ValidationError);
  CHECK_THROWS_AS(load_spec("/nonexistent/spec.yaml"), IoError);
}

TEST_CASE("JSON is an accepted encoding of the same schema") {
  const ExperimentSpec a = parse_spec(kFission);
  const ExperimentSpec b = parse_spec(R"({"base_process": {"kind": "single_site"}, "killing": 1.0,
    "branching": {"q": [0, 0, 1]}, "solver": {"dt": 0.001},
    "experiment": {"t": 1.0, "initial": [0], "f": 0.5},
    "monte_carlo": {"replicas": 2000, "master_seed": 17}})");
  CHECK(canonical_json(run_experiment(a, Command::cumulant).summary) ==
        canonical_json(run_experiment(b, Command::cumulant).summary));
}

TEST_CASE("t = 0 bundle returns e_f of the initial configuration") {
  ExperimentSpec spec = parse_spec(kFission);
  spec.experiment.t = 0.0;
  const ResultBundle b = run_experiment(spec, Command::simulate);
  CHECK(b.summary["estimate"]["mean"].get<double>() == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
  CHECK(b.summary["estimate"]["stderr"].get<double>() == 0.0);
}

TEST_CASE("binary fission cumulant table follows the logistic solution") {
  const ResultBundle b = run_experiment(parse_spec(kFission), Command::cumulant);
  REQUIRE(b.tables.size() == 1);
  const Table& t = b.tables[0];
  CHECK(t.name == "V_of_f");
  CHECK(t.rows.size() == 1001);
  const double h0 = std::exp(-0.5);
  for (const auto& row : t.rows) {
    const double s = row[0].get<double>();
    const double h = h0 * std::exp(-s) / (1.0 - h0 * (1.0 - std::exp(-s)));
    CHECK(row[2].get<double>() == doctest::Approx(-std::log(h)).epsilon(1e-6));
  }
}

TEST_CASE("export formats") {
  SUBCASE("empty estimate list gives a header-only CSV") {
    Table t;
    t.name = "estimates";
    t.header = {"name", "mean", "stderr", "replicas", "capped"};
    CHECK(to_csv(t) == "name,mean,stderr,replicas,capped\n");
  }
  SUBCASE("m rows give m + 1 lines and '.' decimals") {
    Table t;
    t.header = {"a", "b"};
    t.rows = {{1, 0.5}, {2, 1e-20}, {3, -2.25}};
    const std::string csv = to_csv(t);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    CHECK(csv == "a,b\n1,0.5\n2,1e-20\n3,-2.25\n");
  }
  SUBCASE("JSON round-trips byte-identically") {
    const ResultBundle b = run_experiment(parse_spec(kFission), Command::simulate);
    const std::string text = canonical_json(bundle_json(b));
    CHECK(canonical_json(nlohmann::json::parse(text)) == text);
  }
  SUBCASE("number formatting") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(2.0) == "2");
    CHECK(format_number(1.0 / 3.0) == "0.3333333333333333");
  }
}

TEST_CASE("reruns are byte-identical for any worker count") {
  ExperimentSpec spec = parse_spec(kFission);
  const auto one = scratch("w1"), many = scratch("w8");
  spec.monte_carlo.workers = 1;
  export_results(run_experiment(spec, Command::simulate), one, "csv");
  spec.monte_carlo.workers = 8;
  export_results(run_experiment(spec, Command::simulate), many, "csv");
  for (const char* f : {"replicas.csv", "estimates.csv", "summary.json"}) CHECK(slurp(one / f) == slurp(many / f));
  CHECK_THROWS_AS(export_results(ResultBundle{}, "/dev/null/sub", "csv"), IoError);
}

TEST_CASE("verify suite reports PASS lines with references") {
  ExperimentSpec spec = parse_spec(kFission);
  const ResultBundle b = verify_suite(spec, {"mass", "moment", "branching"});
  CHECK(b.summary["passed"].get<bool>());
  for (const auto& c : b.summary["checks"]) {
    CHECK(c["status"] == "PASS");
    CHECK_FALSE(c["identity"].get<std::string>().empty());
  }
  spec.experiment.nu = Configuration{};
  const auto r = run_checks(spec, {"branching"});
  CHECK(r[0].passed);
  CHECK_THROWS_AS(run_checks(spec, {"bogus"}), ValidationError);
  spec.monte_carlo.seed_given = false;
  CHECK_THROWS_AS(run_checks(spec, {"laplace"}), ValidationError);
}
