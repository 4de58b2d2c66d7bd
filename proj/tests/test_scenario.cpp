#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "holoflow/errors.hpp"
#include "holoflow/flow.hpp"
#include "holoflow/holonomy.hpp"
#include "holoflow/model.hpp"
#include "holoflow/verify.hpp"

using namespace holoflow;

namespace {

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int runCli(const std::vector<std::string>& args, std::string* outText = nullptr,
           std::string* errText = nullptr) {
  std::ostringstream out, err;
  int rc = cli_run(args, out, err);
  if (outText) *outText = out.str();
  if (errText) *errText = err.str();
  return rc;
}

const ResidualReport& reportNamed(const std::vector<ResidualReport>& reports,
                                  const std::string& equation) {
  for (const auto& r : reports)
    if (r.equation == equation) return r;
  REQUIRE_MESSAGE(false, "missing report " << equation);
  static ResidualReport dummy;
  return dummy;
}

}  // namespace

TEST_CASE("scenario registry lists the bundled configurations") {
  std::vector<std::string> names = list_scenarios();
  std::vector<std::string> expected = {"flat-torus",   "round-s3",
                                       "product-s2xs2", "berger-114",
                                       "warped-t3",    "warped-t3-split"};
  CHECK(names == expected);
  for (const auto& name : names) CHECK(scenario_config(name).name == name);
  CHECK_THROWS_AS(scenario_config("no-such-scenario"), ConfigError);
}

TEST_CASE("scenario configs parse from json with validation") {
  ScenarioConfig cfg = scenario_from_json(R"({
    "model": {"kind": "flat-torus", "counts": [4, 4, 4]},
    "holonomySpec": "axes:0-1",
    "dt": 5e-4, "tEnd": 0.01, "scheme": "explicit-fd",
    "outputEvery": 3, "identityTol": 1e-4
  })");
  CHECK(cfg.name == "custom");
  CHECK(cfg.holonomySpec == "axes:0-1");
  CHECK(cfg.dt == 5e-4);
  CHECK(cfg.scheme == FlowScheme::ExplicitFd);
  CHECK(cfg.outputEvery == 3);
  CHECK(cfg.identityTol == 1e-4);
  // defaults survive when a field is omitted
  ScenarioConfig bare = scenario_from_json(R"({"model": {"kind": "round-sphere",
    "n": 3, "radius": 1.0}})");
  CHECK(bare.holonomySpec == "full");
  CHECK(bare.dt > 0.0);

  CHECK_THROWS_AS(scenario_from_json("not json"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"dt": 1e-3})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(R"({"model": "flat-torus"})"), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(
                      R"({"model": {"kind": "flat-torus", "counts": [4,4,4]},
                          "dt": -1.0})"),
                  ConfigError);
  CHECK_THROWS_AS(scenario_from_json(
                      R"({"model": {"kind": "flat-torus", "counts": [4,4,4]},
                          "scheme": "leapfrog"})"),
                  ConfigError);
}

TEST_CASE("holonomy specs construct the advertised algebras") {
  ScenarioConfig cfg = scenario_config("flat-torus");
  auto geo = makeModelFromConfig(cfg.modelJson);
  WedgeBasis w(geo->n());

  cfg.holonomySpec = "trivial";
  CHECK(scenario_algebra(cfg, *geo).dim() == 0);

  cfg.holonomySpec = "full";
  Subalgebra full = scenario_algebra(cfg, *geo);
  CHECK(full.dim() == w.dim());
  for (int a = 0; a < full.dim(); ++a)
    for (int b = 0; b < w.dim(); ++b)
      CHECK(full.basis[a](b) == (a == b ? 1.0 : 0.0));  // exact unit vectors

  cfg.holonomySpec = "axes:0-1";
  Subalgebra axis = scenario_algebra(cfg, *geo);
  REQUIRE(axis.dim() == 1);
  CHECK(axis.basis[0](w.index(0, 1)) == 1.0);

  cfg.holonomySpec = "axes:0-1,1-2";  // brackets leave the span
  CHECK_THROWS_AS(scenario_algebra(cfg, *geo), ConfigError);
  cfg.holonomySpec = "axes:";
  CHECK_THROWS_AS(scenario_algebra(cfg, *geo), ConfigError);
  cfg.holonomySpec = "axes:2-9";
  CHECK_THROWS_AS(scenario_algebra(cfg, *geo), ConfigError);
  cfg.holonomySpec = "axes:1-1";
  CHECK_THROWS_AS(scenario_algebra(cfg, *geo), ConfigError);
  cfg.holonomySpec = "everything";
  CHECK_THROWS_AS(scenario_algebra(cfg, *geo), ConfigError);
}

TEST_CASE("identity verification folds refinement orders on a grid scenario") {
  ScenarioConfig cfg = scenario_from_json(R"({
    "name": "warped-coarse",
    "model": {"kind": "warped-T3", "resolution": 16, "profile": "generic"},
    "holonomySpec": "axes:0-1",
    "dt": 2e-4, "tEnd": 0.01, "scheme": "explicit-fd",
    "identityTol": 1.0
  })");
  std::vector<ResidualReport> reports = verify_identities(cfg);
  REQUIRE(reports.size() == 10);
  for (const auto& rep : reports) {
    CAPTURE(rep.equation);
    CHECK(rep.pass);
  }
  // finite-difference-dominated residuals must show second-order decay
  CHECK(reportNamed(reports, "B").spatialOrder >= 1.5);
  CHECK(reportNamed(reports, "heat-nabla").spatialOrder >= 1.5);
  CHECK(reportNamed(reports, "heat-nabla").residual > 1e-8);
}

TEST_CASE("identity verification refines homogeneous scenarios near tolerance") {
  // tolerance chosen so 2×residual crosses it: the rerun at dt/4 must show
  // the time discretization order instead of letting the check scrape by
  ScenarioConfig cfg = scenario_config("berger-114");
  cfg.identityTol = 1e-3;
  std::vector<ResidualReport> reports = verify_identities(cfg);
  REQUIRE(reports.size() == 10);
  const ResidualReport& tEq = reportNamed(reports, "T");
  CHECK(tEq.pass);
  CHECK(tEq.residual > 1e-5);
  CHECK(tEq.temporalOrder >= 1.5);  // exact in space, O(dt²) in time

  // a comfortable margin skips the refinement rerun entirely
  ScenarioConfig easy = scenario_config("round-s3");
  std::vector<ResidualReport> clean = verify_identities(easy);
  REQUIRE(clean.size() == 10);
  for (const auto& rep : clean) {
    CHECK(rep.pass);
    CHECK(rep.spatialOrder == 0.0);
    CHECK(rep.temporalOrder == 0.0);
  }
}

TEST_CASE("holonomy experiment certifies the product scenario") {
  ScenarioConfig cfg = scenario_config("product-s2xs2");
  cfg.tEnd = 0.02;
  cfg.outputEvery = 5;
  HolonomyExperimentReport rep = holonomy_preservation_experiment(cfg);
  CHECK(rep.completed);
  CHECK(rep.pass);
  CHECK(rep.terminal.dim == 2);
  CHECK(rep.terminal.kaehler);
  CHECK(rep.terminal.complexResidual < 1e-8);
  CHECK(rep.inclusionResidual <= rep.tolerance);
  REQUIRE(!rep.samples.empty());
  for (const auto& s : rep.samples) {
    CHECK(s.blocks == std::vector<int>{2, 2});
    CHECK(s.supRmPhat < 1e-10);
    CHECK(s.supGradPhat < 1e-10);
  }
  CHECK(rep.samples.back().t == doctest::Approx(0.02).epsilon(1e-6));
}

TEST_CASE("holonomy experiment keeps the split-profile blocks constant") {
  ScenarioConfig cfg = scenario_config("warped-t3-split");
  cfg.tEnd = 0.02;
  HolonomyExperimentReport rep = holonomy_preservation_experiment(cfg);
  CHECK(rep.completed);
  CHECK(rep.pass);
  CHECK(rep.terminal.dim == 1);
  REQUIRE(!rep.samples.empty());
  for (const auto& s : rep.samples) {
    CHECK(s.dimHol == 1);
    CHECK(s.blocks == std::vector<int>{2, 1});
    CHECK(s.supGradPhat < 1e-10);  // the distinguished projection is parallel
  }
}

TEST_CASE("holonomy experiment reports the round-sphere collapse") {
  ScenarioConfig cfg = scenario_config("round-s3");
  cfg.tEnd = 0.3;  // the radius-1 sphere cannot reach this time
  HolonomyExperimentReport rep = holonomy_preservation_experiment(cfg);
  CHECK(!rep.completed);
  CHECK(!rep.pass);
  CHECK(rep.failureTime > 0.2);
  CHECK(rep.failureTime < 0.26);
  CHECK(!rep.failureReason.empty());
  REQUIRE(!rep.samples.empty());
  // curvature blow-up is visible in the running sup before the failure
  CHECK(rep.samples.back().k0 > 10.0 * rep.samples.front().k0);
}

TEST_CASE("cli subcommands report usage and config errors") {
  std::string out, err;
  CHECK(runCli({"list-scenarios"}, &out) == 0);
  for (const auto& name : list_scenarios())
    CHECK(out.find(name) != std::string::npos);

  CHECK(runCli({}, &out, &err) == 2);
  CHECK(runCli({"frobnicate"}, &out, &err) == 2);
  CHECK(runCli({"verify-identities"}, &out, &err) == 2);  // needs a scenario
  CHECK(runCli({"verify-identities", "--scenario", "nope"}, &out, &err) == 2);
  CHECK(runCli({"run-flow", "--config", "/no/such/file.json"}, &out, &err) ==
        2);
  CHECK(runCli({"holonomy-report", "--scenario", "berger-114", "--kmax", "3"},
               &out, &err) == 2);
  CHECK(runCli({"--help"}, &out, &err) == 0);
  CHECK(out.find("Usage") != std::string::npos);
}

TEST_CASE("cli verify-identities runs a scenario end to end") {
  auto dir = std::filesystem::temp_directory_path() / "holoflow-cli-vi";
  std::filesystem::remove_all(dir);
  std::string out;
  int rc = runCli({"verify-identities", "--scenario", "flat-torus", "--out",
                   dir.string()},
                  &out);
  CHECK(rc == 0);
  CHECK(out.find("pass flat-torus A") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "flat-torus-verify-identities.json"));
}

TEST_CASE("cli run-flow writes deterministic reports") {
  auto base = std::filesystem::temp_directory_path() / "holoflow-cli-rf";
  std::filesystem::remove_all(base);
  std::vector<std::string> texts;
  for (int pass = 0; pass < 2; ++pass) {
    auto dir = base / (pass == 0 ? "a" : "b");
    std::string out;
    int rc = runCli({"run-flow", "--scenario", "product-s2xs2", "--tEnd",
                     "0.02", "--out", dir.string()},
                    &out);
    CHECK(rc == 0);
    CHECK(out.find("pass product-s2xs2") != std::string::npos);
    texts.push_back(slurp(dir / "product-s2xs2-run-flow.json") +
                    slurp(dir / "product-s2xs2-run-flow.csv"));
  }
  CHECK(texts[0] == texts[1]);  // byte-identical rerun

  // the CSV carries one row per sample with the holonomy dimension column
  auto csv = slurp(base / "a" / "product-s2xs2-run-flow.csv");
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);
  CHECK(line ==
        "t,supRmPhat,supGradPhat,supA,supB,dimHol,minEigG,K0,K1,K2");
  int rows = 0;
  while (std::getline(lines, line)) {
    ++rows;
    std::size_t c1 = 0;
    for (int skip = 0; skip < 5; ++skip) c1 = line.find(',', c1) + 1;
    CHECK(line.substr(c1, line.find(',', c1) - c1) == "2");
  }
  CHECK(rows >= 2);
}

TEST_CASE("cli run-flow surfaces a singular flow as a numerical failure") {
  auto dir = std::filesystem::temp_directory_path() / "holoflow-cli-sing";
  std::filesystem::remove_all(dir);
  std::string out;
  int rc = runCli({"run-flow", "--scenario", "round-s3", "--tEnd", "0.3",
                   "--out", dir.string()},
                  &out);
  CHECK(rc == 1);
  CHECK(out.find("FAIL round-s3") != std::string::npos);
  CHECK(out.find("failed-at=") != std::string::npos);
  auto json = slurp(dir / "round-s3-run-flow.json");  // partial report kept
  CHECK(json.find("\"completed\": false") != std::string::npos);
}

TEST_CASE("cli holonomy-report classifies the berger scenario") {
  auto dir = std::filesystem::temp_directory_path() / "holoflow-cli-hr";
  std::filesystem::remove_all(dir);
  std::string out;
  int rc = runCli({"holonomy-report", "--scenario", "berger-114", "--kmax",
                   "2", "--out", dir.string()},
                  &out);
  CHECK(rc == 0);
  CHECK(out.find("dimHol=3") != std::string::npos);
  auto json = slurp(dir / "berger-114-holonomy-report.json");
  CHECK(json.find("SO(3)") != std::string::npos);
}
