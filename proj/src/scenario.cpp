#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "CLI11.hpp"
#include "holoflow/verify.hpp"
#include "json.hpp"

namespace holoflow {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::vector<ScenarioConfig> builtinScenarios() {
  std::vector<ScenarioConfig> v;
  {
    ScenarioConfig c;
    c.name = "flat-torus";
    c.modelJson = R"({"kind":"flat-torus","n":3,"counts":[6,6,6]})";
    c.holonomySpec = "trivial";
    c.scheme = FlowScheme::ExplicitFd;
    c.dt = 1e-3;
    c.tEnd = 0.05;
    c.outputEvery = 10;
    c.identityTol = 1e-12;
    v.push_back(c);
  }
  {
    ScenarioConfig c;
    c.name = "round-s3";
    c.modelJson = R"({"kind":"round-sphere","n":3,"radius":1.0})";
    c.holonomySpec = "full";
    c.scheme = FlowScheme::Rk4Ode;
    c.dt = 1e-4;
    c.tEnd = 0.05;
    c.outputEvery = 50;
    c.identityTol = 1e-6;
    v.push_back(c);
  }
  {
    ScenarioConfig c;
    c.name = "product-s2xs2";
    c.modelJson =
        R"({"kind":"product","first":{"kind":"round-sphere","n":2,"radius":1.0},)"
        R"("second":{"kind":"round-sphere","n":2,"radius":1.0}})";
    c.holonomySpec = "ambrose-singer";
    c.scheme = FlowScheme::Rk4Ode;
    c.dt = 1e-3;
    c.tEnd = 0.05;
    c.outputEvery = 5;
    c.identityTol = 1e-5;
    v.push_back(c);
  }
  {
    ScenarioConfig c;
    c.name = "berger-114";
    c.modelJson = R"({"kind":"berger-sphere","coefficients":[1.0,1.0,4.0]})";
    c.holonomySpec = "ambrose-singer";
    c.scheme = FlowScheme::Rk4Ode;
    c.dt = 1e-4;
    c.tEnd = 0.05;
    c.outputEvery = 50;
    c.kmax = 2;
    c.identityTol = 3e-3;
    v.push_back(c);
  }
  {
    ScenarioConfig c;
    c.name = "warped-t3";
    c.modelJson = R"({"kind":"warped-T3","resolution":32,"profile":"generic"})";
    // deliberately smaller than the holonomy algebra: the transported pair
    // is still bracket-closed, so every identity holds while the composite
    // fields stay genuinely nonzero
    c.holonomySpec = "axes:0-1";
    c.scheme = FlowScheme::ExplicitFd;
    c.dt = 1e-4;
    c.tEnd = 0.05;
    c.outputEvery = 50;
    c.identityTol = 0.15;
    v.push_back(c);
  }
  {
    ScenarioConfig c;
    c.name = "warped-t3-split";
    c.modelJson = R"({"kind":"warped-T3","resolution":32,"profile":"split"})";
    c.holonomySpec = "ambrose-singer";
    c.scheme = FlowScheme::ExplicitFd;
    c.dt = 1e-4;
    c.tEnd = 0.05;
    c.outputEvery = 50;
    c.identityTol = 5e-2;
    v.push_back(c);
  }
  return v;
}

json parseModelJson(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad model json: ") + e.what());
  }
}

bool isGridModel(const ScenarioConfig& cfg) {
  const std::string kind = parseModelJson(cfg.modelJson).value("kind", "");
  return kind == "flat-torus" || kind == "warped-T3" || kind == "conformal-T2";
}

// One refinement level: resolution doubled (grid kinds), dt quartered.
ScenarioConfig refinedConfig(const ScenarioConfig& cfg) {
  ScenarioConfig f = cfg;
  f.dt = cfg.dt / 4.0;
  json j = parseModelJson(cfg.modelJson);
  if (j.contains("resolution"))
    j["resolution"] = j["resolution"].get<int>() * 2;
  if (j.contains("counts"))
    for (auto& c : j["counts"]) c = c.get<int>() * 2;
  f.modelJson = j.dump();
  return f;
}

void overrideResolution(ScenarioConfig& cfg, int resolution) {
  json j = parseModelJson(cfg.modelJson);
  if (j.contains("resolution"))
    j["resolution"] = resolution;
  else if (j.contains("counts"))
    for (auto& c : j["counts"]) c = resolution;
  else
    throw ConfigError("scenario '" + cfg.name +
                      "' has no spatial resolution to override");
  cfg.modelJson = j.dump();
}

std::vector<ResidualReport> identityPass(const ScenarioConfig& cfg) {
  FlowState s0 = make_scenario_state(cfg);
  FlowConfig fc;
  fc.dt = cfg.dt;
  fc.scheme = cfg.scheme;
  fc.tEnd = cfg.dt;
  FlowState s1 = advance_flow(s0, fc);
  std::vector<ResidualReport> out;
  for (EvolutionEquation eq :
       {EvolutionEquation::A, EvolutionEquation::B, EvolutionEquation::R,
        EvolutionEquation::T, EvolutionEquation::Rhat,
        EvolutionEquation::That})
    out.push_back(residual_evolution(eq, s0, s1, cfg.identityTol));
  for (ResidualReport& rep : check_commutators(s0, s1, cfg.identityTol))
    out.push_back(std::move(rep));
  return out;
}

std::string formatG17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// ---- scenario registry -----------------------------------------------------

std::vector<std::string> list_scenarios() {
  std::vector<std::string> names;
  for (const auto& c : builtinScenarios()) names.push_back(c.name);
  return names;
}

ScenarioConfig scenario_config(const std::string& name) {
  for (const auto& c : builtinScenarios())
    if (c.name == name) return c;
  throw ConfigError("unknown scenario '" + name + "'");
}

ScenarioConfig scenario_from_json(const std::string& jsonText) {
  json j;
  try {
    j = json::parse(jsonText);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad scenario json: ") + e.what());
  }
  try {
    ScenarioConfig c;
    c.name = j.value("name", std::string("custom"));
    if (!j.contains("model"))
      throw ConfigError("scenario json needs a \"model\" object");
    c.modelJson = j.at("model").dump();
    c.holonomySpec = j.value("holonomySpec", c.holonomySpec);
    c.dt = j.value("dt", c.dt);
    c.tEnd = j.value("tEnd", c.tEnd);
    if (j.contains("scheme"))
      c.scheme = parseFlowScheme(j.at("scheme").get<std::string>());
    c.outputEvery = j.value("outputEvery", c.outputEvery);
    c.kmax = j.value("kmax", c.kmax);
    c.seed = j.value("seed", c.seed);
    c.identityTol = j.value("identityTol", c.identityTol);
    c.algebraTol = j.value("algebraTol", c.algebraTol);
    c.inclusionTol = j.value("inclusionTol", c.inclusionTol);
    c.constantCap = j.value("constantCap", c.constantCap);
    if (c.dt <= 0.0 || c.tEnd <= 0.0)
      throw ConfigError("scenario needs dt > 0 and tEnd > 0");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad scenario json: ") + e.what());
  }
}

Subalgebra scenario_algebra(const ScenarioConfig& cfg, const Geometry& geo) {
  const int n = geo.n();
  WedgeBasis w(n);
  const int m = w.m();
  const std::string& spec = cfg.holonomySpec;
  Subalgebra h;
  h.n = n;
  if (spec == "trivial") return h;
  if (spec == "full") {
    for (int a = 0; a < m; ++a) {
      VectorXd v = VectorXd::Zero(m);
      v(a) = 1.0;
      h.basis.push_back(v);
    }
    return h;
  }
  if (spec.rfind("axes:", 0) == 0) {
    std::stringstream ss(spec.substr(5));
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto dash = item.find('-');
      if (dash == std::string::npos)
        throw ConfigError("bad axes pair '" + item + "' in '" + spec + "'");
      int i = 0, jj = 0;
      try {
        i = std::stoi(item.substr(0, dash));
        jj = std::stoi(item.substr(dash + 1));
      } catch (const std::exception&) {
        throw ConfigError("bad axes pair '" + item + "' in '" + spec + "'");
      }
      if (i < 0 || jj <= i || jj >= n)
        throw ConfigError("axes pair '" + item + "' out of range for n=" +
                          std::to_string(n));
      VectorXd v = VectorXd::Zero(m);
      v(w.index(i, jj)) = 1.0;
      h.basis.push_back(v);
    }
    if (h.basis.empty())
      throw ConfigError("empty axes list in '" + spec + "'");
    if (!is_bracket_closed(w, h.basis, cfg.algebraTol))
      throw ConfigError("axes span in '" + spec +
                        "' is not bracket-closed");
    return h;
  }
  if (spec == "ambrose-singer") {
    std::vector<TwoForm> seeds;
    for (int p = 0; p < geo.points(); ++p) {
      auto sp = ambrose_singer_seeds(geo, p, cfg.kmax);
      seeds.insert(seeds.end(), sp.begin(), sp.end());
    }
    return generate_algebra(w, seeds, cfg.algebraTol);
  }
  throw ConfigError("unknown holonomy spec '" + spec + "'");
}

FlowState make_scenario_state(const ScenarioConfig& cfg) {
  std::unique_ptr<Geometry> geo = makeModelFromConfig(cfg.modelJson);
  WedgeBasis w(geo->n());
  Subalgebra h = scenario_algebra(cfg, *geo);
  return make_flow_state(std::move(geo), w, h);
}

// ---- identity driver -----------------------------------------------------

std::vector<ResidualReport> verify_identities(const ScenarioConfig& cfg) {
  std::vector<ResidualReport> coarse = identityPass(cfg);
  bool refine = isGridModel(cfg);
  if (!refine)
    for (const auto& r : coarse)
      if (2.0 * r.residual >= r.tolerance) refine = true;
  if (!refine) return coarse;
  std::vector<ResidualReport> fine = identityPass(refinedConfig(cfg));
  std::vector<ResidualReport> out;
  out.reserve(coarse.size());
  for (std::size_t i = 0; i < coarse.size(); ++i)
    out.push_back(fold_refinement(coarse[i], fine[i]));
  return out;
}

// ---- holonomy experiment ---------------------------------------------------

HolonomyExperimentReport holonomy_preservation_experiment(
    const ScenarioConfig& cfg) {
  HolonomyExperimentReport rep;
  rep.scenario = cfg.name;
  rep.tolerance = cfg.inclusionTol;

  FlowState s0 = make_scenario_state(cfg);
  const int n = s0.n();
  WedgeBasis w(n);
  const int seedOrder = std::min(cfg.kmax, 2);

  FlowConfig fc;
  fc.dt = cfg.dt;
  fc.scheme = cfg.scheme;
  fc.tEnd = cfg.tEnd;

  double k0 = 0.0, k1 = 0.0, k2 = 0.0;
  Subalgebra terminalAlg;
  terminalAlg.n = n;
  std::vector<std::vector<MatrixXd>> curvatureOps;  // per sample, per point

  auto onSample = [&](const FlowState& snap) {
    SystemState st = build_system_state(snap, 2);
    HolonomySample s;
    s.t = snap.t;
    s.supRmPhat = st.norms.at("Rhat");
    s.supGradPhat = st.norms.at("A");
    s.supA = st.norms.at("A");
    s.supB = st.norms.at("B");
    std::vector<TwoForm> seeds;
    for (int p = 0; p < snap.points(); ++p) {
      auto sp = ambrose_singer_seeds(w, st.curv, p, seedOrder);
      seeds.insert(seeds.end(), sp.begin(), sp.end());
    }
    Subalgebra alg = generate_algebra(w, seeds, cfg.algebraTol);
    HolonomyReport hr = classify_algebra(w, alg, cfg.algebraTol);
    s.dimHol = hr.dim;
    s.blocks = hr.invariantSubspaces;
    s.kaehler = hr.kaehler;
    s.complexResidual = hr.complexResidual;
    double minEig = std::numeric_limits<double>::infinity();
    for (int p = 0; p < snap.points(); ++p) {
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(snap.model->metricAt(p));
      minEig = std::min(minEig, es.eigenvalues().minCoeff());
    }
    s.minMetricEig = minEig;
    k0 = std::max(k0, st.norms.at("Rm"));
    k1 = std::max(k1, st.norms.at("gradRm"));
    k2 = std::max(k2, st.norms.at("grad2Rm"));
    s.k0 = k0;
    s.k1 = k1;
    s.k2 = k2;
    rep.samples.push_back(s);
    terminalAlg = alg;
    std::vector<MatrixXd> ops;
    ops.reserve(snap.points());
    for (int p = 0; p < snap.points(); ++p)
      ops.push_back(w.curvatureOperator(st.curv.r[p]));
    curvatureOps.push_back(std::move(ops));
  };

  try {
    run_flow(s0, fc, cfg.outputEvery, onSample);
    rep.completed = true;
  } catch (const FlowSingularity& e) {
    rep.completed = false;
    rep.failureTime = e.t;
    rep.failureReason = e.what();
  } catch (const AccuracyError& e) {
    rep.completed = false;
    rep.failureTime = rep.samples.empty() ? s0.t : rep.samples.back().t;
    rep.failureReason = e.what();
  }

  rep.terminal = classify_algebra(w, terminalAlg, cfg.algebraTol);

  // inclusion of the curvature image of every output time in the terminal
  // algebra: leak of the curvature operator through the terminal complement
  MatrixXd phatTerm = projection_pair(w, terminalAlg).Phat;
  double leak = 0.0, scale = 0.0;
  for (const auto& ops : curvatureOps)
    for (const MatrixXd& m : ops) {
      leak = std::max(leak, (phatTerm * m).norm());
      scale = std::max(scale, m.norm());
    }
  rep.inclusionResidual = scale > 0.0 ? leak / scale : 0.0;
  rep.pass = rep.completed && rep.inclusionResidual <= rep.tolerance;
  return rep;
}

// ---- report serialization --------------------------------------------------

std::string HolonomyExperimentReport::toJson() const {
  ordered_json j;
  j["scenario"] = scenario;
  j["completed"] = completed;
  j["pass"] = pass;
  j["inclusionResidual"] = inclusionResidual;
  j["tolerance"] = tolerance;
  j["failureTime"] = failureTime;
  j["failureReason"] = failureReason;
  j["terminal"] = ordered_json::parse(terminal.toJson());
  ordered_json arr = ordered_json::array();
  for (const auto& s : samples) {
    ordered_json js;
    js["t"] = s.t;
    js["supRmPhat"] = s.supRmPhat;
    js["supGradPhat"] = s.supGradPhat;
    js["supA"] = s.supA;
    js["supB"] = s.supB;
    js["dimHol"] = s.dimHol;
    js["blocks"] = s.blocks;
    js["kaehler"] = s.kaehler;
    js["complexResidual"] = s.complexResidual;
    js["minMetricEig"] = s.minMetricEig;
    js["K0"] = s.k0;
    js["K1"] = s.k1;
    js["K2"] = s.k2;
    arr.push_back(js);
  }
  j["samples"] = arr;
  return j.dump(2);
}

void HolonomyExperimentReport::writeCsv(std::ostream& out) const {
  out << "t,supRmPhat,supGradPhat,supA,supB,dimHol,minEigG,K0,K1,K2\n";
  for (const auto& s : samples) {
    out << formatG17(s.t) << ',' << formatG17(s.supRmPhat) << ','
        << formatG17(s.supGradPhat) << ',' << formatG17(s.supA) << ','
        << formatG17(s.supB) << ',' << s.dimHol << ','
        << formatG17(s.minMetricEig) << ',' << formatG17(s.k0) << ','
        << formatG17(s.k1) << ',' << formatG17(s.k2) << '\n';
  }
}

// ---- command line ------------------------------------------------------

namespace {

void writeFile(const std::string& dir, const std::string& name,
               const std::string& content) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  const std::filesystem::path path = std::filesystem::path(dir) / name;
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  f << content;
}

std::string reportsJson(const std::string& scenario,
                        const std::vector<ResidualReport>& reports,
                        bool pass) {
  ordered_json j;
  j["scenario"] = scenario;
  j["pass"] = pass;
  ordered_json arr = ordered_json::array();
  for (const auto& r : reports) arr.push_back(ordered_json::parse(r.toJson()));
  j["reports"] = arr;
  return j.dump(2);
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"numerical checks for holonomy-restricted Ricci flow"};
  app.name("holoflow");
  app.require_subcommand(1);

  std::string scenarioName, configPath, outDir;
  double dtOverride = -1.0, tEndOverride = -1.0;
  int resolutionOverride = -1, kmaxOverride = -1;
  long seedOverride = -1;

  auto addCommon = [&](CLI::App* sub) {
    sub->add_option("--scenario", scenarioName, "built-in scenario name");
    sub->add_option("--config", configPath, "scenario config JSON file");
    sub->add_option("--out", outDir, "directory for report files");
    sub->add_option("--dt", dtOverride, "time step override");
    sub->add_option("--tEnd", tEndOverride, "final time override");
    sub->add_option("--resolution", resolutionOverride,
                    "grid resolution override");
    sub->add_option("--seed", seedOverride, "probe seed override");
  };

  CLI::App* vi = app.add_subcommand(
      "verify-identities",
      "residuals of the evolution equations and commutators on one step");
  addCommon(vi);
  CLI::App* rf = app.add_subcommand(
      "run-flow", "run the scenario flow and record the holonomy monitors");
  addCommon(rf);
  CLI::App* hr = app.add_subcommand(
      "holonomy-report",
      "classify the algebra generated by curvature along the flow");
  addCommon(hr);
  hr->add_option("--kmax", kmaxOverride,
                 "derivative order of the generating seeds (0-2)");
  app.add_subcommand("list-scenarios", "print the built-in scenario names");

  std::vector<std::string> argv = args;
  argv.insert(argv.begin(), "holoflow");
  std::vector<char*> cargv;
  cargv.reserve(argv.size());
  for (auto& s : argv) cargv.push_back(s.data());
  try {
    app.parse(static_cast<int>(cargv.size()), cargv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "argument error: " << e.what() << "\n";
    return 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  if (sub == "list-scenarios") {
    for (const auto& name : list_scenarios()) out << name << "\n";
    return 0;
  }

  ScenarioConfig cfg;
  try {
    if (!configPath.empty()) {
      std::ifstream f(configPath);
      if (!f) throw ConfigError("cannot read config file " + configPath);
      std::stringstream buf;
      buf << f.rdbuf();
      cfg = scenario_from_json(buf.str());
    } else if (!scenarioName.empty()) {
      cfg = scenario_config(scenarioName);
    } else {
      throw ConfigError("need --scenario or --config");
    }
    if (dtOverride > 0.0) cfg.dt = dtOverride;
    if (tEndOverride > 0.0) cfg.tEnd = tEndOverride;
    if (resolutionOverride > 0) overrideResolution(cfg, resolutionOverride);
    if (seedOverride >= 0) cfg.seed = static_cast<unsigned>(seedOverride);
    if (kmaxOverride >= 0) {
      if (kmaxOverride > 2)
        throw ConfigError("--kmax supports orders 0-2");
      cfg.kmax = kmaxOverride;
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidInput& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (sub == "verify-identities") {
      std::vector<ResidualReport> reports = verify_identities(cfg);
      bool pass = true;
      for (const auto& r : reports) {
        pass = pass && r.pass;
        out << (r.pass ? "pass" : "FAIL") << ' ' << cfg.name << ' '
            << r.equation << " residual=" << formatG17(r.residual)
            << " tol=" << formatG17(r.tolerance) << "\n";
      }
      writeFile(outDir, cfg.name + "-verify-identities.json",
                reportsJson(cfg.name, reports, pass));
      return pass ? 0 : 1;
    }
    HolonomyExperimentReport rep = holonomy_preservation_experiment(cfg);
    if (sub == "run-flow") {
      std::ostringstream csv;
      rep.writeCsv(csv);
      writeFile(outDir, cfg.name + "-run-flow.json", rep.toJson());
      writeFile(outDir, cfg.name + "-run-flow.csv", csv.str());
    } else {
      writeFile(outDir, cfg.name + "-holonomy-report.json", rep.toJson());
    }
    out << (rep.pass ? "pass" : "FAIL") << ' ' << cfg.name << ' ' << sub
        << " samples=" << rep.samples.size()
        << " dimHol=" << rep.terminal.dim
        << " inclusion=" << formatG17(rep.inclusionResidual);
    if (!rep.completed)
      out << " failed-at=" << formatG17(rep.failureTime) << " ("
          << rep.failureReason << ")";
    out << "\n";
    return rep.pass ? 0 : 1;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    if (!outDir.empty()) {
      ordered_json j;
      j["scenario"] = cfg.name;
      j["error"] = e.what();
      try {
        writeFile(outDir, cfg.name + "-" + sub + ".json", j.dump(2));
      } catch (const std::exception&) {
      }
    }
    return 1;
  }
}

}  // namespace holoflow
