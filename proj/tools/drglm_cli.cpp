#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "drglm/inference.hpp"
#include "drglm/simlab.hpp"

using nlohmann::json;
using namespace drglm;

namespace {

struct InferenceChoice {
  enum class Kind { none, boot, infl } kind = Kind::none;
  int B = 1000;
  InfluenceMode mode = InfluenceMode::supplement_compatible;
};

// --inference {none | boot:B | if:mode}
InferenceChoice parse_inference(const std::string& text) {
  InferenceChoice c;
  if (text.empty() || text == "none") return c;
  if (text.rfind("boot", 0) == 0) {
    c.kind = InferenceChoice::Kind::boot;
    auto colon = text.find(':');
    if (colon != std::string::npos) c.B = std::stoi(text.substr(colon + 1));
    if (c.B < 2) throw CLI::ValidationError("--inference", "bootstrap B must be >= 2");
    return c;
  }
  if (text.rfind("if", 0) == 0) {
    c.kind = InferenceChoice::Kind::infl;
    auto colon = text.find(':');
    std::string mode = colon == std::string::npos ? "supplement_compatible"
                                                  : text.substr(colon + 1);
    if (mode == "supplement_compatible")
      c.mode = InfluenceMode::supplement_compatible;
    else if (mode == "weighted_consistent")
      c.mode = InfluenceMode::weighted_consistent;
    else
      throw CLI::ValidationError("--inference", "unknown influence mode " + mode);
    return c;
  }
  throw CLI::ValidationError("--inference", "expected none, boot:B or if:mode, got " + text);
}

json estimate_record(const AteEstimate& est) {
  json rec;
  rec["method"] = to_string(est.method);
  rec["psi1"] = est.psi1;
  rec["psi0"] = est.psi0;
  rec["ate"] = est.ate;
  if (est.se) rec["se"] = *est.se;
  if (est.ci) rec["ci"] = {est.ci->first, est.ci->second};
  if (est.inference)
    rec["inference"] =
        *est.inference == InferenceKind::bootstrap ? "bootstrap" : "influence_function";
  return rec;
}

void emit(const json& out, const std::string& out_path) {
  std::string text = out.dump(2);
  if (out_path.empty()) {
    std::cout << text << "\n";
  } else {
    std::ofstream f(out_path);
    if (!f) throw DataError("cannot open output file " + out_path);
    f << text << "\n";
  }
}

int cmd_estimate(const std::string& data_path, const std::string& outcome_formula,
                 const std::string& ps_formula, const std::string& family,
                 const std::string& link, const std::string& estimator,
                 const std::string& inference, std::uint64_t seed, int threads,
                 const std::string& out_path) {
  InferenceChoice inf = parse_inference(inference);
  Family fam = Family::parse(family, link);

  std::cerr << "# drglm estimate | data=" << data_path << " outcome=\"" << outcome_formula
            << "\" ps=\"" << ps_formula << "\" family=" << fam.name()
            << " estimator=" << estimator << " inference=" << inference << " seed=" << seed
            << " threads=" << threads << "\n";

  Dataset ds = read_csv(data_path);
  json out;
  out["data"] = data_path;
  out["outcome_formula"] = outcome_formula;
  out["ps_formula"] = ps_formula;
  out["family"] = fam.family_name();
  out["link"] = fam.link_name();
  out["seed"] = seed;
  json records = json::array();

  if (estimator == "iptw-glm" || estimator == "both") {
    auto [est, bundle] = iptw_glm_ate(ds, outcome_formula, ps_formula, fam);
    if (inf.kind == InferenceChoice::Kind::boot) {
      auto pipeline = [&](const Dataset& d) {
        return iptw_glm_ate(d, outcome_formula, ps_formula, fam).first.ate;
      };
      BootstrapResult br = bootstrap_ci(ds, pipeline, inf.B, seed, threads);
      est.ci = br.ci;
      est.inference = InferenceKind::bootstrap;
      json rec = estimate_record(est);
      rec["B"] = br.B;
      rec["bootstrap_redraws"] = br.n_redrawn;
      records.push_back(rec);
    } else if (inf.kind == InferenceChoice::Kind::infl) {
      InfluenceDecomposition dec = influence_se(bundle, inf.mode);
      json rec = estimate_record(with_influence_ci(est, dec));
      rec["eif_only_se"] = dec.eif_only_se;
      rec["mode"] = inf.mode == InfluenceMode::supplement_compatible
                        ? "supplement_compatible"
                        : "weighted_consistent";
      records.push_back(rec);
    } else {
      records.push_back(estimate_record(est));
    }
  }
  if (estimator == "aipw" || estimator == "both") {
    // the comparator refits per arm, so the formula must exclude the exposure;
    // shared mode is used when it does not
    FormulaAst of = parse(outcome_formula);
    FormulaAst pf = parse(ps_formula);
    bool has_exposure = false;
    for (const auto& v : of.variables()) has_exposure |= v == pf.response;
    AteEstimate est = aipw_ate(ds, outcome_formula, ps_formula, fam,
                               has_exposure ? AipwMode::shared : AipwMode::stratified);
    if (inf.kind == InferenceChoice::Kind::boot) {
      auto pipeline = [&](const Dataset& d) {
        return aipw_ate(d, outcome_formula, ps_formula, fam,
                        has_exposure ? AipwMode::shared : AipwMode::stratified)
            .ate;
      };
      BootstrapResult br = bootstrap_ci(ds, pipeline, inf.B, seed, threads);
      est.ci = br.ci;
      est.inference = InferenceKind::bootstrap;
      json rec = estimate_record(est);
      rec["B"] = br.B;
      records.push_back(rec);
    } else {
      records.push_back(estimate_record(est));
    }
  }
  out["estimates"] = records;
  emit(out, out_path);
  return 0;
}

json summary_record(const json& sc, const SimSummary& s) {
  json rec;
  rec["name"] = sc.value("name", "");
  rec["true_value"] = s.true_value;
  rec["mean_est"] = s.mean_est;
  rec["percent_bias"] = s.percent_bias;
  rec["mean_bias"] = s.mean_bias;
  rec["sd"] = s.sd;
  if (s.coverage_boot) rec["coverage_boot"] = *s.coverage_boot;
  if (s.coverage_if) rec["coverage_if"] = *s.coverage_if;
  if (s.has_aipw) {
    rec["aipw_mean"] = s.aipw_mean;
    rec["aipw_sd"] = s.aipw_sd;
  }
  if (s.mean_infl_se > 0) rec["mean_infl_se"] = s.mean_infl_se;
  if (s.mean_eif_se > 0) rec["mean_eif_se"] = s.mean_eif_se;
  rec["replicates_done"] = s.replicates_done;
  rec["n_failed"] = s.n_failed;
  return rec;
}

ScenarioSpec scenario_from_json(const json& sc, std::optional<int> replicates_override,
                                std::optional<std::uint64_t> seed_override, int threads) {
  static const std::vector<std::string> known = {
      "name",      "dgp",       "n",           "replicates", "family",     "link",
      "ps_spec",   "outcome_spec", "estimators", "inference", "bootstrap_B", "seed"};
  for (auto it = sc.begin(); it != sc.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw DataError("unknown scenario config key: " + it.key());

  ScenarioSpec spec;
  spec.dgp = parse_dgp(sc.at("dgp").get<std::string>());
  spec.n = sc.value("n", 2000);
  spec.replicates = replicates_override.value_or(sc.value("replicates", 500));
  if (sc.contains("family"))
    spec.analysis_family =
        Family::parse(sc.at("family").get<std::string>(), sc.value("link", ""));
  spec.ps_correct = sc.value("ps_spec", "correct") == "correct";
  spec.outcome_correct = sc.value("outcome_spec", "correct") == "correct";
  for (const auto& e : sc.value("estimators", json::array()))
    if (e.get<std::string>() == "aipw") spec.run_aipw = true;
  for (const auto& e : sc.value("inference", json::array())) {
    std::string name = e.get<std::string>();
    if (name == "bootstrap") spec.bootstrap = true;
    else if (name == "influence") spec.influence = true;
    else throw DataError("unknown inference kind in scenario config: " + name);
  }
  spec.bootstrap_B = sc.value("bootstrap_B", 250);
  spec.seed = seed_override.value_or(sc.value("seed", 1));
  spec.threads = threads;
  return spec;
}

int cmd_simulate(const std::string& scenario_path, std::optional<int> replicates_override,
                 std::optional<std::uint64_t> seed_override, int threads,
                 const std::string& out_path) {
  std::ifstream f(scenario_path);
  if (!f) throw DataError("cannot open scenario config " + scenario_path);
  json cfg;
  try {
    f >> cfg;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed scenario config: ") + e.what());
  }
  if (!cfg.contains("scenarios") || !cfg["scenarios"].is_array())
    throw DataError("scenario config must contain a 'scenarios' array");

  json out;
  out["config"] = scenario_path;
  json rows = json::array();
  std::printf("%-40s %10s %10s %8s %8s %8s\n", "scenario", "true", "pbias%", "sd",
              "cov.boot", "cov.if");
  for (const auto& sc : cfg["scenarios"]) {
    ScenarioSpec spec = scenario_from_json(sc, replicates_override, seed_override, threads);
    std::string name = sc.value(
        "name", to_string(spec.dgp) + " " + cell_label(spec.ps_correct, spec.outcome_correct));
    std::cerr << "# drglm simulate | scenario=\"" << name << "\" dgp=" << to_string(spec.dgp)
              << " n=" << spec.n << " replicates=" << spec.replicates
              << " ps=\"" << ps_formula(spec.dgp, spec.ps_correct) << "\" outcome=\""
              << outcome_formula(spec.dgp, spec.outcome_correct)
              << "\" family=" << spec.analysis_family.value_or(default_family(spec.dgp)).name()
              << " seed=" << spec.seed << " threads=" << spec.threads << "\n";
    SimSummary s = run_scenario(spec);
    json rec = summary_record(sc, s);
    rec["name"] = name;
    rows.push_back(rec);
    std::printf("%-40s %10.4f %10.2f %8.4f %8s %8s\n", name.c_str(), s.true_value,
                s.percent_bias, s.sd,
                s.coverage_boot ? std::to_string(*s.coverage_boot).substr(0, 5).c_str() : "-",
                s.coverage_if ? std::to_string(*s.coverage_if).substr(0, 5).c_str() : "-");
  }
  out["results"] = rows;
  if (!out_path.empty()) emit(out, out_path);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly robust average-causal-effect estimation toolkit"};
  app.require_subcommand(1);

  std::string data_path, outcome_formula, ps_formula_s, family = "gaussian", link;
  std::string estimator = "iptw-glm", inference = "none", out_path;
  std::uint64_t seed = 1;
  int threads = 1;
  if (const char* env = std::getenv("DRGLM_THREADS")) threads = std::max(1, std::atoi(env));

  auto* est = app.add_subcommand("estimate", "Estimate the ATE from a CSV dataset");
  est->add_option("--data", data_path, "CSV data file")->required()->check(CLI::ExistingFile);
  est->add_option("--outcome-formula", outcome_formula, "outcome model formula")->required();
  est->add_option("--ps-formula", ps_formula_s, "propensity model formula")->required();
  est->add_option("--family", family, "outcome family");
  est->add_option("--link", link, "outcome link (default: canonical)");
  est->add_option("--estimator", estimator, "iptw-glm | aipw | both")
      ->check(CLI::IsMember({"iptw-glm", "aipw", "both"}));
  est->add_option("--inference", inference, "none | boot:B | if:mode");
  est->add_option("--seed", seed, "RNG seed");
  est->add_option("--threads", threads, "worker threads");
  est->add_option("--out", out_path, "write the JSON record here instead of stdout");

  std::string scenario_path;
  std::optional<int> replicates_override;
  std::optional<std::uint64_t> seed_override;
  auto* sim = app.add_subcommand("simulate", "Run simulation scenarios from a JSON config");
  sim->add_option("--scenario", scenario_path, "scenario config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--replicates", replicates_override, "override replicate count");
  sim->add_option("--seed", seed_override, "override scenario seeds");
  sim->add_option("--threads", threads, "worker threads");
  sim->add_option("--out", out_path, "write the JSON results here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (est->parsed())
      return cmd_estimate(data_path, outcome_formula, ps_formula_s, family, link, estimator,
                          inference, seed, threads, out_path);
    return cmd_simulate(scenario_path, replicates_override, seed_override, threads, out_path);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::string what = e.what();
    // config-shaped problems exit 2, data content problems exit 1
    bool config = what.find("scenario config") != std::string::npos ||
                  what.find("unknown dgp") != std::string::npos;
    std::cerr << (config ? "config error: " : "error: ") << what << "\n";
    return config ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
