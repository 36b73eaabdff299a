#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drglm/estimators.hpp"
#include "drglm/inference.hpp"

namespace drglm {

enum class Dgp {
  gaussian,
  inverse_gaussian,
  poisson,
  bernoulli,
  log_binomial,
  residual_confounding,
};

Dgp parse_dgp(const std::string& name);
std::string to_string(Dgp dgp);

/// Coefficients (gamma0, beta, gamma1, gamma2, gamma3) of the outcome linear
/// predictor eta = g0 + b x + g1 z1 + g2 z1^2 + g3 z2, plus the true ATE.
struct DgpTruth {
  Eigen::VectorXd coefficients;
  double true_ate = 0;
  double mc_se = 0;            // 0 when analytic
  std::string provenance;      // "analytic" or "monte_carlo"
};

DgpTruth dgp_truth(Dgp dgp);

/// The analysis family each simulation setting uses.
Family default_family(Dgp dgp);

/// Model formulas per misspecification arm. The correct propensity model is
/// `x ~ z1 + I(z1^2) + z2`; the misspecified one drops the curvature and z2.
std::string ps_formula(Dgp dgp, bool correct);
std::string outcome_formula(Dgp dgp, bool correct);

/// Draws one dataset (columns y, x, z1, z2 — or y, x, c, v for the residual
/// confounding counterexample). Deterministic in (dgp, n, seed). Inadmissible
/// inverse-gaussian means trigger a row redraw, counted in *rejected.
Dataset generate(Dgp dgp, Eigen::Index n, std::uint64_t seed, int* rejected = nullptr);

/// Monte Carlo counterfactual mean difference over `reps` covariate draws.
std::pair<double, double> true_ate(Dgp dgp, std::int64_t reps, std::uint64_t seed = 20240901);

struct ScenarioSpec {
  Dgp dgp = Dgp::gaussian;
  Eigen::Index n = 2000;
  int replicates = 500;
  std::optional<Family> analysis_family;  // default_family(dgp) when unset
  bool ps_correct = true;
  bool outcome_correct = true;
  bool run_aipw = false;
  bool bootstrap = false;
  int bootstrap_B = 250;
  bool influence = false;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct SimSummary {
  double true_value = 0;
  double mean_est = 0;
  double percent_bias = 0;  // signed, denominator |true|
  double mean_bias = 0;
  double sd = 0;
  std::optional<double> coverage_boot;  // percent
  std::optional<double> coverage_if;
  double mean_infl_se = 0;
  double mean_eif_se = 0;
  double aipw_mean = 0;
  double aipw_sd = 0;
  bool has_aipw = false;
  int replicates_done = 0;
  int n_failed = 0;
};

/// Runs one scenario cell; replicate r is a pure function of (seed, r).
/// More than 1% replicate failures aborts the scenario.
SimSummary run_scenario(const ScenarioSpec& spec);

std::string cell_label(bool ps_correct, bool outcome_correct);

struct EfficiencyRow {
  Dgp dgp;
  Eigen::Index n = 0;
  std::string cell;
  double sd_iptw_glm = 0;
  double sd_aipw = 0;
};

/// SDs of the IPTW-GLM and AIPW estimates across the three misspecification
/// cells with at least one correct model, per sample size and setting.
std::vector<EfficiencyRow> run_efficiency_grid(const std::vector<Eigen::Index>& ns,
                                               const std::vector<Dgp>& dgps, int replicates,
                                               std::uint64_t seed, int threads = 1);

struct SeComparisonRow {
  Dgp dgp;
  std::string cell;
  double emp_sd = 0;
  double mean_eif_se = 0;
  double mean_infl_se = 0;
};

/// Empirical SD vs mean influence-function SEs across all four cells.
std::vector<SeComparisonRow> run_se_comparison(const std::vector<Dgp>& dgps, Eigen::Index n,
                                               int replicates, std::uint64_t seed,
                                               int threads = 1);

}  // namespace drglm
