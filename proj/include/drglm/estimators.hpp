#pragma once

#include <optional>
#include <string>
#include <utility>

#include "drglm/glm.hpp"
#include "drglm/propensity.hpp"

namespace drglm {

enum class EstimatorMethod {
  iptw_glm_standardized,
  aipw_shared,
  aipw_stratified,
  unweighted_standardized,
};

enum class InferenceKind { bootstrap, influence_function };

std::string to_string(EstimatorMethod m);

/// Point estimate of the average causal effect psi1 - psi0, optionally with
/// attached inference.
struct AteEstimate {
  double psi1 = 0;
  double psi0 = 0;
  double ate = 0;
  EstimatorMethod method = EstimatorMethod::iptw_glm_standardized;
  std::optional<double> se;
  std::optional<std::pair<double, double>> ci;
  std::optional<InferenceKind> inference;
};

/// Everything produced by the IPTW-GLM pipeline on one dataset.
struct FitBundle {
  GlmFit outcome_fit;
  PropensityFit propensity;
  IptWeights weights;
  std::string exposure_name;
  std::string outcome_name;
  Dataset data;
};

/// Regression standardization over the observed covariate distribution:
/// psi_x = mean of response-scale predictions with the exposure forced to x.
/// Prior weights play no role in the averaging.
std::pair<double, double> standardize(const GlmFit& fit, const Dataset& ds,
                                      const std::string& exposure);

/// The full doubly robust pipeline: propensity fit, weights, weighted outcome
/// MLE, standardization.
std::pair<AteEstimate, FitBundle> iptw_glm_ate(const Dataset& ds,
                                               const std::string& outcome_formula,
                                               const std::string& ps_formula,
                                               const Family& family,
                                               std::optional<double> clamp = std::nullopt);

enum class AipwMode { shared, stratified };

/// Funk et al. augmented IPW comparator. Stratified mode fits one unweighted
/// outcome model per exposure arm (the formula must not contain the exposure);
/// shared mode fits a single unweighted model on all data.
AteEstimate aipw_ate(const Dataset& ds, const std::string& outcome_formula,
                     const std::string& ps_formula, const Family& family,
                     AipwMode mode = AipwMode::stratified);

/// Evaluates the AIPW formula with the weighted outcome fit's counterfactual
/// predictions. For canonical links with intercept and exposure in the model,
/// this reproduces the standardized estimate exactly; the identity fails for
/// non-canonical links.
AteEstimate aipw_from_weighted_fit(const FitBundle& bundle);

}  // namespace drglm
