#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "drglm/glm.hpp"

namespace drglm {

/// Logistic working model for P(X=1|Z) together with its fitted probabilities.
struct PropensityFit {
  GlmFit glm;
  Eigen::VectorXd phat;
  std::string exposure_name;
};

/// Inverse-probability-of-treatment weights w_i = X_i/phat_i + (1-X_i)/(1-phat_i).
struct IptWeights {
  Eigen::VectorXd w;
};

struct WeightDiagnostics {
  double min = 0, max = 0;
  double mean_treated = 0, mean_control = 0;
  double ess_treated = 0, ess_control = 0;
  Eigen::Index n_treated = 0, n_control = 0;
};

/// Unweighted logistic MLE of the exposure on the formula's predictors.
PropensityFit fit_propensity(const Dataset& ds, const std::string& formula);
PropensityFit fit_propensity(const Dataset& ds, const FormulaAst& formula);

/// Builds the weights; optional clamp truncates phat to [eps, 1-eps] first.
IptWeights make_weights(const PropensityFit& pf, const Dataset& ds,
                        std::optional<double> clamp = std::nullopt);

WeightDiagnostics weight_diagnostics(const IptWeights& w, const Eigen::VectorXd& exposure);

}  // namespace drglm
