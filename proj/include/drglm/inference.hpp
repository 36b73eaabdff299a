#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <utility>

#include "drglm/estimators.hpp"

namespace drglm {

/// Whole-procedure nonparametric bootstrap output.
struct BootstrapResult {
  Eigen::VectorXd estimates;  // one ATE per resample, ordered by resample index
  std::pair<double, double> ci{0, 0};
  int B = 0;
  std::uint64_t seed = 0;
  int n_redrawn = 0;  // resamples redrawn after a failed refit
};

/// The influence-function SE pieces: per-observation efficient-influence terms,
/// the K/L corrections for estimated nuisance parameters, and the assembled
/// per-observation contributions Phi. All terms carry the 1/n scaling, so
/// se = sqrt(sum((phi1 - phi0)^2)).
struct InfluenceDecomposition {
  Eigen::VectorXd eif_terms_1, eif_terms_0;
  Eigen::RowVectorXd K1, K0;  // 1 x p_alpha (propensity parameters)
  Eigen::RowVectorXd L1, L0;  // 1 x p_theta (outcome parameters)
  Eigen::MatrixXd param_influence_alpha;  // n x p_alpha
  Eigen::MatrixXd param_influence_theta;  // n x p_theta
  Eigen::VectorXd phi1, phi0;
  double se = 0;
  double eif_only_se = 0;
};

enum class InfluenceMode { supplement_compatible, weighted_consistent };

/// Resamples rows with replacement B times and reruns the whole pipeline on
/// each resample. Percentile CI (type-7 quantile interpolation). Failed refits
/// are redrawn with a fresh per-resample stream; more than 5% failures is an
/// InferenceError. Reproducible for a given seed regardless of thread count.
BootstrapResult bootstrap_ci(const Dataset& ds,
                             const std::function<double(const Dataset&)>& pipeline,
                             int B, std::uint64_t seed, int threads = 1);

/// Per-observation parameter influence: row i = (X'WX)^{-1} * score row i,
/// i.e. the model-based vcov applied to the dispersion-scaled score. Columns
/// sum to ~0 for a converged fit.
Eigen::MatrixXd parameter_influence(const GlmFit& fit);

/// Influence-function SE of the standardized ATE, with corrections for the
/// estimated propensity (K terms) and outcome (L terms) parameters.
/// supplement_compatible evaluates the correction-term predictions and the
/// theta scores on an unweighted refit of the outcome formula while keeping
/// the weighted fit's vcov and standardized means; weighted_consistent takes
/// every quantity from the weighted fit itself. Canonical outcome links only.
InfluenceDecomposition influence_se(const FitBundle& bundle,
                                    InfluenceMode mode = InfluenceMode::supplement_compatible);

/// est +- 1.96 se, attached to a copy of the point estimate.
AteEstimate with_influence_ci(const AteEstimate& est, const InfluenceDecomposition& dec);

}  // namespace drglm
