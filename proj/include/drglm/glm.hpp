#pragma once

#include <Eigen/Dense>
#include <string>

#include "drglm/dataset.hpp"
#include "drglm/family.hpp"
#include "drglm/formula.hpp"

namespace drglm {

enum class PredictScale { response, link };

/// A converged weighted-MLE GLM fit. The coefficients solve the weighted score
/// equations X' diag(w) (y - mu) = 0 for canonical links and
/// Q' D (y - mu) = 0 for the non-canonical case, with dispersion fixed at 1
/// as far as the score equations are concerned.
struct GlmFit {
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd vcov;  // model-based: dispersion * (X' W X)^{-1}
  Eigen::VectorXd prior_weights;
  Eigen::VectorXd fitted_mu;
  Eigen::VectorXd eta;
  Eigen::VectorXd y;
  DesignMatrix design;
  Family family = Family::parse("gaussian");
  bool converged = false;
  int iterations = 0;
  // Residual-based dispersion estimate for gaussian-type families, 1 for
  // binomial/poisson. Used only in model-based vcov, never in the scores.
  double dispersion = 1.0;
  double deviance = 0.0;
};

struct GlmOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;
  int max_step_halvings = 20;
};

/// Fits by iteratively reweighted least squares with prior observation
/// weights, using a QR decomposition of the working-weighted design.
GlmFit fit_glm(const DesignMatrix& design, const Eigen::VectorXd& y, const Family& family,
               const Eigen::VectorXd& prior_weights, const GlmOptions& opts = {});

/// Convenience: parse formula, build design, extract response, fit.
GlmFit fit_glm(const std::string& formula, const Dataset& ds, const Family& family,
               const Eigen::VectorXd& prior_weights, const GlmOptions& opts = {});
GlmFit fit_glm(const std::string& formula, const Dataset& ds, const Family& family,
               const GlmOptions& opts = {});

Eigen::VectorXd predict(const GlmFit& fit, const Dataset& ds,
                        PredictScale scale = PredictScale::response);

/// Per-observation score rows: w_i (y_i - mu_i) x_i for canonical links,
/// with an extra mu_eta/v(mu) working factor otherwise. Columns sum to ~0
/// for converged canonical fits.
Eigen::MatrixXd score_contributions(const GlmFit& fit);

}  // namespace drglm
