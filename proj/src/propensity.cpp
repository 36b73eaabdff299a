#include "drglm/propensity.hpp"

#include <algorithm>
#include <cmath>

namespace drglm {

PropensityFit fit_propensity(const Dataset& ds, const FormulaAst& formula) {
  const Column& xc = ds.col(formula.response);
  if (xc.kind != ColumnKind::numeric)
    throw WeightError("exposure column " + formula.response + " is not numeric");
  for (Eigen::Index i = 0; i < xc.values.size(); ++i)
    if (xc.values[i] != 0.0 && xc.values[i] != 1.0)
      throw WeightError("exposure column " + formula.response + " is not binary 0/1");

  DesignMatrix design = build_design(formula, ds);
  GlmFit glm = fit_glm(design, xc.values, Family::parse("binomial"),
                       Eigen::VectorXd::Ones(ds.n_rows()));
  PropensityFit pf;
  pf.phat = glm.fitted_mu;
  pf.glm = std::move(glm);
  pf.exposure_name = formula.response;
  return pf;
}

PropensityFit fit_propensity(const Dataset& ds, const std::string& formula) {
  return fit_propensity(ds, parse(formula));
}

IptWeights make_weights(const PropensityFit& pf, const Dataset& ds,
                        std::optional<double> clamp) {
  const Eigen::VectorXd& x = ds.col(pf.exposure_name).values;
  Eigen::VectorXd phat = pf.phat;
  if (clamp) {
    double eps = *clamp;
    for (Eigen::Index i = 0; i < phat.size(); ++i)
      phat[i] = std::clamp(phat[i], eps, 1.0 - eps);
  }
  IptWeights out;
  out.w.resize(phat.size());
  for (Eigen::Index i = 0; i < phat.size(); ++i) {
    if (phat[i] <= 0.0 || phat[i] >= 1.0)
      throw WeightError("positivity violation: fitted propensity " +
                        std::to_string(phat[i]) + " at row " + std::to_string(i));
    out.w[i] = x[i] / phat[i] + (1.0 - x[i]) / (1.0 - phat[i]);
  }
  return out;
}

WeightDiagnostics weight_diagnostics(const IptWeights& w, const Eigen::VectorXd& exposure) {
  WeightDiagnostics d;
  d.min = w.w.minCoeff();
  d.max = w.w.maxCoeff();
  double s1 = 0, s0 = 0, q1 = 0, q0 = 0;
  for (Eigen::Index i = 0; i < w.w.size(); ++i) {
    if (exposure[i] == 1.0) {
      ++d.n_treated;
      s1 += w.w[i];
      q1 += w.w[i] * w.w[i];
    } else {
      ++d.n_control;
      s0 += w.w[i];
      q0 += w.w[i] * w.w[i];
    }
  }
  if (d.n_treated > 0) {
    d.mean_treated = s1 / static_cast<double>(d.n_treated);
    d.ess_treated = s1 * s1 / q1;
  }
  if (d.n_control > 0) {
    d.mean_control = s0 / static_cast<double>(d.n_control);
    d.ess_control = s0 * s0 / q0;
  }
  return d;
}

}  // namespace drglm
