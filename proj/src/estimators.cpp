#include "drglm/estimators.hpp"

#include <algorithm>

namespace drglm {

std::string to_string(EstimatorMethod m) {
  switch (m) {
    case EstimatorMethod::iptw_glm_standardized: return "iptw_glm_standardized";
    case EstimatorMethod::aipw_shared: return "aipw_shared";
    case EstimatorMethod::aipw_stratified: return "aipw_stratified";
    case EstimatorMethod::unweighted_standardized: return "unweighted_standardized";
  }
  return "?";
}

std::pair<double, double> standardize(const GlmFit& fit, const Dataset& ds,
                                      const std::string& exposure) {
  if (!fit.converged) throw FitError("standardize requires a converged fit");
  Eigen::VectorXd mu1 = predict(fit, override_exposure(ds, exposure, 1.0));
  Eigen::VectorXd mu0 = predict(fit, override_exposure(ds, exposure, 0.0));
  return {mu1.mean(), mu0.mean()};
}

std::pair<AteEstimate, FitBundle> iptw_glm_ate(const Dataset& ds,
                                               const std::string& outcome_formula,
                                               const std::string& ps_formula,
                                               const Family& family,
                                               std::optional<double> clamp) {
  FormulaAst of = parse(outcome_formula);
  FormulaAst pf = parse(ps_formula);

  FitBundle bundle;
  bundle.propensity = fit_propensity(ds, pf);
  bundle.weights = make_weights(bundle.propensity, ds, clamp);
  bundle.exposure_name = pf.response;
  bundle.outcome_name = of.response;

  DesignMatrix design = build_design(of, ds);
  if (design.column_index(bundle.exposure_name) < 0)
    throw FitError("outcome formula does not contain the exposure " + bundle.exposure_name);
  const Column& yc = ds.col(of.response);
  if (yc.kind != ColumnKind::numeric)
    throw FitError("outcome column " + of.response + " is not numeric");
  bundle.outcome_fit = fit_glm(design, yc.values, family, bundle.weights.w);
  bundle.data = ds;

  auto [psi1, psi0] = standardize(bundle.outcome_fit, ds, bundle.exposure_name);
  AteEstimate est;
  est.psi1 = psi1;
  est.psi0 = psi0;
  est.ate = psi1 - psi0;
  est.method = EstimatorMethod::iptw_glm_standardized;
  return {est, std::move(bundle)};
}

namespace {

AteEstimate funk_formula(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& phat, const Eigen::VectorXd& yhat1,
                         const Eigen::VectorXd& yhat0, EstimatorMethod method) {
  const Eigen::Index n = y.size();
  double s1 = 0, s0 = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    s1 += y[i] * x[i] / phat[i] - yhat1[i] * (x[i] - phat[i]) / phat[i];
    s0 += y[i] * (1.0 - x[i]) / (1.0 - phat[i]) +
          yhat0[i] * (x[i] - phat[i]) / (1.0 - phat[i]);
  }
  AteEstimate est;
  est.psi1 = s1 / static_cast<double>(n);
  est.psi0 = s0 / static_cast<double>(n);
  est.ate = est.psi1 - est.psi0;
  est.method = method;
  return est;
}

}  // namespace

AteEstimate aipw_ate(const Dataset& ds, const std::string& outcome_formula,
                     const std::string& ps_formula, const Family& family, AipwMode mode) {
  FormulaAst of = parse(outcome_formula);
  FormulaAst pf = parse(ps_formula);

  PropensityFit ps = fit_propensity(ds, pf);
  const Eigen::VectorXd& x = ds.col(pf.response).values;
  const Column& yc = ds.col(of.response);
  if (yc.kind != ColumnKind::numeric)
    throw FitError("outcome column " + of.response + " is not numeric");

  Eigen::VectorXd yhat1, yhat0;
  if (mode == AipwMode::stratified) {
    for (const auto& v : of.variables())
      if (v == pf.response)
        throw FitError("stratified AIPW outcome formula must not contain the exposure " +
                       pf.response);
    std::vector<Eigen::Index> rows1, rows0;
    for (Eigen::Index i = 0; i < x.size(); ++i)
      (x[i] == 1.0 ? rows1 : rows0).push_back(i);
    if (rows1.empty() || rows0.empty())
      throw FitError("stratified AIPW requires observations in both exposure arms");
    GlmFit fit1 = fit_glm(outcome_formula, ds.take_rows(rows1), family);
    GlmFit fit0 = fit_glm(outcome_formula, ds.take_rows(rows0), family);
    yhat1 = predict(fit1, ds);
    yhat0 = predict(fit0, ds);
  } else {
    DesignMatrix design = build_design(of, ds);
    if (design.column_index(pf.response) < 0)
      throw FitError("shared AIPW outcome formula must contain the exposure " + pf.response);
    GlmFit fit = fit_glm(design, yc.values, family, Eigen::VectorXd::Ones(ds.n_rows()));
    yhat1 = predict(fit, override_exposure(ds, pf.response, 1.0));
    yhat0 = predict(fit, override_exposure(ds, pf.response, 0.0));
  }

  return funk_formula(yc.values, x, ps.phat, yhat1, yhat0,
                      mode == AipwMode::stratified ? EstimatorMethod::aipw_stratified
                                                   : EstimatorMethod::aipw_shared);
}

AteEstimate aipw_from_weighted_fit(const FitBundle& bundle) {
  const GlmFit& fit = bundle.outcome_fit;
  if (fit.design.column_index(bundle.exposure_name) < 0 ||
      fit.design.column_names().empty() || fit.design.column_names()[0] != "(Intercept)")
    throw FitError("weighted fit must contain an intercept and the exposure " +
                   bundle.exposure_name);
  Eigen::VectorXd yhat1 = predict(fit, override_exposure(bundle.data, bundle.exposure_name, 1.0));
  Eigen::VectorXd yhat0 = predict(fit, override_exposure(bundle.data, bundle.exposure_name, 0.0));
  const Eigen::VectorXd& y = bundle.data.col(bundle.outcome_name).values;
  const Eigen::VectorXd& x = bundle.data.col(bundle.exposure_name).values;
  AteEstimate est = funk_formula(y, x, bundle.propensity.phat, yhat1, yhat0,
                                 EstimatorMethod::aipw_shared);
  return est;
}

}  // namespace drglm
