#include "drglm/glm.hpp"

#include <algorithm>
#include <cmath>

namespace drglm {

namespace {

constexpr double kMuClamp = 1e-10;

double clamp_mu(const Family& fam, double mu) {
  if (fam.family() == FamilyName::binomial)
    return std::clamp(mu, kMuClamp, 1.0 - kMuClamp);
  if (fam.family() != FamilyName::gaussian) return std::max(mu, kMuClamp);
  return mu;
}

bool admissible(const Family& fam, const Eigen::VectorXd& eta) {
  for (Eigen::Index i = 0; i < eta.size(); ++i)
    if (!fam.eta_valid(eta[i])) return false;
  return true;
}

double weighted_deviance(const Family& fam, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& mu, const Eigen::VectorXd& w) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) dev += w[i] * fam.deviance_unit(y[i], mu[i]);
  return dev;
}

}  // namespace

GlmFit fit_glm(const DesignMatrix& design, const Eigen::VectorXd& y, const Family& family,
               const Eigen::VectorXd& prior_weights, const GlmOptions& opts) {
  const Eigen::MatrixXd& X = design.matrix();
  const Eigen::Index n = X.rows(), p = X.cols();
  if (y.size() != n) throw FitError("response length does not match design rows");
  if (prior_weights.size() != n) throw FitError("weight length does not match design rows");
  if (p > n) throw FitError("more coefficients than observations");

  double wsum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(prior_weights[i] >= 0.0)) throw FitError("prior weights must be nonnegative");
    wsum += prior_weights[i];
  }
  if (wsum <= 0.0) throw FitError("all prior weights are zero");

  // Starting values: family-specific nudge keeps eta admissible.
  Eigen::VectorXd mu(n), eta(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mu[i] = clamp_mu(family, family.init_mu(y[i], prior_weights[i]));
    eta[i] = family.link_fn(mu[i]);
  }

  // Admissible fallback for step-halving before a previous iterate exists.
  Eigen::VectorXd beta_safe = Eigen::VectorXd::Zero(p);
  {
    double ybar = prior_weights.dot(y) / wsum;
    double mu0 = clamp_mu(family, family.init_mu(ybar, 1.0));
    beta_safe[0] = family.link_fn(mu0);
  }

  Eigen::VectorXd beta = beta_safe;
  double dev = weighted_deviance(family, y, mu, prior_weights);
  bool converged = false;
  int iter = 0;

  Eigen::VectorXd w_work(n), z(n), sw(n);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr;

  for (iter = 1; iter <= opts.max_iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      double me = family.mu_eta(eta[i]);
      double v = family.variance(mu[i]);
      if (std::abs(me) < 1e-300 || v < 1e-300)
        throw FitError("degenerate working weight in IRLS (flat link or zero variance)");
      w_work[i] = prior_weights[i] * me * me / v;
      z[i] = eta[i] + (y[i] - mu[i]) / me;
      sw[i] = std::sqrt(w_work[i]);
    }

    qr.compute(sw.asDiagonal() * X);
    if (qr.rank() < p)
      throw FitError("rank-deficient weighted design matrix (rank " +
                     std::to_string(qr.rank()) + " of " + std::to_string(p) + ")");
    Eigen::VectorXd beta_new = qr.solve(sw.cwiseProduct(z));

    // Keep mu inside the family support: the admissible eta region is an
    // interval per link, so feasibility is monotone in the step length and a
    // fraction-to-the-boundary line search (bisected) recovers the longest
    // admissible step. Boundary MLEs (log-binomial) then stall gracefully
    // instead of oscillating.
    Eigen::VectorXd beta_prev = iter == 1 ? beta_safe : beta;
    Eigen::VectorXd eta_new = X * beta_new;
    if (!admissible(family, eta_new)) {
      Eigen::VectorXd step = beta_new - beta_prev;
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 40; ++it) {
        double mid = 0.5 * (lo + hi);
        if (admissible(family, X * (beta_prev + mid * step)))
          lo = mid;
        else
          hi = mid;
      }
      beta_new = beta_prev + 0.9 * lo * step;
      eta_new = X * beta_new;
      if (!admissible(family, eta_new)) {  // prev iterate sat on the boundary
        beta_new = beta_prev;
        eta_new = X * beta_new;
      }
    }
    int halvings = 0;

    Eigen::VectorXd mu_new(n);
    for (Eigen::Index i = 0; i < n; ++i) mu_new[i] = clamp_mu(family, family.inv_link(eta_new[i]));
    double dev_new = weighted_deviance(family, y, mu_new, prior_weights);
    while (!std::isfinite(dev_new) && halvings <= opts.max_step_halvings) {
      ++halvings;
      beta_new = 0.5 * (beta_new + beta_prev);
      eta_new = X * beta_new;
      for (Eigen::Index i = 0; i < n; ++i) mu_new[i] = clamp_mu(family, family.inv_link(eta_new[i]));
      dev_new = weighted_deviance(family, y, mu_new, prior_weights);
    }
    if (!std::isfinite(dev_new)) throw FitError("non-finite deviance in IRLS");

    double max_rel = 0.0;
    for (Eigen::Index j = 0; j < p; ++j)
      max_rel = std::max(max_rel,
                         std::abs(beta_new[j] - beta[j]) / (1e-4 + std::abs(beta_new[j])));
    double dev_rel = std::abs(dev_new - dev) / (0.1 + std::abs(dev_new));

    beta = beta_new;
    eta = eta_new;
    mu = mu_new;
    dev = dev_new;

    if (beta.cwiseAbs().maxCoeff() > 1e10)
      throw FitError("IRLS diverged (coefficients unbounded; possible separation)");
    if (iter > 1 && dev_rel < opts.tolerance && max_rel < opts.tolerance) {
      converged = true;
      break;
    }
  }

  if (!converged)
    throw FitError("IRLS failed to converge in " + std::to_string(opts.max_iterations) +
                   " iterations for " + family.name() + " (deviance " + std::to_string(dev) + ")");

  GlmFit fit;
  fit.coefficients = beta;
  fit.prior_weights = prior_weights;
  fit.eta = X * beta;
  fit.fitted_mu.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) fit.fitted_mu[i] = family.inv_link(fit.eta[i]);
  fit.y = y;
  fit.design = design;
  fit.family = family;
  fit.converged = true;
  fit.iterations = iter;
  fit.deviance = dev;

  // Dispersion: 1 for binomial/poisson, Pearson-based otherwise (R's summary.glm).
  bool unit_dispersion = family.family() == FamilyName::binomial ||
                         family.family() == FamilyName::poisson;
  if (unit_dispersion) {
    fit.dispersion = 1.0;
  } else {
    double pearson = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double r = y[i] - fit.fitted_mu[i];
      pearson += prior_weights[i] * r * r / family.variance(fit.fitted_mu[i]);
    }
    fit.dispersion = pearson / static_cast<double>(n - p);
  }

  // Model-based vcov from the final working-weighted information.
  for (Eigen::Index i = 0; i < n; ++i) {
    double me = family.mu_eta(fit.eta[i]);
    double mu_c = clamp_mu(family, fit.fitted_mu[i]);
    w_work[i] = prior_weights[i] * me * me / family.variance(mu_c);
    sw[i] = std::sqrt(w_work[i]);
  }
  qr.compute(sw.asDiagonal() * X);
  Eigen::MatrixXd rinv =
      qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>().solve(
          Eigen::MatrixXd::Identity(p, p));
  Eigen::MatrixXd unscaled = rinv * rinv.transpose();
  // undo the column pivoting: vcov = P R^-1 R^-T P'
  Eigen::MatrixXd perm = qr.colsPermutation();
  fit.vcov = fit.dispersion * (perm * unscaled * perm.transpose());

  return fit;
}

GlmFit fit_glm(const std::string& formula, const Dataset& ds, const Family& family,
               const Eigen::VectorXd& prior_weights, const GlmOptions& opts) {
  FormulaAst ast = parse(formula);
  DesignMatrix design = build_design(ast, ds);
  const Column& yc = ds.col(ast.response);
  if (yc.kind != ColumnKind::numeric)
    throw FitError("response column " + ast.response + " is not numeric");
  return fit_glm(design, yc.values, family, prior_weights, opts);
}

GlmFit fit_glm(const std::string& formula, const Dataset& ds, const Family& family,
               const GlmOptions& opts) {
  return fit_glm(formula, ds, family, Eigen::VectorXd::Ones(ds.n_rows()), opts);
}

Eigen::VectorXd predict(const GlmFit& fit, const Dataset& ds, PredictScale scale) {
  Eigen::MatrixXd X = fit.design.rebuild(ds);
  Eigen::VectorXd eta = X * fit.coefficients;
  if (scale == PredictScale::link) return eta;
  Eigen::VectorXd mu(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) mu[i] = fit.family.inv_link(eta[i]);
  return mu;
}

Eigen::MatrixXd score_contributions(const GlmFit& fit) {
  if (!fit.converged) throw FitError("score_contributions requires a converged fit");
  const Eigen::MatrixXd& X = fit.design.matrix();
  Eigen::VectorXd factor(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double f = fit.prior_weights[i] * (fit.y[i] - fit.fitted_mu[i]);
    if (!fit.family.canonical())
      f *= fit.family.mu_eta(fit.eta[i]) / fit.family.variance(fit.fitted_mu[i]);
    factor[i] = f;
  }
  return factor.asDiagonal() * X;
}

}  // namespace drglm
