#include "drglm/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <thread>
#include <vector>

namespace drglm {

namespace {

// Type-7 quantile of a sorted vector (R's default).
double quantile7(const std::vector<double>& sorted, double p) {
  const auto n = static_cast<Eigen::Index>(sorted.size());
  if (n == 1) return sorted[0];
  double h = p * static_cast<double>(n - 1);
  auto lo = static_cast<Eigen::Index>(std::floor(h));
  auto hi = std::min(lo + 1, n - 1);
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::vector<Eigen::Index> draw_indices(Eigen::Index n, std::uint64_t seed, int index,
                                       int attempt) {
  std::seed_seq seq{seed, static_cast<std::uint64_t>(index),
                    static_cast<std::uint64_t>(attempt)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(n));
  for (auto& r : rows) r = pick(rng);
  return rows;
}

// sandwich-style score scaling: 1 for binomial/poisson, otherwise the
// working-residual dispersion sum(wres^2)/sum(w_work) with denominator n.
double estfun_dispersion(const GlmFit& fit) {
  if (fit.family.family() == FamilyName::binomial ||
      fit.family.family() == FamilyName::poisson)
    return 1.0;
  double num = 0, den = 0;
  for (Eigen::Index i = 0; i < fit.y.size(); ++i) {
    double me = fit.family.mu_eta(fit.eta[i]);
    double v = fit.family.variance(fit.fitted_mu[i]);
    double wres = fit.prior_weights[i] * (fit.y[i] - fit.fitted_mu[i]) * me / v;
    num += wres * wres;
    den += fit.prior_weights[i] * me * me / v;
  }
  return num / den;
}

Eigen::MatrixXd estfun(const GlmFit& fit) {
  return score_contributions(fit) / estfun_dispersion(fit);
}

}  // namespace

BootstrapResult bootstrap_ci(const Dataset& ds,
                             const std::function<double(const Dataset&)>& pipeline,
                             int B, std::uint64_t seed, int threads) {
  if (B < 2) throw InferenceError("bootstrap requires B >= 2");
  const Eigen::Index n = ds.n_rows();
  if (n < 1) throw InferenceError("bootstrap requires a nonempty dataset");

  BootstrapResult out;
  out.estimates.resize(B);
  out.B = B;
  out.seed = seed;

  const int max_failures = static_cast<int>(0.05 * B);
  std::atomic<int> failures{0};
  std::atomic<bool> aborted{false};

  auto worker = [&](int begin, int end) {
    for (int b = begin; b < end && !aborted.load(); ++b) {
      double est = 0;
      bool ok = false;
      for (int attempt = 0; attempt < max_failures + 2 && !ok; ++attempt) {
        Dataset resample = ds.take_rows(draw_indices(n, seed, b, attempt));
        try {
          est = pipeline(resample);
          if (!std::isfinite(est)) throw FitError("non-finite estimate");
          ok = true;
        } catch (const std::runtime_error&) {
          if (failures.fetch_add(1) + 1 > max_failures) {
            aborted.store(true);
            break;
          }
        }
      }
      if (ok) out.estimates[b] = est;
    }
  };

  if (threads <= 1 || B < 2 * threads) {
    worker(0, B);
  } else {
    std::vector<std::thread> pool;
    int chunk = (B + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      int begin = t * chunk, end = std::min(B, begin + chunk);
      if (begin < end) pool.emplace_back(worker, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  out.n_redrawn = failures.load();
  if (aborted.load())
    throw InferenceError("more than 5% of bootstrap resamples failed to converge (" +
                         std::to_string(failures.load()) + " of " + std::to_string(B) + ")");

  std::vector<double> sorted(out.estimates.data(), out.estimates.data() + B);
  std::sort(sorted.begin(), sorted.end());
  out.ci = {quantile7(sorted, 0.025), quantile7(sorted, 0.975)};
  return out;
}

Eigen::MatrixXd parameter_influence(const GlmFit& fit) {
  if (!fit.converged) throw InferenceError("parameter_influence requires a converged fit");
  Eigen::MatrixXd scores = score_contributions(fit);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(fit.vcov);
  if (!lu.isInvertible()) throw InferenceError("singular vcov in parameter_influence");
  return scores * fit.vcov.transpose() / fit.dispersion;
}

InfluenceDecomposition influence_se(const FitBundle& bundle, InfluenceMode mode) {
  const GlmFit& wfit = bundle.outcome_fit;
  if (!wfit.converged || !bundle.propensity.glm.converged)
    throw InferenceError("influence_se requires converged propensity and outcome fits");
  if (!wfit.family.canonical())
    throw InferenceError("influence-function SE is unsupported for non-canonical link " +
                         wfit.family.link_name() + "; use the bootstrap");

  const Dataset& ds = bundle.data;
  const Eigen::Index n = ds.n_rows();
  const double nd = static_cast<double>(n);
  const Eigen::VectorXd& x = ds.col(bundle.exposure_name).values;
  const Eigen::VectorXd& y = ds.col(bundle.outcome_name).values;
  const Eigen::VectorXd& phat = bundle.propensity.phat;

  // Standardized means always come from the weighted fit.
  auto [psi1, psi0] = standardize(wfit, ds, bundle.exposure_name);

  Dataset ds1 = override_exposure(ds, bundle.exposure_name, 1.0);
  Dataset ds0 = override_exposure(ds, bundle.exposure_name, 0.0);

  InfluenceDecomposition dec;
  Eigen::VectorXd r1, r0, gdot1(n), gdot0(n);
  if (mode == InfluenceMode::supplement_compatible) {
    GlmFit unwt = fit_glm(wfit.design, wfit.y, wfit.family, Eigen::VectorXd::Ones(n));
    r1 = predict(unwt, ds1);
    r0 = predict(unwt, ds0);
    Eigen::VectorXd eta1 = predict(unwt, ds1, PredictScale::link);
    Eigen::VectorXd eta0 = predict(unwt, ds0, PredictScale::link);
    for (Eigen::Index i = 0; i < n; ++i) {
      gdot1[i] = wfit.family.mu_eta(eta1[i]);
      gdot0[i] = wfit.family.mu_eta(eta0[i]);
    }
    // weighted-fit vcov with unweighted-refit scores, as in the reference
    // procedure
    dec.param_influence_theta = estfun(unwt) * wfit.vcov.transpose();
  } else {
    r1 = predict(wfit, ds1);
    r0 = predict(wfit, ds0);
    Eigen::VectorXd eta1 = predict(wfit, ds1, PredictScale::link);
    Eigen::VectorXd eta0 = predict(wfit, ds0, PredictScale::link);
    for (Eigen::Index i = 0; i < n; ++i) {
      gdot1[i] = wfit.family.mu_eta(eta1[i]);
      gdot0[i] = wfit.family.mu_eta(eta0[i]);
    }
    dec.param_influence_theta = parameter_influence(wfit);
  }
  dec.param_influence_alpha = parameter_influence(bundle.propensity.glm);

  dec.eif_terms_1.resize(n);
  dec.eif_terms_0.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dec.eif_terms_1[i] = (x[i] / phat[i] * (y[i] - r1[i]) + (r1[i] - psi1)) / nd;
    dec.eif_terms_0[i] =
        ((1.0 - x[i]) / (1.0 - phat[i]) * (y[i] - r0[i]) + (r0[i] - psi0)) / nd;
  }

  const Eigen::MatrixXd& XXw = bundle.propensity.glm.design.matrix();
  Eigen::MatrixXd XXo1 = wfit.design.matrix();
  Eigen::MatrixXd XXo0 = XXo1;
  Eigen::Index xcol = wfit.design.column_index(bundle.exposure_name);
  if (xcol < 0)
    throw InferenceError("outcome design lacks a main-effect column for " +
                         bundle.exposure_name);
  // the reference procedure overrides only the main-effect exposure column;
  // interaction columns keep their observed values
  XXo1.col(xcol).setOnes();
  XXo0.col(xcol).setZero();

  Eigen::VectorXd hdot(n);
  for (Eigen::Index i = 0; i < n; ++i)
    hdot[i] = bundle.propensity.glm.family.mu_eta(bundle.propensity.glm.eta[i]);

  Eigen::VectorXd k1f(n), k0f(n), l1f(n), l0f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k1f[i] = -(x[i] * hdot[i] / (phat[i] * phat[i])) * (y[i] - r1[i]) / nd;
    k0f[i] = ((1.0 - x[i]) * hdot[i] / ((1.0 - phat[i]) * (1.0 - phat[i]))) *
             (y[i] - r0[i]) / nd;
    l1f[i] = gdot1[i] * (1.0 - x[i] / phat[i]) / nd;
    l0f[i] = gdot0[i] * ((1.0 - x[i]) / (1.0 - phat[i]) - 1.0) / nd;
  }
  dec.K1 = k1f.transpose() * XXw;
  dec.K0 = k0f.transpose() * XXw;
  dec.L1 = l1f.transpose() * XXo1;
  dec.L0 = l0f.transpose() * XXo0;

  dec.phi1 = dec.eif_terms_1 + dec.param_influence_alpha * dec.K1.transpose() +
             dec.param_influence_theta * dec.L1.transpose();
  dec.phi0 = dec.eif_terms_0 + dec.param_influence_alpha * dec.K0.transpose() +
             dec.param_influence_theta * dec.L0.transpose();

  dec.se = std::sqrt((dec.phi1 - dec.phi0).squaredNorm());
  dec.eif_only_se = std::sqrt((dec.eif_terms_1 - dec.eif_terms_0).squaredNorm());
  return dec;
}

AteEstimate with_influence_ci(const AteEstimate& est, const InfluenceDecomposition& dec) {
  AteEstimate out = est;
  out.se = dec.se;
  out.ci = {est.ate - 1.96 * dec.se, est.ate + 1.96 * dec.se};
  out.inference = InferenceKind::influence_function;
  return out;
}

}  // namespace drglm
