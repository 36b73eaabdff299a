#include <random>

#include "doctest.h"
#include "drglm/estimators.hpp"
#include "drglm/simlab.hpp"

using namespace drglm;

TEST_CASE("standardization agrees with hand enumeration on a 2x2x2 table") {
  // saturated linear model on binary (x, z): predictions are cell means, so
  // psi_x is the z-marginal average of the x-specific cell means
  Eigen::VectorXd y(8), x(8), z(8);
  x << 0, 0, 0, 0, 1, 1, 1, 1;
  z << 0, 0, 1, 1, 0, 0, 1, 1;
  y << 1, 2, 5, 7, 3, 3, 9, 11;
  Dataset ds;
  ds.add_numeric("y", y);
  ds.add_numeric("x", x);
  ds.add_numeric("z", z);
  GlmFit fit = fit_glm("y ~ x*z", ds, Family::parse("gaussian"));
  auto [psi1, psi0] = standardize(fit, ds, "x");
  // cell means: (x=0,z=0)=1.5 (0,1)=6 (1,0)=3 (1,1)=10; z is half 0, half 1
  CHECK(psi0 == doctest::Approx(0.5 * 1.5 + 0.5 * 6.0).epsilon(1e-10));
  CHECK(psi1 == doctest::Approx(0.5 * 3.0 + 0.5 * 10.0).epsilon(1e-10));
}

TEST_CASE("collapsibility: interaction-free linear ATE equals the coefficient") {
  Dataset ds = generate(Dgp::gaussian, 400, 2024);
  auto [est, bundle] = iptw_glm_ate(ds, "y ~ x + z1 + z2", "x ~ z1 + z2",
                                    Family::parse("gaussian"));
  Eigen::Index j = bundle.outcome_fit.design.column_index("x");
  CHECK(std::abs(est.ate - bundle.outcome_fit.coefficients[j]) < 1e-12);
}

TEST_CASE("aipw identity with the weighted fit for canonical links") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Dgp dgp = seed % 2 ? Dgp::gaussian : Dgp::bernoulli;
    Dataset ds = generate(dgp, 500, 100 + seed);
    auto [est, bundle] =
        iptw_glm_ate(ds, "y ~ x + z1 + z2", "x ~ z1 + z2", default_family(dgp));
    AteEstimate funk = aipw_from_weighted_fit(bundle);
    CHECK(std::abs(funk.psi1 - est.psi1) < 1e-9);
    CHECK(std::abs(funk.psi0 - est.psi0) < 1e-9);
    CHECK(std::abs(funk.ate - est.ate) < 1e-9);
  }
}

TEST_CASE("aipw identity fails for the non-canonical log link") {
  Dataset ds = generate(Dgp::log_binomial, 800, 55);
  auto [est, bundle] = iptw_glm_ate(ds, "y ~ x + z1", "x ~ z1 + z2",
                                    Family::parse("binomial", "log"));
  AteEstimate funk = aipw_from_weighted_fit(bundle);
  CHECK(std::abs(funk.ate - est.ate) > 1e-4);
}

TEST_CASE("stratified aipw matches per-arm refits") {
  Dataset ds = generate(Dgp::gaussian, 300, 77);
  AteEstimate est = aipw_ate(ds, "y ~ z1 + z2", "x ~ z1 + z2", Family::parse("gaussian"));
  CHECK(est.method == EstimatorMethod::aipw_stratified);

  // reproduce by hand
  PropensityFit pf = fit_propensity(ds, "x ~ z1 + z2");
  const Eigen::VectorXd& x = ds.col("x").values;
  const Eigen::VectorXd& y = ds.col("y").values;
  std::vector<Eigen::Index> r1, r0;
  for (Eigen::Index i = 0; i < 300; ++i) (x[i] == 1 ? r1 : r0).push_back(i);
  GlmFit f1 = fit_glm("y ~ z1 + z2", ds.take_rows(r1), Family::parse("gaussian"));
  GlmFit f0 = fit_glm("y ~ z1 + z2", ds.take_rows(r0), Family::parse("gaussian"));
  Eigen::VectorXd yh1 = predict(f1, ds), yh0 = predict(f0, ds);
  double s1 = 0, s0 = 0;
  for (int i = 0; i < 300; ++i) {
    s1 += y[i] * x[i] / pf.phat[i] - yh1[i] * (x[i] - pf.phat[i]) / pf.phat[i];
    s0 += y[i] * (1 - x[i]) / (1 - pf.phat[i]) +
          yh0[i] * (x[i] - pf.phat[i]) / (1 - pf.phat[i]);
  }
  CHECK(est.ate == doctest::Approx((s1 - s0) / 300).epsilon(1e-12));
}

TEST_CASE("stratified aipw rejects formulas containing the exposure") {
  Dataset ds = generate(Dgp::gaussian, 100, 3);
  CHECK_THROWS_AS(
      aipw_ate(ds, "y ~ x + z1", "x ~ z1", Family::parse("gaussian"), AipwMode::stratified),
      FitError);
}

TEST_CASE("shared aipw requires the exposure in the outcome model") {
  Dataset ds = generate(Dgp::gaussian, 100, 4);
  CHECK_THROWS_AS(
      aipw_ate(ds, "y ~ z1", "x ~ z1", Family::parse("gaussian"), AipwMode::shared),
      FitError);
  AteEstimate est =
      aipw_ate(ds, "y ~ x + z1", "x ~ z1", Family::parse("gaussian"), AipwMode::shared);
  CHECK(est.method == EstimatorMethod::aipw_shared);
}

TEST_CASE("outcome formula must contain the exposure for iptw_glm_ate") {
  Dataset ds = generate(Dgp::gaussian, 100, 5);
  CHECK_THROWS_AS(iptw_glm_ate(ds, "y ~ z1", "x ~ z1", Family::parse("gaussian")), FitError);
}

TEST_CASE("estimator names") {
  CHECK(to_string(EstimatorMethod::iptw_glm_standardized) == "iptw_glm_standardized");
  CHECK(to_string(EstimatorMethod::aipw_stratified) == "aipw_stratified");
}
