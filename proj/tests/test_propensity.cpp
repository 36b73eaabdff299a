#include <random>

#include "doctest.h"
#include "drglm/propensity.hpp"

using namespace drglm;

namespace {

Dataset make_ps_data(int n = 200, std::uint64_t seed = 42) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0, 1);
  std::uniform_real_distribution<double> U(0, 1);
  Eigen::VectorXd x(n), z(n);
  for (int i = 0; i < n; ++i) {
    z[i] = N(rng);
    double p = 1.0 / (1.0 + std::exp(-(0.3 + 0.8 * z[i])));
    x[i] = U(rng) < p ? 1.0 : 0.0;
  }
  Dataset ds;
  ds.add_numeric("x", x);
  ds.add_numeric("z", z);
  return ds;
}

}  // namespace

TEST_CASE("propensity fit produces probabilities and weights") {
  Dataset ds = make_ps_data();
  PropensityFit pf = fit_propensity(ds, "x ~ z");
  CHECK(pf.phat.minCoeff() > 0.0);
  CHECK(pf.phat.maxCoeff() < 1.0);
  CHECK(pf.glm.converged);

  IptWeights w = make_weights(pf, ds);
  const Eigen::VectorXd& x = ds.col("x").values;
  for (int i = 0; i < 200; ++i) {
    double expected = x[i] == 1.0 ? 1.0 / pf.phat[i] : 1.0 / (1.0 - pf.phat[i]);
    CHECK(w.w[i] == doctest::Approx(expected).epsilon(1e-12));
    CHECK(w.w[i] >= 1.0);
  }
}

TEST_CASE("weights are mean-one per arm in large samples") {
  // sum of X/phat estimates n, so treated weights average ~n/n1
  Dataset ds = make_ps_data(5000, 7);
  PropensityFit pf = fit_propensity(ds, "x ~ z");
  IptWeights w = make_weights(pf, ds);
  WeightDiagnostics d = weight_diagnostics(w, ds.col("x").values);
  CHECK(d.n_treated + d.n_control == 5000);
  CHECK(d.mean_treated * static_cast<double>(d.n_treated) ==
        doctest::Approx(5000).epsilon(0.05));
  CHECK(d.mean_control * static_cast<double>(d.n_control) ==
        doctest::Approx(5000).epsilon(0.05));
  CHECK(d.ess_treated > 0);
  CHECK(d.ess_treated <= static_cast<double>(d.n_treated));
  CHECK(d.min >= 1.0);
  CHECK(d.max >= d.min);
}

TEST_CASE("clamping truncates extreme fitted propensities") {
  Dataset ds = make_ps_data(300, 9);
  PropensityFit pf = fit_propensity(ds, "x ~ z");
  IptWeights w = make_weights(pf, ds, 0.2);
  CHECK(w.w.maxCoeff() <= doctest::Approx(1.0 / 0.2));
}

TEST_CASE("non-binary exposure is rejected") {
  Dataset ds;
  Eigen::VectorXd x(3), z(3);
  x << 0, 1, 2;
  z << 1, 2, 3;
  ds.add_numeric("x", x);
  ds.add_numeric("z", z);
  CHECK_THROWS_AS(fit_propensity(ds, "x ~ z"), WeightError);

  Dataset dc;
  dc.add_categorical("x", {"a", "b", "a"});
  dc.add_numeric("z", z);
  CHECK_THROWS_AS(fit_propensity(dc, "x ~ z"), WeightError);
}
