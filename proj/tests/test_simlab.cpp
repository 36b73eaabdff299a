#include <cmath>

#include "doctest.h"
#include "drglm/simlab.hpp"

using namespace drglm;

TEST_CASE("generate is deterministic and well formed") {
  for (Dgp dgp : {Dgp::gaussian, Dgp::inverse_gaussian, Dgp::poisson, Dgp::bernoulli,
                  Dgp::log_binomial, Dgp::residual_confounding}) {
    Dataset a = generate(dgp, 200, 42);
    Dataset b = generate(dgp, 200, 42);
    Dataset c = generate(dgp, 200, 43);
    CHECK(a.n_rows() == 200);
    CHECK((a.col("y").values - b.col("y").values).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a.col("y").values - c.col("y").values).cwiseAbs().maxCoeff() > 0.0);

    const Eigen::VectorXd& x = a.col("x").values;
    for (int i = 0; i < 200; ++i) CHECK((x[i] == 0.0 || x[i] == 1.0));
    if (dgp == Dgp::residual_confounding) {
      CHECK(a.has("c"));
      CHECK(a.has("v"));
    } else {
      CHECK(a.has("z1"));
      CHECK(a.has("z2"));
    }
    if (dgp == Dgp::inverse_gaussian) CHECK(a.col("y").values.minCoeff() > 0.0);
    if (dgp == Dgp::bernoulli || dgp == Dgp::log_binomial)
      CHECK(a.col("y").values.maxCoeff() <= 1.0);
  }
}

TEST_CASE("dgp names round trip") {
  for (Dgp dgp : {Dgp::gaussian, Dgp::inverse_gaussian, Dgp::poisson, Dgp::bernoulli,
                  Dgp::log_binomial, Dgp::residual_confounding})
    CHECK(parse_dgp(to_string(dgp)) == dgp);
  CHECK(parse_dgp("linear") == Dgp::gaussian);
  CHECK_THROWS_AS(parse_dgp("weibull"), DataError);
}

TEST_CASE("gaussian and residual-confounding truths are analytic") {
  DgpTruth g = dgp_truth(Dgp::gaussian);
  CHECK(g.true_ate == 2.0);
  CHECK(g.provenance == "analytic");
  DgpTruth rc = dgp_truth(Dgp::residual_confounding);
  CHECK(rc.true_ate == 2.0);
}

TEST_CASE("monte carlo truths bracket the frozen constants") {
  // quick re-derivation with 2e6 draws; frozen values come from 1e8-draw runs
  for (Dgp dgp : {Dgp::inverse_gaussian, Dgp::poisson, Dgp::bernoulli, Dgp::log_binomial}) {
    DgpTruth t = dgp_truth(dgp);
    CHECK(t.provenance == "monte_carlo");
    auto [est, se] = true_ate(dgp, 2000000, 777);
    CHECK(std::abs(est - t.true_ate) < 5 * se + 5 * t.mc_se);
  }
}

TEST_CASE("formulas per misspecification arm") {
  CHECK(ps_formula(Dgp::gaussian, true) == "x ~ z1 + I(z1^2) + z2");
  CHECK(ps_formula(Dgp::gaussian, false) == "x ~ z1");
  CHECK(outcome_formula(Dgp::gaussian, true) == "y ~ x + z1 + I(z1^2) + z2");
  CHECK(outcome_formula(Dgp::gaussian, false) == "y ~ x + z1");
  CHECK(ps_formula(Dgp::residual_confounding, true) == "x ~ v");
  CHECK(outcome_formula(Dgp::residual_confounding, true) == "y ~ x + c");
}

TEST_CASE("cell labels") {
  CHECK(cell_label(true, true) == "right both");
  CHECK(cell_label(true, false) == "wrong outcome right weights");
  CHECK(cell_label(false, true) == "right outcome wrong weights");
  CHECK(cell_label(false, false) == "wrong both");
}

TEST_CASE("run_scenario is a pure function of its spec") {
  ScenarioSpec spec;
  spec.dgp = Dgp::gaussian;
  spec.n = 300;
  spec.replicates = 12;
  spec.run_aipw = true;
  spec.influence = true;
  spec.seed = 99;
  SimSummary a = run_scenario(spec);
  spec.threads = 2;
  SimSummary b = run_scenario(spec);
  CHECK(a.replicates_done == 12);
  CHECK(a.n_failed == 0);
  CHECK(a.mean_est == b.mean_est);
  CHECK(a.sd == b.sd);
  CHECK(a.mean_infl_se == b.mean_infl_se);
  CHECK(a.has_aipw);
  CHECK(a.aipw_mean == b.aipw_mean);
  CHECK(a.true_value == 2.0);
  // a small right-both cell should land loosely near the truth
  CHECK(std::abs(a.mean_est - 2.0) < 0.25);
  REQUIRE(a.coverage_if.has_value());
}

TEST_CASE("run_scenario bootstrap coverage plumbing") {
  ScenarioSpec spec;
  spec.dgp = Dgp::gaussian;
  spec.n = 150;
  spec.replicates = 6;
  spec.bootstrap = true;
  spec.bootstrap_B = 40;
  spec.seed = 11;
  SimSummary s = run_scenario(spec);
  REQUIRE(s.coverage_boot.has_value());
  CHECK(*s.coverage_boot >= 0.0);
  CHECK(*s.coverage_boot <= 100.0);
}
