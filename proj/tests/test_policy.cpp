#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "relspar/errors.hpp"
#include "relspar/policy.hpp"
#include "relspar/simulate.hpp"
#include "support.hpp"

using namespace relspar;
using testsup::behavioral;
using testsup::suggested;

TEST_CASE("policy_prob basics") {
  const std::vector<double> s{0.7, -1.3};
  CHECK(policy_prob(suggested({0.0, 0.0}), s, 1) == 0.5);
  // coeffs' state = ln 3 -> expit = 3/4
  const std::vector<double> s_ln3{1.0, 5.0};
  CHECK(policy_prob(suggested({std::log(3.0), 0.0}), s_ln3, 1) ==
        doctest::Approx(0.75).epsilon(1e-15));

  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const std::vector<double> state{rng.uniform(-20, 20), rng.uniform(-20, 20)};
    const CoefficientVector c =
        suggested({rng.uniform(-3, 3), rng.uniform(-3, 3)});
    const double p1 = policy_prob(c, state, 1);
    const double p0 = policy_prob(c, state, 0);
    CHECK(p1 > 0.0);
    CHECK(p1 < 1.0);
    CHECK(p1 + p0 == 1.0);  // exact complement
  }
}

TEST_CASE("hybrid policy reduces exactly at the extremes") {
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const std::vector<double> state{rng.uniform(-5, 5), rng.uniform(-5, 5)};
    const CoefficientVector beta =
        suggested({rng.uniform(-2, 2), rng.uniform(-2, 2)});
    const CoefficientVector b =
        behavioral({rng.uniform(-2, 2), rng.uniform(-2, 2)});
    CHECK(hybrid_policy_prob(beta, b, ActiveSet::full(2), state, 1) ==
          policy_prob(beta, state, 1));
    CHECK(hybrid_policy_prob(beta, b, ActiveSet::none(), state, 1) ==
          policy_prob(b, state, 1));
  }
  // K=2, beta=(1,0), b=(0,1), active={1}, s=(1,1) -> expit(2)
  const std::vector<double> ones{1.0, 1.0};
  const double got = hybrid_policy_prob(suggested({1.0, 0.0}),
                                        behavioral({0.0, 1.0}),
                                        ActiveSet{{0}, 0.0}, ones, 1);
  CHECK(got == doctest::Approx(expit(2.0)).epsilon(1e-15));
}

TEST_CASE("symmetric data forces a zero fit") {
  // points (+s, a=1), (+s, a=0), (-s, a=1), (-s, a=0)
  std::vector<double> states{1.0, 2.0, 1.0, 2.0, -1.0, -2.0, -1.0, -2.0};
  TrajectoryDataset d(2, 2, 2, states, {1, 0, 1, 0}, {0, 0, 0, 0});
  const BehavioralFit fit = fit_behavioral(d);
  CHECK(fit.converged);
  CHECK(std::fabs(fit.b_n.values[0]) <= 1e-8);
  CHECK(std::fabs(fit.b_n.values[1]) <= 1e-8);
}

TEST_CASE("one-sided actions raise a separation error") {
  std::vector<double> states{1.0, 2.0, -1.0, 0.5};
  TrajectoryDataset d(1, 2, 2, states, {1, 1}, {0, 0});
  CHECK_THROWS_AS(fit_behavioral(d), SeparationError);
}

TEST_CASE("separated data trips the coefficient cap") {
  // action = 1 iff s_1 > 0: perfectly separated
  std::vector<double> states, rewards;
  std::vector<std::int8_t> actions;
  Rng rng(17);
  for (int i = 0; i < 40; ++i) {
    const double s1 = rng.uniform(-2, 2);
    states.push_back(s1);
    states.push_back(rng.uniform(-2, 2));
    actions.push_back(s1 > 0 ? 1 : 0);
    rewards.push_back(0.0);
  }
  TrajectoryDataset d(40, 1, 2, states, actions, rewards);
  CHECK_THROWS_AS(fit_behavioral(d), Error);  // separation or non-convergence
}

TEST_CASE("collinear design raises a singular-design error") {
  std::vector<double> states, rewards;
  std::vector<std::int8_t> actions;
  Rng rng(19);
  for (int i = 0; i < 30; ++i) {
    const double s1 = rng.uniform(-2, 2);
    states.push_back(s1);
    states.push_back(2.0 * s1);  // exact collinearity
    actions.push_back(i % 2);
    rewards.push_back(0.0);
  }
  TrajectoryDataset d(30, 1, 2, states, actions, rewards);
  CHECK_THROWS_AS(fit_behavioral(d), SingularDesignError);
}

TEST_CASE("fit on simulated data satisfies the MLE contracts") {
  SimConfig cfg;
  cfg.n = 5000;
  cfg.seed = 2024;
  const TrajectoryDataset d = simulate(cfg);
  const BehavioralFit fit = fit_behavioral(d);
  REQUIRE(fit.converged);

  // recovery within 4 fisher SEs
  const Eigen::MatrixXd cov =
      fit.fisher_per_traj.ldlt().solve(Eigen::MatrixXd::Identity(2, 2));
  for (int k = 0; k < 2; ++k) {
    const double se = std::sqrt(cov(k, k) / static_cast<double>(cfg.n));
    CHECK(std::fabs(fit.b_n.values[k] - cfg.b_true[k]) <= 4.0 * se);
  }

  // score columns average to zero
  const Eigen::RowVectorXd mean = fit.scores_per_traj.colwise().mean();
  CHECK(mean.cwiseAbs().maxCoeff() <= 1e-8);

  // information is symmetric positive definite
  CHECK((fit.fisher_per_traj - fit.fisher_per_traj.transpose())
            .cwiseAbs()
            .maxCoeff() <= 1e-12);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(fit.fisher_per_traj);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
}

TEST_CASE("influence rows average to zero and match the model SE scale") {
  SimConfig cfg;
  cfg.n = 5000;
  cfg.seed = 4711;
  const TrajectoryDataset d = simulate(cfg);
  const BehavioralFit fit = fit_behavioral(d);
  const Eigen::MatrixXd q = behavioral_influence(fit);
  REQUIRE(q.rows() == 5000);
  REQUIRE(q.cols() == 2);

  CHECK(q.colwise().mean().cwiseAbs().maxCoeff() <= 1e-8);

  // sandwich SE vs model-based SE ratio per coordinate in [0.8, 1.25]
  const double n_d = static_cast<double>(cfg.n);
  const Eigen::MatrixXd sand = (q.transpose() * q) / n_d;
  const Eigen::MatrixXd model =
      fit.fisher_per_traj.ldlt().solve(Eigen::MatrixXd::Identity(2, 2));
  for (int k = 0; k < 2; ++k) {
    const double ratio = std::sqrt(sand(k, k)) / std::sqrt(model(k, k));
    CHECK(ratio >= 0.8);
    CHECK(ratio <= 1.25);
  }
}

TEST_CASE("active_set type invariants") {
  const ActiveSet full = ActiveSet::full(4);
  CHECK(full.is_full(4));
  CHECK(full.complement(4).empty());
  const ActiveSet some{{1, 3}, 0.0};
  CHECK(some.contains(1));
  CHECK_FALSE(some.contains(2));
  CHECK(some.complement(4) == std::vector<std::size_t>{0, 2});
  CHECK(some.mask(4) == std::vector<double>{0, 1, 0, 1});
}
