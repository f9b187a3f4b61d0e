#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "helpers.hpp"

#include "qnpg/estimation.hpp"
#include "qnpg/exact.hpp"
#include "qnpg/ledger.hpp"
#include "qnpg/trajectory.hpp"

#include <cmath>
#include <vector>

using namespace qnpg;
using namespace qnpg::testing;

namespace {

RandomVariableHandle bandit_g_handle(const TabularMdp& arm, int truncation) {
  SoftmaxPolicy uniform(1, 2);
  const SmoothnessConstants constants = make_smoothness_constants(arm.discount);
  const EstimatorMoments moments =
      exact_truncated_moments_dp(arm, uniform, truncation);
  return make_g_handle(arm, uniform, truncation, constants, moments);
}

RandomVariableHandle constant_handle(double value, double L) {
  Eigen::VectorXd mean = Eigen::VectorXd::Constant(2, value);
  return RandomVariableHandle(
      2, L, 0.0, 3, HandleKind::gradient, mean,
      [mean](Rng&) { return mean; });
}

std::uint64_t expected_charge(double L, int dim, double log_inv_failure,
                              double accuracy) {
  return static_cast<std::uint64_t>(
      std::ceil(L * std::sqrt(static_cast<double>(dim)) * log_inv_failure /
                accuracy));
}

}  // namespace

TEST_CASE("ledger decomposition and conservation") {
  QueryLedger ledger;
  ledger.charge_quantum(HandleKind::gradient, 3, OracleCost{1, 7, 7});
  ledger.charge_quantum(HandleKind::fisher, 2, OracleCost{1, 7, 7});
  ledger.charge_classical(7);
  ledger.charge_classical(7);
  CHECK(ledger.totals.u_rho == 7);
  CHECK(ledger.totals.u_p == 5 * 7 + 14);
  CHECK(ledger.totals.pi == 5 * 7 + 14);
  CHECK(ledger.u_g_queries == 3);
  CHECK(ledger.u_f_queries == 2);
  CHECK(ledger.classical_samples == 2);
  CHECK(ledger.consistent(7));
  ledger.totals.u_p += 1;
  CHECK_FALSE(ledger.consistent(7));
}

TEST_CASE("handle variance bounds follow the closed forms") {
  const TabularMdp mdp = chain2();  // d = 4, gamma = 0.5
  SoftmaxPolicy policy(2, 2);
  const SmoothnessConstants constants = make_smoothness_constants(mdp.discount);
  const EstimatorMoments moments = exact_truncated_moments_dp(mdp, policy, 10);
  const RandomVariableHandle g =
      make_g_handle(mdp, policy, 10, constants, moments);
  CHECK(g.dimension() == 4);
  CHECK(g.variance_bound() ==
        doctest::Approx(8.0 * std::sqrt(2.0)).epsilon(1e-12));
  CHECK(g.per_query_cost() == OracleCost{1, 10, 10});

  const RandomVariableHandle f =
      make_f_handle(mdp, policy, 10, constants, moments);
  CHECK(f.dimension() == 16);
  CHECK(f.variance_bound() == doctest::Approx(4.0).epsilon(1e-12));

  // Handle mean and sampler view the same distribution: compare the mean
  // against an independent sample average.
  Rng rng(3);
  Eigen::VectorXd avg = Eigen::VectorXd::Zero(4);
  const int samples = 50000;
  double second = 0.0;
  for (int i = 0; i < samples; ++i) {
    const Eigen::VectorXd draw = g.classical_sample(rng);
    avg += draw;
    second += draw.squaredNorm();
  }
  avg /= samples;
  const double trace_var =
      std::max(1e-12, (second - samples * avg.squaredNorm()) / (samples - 1));
  CHECK((avg - g.exact_mean()).norm() <= 5.0 * std::sqrt(trace_var / samples));
}

TEST_CASE("qme charge arithmetic") {
  QueryLedger ledger;
  Rng rng(1);
  NoiseModel noise;
  const RandomVariableHandle handle = constant_handle(0.25, 4.0);
  qme_simulate(handle, 1.0, std::exp(-1.0), noise, ledger, rng);
  CHECK(ledger.u_g_queries == 6);  // ceil(4 sqrt(2) * 1 / 1)
  CHECK(ledger.totals.u_rho == 6 + ledger.classical_samples);
  CHECK(ledger.totals.u_p == 18 + ledger.classical_steps);
  CHECK(ledger.consistent(3));
}

TEST_CASE("qme degenerate handle returns the exact mean") {
  const TabularMdp single = single_action_mdp();
  SoftmaxPolicy trivial(2, 1);
  const SmoothnessConstants constants =
      make_smoothness_constants(single.discount);
  const EstimatorMoments moments =
      exact_truncated_moments_dp(single, trivial, 4);
  const RandomVariableHandle handle =
      make_g_handle(single, trivial, 4, constants, moments);
  CHECK(handle.deviation_bound() == 0.0);
  QueryLedger ledger;
  Rng rng(2);
  NoiseModel noise;
  for (int i = 0; i < 10; ++i) {
    CHECK(qme_simulate(handle, 0.5, 0.5, noise, ledger, rng).norm() == 0.0);
  }
}

TEST_CASE("qme argument guards") {
  const RandomVariableHandle handle = constant_handle(0.0, 2.0);
  QueryLedger ledger;
  Rng rng(3);
  NoiseModel noise;
  CHECK_THROWS_AS(qme_simulate(handle, 3.0, 0.1, noise, ledger, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(qme_simulate(handle, 0.0, 0.1, noise, ledger, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(qme_simulate(handle, 0.5, 0.0, noise, ledger, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(qme_plus(handle, 4.0, noise, ledger, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(qvariance_reduce(handle, 0.0, noise, ledger, rng),
                  std::invalid_argument);
}

TEST_CASE("qme error ball holds outside the failure branch") {
  const TabularMdp arm = bandit();
  const RandomVariableHandle handle = bandit_g_handle(arm, 10);
  QueryLedger ledger;
  Rng rng(4);
  NoiseModel noise;
  const double accuracy = 0.05;
  const double failure_prob = 0.01;
  const int runs = 10000;
  int violations = 0;
  for (int i = 0; i < runs; ++i) {
    const Eigen::VectorXd out =
        qme_simulate(handle, accuracy, failure_prob, noise, ledger, rng);
    if ((out - handle.exact_mean()).norm() > accuracy + 1e-12) ++violations;
  }
  CHECK(static_cast<double>(violations) / runs <= 0.02);
  CHECK(violations > 0);  // the failure branch does fire at 1%
}

TEST_CASE("qme_plus parameters and constant passthrough") {
  const QmePlusParameters params = qme_plus_parameters(1.0, 4.0);
  CHECK(params.delta == doctest::Approx(std::pow(16.0, -6.0)).epsilon(1e-12));
  CHECK(params.gate == doctest::Approx(1024.25).epsilon(1e-12));

  const RandomVariableHandle handle = constant_handle(0.7, 3.0);
  QueryLedger ledger;
  Rng rng(5);
  NoiseModel noise;
  const Eigen::VectorXd out = qme_plus(handle, 0.5, noise, ledger, rng);
  CHECK((out - handle.exact_mean()).norm() == 0.0);
  // One quantum call plus the gating classical sample.
  CHECK(ledger.classical_samples == 1);
}

TEST_CASE("qme_plus meets its mean-square contract") {
  const TabularMdp arm = bandit();
  const RandomVariableHandle handle = bandit_g_handle(arm, 10);
  QueryLedger ledger;
  Rng rng(6);
  NoiseModel noise;
  const double target = 0.2;
  const int runs = 20000;
  double mse = 0.0;
  for (int i = 0; i < runs; ++i) {
    const Eigen::VectorXd out = qme_plus(handle, target, noise, ledger, rng);
    mse += (out - handle.exact_mean()).squaredNorm();
  }
  CHECK(mse / runs <= target * target);
}

TEST_CASE("qvariance_reduce telescopes exactly when levels are exact") {
  const RandomVariableHandle handle = constant_handle(-0.3, 5.0);
  QueryLedger ledger;
  Rng rng(7);
  NoiseModel noise;
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd out =
        qvariance_reduce(handle, 0.25, noise, ledger, rng);
    CHECK((out - handle.exact_mean()).norm() == 0.0);
  }
}

TEST_CASE("qvariance_reduce is unbiased with variance at the target") {
  const TabularMdp arm = bandit();
  const RandomVariableHandle handle = bandit_g_handle(arm, 10);
  QueryLedger ledger;
  Rng rng(8);
  NoiseModel noise;
  const double sigma2 = 0.04;
  const int runs = 20000;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  double second = 0.0;
  for (int i = 0; i < runs; ++i) {
    const Eigen::VectorXd out =
        qvariance_reduce(handle, sigma2, noise, ledger, rng);
    mean += out;
    second += out.squaredNorm();
  }
  mean /= runs;
  const double trace_var =
      std::max(0.0, (second - runs * mean.squaredNorm()) / (runs - 1));
  CHECK(trace_var <= 1.5 * sigma2);
  const double se = std::sqrt(std::max(trace_var, 1e-12) / runs);
  CHECK(std::abs(mean[0] - handle.exact_mean()[0]) <= 5.0 * se);
  CHECK(std::abs(mean[1] - handle.exact_mean()[1]) <= 5.0 * se);
}

TEST_CASE("level bias cancels through the telescope") {
  const TabularMdp arm = bandit();
  const RandomVariableHandle handle = bandit_g_handle(arm, 10);
  NoiseModel biased;
  biased.kind = NoiseModel::Kind::biased_per_level;
  biased.bias_coefficient = 0.5;
  const double sigma2 = 0.04;
  const double sigma = std::sqrt(sigma2);
  const int runs = 20000;

  // Raw level-0 estimator: deterministic offset of 0.5 * sigma/10 on the
  // first coordinate.
  {
    QueryLedger ledger;
    Rng rng(9);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    double second = 0.0;
    for (int i = 0; i < runs; ++i) {
      const Eigen::VectorXd out =
          qme_plus(handle, sigma / 10.0, biased, ledger, rng);
      mean += out;
      second += (out - handle.exact_mean()).squaredNorm();
    }
    mean /= runs;
    const double offset = mean[0] - handle.exact_mean()[0];
    const double se = std::sqrt(second / runs / runs);
    CHECK(offset > 4.0 * se);
    CHECK(offset == doctest::Approx(0.5 * sigma / 10.0).epsilon(0.05));
  }

  // Telescoped estimator: the level bias cancels in expectation.
  {
    QueryLedger ledger;
    Rng rng(10);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    double second = 0.0;
    for (int i = 0; i < runs; ++i) {
      const Eigen::VectorXd out =
          qvariance_reduce(handle, sigma2, biased, ledger, rng);
      mean += out;
      second += out.squaredNorm();
    }
    mean /= runs;
    const double trace_var =
        std::max(1e-12, (second - runs * mean.squaredNorm()) / (runs - 1));
    const double se = std::sqrt(trace_var / runs);
    CHECK(std::abs(mean[0] - handle.exact_mean()[0]) <= 5.0 * se);
    CHECK(std::abs(mean[1] - handle.exact_mean()[1]) <= 5.0 * se);
  }
}

TEST_CASE("qvariance_reduce is unbiased on a two-state instance") {
  const TabularMdp mdp = chain2();
  SoftmaxPolicy policy(2, 2);
  const SmoothnessConstants constants = make_smoothness_constants(mdp.discount);
  const EstimatorMoments moments = exact_truncated_moments_dp(mdp, policy, 6);
  const RandomVariableHandle g_handle =
      make_g_handle(mdp, policy, 6, constants, moments);
  const RandomVariableHandle f_handle =
      make_f_handle(mdp, policy, 6, constants, moments);
  for (const auto kind :
       {NoiseModel::Kind::zero_mean_gaussian,
        NoiseModel::Kind::biased_per_level}) {
    NoiseModel noise;
    noise.kind = kind;
    noise.bias_coefficient = 0.5;
    for (const RandomVariableHandle* handle : {&g_handle, &f_handle}) {
      QueryLedger ledger;
      Rng rng(14);
      const int runs = 20000;
      const int d = handle->dimension();
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
      double second = 0.0;
      const double sigma2 = 0.04;
      for (int i = 0; i < runs; ++i) {
        const Eigen::VectorXd out =
            qvariance_reduce(*handle, sigma2, noise, ledger, rng);
        mean += out;
        second += out.squaredNorm();
      }
      mean /= runs;
      const double trace_var = std::max(
          1e-12, (second - runs * mean.squaredNorm()) / (runs - 1.0));
      CHECK(trace_var <= 1.5 * sigma2);
      const double se = std::sqrt(trace_var / runs);
      for (int i = 0; i < d; ++i) {
        CHECK(std::abs(mean[i] - handle->exact_mean()[i]) <= 5.0 * se);
      }
      CHECK(ledger.consistent(6));
    }
  }
}

TEST_CASE("query cost scales like one over sigma") {
  const TabularMdp arm = bandit();
  const RandomVariableHandle handle = bandit_g_handle(arm, 10);
  NoiseModel noise;
  const std::vector<double> sigmas = {0.4, 0.2, 0.1, 0.05};
  std::vector<double> log_inv_sigma, log_cost;
  // Common random numbers across the sigma grid: the charge distribution is
  // heavy-tailed over telescope levels.
  for (const double sigma : sigmas) {
    QueryLedger ledger;
    const int runs = 500;
    for (int i = 0; i < runs; ++i) {
      Rng rng(1100 + i);
      qvariance_reduce(handle, sigma * sigma, noise, ledger, rng);
    }
    log_inv_sigma.push_back(std::log(1.0 / sigma));
    log_cost.push_back(
        std::log(static_cast<double>(ledger.totals.u_p) / runs));
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    mx += log_inv_sigma[i];
    my += log_cost[i];
  }
  mx /= sigmas.size();
  my /= sigmas.size();
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < sigmas.size(); ++i) {
    sxx += (log_inv_sigma[i] - mx) * (log_inv_sigma[i] - mx);
    sxy += (log_inv_sigma[i] - mx) * (log_cost[i] - my);
  }
  const double slope = sxy / sxx;
  CHECK(slope >= 0.75);
  CHECK(slope <= 1.25);
}

TEST_CASE("geometric level distribution") {
  Rng rng(12);
  const int draws = 100000;
  int ones = 0, twos = 0;
  for (int i = 0; i < draws; ++i) {
    const int j = rng.geom_half();
    if (j == 1) ++ones;
    if (j == 2) ++twos;
  }
  const double se1 = std::sqrt(0.5 * 0.5 / draws);
  const double se2 = std::sqrt(0.25 * 0.75 / draws);
  CHECK(std::abs(static_cast<double>(ones) / draws - 0.5) <= 3.0 * se1);
  CHECK(std::abs(static_cast<double>(twos) / draws - 0.25) <= 3.0 * se2);
}

TEST_CASE("expected work matches the level series") {
  const TabularMdp arm = bandit();
  const int truncation = 10;
  const RandomVariableHandle handle = bandit_g_handle(arm, truncation);
  NoiseModel noise;
  const double sigma = 0.2;
  const double L = handle.variance_bound();
  const double base = sigma / 10.0;

  auto level_charge = [&](double rms) {
    const double log_inv_delta = 6.0 * std::log(4.0 * L / rms);
    return static_cast<double>(
        expected_charge(L, handle.dimension(), log_inv_delta, rms / 4.0));
  };
  // One qme query (u_p = N each) plus one gating classical sample (u_p = N)
  // per qme_plus call; the geometric level j is clamped at 60.
  auto plus_cost = [&](double rms) {
    return truncation * (level_charge(rms) + 1.0);
  };
  double analytic = plus_cost(base);
  double weight = 0.5;
  for (int j = 1; j <= 60; ++j) {
    const double w = (j == 60) ? weight * 2.0 : weight;  // clamp mass
    analytic += w * (plus_cost(std::exp2(-0.75 * j) * base) +
                     plus_cost(std::exp2(-0.75 * (j - 1)) * base));
    weight *= 0.5;
  }

  QueryLedger ledger;
  Rng rng(13);
  const int runs = 3000;
  for (int i = 0; i < runs; ++i) {
    qvariance_reduce(handle, sigma * sigma, noise, ledger, rng);
  }
  const double empirical = static_cast<double>(ledger.totals.u_p) / runs;
  CHECK(empirical >= 0.75 * analytic);
  CHECK(empirical <= 1.25 * analytic);
}
