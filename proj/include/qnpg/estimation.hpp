#pragma once

#include "qnpg/exact.hpp"
#include "qnpg/ledger.hpp"
#include "qnpg/mdp.hpp"
#include "qnpg/rng.hpp"
#include "qnpg/softmax_policy.hpp"
#include "qnpg/trajectory.hpp"

#include <functional>
#include <memory>

namespace qnpg {

// Classical realization of the quantum estimators' statistical contracts.
// zero_mean_gaussian perturbs within the accuracy ball; biased_per_level adds
// a deterministic offset of magnitude bias_coefficient x (level target rms),
// which exists to exercise the variance-reduction telescope.
struct NoiseModel {
  enum class Kind { zero_mean_gaussian, biased_per_level };
  Kind kind = Kind::zero_mean_gaussian;
  double bias_coefficient = 0.0;
};

struct QmeOptions {
  double c_qme = 1.0;  // constant in the query-charge formula
};

// A finite random variable with a known variance bound (Var <= L^2), an
// exact mean, and a classical sampler over the same distribution. Both views
// are built from the same (MDP, policy, N) triple by construction.
class RandomVariableHandle {
 public:
  RandomVariableHandle(int dimension, double variance_bound,
                       double deviation_bound, int sample_length,
                       HandleKind kind, Eigen::VectorXd exact_mean,
                       std::function<Eigen::VectorXd(Rng&)> classical_sampler);

  int dimension() const { return dimension_; }
  double variance_bound() const { return variance_bound_; }
  // Exact upper bound on ||X - E[X]||; zero for constant variables.
  double deviation_bound() const { return deviation_bound_; }
  int sample_length() const { return sample_length_; }
  HandleKind kind() const { return kind_; }
  const Eigen::VectorXd& exact_mean() const { return exact_mean_; }
  Eigen::VectorXd classical_sample(Rng& rng) const { return sampler_(rng); }
  OracleCost per_query_cost() const {
    const auto n = static_cast<std::uint64_t>(sample_length_);
    return {1, n, n};
  }

 private:
  int dimension_;
  double variance_bound_;
  double deviation_bound_;
  int sample_length_;
  HandleKind kind_;
  Eigen::VectorXd exact_mean_;
  std::function<Eigen::VectorXd(Rng&)> sampler_;
};

// Handles for the truncated gradient and (vectorized) Fisher estimators.
// L_g = sqrt(d) G / (1-gamma)^2 and L_F = sqrt(d) G^2 with d the parameter
// dimension; the Fisher handle lives in dimension d^2.
RandomVariableHandle make_g_handle(const TabularMdp& mdp,
                                   const SoftmaxPolicy& policy, int truncation,
                                   const SmoothnessConstants& constants,
                                   const EstimatorMoments& moments);
RandomVariableHandle make_f_handle(const TabularMdp& mdp,
                                   const SoftmaxPolicy& policy, int truncation,
                                   const SmoothnessConstants& constants,
                                   const EstimatorMoments& moments);

// Contract simulator for the quantum mean estimator: with probability
// 1 - failure_prob returns mean + e with ||e|| <= accuracy, otherwise one
// classical sample. Charges ceil(c_qme L sqrt(dim) ln(1/failure_prob) /
// accuracy) quantum queries to the ledger.
Eigen::VectorXd qme_simulate(const RandomVariableHandle& x, double accuracy,
                             double failure_prob, const NoiseModel& noise,
                             QueryLedger& ledger, Rng& rng,
                             const QmeOptions& options = {});

// Failure probability delta = sigma^6/(4L)^6 and acceptance gate
// D = sigma/4 + 16 L^3 / sigma^2 used by qme_plus.
struct QmePlusParameters {
  double delta = 0.0;
  double gate = 0.0;
};

QmePlusParameters qme_plus_parameters(double target_rms,
                                      double variance_bound);

// Distance-gated retry wrapper: guarantees E||out - mean||^2 <= target_rms^2.
Eigen::VectorXd qme_plus(const RandomVariableHandle& x, double target_rms,
                         const NoiseModel& noise, QueryLedger& ledger,
                         Rng& rng, const QmeOptions& options = {});

// Multilevel telescope over qme_plus: unbiased with variance at most
// target_variance at an expected O(L sqrt(dim)/sigma) query cost.
Eigen::VectorXd qvariance_reduce(const RandomVariableHandle& x,
                                 double target_variance,
                                 const NoiseModel& noise, QueryLedger& ledger,
                                 Rng& rng, const QmeOptions& options = {});

}  // namespace qnpg
