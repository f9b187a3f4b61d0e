#include "qnpg/estimation.hpp"

#include <cmath>
#include <stdexcept>

namespace qnpg {

RandomVariableHandle::RandomVariableHandle(
    int dimension, double variance_bound, double deviation_bound,
    int sample_length, HandleKind kind, Eigen::VectorXd exact_mean,
    std::function<Eigen::VectorXd(Rng&)> classical_sampler)
    : dimension_(dimension),
      variance_bound_(variance_bound),
      deviation_bound_(deviation_bound),
      sample_length_(sample_length),
      kind_(kind),
      exact_mean_(std::move(exact_mean)),
      sampler_(std::move(classical_sampler)) {
  if (dimension_ < 1) {
    throw std::invalid_argument("RandomVariableHandle: dimension must be >= 1");
  }
  if (variance_bound_ < 0.0 || deviation_bound_ < 0.0) {
    throw std::invalid_argument("RandomVariableHandle: bounds must be >= 0");
  }
  if (exact_mean_.size() != dimension_) {
    throw std::invalid_argument("RandomVariableHandle: mean dimension mismatch");
  }
}

namespace {

// sum_{n<N} (n+1) gamma^n, the norm budget of the truncated gradient sum.
double weighted_horizon(double gamma, int truncation) {
  double total = 0.0;
  double pow = 1.0;
  for (int n = 0; n < truncation; ++n) {
    total += (n + 1) * pow;
    pow *= gamma;
  }
  return total;
}

}  // namespace

RandomVariableHandle make_g_handle(const TabularMdp& mdp,
                                   const SoftmaxPolicy& policy, int truncation,
                                   const SmoothnessConstants& constants,
                                   const EstimatorMoments& moments) {
  const int d = policy.param_dim();
  const double one_minus = 1.0 - mdp.discount;
  const double variance_bound =
      std::sqrt(static_cast<double>(d)) * constants.G / (one_minus * one_minus);
  auto tables = std::make_shared<const PolicyTables>(policy);
  const double range =
      tables->max_score_norm * weighted_horizon(mdp.discount, truncation);
  auto sampler = [&mdp, tables, truncation](Rng& rng) {
    const Trajectory trajectory =
        sample_trajectory(mdp, *tables, truncation, rng);
    return g_hat(trajectory, mdp, *tables);
  };
  return RandomVariableHandle(d, variance_bound, 2.0 * range, truncation,
                              HandleKind::gradient, moments.mean_g,
                              std::move(sampler));
}

RandomVariableHandle make_f_handle(const TabularMdp& mdp,
                                   const SoftmaxPolicy& policy, int truncation,
                                   const SmoothnessConstants& constants,
                                   const EstimatorMoments& moments) {
  const int d = policy.param_dim();
  const double variance_bound =
      std::sqrt(static_cast<double>(d)) * constants.G * constants.G;
  auto tables = std::make_shared<const PolicyTables>(policy);
  const double range = tables->max_score_norm * tables->max_score_norm;
  auto sampler = [&mdp, tables, truncation, d](Rng& rng) {
    const Trajectory trajectory =
        sample_trajectory(mdp, *tables, truncation, rng);
    const Eigen::MatrixXd f = f_hat(trajectory, mdp, *tables);
    return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(
        f.data(), static_cast<long>(d) * d));
  };
  Eigen::VectorXd mean_vec = Eigen::Map<const Eigen::VectorXd>(
      moments.mean_F.data(), static_cast<long>(d) * d);
  return RandomVariableHandle(d * d, variance_bound, 2.0 * range, truncation,
                              HandleKind::fisher, std::move(mean_vec),
                              std::move(sampler));
}

namespace {

std::uint64_t query_charge(const RandomVariableHandle& x, double accuracy,
                           double log_inv_failure, double c_qme) {
  const double raw = c_qme * x.variance_bound() *
                     std::sqrt(static_cast<double>(x.dimension())) *
                     log_inv_failure / accuracy;
  const double ceiled = std::ceil(raw);
  constexpr double kMax = 4.6e18;  // stay clear of uint64 overflow
  if (!(ceiled >= 0.0)) return 0;
  if (ceiled > kMax) return static_cast<std::uint64_t>(kMax);
  return static_cast<std::uint64_t>(ceiled);
}

// Spherically symmetric perturbation whose scale follows the variable's true
// spread, clipped into the accuracy ball; exactly zero for constant handles.
Eigen::VectorXd ball_noise(const RandomVariableHandle& x, double accuracy,
                           Rng& rng) {
  const double scale = 0.5 * std::min(accuracy, x.deviation_bound());
  // Gaussian draws are consumed even when the scale collapses so that the
  // stream position does not depend on the handle.
  Eigen::VectorXd z = rng.gaussian(x.dimension());
  if (scale == 0.0) return Eigen::VectorXd::Zero(x.dimension());
  z *= scale / std::sqrt(static_cast<double>(x.dimension()));
  const double norm = z.norm();
  if (norm > accuracy) z *= accuracy / norm;
  return z;
}

struct QmeResult {
  Eigen::VectorXd value;
  bool success = true;
};

QmeResult qme_simulate_impl(const RandomVariableHandle& x, double accuracy,
                            double log_inv_failure, double failure_prob,
                            QueryLedger& ledger, Rng& rng,
                            const QmeOptions& options) {
  if (!(accuracy > 0.0)) {
    throw std::invalid_argument("qme_simulate: accuracy must be positive");
  }
  if (accuracy > x.variance_bound()) {
    throw std::invalid_argument(
        "qme_simulate: accuracy exceeds the variance bound L");
  }
  ledger.charge_quantum(x.kind(),
                        query_charge(x, accuracy, log_inv_failure, options.c_qme),
                        x.per_query_cost());
  if (rng.uniform() < failure_prob) {
    Eigen::VectorXd sample = x.classical_sample(rng);
    ledger.charge_classical(x.sample_length());
    return {std::move(sample), false};
  }
  return {x.exact_mean() + ball_noise(x, accuracy, rng), true};
}

}  // namespace

Eigen::VectorXd qme_simulate(const RandomVariableHandle& x, double accuracy,
                             double failure_prob, const NoiseModel&,
                             QueryLedger& ledger, Rng& rng,
                             const QmeOptions& options) {
  if (!(failure_prob > 0.0 && failure_prob < 1.0)) {
    throw std::invalid_argument("qme_simulate: failure_prob must be in (0,1)");
  }
  return qme_simulate_impl(x, accuracy, std::log(1.0 / failure_prob),
                           failure_prob, ledger, rng, options)
      .value;
}

QmePlusParameters qme_plus_parameters(double target_rms,
                                      double variance_bound) {
  QmePlusParameters params;
  params.delta = std::pow(target_rms / (4.0 * variance_bound), 6.0);
  params.gate = target_rms / 4.0 +
                16.0 * std::pow(variance_bound, 3.0) /
                    (target_rms * target_rms);
  return params;
}

Eigen::VectorXd qme_plus(const RandomVariableHandle& x, double target_rms,
                         const NoiseModel& noise, QueryLedger& ledger,
                         Rng& rng, const QmeOptions& options) {
  const double L = x.variance_bound();
  if (!(target_rms > 0.0)) {
    throw std::invalid_argument("qme_plus: target_rms must be positive");
  }
  if (target_rms > L) {
    throw std::invalid_argument("qme_plus: target_rms exceeds the variance bound L");
  }
  // ln(1/delta) is formed analytically since delta underflows for deep
  // telescope levels.
  const double log_inv_delta = 6.0 * std::log(4.0 * L / target_rms);
  const double delta = std::exp(-log_inv_delta);
  const double gate = qme_plus_parameters(target_rms, L).gate;

  QmeResult first = qme_simulate_impl(x, target_rms / 4.0, log_inv_delta,
                                      delta, ledger, rng, options);
  if (first.success && noise.kind == NoiseModel::Kind::biased_per_level &&
      x.deviation_bound() > 0.0) {
    first.value[0] += noise.bias_coefficient * target_rms;
  }
  const Eigen::VectorXd check = x.classical_sample(rng);
  ledger.charge_classical(x.sample_length());
  if ((first.value - check).norm() <= gate) {
    return first.value;
  }
  Eigen::VectorXd fallback = x.classical_sample(rng);
  ledger.charge_classical(x.sample_length());
  return fallback;
}

Eigen::VectorXd qvariance_reduce(const RandomVariableHandle& x,
                                 double target_variance,
                                 const NoiseModel& noise, QueryLedger& ledger,
                                 Rng& rng, const QmeOptions& options) {
  if (!(target_variance > 0.0)) {
    throw std::invalid_argument(
        "qvariance_reduce: target_variance must be positive");
  }
  const double sigma = std::sqrt(target_variance);
  if (sigma > x.variance_bound()) {
    throw std::invalid_argument(
        "qvariance_reduce: sqrt(target_variance) exceeds the variance bound L");
  }
  const double base = sigma / 10.0;
  const Eigen::VectorXd level0 = qme_plus(x, base, noise, ledger, rng, options);
  const int j = rng.geom_half();
  const Eigen::VectorXd upper =
      qme_plus(x, std::exp2(-0.75 * j) * base, noise, ledger, rng, options);
  const Eigen::VectorXd lower =
      qme_plus(x, std::exp2(-0.75 * (j - 1)) * base, noise, ledger, rng,
               options);
  return level0 + std::exp2(j) * (upper - lower);
}

}  // namespace qnpg
