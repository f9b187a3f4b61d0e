#pragma once

#include "qnpg/exact.hpp"

#include <Eigen/Dense>

#include <cstdint>

namespace qnpg {

// Truncation-bias bounds of the fixed-length estimators:
//   delta_g = G ((N+1)/(1-gamma) + gamma/(1-gamma)^2) gamma^N
//   delta_F = G^2 gamma^N
struct BiasBounds {
  double delta_g = 0.0;
  double delta_F = 0.0;
};

BiasBounds bias_bounds(double G, double gamma, int truncation);

// eta = mu_F^2 / (4 G^2 L) and alpha_max = mu_F / (56 G^4).
struct StepSizes {
  double eta = 0.0;
  double alpha_max = 0.0;
};

StepSizes step_sizes(const SmoothnessConstants& constants);

// Inner-loop residual constants. C0 bounds the stationary second-moment
// residual, C1 the squared first-moment residual; R0, R1 are the reusable
// pieces they are assembled from.
struct BoundsReport {
  double delta_g = 0.0;
  double delta_F = 0.0;
  double R0 = 0.0;
  double R1 = 0.0;
  double C0 = 0.0;
  double C1 = 0.0;
};

BoundsReport inner_residual_constants(double G, double mu_F, double gamma,
                                      double alpha, double sigma2_g,
                                      double sigma2_F, double delta_g,
                                      double delta_F);

// Multipliers for the epsilon-driven parameter schedule; all default to 1.
struct ScheduleConstants {
  double c_K = 1.0;
  double c_H = 1.0;
  double c_N = 1.0;
  double c_g = 1.0;
  double c_F = 1.0;
};

// Every run-time parameter of a two-loop NPG run.
struct RunConfig {
  int K = 1;
  int H = 1;
  int N = 1;
  double eta = 0.0;
  double alpha = 0.0;
  double sigma2_g = 0.0;
  double sigma2_F = 0.0;
  double lambda_reg = kDefaultFisherRidge;
  Eigen::VectorXd omega0;  // empty => zeros
  Eigen::VectorXd theta0;  // empty => zeros
  std::uint64_t seed = 0;
  SmoothnessConstants constants;

  void validate(bool schedule_generated = false) const;
};

BoundsReport inner_residual_constants(const RunConfig& config, double gamma,
                                      const BiasBounds& bounds);

// Smallest N >= 1 with G^2 gamma^N <= mu_F / 8.
int min_truncation_for_bias(double G, double gamma, double mu_F);

// K = ceil(c_K/eps), H = ceil(c_H ln(1/eps)),
// N = max(ceil(c_N ln(1/eps)/ln(1/gamma)), min_truncation_for_bias),
// sigma_g^2 = c_g eps, sigma_F^2 = c_F (1-gamma)^4 eps; eta and alpha from
// step_sizes with mu_F standing in for the Fisher ridge.
RunConfig schedule_from_epsilon(double epsilon, double gamma,
                                const SmoothnessConstants& constants,
                                const ScheduleConstants& multipliers = {});

}  // namespace qnpg
