#include "qnpg/bounds.hpp"

#include <cmath>
#include <stdexcept>

namespace qnpg {

BiasBounds bias_bounds(double G, double gamma, int truncation) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("bias_bounds: gamma must be in (0,1)");
  }
  if (!(G > 0.0)) {
    throw std::invalid_argument("bias_bounds: G must be positive");
  }
  if (truncation < 1) {
    throw std::invalid_argument("bias_bounds: truncation must be >= 1");
  }
  const double one_minus = 1.0 - gamma;
  const double decay = std::pow(gamma, truncation);
  BiasBounds bounds;
  bounds.delta_g =
      G * ((truncation + 1) / one_minus + gamma / (one_minus * one_minus)) *
      decay;
  bounds.delta_F = G * G * decay;
  return bounds;
}

StepSizes step_sizes(const SmoothnessConstants& constants) {
  StepSizes sizes;
  sizes.eta = constants.mu_F * constants.mu_F /
              (4.0 * constants.G * constants.G * constants.L);
  sizes.alpha_max =
      constants.mu_F / (56.0 * std::pow(constants.G, 4.0));
  return sizes;
}

BoundsReport inner_residual_constants(double G, double mu_F, double gamma,
                                      double alpha, double sigma2_g,
                                      double sigma2_F, double delta_g,
                                      double delta_F) {
  if (!(mu_F > 0.0)) {
    throw std::invalid_argument(
        "inner_residual_constants: mu_F must be positive");
  }
  const double one_minus = 1.0 - gamma;
  const double kappa = (G * G) / (mu_F * mu_F * std::pow(one_minus, 4.0));
  const double d2_g = delta_g * delta_g;
  const double d2_F = delta_F * delta_F;

  BoundsReport report;
  report.delta_g = delta_g;
  report.delta_F = delta_F;
  report.R0 = 6.0 / mu_F * (kappa * (sigma2_F + d2_F) + (sigma2_g + d2_g));
  report.R1 = 4.0 / (mu_F * mu_F) * (2.0 * d2_F * kappa + d2_g);
  report.C0 = report.R1 + alpha * report.R0;
  // Distance of the zero inner initialization to the fixed point, bounded by
  // ||omega*|| <= G / (mu_F (1-gamma)^2).
  const double omega0_sq = kappa;
  report.C1 = 6.0 / mu_F * (alpha + 1.0 / mu_F) *
              (d2_F * (omega0_sq + alpha * report.R0 + report.R1) +
               kappa * d2_F + d2_g);
  return report;
}

BoundsReport inner_residual_constants(const RunConfig& config, double gamma,
                                      const BiasBounds& bounds) {
  return inner_residual_constants(config.constants.G, config.constants.mu_F,
                                  gamma, config.alpha, config.sigma2_g,
                                  config.sigma2_F, bounds.delta_g,
                                  bounds.delta_F);
}

void RunConfig::validate(bool schedule_generated) const {
  if (K < 1 || H < 1 || N < 1) {
    throw std::invalid_argument("RunConfig: K, H, N must be >= 1");
  }
  if (!(eta > 0.0) || !(alpha > 0.0)) {
    throw std::invalid_argument("RunConfig: eta and alpha must be positive");
  }
  if (!(sigma2_g > 0.0) || !(sigma2_F > 0.0)) {
    throw std::invalid_argument(
        "RunConfig: sigma2_g and sigma2_F must be positive");
  }
  if (lambda_reg < 0.0) {
    throw std::invalid_argument("RunConfig: lambda_reg must be >= 0");
  }
  if (schedule_generated) {
    const double alpha_cap =
        constants.mu_F / (56.0 * std::pow(constants.G, 4.0));
    if (alpha > alpha_cap * (1.0 + 1e-12)) {
      throw std::invalid_argument(
          "RunConfig: alpha exceeds mu_F / (56 G^4)");
    }
  }
}

int min_truncation_for_bias(double G, double gamma, double mu_F) {
  if (!(gamma > 0.0 && gamma < 1.0) || !(G > 0.0) || !(mu_F > 0.0)) {
    throw std::invalid_argument("min_truncation_for_bias: invalid arguments");
  }
  const double target = mu_F / 8.0;
  int n = 1;
  double decay = gamma;
  while (G * G * decay > target) {
    ++n;
    decay *= gamma;
    if (n > 1000000) {
      throw std::invalid_argument(
          "min_truncation_for_bias: no feasible truncation below 1e6");
    }
  }
  return n;
}

RunConfig schedule_from_epsilon(double epsilon, double gamma,
                                const SmoothnessConstants& constants,
                                const ScheduleConstants& multipliers) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw std::invalid_argument("schedule_from_epsilon: epsilon must be in (0,1)");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("schedule_from_epsilon: gamma must be in (0,1)");
  }
  const double log_inv_eps = std::log(1.0 / epsilon);
  RunConfig config;
  config.constants = constants;
  config.K = static_cast<int>(std::ceil(multipliers.c_K / epsilon));
  config.H = std::max(
      1, static_cast<int>(std::ceil(multipliers.c_H * log_inv_eps)));
  const int n_growth = static_cast<int>(
      std::ceil(multipliers.c_N * log_inv_eps / std::log(1.0 / gamma)));
  config.N = std::max({1, n_growth,
                       min_truncation_for_bias(constants.G, gamma,
                                               constants.mu_F)});
  config.sigma2_g = multipliers.c_g * epsilon;
  config.sigma2_F = multipliers.c_F * std::pow(1.0 - gamma, 4.0) * epsilon;
  const StepSizes sizes = step_sizes(constants);
  config.eta = sizes.eta;
  config.alpha = sizes.alpha_max;
  config.lambda_reg = constants.mu_F;
  config.validate(true);
  return config;
}

}  // namespace qnpg
