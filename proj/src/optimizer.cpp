#include "qnpg/optimizer.hpp"

#include "qnpg/errors.hpp"
#include "qnpg/trajectory.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>

namespace qnpg {

namespace {

Eigen::VectorXd resolve_vector(const Eigen::VectorXd& configured, int dim,
                               const char* name) {
  if (configured.size() == 0) return Eigen::VectorXd::Zero(dim);
  if (configured.size() != dim) {
    throw std::invalid_argument(std::string("RunConfig: ") + name +
                                " has dimension " +
                                std::to_string(configured.size()) +
                                ", expected " + std::to_string(dim));
  }
  return configured;
}

void check_iterate(const Eigen::VectorXd& omega, int h) {
  if (!omega.allFinite() || omega.norm() > kDivergenceGuard) {
    throw NumericalDivergence(
        "inner loop diverged at step h=" + std::to_string(h) +
            " (step size too large for the configured constants)",
        h);
  }
}

Eigen::MatrixXd devectorize_symmetric(const Eigen::VectorXd& flat, int d,
                                      double ridge) {
  Eigen::MatrixXd m = Eigen::Map<const Eigen::MatrixXd>(flat.data(), d, d);
  Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  sym.diagonal().array() += ridge;
  return sym;
}

}  // namespace

Eigen::VectorXd inner_loop(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                           const RunConfig& config, const NoiseModel& noise,
                           QueryLedger& ledger, Rng& rng,
                           const InnerLoopOptions& options) {
  const int d = policy.param_dim();
  const EstimatorMoments moments =
      exact_truncated_moments_dp(mdp, policy, config.N);
  const RandomVariableHandle g_handle =
      make_g_handle(mdp, policy, config.N, config.constants, moments);
  const RandomVariableHandle f_handle =
      make_f_handle(mdp, policy, config.N, config.constants, moments);

  Eigen::VectorXd omega = resolve_vector(config.omega0, d, "omega0");
  for (int h = 0; h < config.H; ++h) {
    const Eigen::VectorXd g_tilde =
        qvariance_reduce(g_handle, config.sigma2_g, noise, ledger, rng);
    const Eigen::VectorXd f_flat =
        qvariance_reduce(f_handle, config.sigma2_F, noise, ledger, rng);
    const Eigen::MatrixXd f_tilde =
        devectorize_symmetric(f_flat, d, config.lambda_reg);
    const Eigen::VectorXd grad = f_tilde * omega - g_tilde;
    omega -= config.alpha * grad;
    check_iterate(omega, h);
    if (options.sink != nullptr) {
      options.sink->push_back({options.k, h, grad.norm(), snapshot(ledger)});
    }
  }
  return omega;
}

std::vector<Eigen::VectorXd> inner_loop_exact(const TabularMdp& mdp,
                                              const SoftmaxPolicy& policy,
                                              const RunConfig& config,
                                              int num_steps) {
  const int d = policy.param_dim();
  Eigen::MatrixXd fisher = exact_fisher(mdp, policy);
  fisher.diagonal().array() += config.lambda_reg;
  const Eigen::VectorXd grad_j = exact_policy_gradient(mdp, policy);

  std::vector<Eigen::VectorXd> iterates;
  iterates.reserve(num_steps + 1);
  iterates.push_back(resolve_vector(config.omega0, d, "omega0"));
  for (int h = 0; h < num_steps; ++h) {
    const Eigen::VectorXd& omega = iterates.back();
    Eigen::VectorXd next = omega - config.alpha * (fisher * omega - grad_j);
    check_iterate(next, h);
    iterates.push_back(std::move(next));
  }
  return iterates;
}

Eigen::VectorXd outer_step(const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& omega, double eta) {
  if (theta.size() != omega.size()) {
    throw std::invalid_argument("outer_step: dimension mismatch");
  }
  return theta + eta * omega;
}

namespace {

using InnerSolver = std::function<Eigen::VectorXd(
    const SoftmaxPolicy&, QueryLedger&, Rng&, int, std::vector<InnerRecord>*)>;

RunHistory run_loop(const TabularMdp& mdp, const RunConfig& config, Rng& rng,
                    const InnerSolver& solve_inner, bool record_inner) {
  config.validate();
  const int d = mdp.num_states * mdp.num_actions;

  RunHistory history;
  const PolicyIterationResult optimal = solve_optimal(mdp);
  history.j_star = optimal.j_star;

  Eigen::VectorXd theta = resolve_vector(config.theta0, d, "theta0");
  SoftmaxPolicy policy(mdp.num_states, mdp.num_actions, theta);
  history.kl_theta0 = kl_to_optimal(mdp, optimal, policy);

  std::vector<InnerRecord>* sink =
      record_inner ? &history.inner_records : nullptr;
  history.records.reserve(config.K);
  for (int k = 0; k < config.K; ++k) {
    policy.set_theta(theta);
    const double j_value = objective(mdp, policy);
    Eigen::VectorXd omega;
    try {
      omega = solve_inner(policy, history.ledger, rng, k, sink);
    } catch (const NumericalDivergence& e) {
      throw NumericalDivergence("outer iteration k=" + std::to_string(k) +
                                    ": " + e.what(),
                                e.inner_step());
    }
    history.records.push_back(
        {k, theta, omega, j_value, snapshot(history.ledger)});
    theta = outer_step(theta, omega, config.eta);
  }
  policy.set_theta(theta);
  history.theta_final = theta;
  history.j_final = objective(mdp, policy);
  return history;
}

}  // namespace

RunHistory run_qnpg(const TabularMdp& mdp, const RunConfig& config,
                    const NoiseModel& noise, Rng& rng, bool record_inner) {
  return run_loop(
      mdp, config, rng,
      [&](const SoftmaxPolicy& policy, QueryLedger& ledger, Rng& run_rng,
          int k, std::vector<InnerRecord>* sink) {
        InnerLoopOptions options;
        options.k = k;
        options.sink = sink;
        return inner_loop(mdp, policy, config, noise, ledger, run_rng,
                          options);
      },
      record_inner);
}

namespace {

// Classical per-sample Fisher estimate: the score outer product at the final
// step of a geometric-length roll, which lands on the state-action occupancy.
Eigen::VectorXd classical_fisher_sample(const TabularMdp& mdp,
                                        const PolicyTables& tables,
                                        QueryLedger& ledger, Rng& rng) {
  const int horizon = rng.geometric_from_continue_prob(mdp.discount);
  const Trajectory trajectory = sample_trajectory(mdp, tables, horizon, rng);
  ledger.charge_classical(horizon);
  const auto& [s, a] = trajectory.steps.back();
  const Eigen::VectorXd& score = tables.score(s, a);
  const int d = static_cast<int>(score.size());
  const Eigen::MatrixXd outer = score * score.transpose();
  return Eigen::Map<const Eigen::VectorXd>(outer.data(),
                                           static_cast<long>(d) * d);
}

std::uint64_t batch_for_target(double variance_bound_sq, double target) {
  return static_cast<std::uint64_t>(
      std::max(1.0, std::ceil(variance_bound_sq / target)));
}

}  // namespace

RunHistory run_classical_npg(const TabularMdp& mdp, const RunConfig& config,
                             Rng& rng) {
  const double one_minus = 1.0 - mdp.discount;
  const int d = mdp.num_states * mdp.num_actions;
  const double var_bound_g = d * config.constants.G * config.constants.G /
                             std::pow(one_minus, 4.0);
  const double var_bound_F = d * std::pow(config.constants.G, 4.0);
  const std::uint64_t batch_g = batch_for_target(var_bound_g, config.sigma2_g);
  const std::uint64_t batch_F = batch_for_target(var_bound_F, config.sigma2_F);

  return run_loop(
      mdp, config, rng,
      [&](const SoftmaxPolicy& policy, QueryLedger& ledger, Rng& run_rng,
          int k, std::vector<InnerRecord>*) {
        const PolicyTables tables(policy);
        Eigen::VectorXd omega = resolve_vector(config.omega0, d, "omega0");
        for (int h = 0; h < config.H; ++h) {
          Eigen::VectorXd g_sum = Eigen::VectorXd::Zero(d);
          for (std::uint64_t i = 0; i < batch_g; ++i) {
            const ClassicalPgEstimate estimate =
                classical_pg_estimate(mdp, tables, run_rng);
            ledger.charge_classical(estimate.steps);
            g_sum += estimate.gradient;
          }
          Eigen::VectorXd f_sum =
              Eigen::VectorXd::Zero(static_cast<long>(d) * d);
          for (std::uint64_t i = 0; i < batch_F; ++i) {
            f_sum += classical_fisher_sample(mdp, tables, ledger, run_rng);
          }
          const Eigen::MatrixXd f_tilde = devectorize_symmetric(
              f_sum / static_cast<double>(batch_F), d, config.lambda_reg);
          const Eigen::VectorXd grad =
              f_tilde * omega - g_sum / static_cast<double>(batch_g);
          omega -= config.alpha * grad;
          check_iterate(omega, h);
        }
        (void)k;
        return omega;
      },
      false);
}

}  // namespace qnpg
