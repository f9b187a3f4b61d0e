#pragma once

#include "qnpg/mdp.hpp"
#include "qnpg/softmax_policy.hpp"

#include <vector>

namespace qnpg {

inline constexpr double kDefaultScoreBound = 1.4142135623730951;  // sqrt(2)
inline constexpr double kDefaultScoreSmoothness = 1.0;
inline constexpr double kDefaultFisherRidge = 1e-3;

// Bounds used throughout the optimizer schedules: G bounds the score norm,
// B its Lipschitz constant, mu_F the (regularized) Fisher floor, and
// L = B/(1-gamma)^2 + 2 G^2/(1-gamma)^3 the induced objective smoothness.
struct SmoothnessConstants {
  double G = kDefaultScoreBound;
  double B = kDefaultScoreSmoothness;
  double L = 0.0;
  double mu_F = kDefaultFisherRidge;
};

SmoothnessConstants make_smoothness_constants(
    double gamma, double G = kDefaultScoreBound,
    double B = kDefaultScoreSmoothness, double mu_F = kDefaultFisherRidge);

struct OccupancyMeasures {
  Eigen::VectorXd state;         // d_rho over states
  Eigen::MatrixXd state_action;  // nu, num_states x num_actions
};

// P^pi(s,s') = sum_a pi(a|s) P(s'|s,a) and r^pi(s) = sum_a pi(a|s) r(s,a).
Eigen::MatrixXd policy_transition(const TabularMdp& mdp,
                                  const SoftmaxPolicy& policy);
Eigen::VectorXd policy_reward(const TabularMdp& mdp,
                              const SoftmaxPolicy& policy);

// Unique solution of (I - gamma P^pi) V = r^pi via a dense solve.
Eigen::VectorXd value_function(const TabularMdp& mdp,
                               const SoftmaxPolicy& policy);
Eigen::MatrixXd q_function(const TabularMdp& mdp, const SoftmaxPolicy& policy);
Eigen::MatrixXd advantage(const TabularMdp& mdp, const SoftmaxPolicy& policy);
OccupancyMeasures occupancy_measures(const TabularMdp& mdp,
                                     const SoftmaxPolicy& policy);
double objective(const TabularMdp& mdp, const SoftmaxPolicy& policy);
Eigen::VectorXd exact_policy_gradient(const TabularMdp& mdp,
                                      const SoftmaxPolicy& policy);
Eigen::MatrixXd exact_fisher(const TabularMdp& mdp,
                             const SoftmaxPolicy& policy);

// Exact policy iteration (greedy improvement to a fixpoint); supplies the
// optimal value J* used as the convergence target.
struct PolicyIterationResult {
  std::vector<int> greedy_actions;
  Eigen::VectorXd values;
  double j_star = 0.0;
};

PolicyIterationResult solve_optimal(const TabularMdp& mdp);

// Diagnostic: E_{s ~ d*}[KL(pi*(.|s) || pi(.|s))] for the deterministic
// optimal policy from solve_optimal.
double kl_to_optimal(const TabularMdp& mdp,
                     const PolicyIterationResult& optimal,
                     const SoftmaxPolicy& policy);

}  // namespace qnpg
