#pragma once

#include "qnpg/exact.hpp"
#include "qnpg/mdp.hpp"
#include "qnpg/rng.hpp"
#include "qnpg/softmax_policy.hpp"

#include <string>

namespace qnpg::testing {

inline std::string data_path(const std::string& name) {
  return std::string(QNPG_SOURCE_DIR) + "/data/" + name;
}

inline TabularMdp bandit() { return load_mdp(data_path("bandit.json")); }
inline TabularMdp chain2() { return load_mdp(data_path("chain2.json")); }
inline TabularMdp random3() { return load_mdp(data_path("random3.json")); }

inline TabularMdp single_action_mdp(double gamma = 0.5) {
  TabularMdp mdp;
  mdp.num_states = 2;
  mdp.num_actions = 1;
  mdp.transition.resize(2, 2);
  mdp.transition << 0.25, 0.75, 0.6, 0.4;
  mdp.reward.resize(2, 1);
  mdp.reward << 0.3, 0.7;
  mdp.discount = gamma;
  mdp.initial_dist.resize(2);
  mdp.initial_dist << 0.5, 0.5;
  mdp.validate();
  return mdp;
}

inline TabularMdp random_mdp(Rng& rng, int num_states, int num_actions,
                             double gamma) {
  TabularMdp mdp;
  mdp.num_states = num_states;
  mdp.num_actions = num_actions;
  mdp.discount = gamma;
  mdp.transition.resize(num_states * num_actions, num_states);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      Eigen::VectorXd row(num_states);
      for (int t = 0; t < num_states; ++t) row[t] = 0.05 + rng.uniform();
      mdp.transition.row(mdp.row_index(s, a)) = (row / row.sum()).transpose();
    }
  }
  mdp.reward.resize(num_states, num_actions);
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) mdp.reward(s, a) = rng.uniform();
  }
  Eigen::VectorXd rho(num_states);
  for (int s = 0; s < num_states; ++s) rho[s] = 0.05 + rng.uniform();
  mdp.initial_dist = rho / rho.sum();
  mdp.validate();
  return mdp;
}

inline Eigen::VectorXd random_theta(Rng& rng, int dim, double scale) {
  Eigen::VectorXd theta(dim);
  for (int i = 0; i < dim; ++i) theta[i] = scale * (2.0 * rng.uniform() - 1.0);
  return theta;
}

// Fixed-point policy evaluation, independent of the linear-solve path.
inline Eigen::VectorXd iterative_value_oracle(const TabularMdp& mdp,
                                              const SoftmaxPolicy& policy,
                                              double tol = 1e-13) {
  const Eigen::MatrixXd p_pi = policy_transition(mdp, policy);
  const Eigen::VectorXd r_pi = policy_reward(mdp, policy);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.num_states);
  for (int iter = 0; iter < 200000; ++iter) {
    Eigen::VectorXd next = r_pi + mdp.discount * (p_pi * v);
    const double change = (next - v).lpNorm<Eigen::Infinity>();
    v = next;
    if (change < tol) break;
  }
  return v;
}

// Central finite differences of the exact objective.
inline Eigen::VectorXd finite_difference_gradient(const TabularMdp& mdp,
                                                  const SoftmaxPolicy& policy,
                                                  double step = 1e-5) {
  const int d = policy.param_dim();
  Eigen::VectorXd grad(d);
  Eigen::VectorXd theta = policy.theta();
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd plus = theta, minus = theta;
    plus[i] += step;
    minus[i] -= step;
    const double j_plus =
        objective(mdp, SoftmaxPolicy(mdp.num_states, mdp.num_actions, plus));
    const double j_minus =
        objective(mdp, SoftmaxPolicy(mdp.num_states, mdp.num_actions, minus));
    grad[i] = (j_plus - j_minus) / (2.0 * step);
  }
  return grad;
}

}  // namespace qnpg::testing
