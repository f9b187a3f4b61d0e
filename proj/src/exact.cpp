#include "qnpg/exact.hpp"

#include <cassert>
#include <cmath>
#include <stdexcept>

namespace qnpg {

SmoothnessConstants make_smoothness_constants(double gamma, double G, double B,
                                              double mu_F) {
  if (!(gamma > 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("smoothness constants: gamma must be in (0,1)");
  }
  if (!(G > 0.0) || !(B > 0.0) || !(mu_F > 0.0)) {
    throw std::invalid_argument(
        "smoothness constants: G, B, mu_F must be positive");
  }
  const double one_minus = 1.0 - gamma;
  SmoothnessConstants c;
  c.G = G;
  c.B = B;
  c.mu_F = mu_F;
  c.L = B / (one_minus * one_minus) +
        2.0 * G * G / (one_minus * one_minus * one_minus);
  return c;
}

Eigen::MatrixXd policy_transition(const TabularMdp& mdp,
                                  const SoftmaxPolicy& policy) {
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(S, S);
  for (int s = 0; s < S; ++s) {
    const Eigen::VectorXd probs = policy.action_probs(s);
    for (int a = 0; a < A; ++a) {
      p_pi.row(s) += probs[a] * mdp.transition_row(s, a);
    }
  }
  return p_pi;
}

Eigen::VectorXd policy_reward(const TabularMdp& mdp,
                              const SoftmaxPolicy& policy) {
  const int S = mdp.num_states;
  Eigen::VectorXd r_pi(S);
  for (int s = 0; s < S; ++s) {
    r_pi[s] = policy.action_probs(s).dot(mdp.reward.row(s).transpose());
  }
  return r_pi;
}

Eigen::VectorXd value_function(const TabularMdp& mdp,
                               const SoftmaxPolicy& policy) {
  const int S = mdp.num_states;
  const Eigen::MatrixXd p_pi = policy_transition(mdp, policy);
  const Eigen::VectorXd r_pi = policy_reward(mdp, policy);
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(S, S) - mdp.discount * p_pi;
  const Eigen::VectorXd v = system.partialPivLu().solve(r_pi);
  assert((system * v - r_pi).norm() <= 1e-10 * std::max(1.0, r_pi.norm()));
  return v;
}

Eigen::MatrixXd q_function(const TabularMdp& mdp,
                           const SoftmaxPolicy& policy) {
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  const Eigen::VectorXd v = value_function(mdp, policy);
  Eigen::MatrixXd q(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      q(s, a) = mdp.reward(s, a) + mdp.discount * mdp.transition_row(s, a).dot(v);
    }
  }
  return q;
}

Eigen::MatrixXd advantage(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
  Eigen::MatrixXd adv = q_function(mdp, policy);
  const Eigen::VectorXd v = value_function(mdp, policy);
  adv.colwise() -= v;
  return adv;
}

OccupancyMeasures occupancy_measures(const TabularMdp& mdp,
                                     const SoftmaxPolicy& policy) {
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  const Eigen::MatrixXd p_pi = policy_transition(mdp, policy);
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(S, S) - mdp.discount * p_pi.transpose();
  OccupancyMeasures occ;
  occ.state = (1.0 - mdp.discount) *
              system.partialPivLu().solve(mdp.initial_dist);
  occ.state_action.resize(S, A);
  for (int s = 0; s < S; ++s) {
    occ.state_action.row(s) =
        occ.state[s] * policy.action_probs(s).transpose();
  }
  return occ;
}

double objective(const TabularMdp& mdp, const SoftmaxPolicy& policy) {
  return mdp.initial_dist.dot(value_function(mdp, policy));
}

Eigen::VectorXd exact_policy_gradient(const TabularMdp& mdp,
                                      const SoftmaxPolicy& policy) {
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  const OccupancyMeasures occ = occupancy_measures(mdp, policy);
  const Eigen::MatrixXd adv = advantage(mdp, policy);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(policy.param_dim());
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double weight = occ.state_action(s, a) * adv(s, a);
      if (weight != 0.0) grad += weight * policy.score(s, a);
    }
  }
  return grad / (1.0 - mdp.discount);
}

Eigen::MatrixXd exact_fisher(const TabularMdp& mdp,
                             const SoftmaxPolicy& policy) {
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  const OccupancyMeasures occ = occupancy_measures(mdp, policy);
  const int d = policy.param_dim();
  Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(d, d);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const double weight = occ.state_action(s, a);
      if (weight == 0.0) continue;
      const Eigen::VectorXd score = policy.score(s, a);
      fisher.noalias() += weight * score * score.transpose();
    }
  }
  return fisher;
}

namespace {

Eigen::VectorXd evaluate_deterministic(const TabularMdp& mdp,
                                       const std::vector<int>& actions) {
  const int S = mdp.num_states;
  Eigen::MatrixXd p(S, S);
  Eigen::VectorXd r(S);
  for (int s = 0; s < S; ++s) {
    p.row(s) = mdp.transition_row(s, actions[s]);
    r[s] = mdp.reward(s, actions[s]);
  }
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(S, S) - mdp.discount * p;
  return system.partialPivLu().solve(r);
}

std::vector<int> greedy_policy(const TabularMdp& mdp,
                               const Eigen::VectorXd& values) {
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  std::vector<int> actions(S, 0);
  for (int s = 0; s < S; ++s) {
    double best = -1.0;
    for (int a = 0; a < A; ++a) {
      const double q =
          mdp.reward(s, a) + mdp.discount * mdp.transition_row(s, a).dot(values);
      if (q > best) {
        best = q;
        actions[s] = a;
      }
    }
  }
  return actions;
}

}  // namespace

PolicyIterationResult solve_optimal(const TabularMdp& mdp) {
  PolicyIterationResult result;
  result.greedy_actions =
      greedy_policy(mdp, Eigen::VectorXd::Zero(mdp.num_states));
  // Howard iteration terminates in finitely many steps for finite MDPs.
  const int max_rounds = 10000;
  for (int round = 0; round < max_rounds; ++round) {
    result.values = evaluate_deterministic(mdp, result.greedy_actions);
    std::vector<int> improved = greedy_policy(mdp, result.values);
    if (improved == result.greedy_actions) {
      result.j_star = mdp.initial_dist.dot(result.values);
      return result;
    }
    result.greedy_actions = std::move(improved);
  }
  throw std::runtime_error("solve_optimal: policy iteration did not reach a fixpoint");
}

double kl_to_optimal(const TabularMdp& mdp,
                     const PolicyIterationResult& optimal,
                     const SoftmaxPolicy& policy) {
  const int S = mdp.num_states;
  Eigen::MatrixXd p_star(S, S);
  for (int s = 0; s < S; ++s) {
    p_star.row(s) = mdp.transition_row(s, optimal.greedy_actions[s]);
  }
  const Eigen::MatrixXd system =
      Eigen::MatrixXd::Identity(S, S) - mdp.discount * p_star.transpose();
  const Eigen::VectorXd d_star =
      (1.0 - mdp.discount) * system.partialPivLu().solve(mdp.initial_dist);
  double kl = 0.0;
  for (int s = 0; s < S; ++s) {
    kl += d_star[s] * -std::log(policy.prob(s, optimal.greedy_actions[s]));
  }
  return kl;
}

}  // namespace qnpg
