#pragma once

#include <Eigen/Dense>

#include <vector>

namespace qnpg {

// Tabular softmax policy: one logit per state-action pair, so the parameter
// dimension is num_states * num_actions. Always has full support.
class SoftmaxPolicy {
 public:
  SoftmaxPolicy(int num_states, int num_actions);
  SoftmaxPolicy(int num_states, int num_actions, Eigen::VectorXd theta);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int param_dim() const { return static_cast<int>(theta_.size()); }
  const Eigen::VectorXd& theta() const { return theta_; }
  void set_theta(const Eigen::VectorXd& theta);

  Eigen::VectorXd action_probs(int s) const;
  double prob(int s, int a) const;

  // grad_theta log pi(a|s): within the block of state s the component for
  // action a is 1 - pi(a|s), for a' != a it is -pi(a'|s); zero elsewhere.
  Eigen::VectorXd score(int s, int a) const;

 private:
  void check_indices(int s, int a) const;

  int num_states_;
  int num_actions_;
  Eigen::VectorXd theta_;
};

// Dense per-policy tables for hot loops: probabilities, score vectors and
// per-state score outer-product mixtures.
struct PolicyTables {
  Eigen::MatrixXd probs;                 // num_states x num_actions
  std::vector<Eigen::VectorXd> scores;   // indexed s*num_actions + a
  double max_score_norm = 0.0;

  explicit PolicyTables(const SoftmaxPolicy& policy);

  const Eigen::VectorXd& score(int s, int a) const {
    return scores[static_cast<std::size_t>(s) * probs.cols() + a];
  }
};

// max over (s,a) of ||grad log pi(a|s)|| at the policy's current parameters.
double measured_score_bound(const SoftmaxPolicy& policy);

}  // namespace qnpg
