#include "qnpg/softmax_policy.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace qnpg {

SoftmaxPolicy::SoftmaxPolicy(int num_states, int num_actions)
    : SoftmaxPolicy(num_states, num_actions,
                    Eigen::VectorXd::Zero(static_cast<long>(num_states) *
                                          num_actions)) {}

SoftmaxPolicy::SoftmaxPolicy(int num_states, int num_actions,
                             Eigen::VectorXd theta)
    : num_states_(num_states),
      num_actions_(num_actions),
      theta_(std::move(theta)) {
  if (num_states_ < 1 || num_actions_ < 1) {
    throw std::invalid_argument("SoftmaxPolicy: dimensions must be positive");
  }
  if (theta_.size() != static_cast<long>(num_states_) * num_actions_) {
    throw std::invalid_argument(
        "SoftmaxPolicy: theta has length " + std::to_string(theta_.size()) +
        ", expected " + std::to_string(num_states_ * num_actions_));
  }
}

void SoftmaxPolicy::set_theta(const Eigen::VectorXd& theta) {
  if (theta.size() != theta_.size()) {
    throw std::invalid_argument("SoftmaxPolicy: theta length mismatch");
  }
  theta_ = theta;
}

void SoftmaxPolicy::check_indices(int s, int a) const {
  if (s < 0 || s >= num_states_) {
    throw std::invalid_argument("SoftmaxPolicy: state index " +
                                std::to_string(s) + " out of range");
  }
  if (a < 0 || a >= num_actions_) {
    throw std::invalid_argument("SoftmaxPolicy: action index " +
                                std::to_string(a) + " out of range");
  }
}

Eigen::VectorXd SoftmaxPolicy::action_probs(int s) const {
  check_indices(s, 0);
  const auto logits = theta_.segment(static_cast<long>(s) * num_actions_,
                                     num_actions_);
  const double peak = logits.maxCoeff();
  Eigen::VectorXd probs = (logits.array() - peak).exp();
  probs /= probs.sum();
  return probs;
}

double SoftmaxPolicy::prob(int s, int a) const {
  check_indices(s, a);
  return action_probs(s)[a];
}

Eigen::VectorXd SoftmaxPolicy::score(int s, int a) const {
  check_indices(s, a);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(theta_.size());
  const Eigen::VectorXd probs = action_probs(s);
  grad.segment(static_cast<long>(s) * num_actions_, num_actions_) = -probs;
  grad[static_cast<long>(s) * num_actions_ + a] += 1.0;
  return grad;
}

PolicyTables::PolicyTables(const SoftmaxPolicy& policy)
    : probs(policy.num_states(), policy.num_actions()) {
  const int S = policy.num_states();
  const int A = policy.num_actions();
  scores.reserve(static_cast<std::size_t>(S) * A);
  for (int s = 0; s < S; ++s) {
    probs.row(s) = policy.action_probs(s).transpose();
    for (int a = 0; a < A; ++a) {
      scores.push_back(policy.score(s, a));
      max_score_norm = std::max(max_score_norm, scores.back().norm());
    }
  }
}

double measured_score_bound(const SoftmaxPolicy& policy) {
  return PolicyTables(policy).max_score_norm;
}

}  // namespace qnpg
