#pragma once

#include <Eigen/Dense>

#include <string>

namespace qnpg {

// Finite discounted MDP: dense transition kernel P(s'|s,a), rewards in
// [0,1], discount in (0,1) and an initial state distribution.
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  Eigen::MatrixXd transition;    // (num_states*num_actions) x num_states
  Eigen::MatrixXd reward;        // num_states x num_actions
  double discount = 0.0;
  Eigen::VectorXd initial_dist;  // over states

  int row_index(int s, int a) const { return s * num_actions + a; }

  auto transition_row(int s, int a) const {
    return transition.row(row_index(s, a));
  }

  // Throws std::invalid_argument naming the offending field and index.
  void validate() const;
};

// Loads and validates an MDP from a JSON file with fields num_states,
// num_actions, transition (nested [s][a][s']), reward ([s][a]), discount,
// initial_dist.
TabularMdp load_mdp(const std::string& path);
TabularMdp mdp_from_json_text(const std::string& text,
                              const std::string& origin = "<inline>");

}  // namespace qnpg
