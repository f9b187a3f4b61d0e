#include "qnpg/trajectory.hpp"

#include "qnpg/errors.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace qnpg {

namespace {

void check_truncation(int truncation) {
  if (truncation < 1) {
    throw std::invalid_argument("truncation level must be at least 1");
  }
}

void check_trajectory(const Trajectory& trajectory, const TabularMdp& mdp) {
  if (trajectory.steps.empty()) {
    throw std::invalid_argument("trajectory is empty");
  }
  for (const auto& [s, a] : trajectory.steps) {
    if (s < 0 || s >= mdp.num_states || a < 0 || a >= mdp.num_actions) {
      throw std::invalid_argument("trajectory step (" + std::to_string(s) +
                                  "," + std::to_string(a) +
                                  ") out of range for the MDP");
    }
  }
}

}  // namespace

Trajectory sample_trajectory(const TabularMdp& mdp, const PolicyTables& tables,
                             int truncation, Rng& rng) {
  check_truncation(truncation);
  Trajectory trajectory;
  trajectory.steps.reserve(truncation);
  int state = rng.categorical(mdp.initial_dist);
  for (int t = 0; t < truncation; ++t) {
    const int action = rng.categorical(tables.probs.row(state).transpose());
    trajectory.steps.emplace_back(state, action);
    if (t + 1 < truncation) {
      state = rng.categorical(mdp.transition_row(state, action).transpose());
    }
  }
  return trajectory;
}

Trajectory sample_trajectory(const TabularMdp& mdp,
                             const SoftmaxPolicy& policy, int truncation,
                             Rng& rng) {
  return sample_trajectory(mdp, PolicyTables(policy), truncation, rng);
}

TrajectoryDistribution enumerate_trajectory_distribution(
    const TabularMdp& mdp, const SoftmaxPolicy& policy, int truncation,
    double skeleton_cap) {
  check_truncation(truncation);
  const double skeletons = std::pow(
      static_cast<double>(mdp.num_states) * mdp.num_actions, truncation);
  if (skeletons > skeleton_cap) {
    std::ostringstream os;
    os << "trajectory enumeration would touch " << skeletons
       << " skeletons, above the cap of " << skeleton_cap;
    throw ResourceError(os.str());
  }

  const PolicyTables tables(policy);
  TrajectoryDistribution dist;
  dist.truncation = truncation;

  Trajectory current;
  current.steps.reserve(truncation);

  // Depth-first product over (s_t, a_t); zero-probability branches pruned.
  auto descend = [&](auto&& self, int depth, int state, double prob) -> void {
    if (prob == 0.0) return;
    for (int a = 0; a < mdp.num_actions; ++a) {
      const double p_step = prob * tables.probs(state, a);
      if (p_step == 0.0) continue;
      current.steps.emplace_back(state, a);
      if (depth + 1 == truncation) {
        dist.entries.push_back({current, p_step});
      } else {
        for (int next = 0; next < mdp.num_states; ++next) {
          self(self, depth + 1, next,
               p_step * mdp.transition(mdp.row_index(state, a), next));
        }
      }
      current.steps.pop_back();
    }
  };
  for (int s0 = 0; s0 < mdp.num_states; ++s0) {
    descend(descend, 0, s0, mdp.initial_dist[s0]);
  }
  return dist;
}

Eigen::VectorXd g_hat(const Trajectory& trajectory, const TabularMdp& mdp,
                      const PolicyTables& tables) {
  check_trajectory(trajectory, mdp);
  const int d = static_cast<int>(tables.scores.front().size());
  Eigen::VectorXd cumulative = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd estimate = Eigen::VectorXd::Zero(d);
  double discount_pow = 1.0;
  for (const auto& [s, a] : trajectory.steps) {
    cumulative += tables.score(s, a);
    estimate += cumulative * (discount_pow * mdp.reward(s, a));
    discount_pow *= mdp.discount;
  }
  return estimate;
}

Eigen::VectorXd g_hat(const Trajectory& trajectory, const TabularMdp& mdp,
                      const SoftmaxPolicy& policy) {
  return g_hat(trajectory, mdp, PolicyTables(policy));
}

Eigen::MatrixXd f_hat(const Trajectory& trajectory, const TabularMdp& mdp,
                      const PolicyTables& tables) {
  check_trajectory(trajectory, mdp);
  const int d = static_cast<int>(tables.scores.front().size());
  Eigen::MatrixXd estimate = Eigen::MatrixXd::Zero(d, d);
  double discount_pow = 1.0;
  for (const auto& [s, a] : trajectory.steps) {
    const Eigen::VectorXd& score = tables.score(s, a);
    estimate.noalias() += discount_pow * score * score.transpose();
    discount_pow *= mdp.discount;
  }
  return (1.0 - mdp.discount) * estimate;
}

Eigen::MatrixXd f_hat(const Trajectory& trajectory, const TabularMdp& mdp,
                      const SoftmaxPolicy& policy) {
  return f_hat(trajectory, mdp, PolicyTables(policy));
}

EstimatorMoments exact_truncated_moments_dp(const TabularMdp& mdp,
                                            const SoftmaxPolicy& policy,
                                            int truncation) {
  check_truncation(truncation);
  const int S = mdp.num_states;
  const int A = mdp.num_actions;
  const PolicyTables tables(policy);
  const int d = static_cast<int>(tables.scores.front().size());

  // Per-state score second moment sum_a pi(a|s) outer(score(s,a)).
  std::vector<Eigen::MatrixXd> state_fisher(S, Eigen::MatrixXd::Zero(d, d));
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      const Eigen::VectorXd& score = tables.score(s, a);
      state_fisher[s].noalias() +=
          tables.probs(s, a) * score * score.transpose();
    }
  }

  // p_n: state distribution at step n. c_n(s): expected cumulative score of
  // steps before n restricted to {s_n = s} (a subprobability-weighted sum).
  Eigen::VectorXd p = mdp.initial_dist;
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(S, d);

  EstimatorMoments moments;
  moments.method = MomentMethod::dynamic_programming;
  moments.mean_g = Eigen::VectorXd::Zero(d);
  moments.mean_F = Eigen::MatrixXd::Zero(d, d);

  double discount_pow = 1.0;
  for (int n = 0; n < truncation; ++n) {
    Eigen::VectorXd term = Eigen::VectorXd::Zero(d);
    for (int s = 0; s < S; ++s) {
      moments.mean_F.noalias() += (discount_pow * p[s]) * state_fisher[s];
      for (int a = 0; a < A; ++a) {
        const double weight = mdp.reward(s, a) * tables.probs(s, a);
        if (weight != 0.0) {
          term += weight * (c.row(s).transpose() + p[s] * tables.score(s, a));
        }
      }
    }
    moments.mean_g += discount_pow * term;
    discount_pow *= mdp.discount;

    if (n + 1 < truncation) {
      Eigen::VectorXd p_next = Eigen::VectorXd::Zero(S);
      Eigen::MatrixXd c_next = Eigen::MatrixXd::Zero(S, d);
      for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
          const double step_prob = tables.probs(s, a);
          if (step_prob == 0.0) continue;
          const Eigen::RowVectorXd carried =
              c.row(s) + p[s] * tables.score(s, a).transpose();
          for (int next = 0; next < S; ++next) {
            const double move =
                step_prob * mdp.transition(mdp.row_index(s, a), next);
            if (move == 0.0) continue;
            p_next[next] += p[s] * move;
            c_next.row(next) += move * carried;
          }
        }
      }
      p = std::move(p_next);
      c = std::move(c_next);
    }
  }
  moments.mean_F *= (1.0 - mdp.discount);
  return moments;
}

EstimatorMoments moments_from_distribution(const TrajectoryDistribution& dist,
                                           const TabularMdp& mdp,
                                           const SoftmaxPolicy& policy) {
  if (dist.entries.empty()) {
    throw std::invalid_argument("moments_from_distribution: empty distribution");
  }
  const PolicyTables tables(policy);
  const int d = policy.param_dim();
  Eigen::VectorXd mean_g = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd mean_F = Eigen::MatrixXd::Zero(d, d);
  double second_g = 0.0;
  double second_F = 0.0;
  for (const auto& entry : dist.entries) {
    const Eigen::VectorXd g = g_hat(entry.trajectory, mdp, tables);
    const Eigen::MatrixXd f = f_hat(entry.trajectory, mdp, tables);
    mean_g += entry.probability * g;
    mean_F += entry.probability * f;
    second_g += entry.probability * g.squaredNorm();
    second_F += entry.probability * f.squaredNorm();
  }
  EstimatorMoments moments;
  moments.method = MomentMethod::enumeration;
  moments.mean_g = mean_g;
  moments.mean_F = mean_F;
  moments.var_g = std::max(0.0, second_g - mean_g.squaredNorm());
  moments.var_F = std::max(0.0, second_F - mean_F.squaredNorm());
  return moments;
}

EstimatorMoments monte_carlo_moments(const TabularMdp& mdp,
                                     const SoftmaxPolicy& policy,
                                     int truncation, int num_samples,
                                     Rng& rng) {
  check_truncation(truncation);
  if (num_samples < 2) {
    throw std::invalid_argument("monte_carlo_moments: need at least 2 samples");
  }
  const PolicyTables tables(policy);
  const int d = policy.param_dim();
  Eigen::VectorXd sum_g = Eigen::VectorXd::Zero(d);
  Eigen::MatrixXd sum_F = Eigen::MatrixXd::Zero(d, d);
  double sum_sq_g = 0.0;
  double sum_sq_F = 0.0;
  for (int i = 0; i < num_samples; ++i) {
    const Trajectory trajectory =
        sample_trajectory(mdp, tables, truncation, rng);
    const Eigen::VectorXd g = g_hat(trajectory, mdp, tables);
    const Eigen::MatrixXd f = f_hat(trajectory, mdp, tables);
    sum_g += g;
    sum_F += f;
    sum_sq_g += g.squaredNorm();
    sum_sq_F += f.squaredNorm();
  }
  const double n = static_cast<double>(num_samples);
  EstimatorMoments moments;
  moments.method = MomentMethod::monte_carlo;
  moments.mean_g = sum_g / n;
  moments.mean_F = sum_F / n;
  moments.var_g =
      std::max(0.0, (sum_sq_g - n * moments.mean_g.squaredNorm()) / (n - 1.0));
  moments.var_F =
      std::max(0.0, (sum_sq_F - n * moments.mean_F.squaredNorm()) / (n - 1.0));
  return moments;
}

ClassicalPgEstimate classical_pg_estimate(const TabularMdp& mdp,
                                          const PolicyTables& tables,
                                          Rng& rng) {
  const int horizon = rng.geometric_from_continue_prob(mdp.discount);
  const Trajectory trajectory = sample_trajectory(mdp, tables, horizon, rng);
  return {g_hat(trajectory, mdp, tables), horizon};
}

ClassicalPgEstimate classical_pg_estimate(const TabularMdp& mdp,
                                          const SoftmaxPolicy& policy,
                                          Rng& rng) {
  return classical_pg_estimate(mdp, PolicyTables(policy), rng);
}

void write_trajectory_distribution_csv(const TrajectoryDistribution& dist,
                                       std::ostream& out) {
  out << std::setprecision(17);
  for (const auto& entry : dist.entries) {
    for (const auto& [s, a] : entry.trajectory.steps) {
      out << s << ',' << a << ',';
    }
    out << entry.probability << '\n';
  }
}

}  // namespace qnpg
