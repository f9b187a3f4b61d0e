#pragma once

#include "qnpg/mdp.hpp"
#include "qnpg/rng.hpp"
#include "qnpg/softmax_policy.hpp"

#include <optional>
#include <ostream>
#include <utility>
#include <vector>

namespace qnpg {

// Fixed-length sequence of state-action pairs. The final state transition is
// never drawn: a length-N trajectory ends at its N-th action.
struct Trajectory {
  std::vector<std::pair<int, int>> steps;

  int length() const { return static_cast<int>(steps.size()); }
};

Trajectory sample_trajectory(const TabularMdp& mdp,
                             const SoftmaxPolicy& policy, int truncation,
                             Rng& rng);
Trajectory sample_trajectory(const TabularMdp& mdp, const PolicyTables& tables,
                             int truncation, Rng& rng);

struct WeightedTrajectory {
  Trajectory trajectory;
  double probability = 0.0;
};

struct TrajectoryDistribution {
  std::vector<WeightedTrajectory> entries;
  int truncation = 0;
};

inline constexpr double kDefaultEnumerationCap = 1e6;

// Enumerates every nonzero-probability trajectory of the given length.
// Throws ResourceError when the skeleton count (|S||A|)^N exceeds the cap.
TrajectoryDistribution enumerate_trajectory_distribution(
    const TabularMdp& mdp, const SoftmaxPolicy& policy, int truncation,
    double skeleton_cap = kDefaultEnumerationCap);

// Truncated policy-gradient estimator:
//   sum_{n<N} (sum_{t<=n} grad log pi(a_t|s_t)) gamma^n r(s_n, a_n).
Eigen::VectorXd g_hat(const Trajectory& trajectory, const TabularMdp& mdp,
                      const PolicyTables& tables);
Eigen::VectorXd g_hat(const Trajectory& trajectory, const TabularMdp& mdp,
                      const SoftmaxPolicy& policy);

// Truncated Fisher estimator:
//   (1-gamma) sum_{n<N} gamma^n outer(grad log pi(a_n|s_n)).
Eigen::MatrixXd f_hat(const Trajectory& trajectory, const TabularMdp& mdp,
                      const PolicyTables& tables);
Eigen::MatrixXd f_hat(const Trajectory& trajectory, const TabularMdp& mdp,
                      const SoftmaxPolicy& policy);

enum class MomentMethod { enumeration, dynamic_programming, monte_carlo };

// First moments of (g_hat, f_hat) and, when available, the trace of their
// covariance matrices (vectorized for f_hat).
struct EstimatorMoments {
  Eigen::VectorXd mean_g;
  Eigen::MatrixXd mean_F;
  std::optional<double> var_g;
  std::optional<double> var_F;
  MomentMethod method = MomentMethod::dynamic_programming;
};

// Exact means via a forward recursion over the step distribution p_n and the
// state-conditional cumulative score c_n; O(N |S|^2 |A| d) instead of the
// exponential enumeration.
EstimatorMoments exact_truncated_moments_dp(const TabularMdp& mdp,
                                            const SoftmaxPolicy& policy,
                                            int truncation);

// Exact moments (including variances) by direct summation over an enumerated
// distribution; oracle for tiny instances.
EstimatorMoments moments_from_distribution(const TrajectoryDistribution& dist,
                                           const TabularMdp& mdp,
                                           const SoftmaxPolicy& policy);

EstimatorMoments monte_carlo_moments(const TabularMdp& mdp,
                                     const SoftmaxPolicy& policy,
                                     int truncation, int num_samples,
                                     Rng& rng);

// Classical baseline: horizon T ~ Geometric(1-gamma) on {1,2,...}, then the
// same estimator over the length-T roll; T is the classical query cost.
struct ClassicalPgEstimate {
  Eigen::VectorXd gradient;
  int steps = 0;
};

ClassicalPgEstimate classical_pg_estimate(const TabularMdp& mdp,
                                          const SoftmaxPolicy& policy,
                                          Rng& rng);
ClassicalPgEstimate classical_pg_estimate(const TabularMdp& mdp,
                                          const PolicyTables& tables,
                                          Rng& rng);

// One row per trajectory: comma-separated state-action indices, probability.
void write_trajectory_distribution_csv(const TrajectoryDistribution& dist,
                                       std::ostream& out);

}  // namespace qnpg
