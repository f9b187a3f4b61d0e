#pragma once

#include "qnpg/bounds.hpp"
#include "qnpg/estimation.hpp"
#include "qnpg/exact.hpp"
#include "qnpg/ledger.hpp"
#include "qnpg/mdp.hpp"
#include "qnpg/rng.hpp"

#include <vector>

namespace qnpg {

inline constexpr double kDivergenceGuard = 1e6;

struct LedgerSnapshot {
  OracleCost totals;
  std::uint64_t u_g_queries = 0;
  std::uint64_t u_f_queries = 0;
  std::uint64_t classical_samples = 0;
  std::uint64_t classical_steps = 0;
};

inline LedgerSnapshot snapshot(const QueryLedger& ledger) {
  return {ledger.totals, ledger.u_g_queries, ledger.u_f_queries,
          ledger.classical_samples, ledger.classical_steps};
}

struct OuterRecord {
  int k = 0;
  Eigen::VectorXd theta;
  Eigen::VectorXd omega;
  double j_value = 0.0;
  LedgerSnapshot ledger;
};

struct InnerRecord {
  int k = 0;
  int h = 0;
  double grad_norm = 0.0;
  LedgerSnapshot ledger;
};

struct RunHistory {
  std::vector<OuterRecord> records;       // one per outer iteration
  std::vector<InnerRecord> inner_records; // only when requested
  Eigen::VectorXd theta_final;
  double j_final = 0.0;
  double j_star = 0.0;
  double kl_theta0 = 0.0;  // E_{s~d*}[KL(pi* || pi_theta0)] diagnostic
  QueryLedger ledger;
};

struct InnerLoopOptions {
  int k = 0;
  std::vector<InnerRecord>* sink = nullptr;
};

// Mini-batch quantum SGD on the compatible function approximation objective:
// H steps of omega <- omega - alpha (F~ omega - g~), with F~ and g~ from
// qvariance_reduce, F~ symmetrized and ridged by lambda_reg.
Eigen::VectorXd inner_loop(const TabularMdp& mdp, const SoftmaxPolicy& policy,
                           const RunConfig& config, const NoiseModel& noise,
                           QueryLedger& ledger, Rng& rng,
                           const InnerLoopOptions& options = {});

// Noise-free reference iteration against the exact regularized quadratic
// (exact gradient and Fisher + lambda_reg I). Returns all iterates,
// omega_0 .. omega_{num_steps}, for contraction diagnostics.
std::vector<Eigen::VectorXd> inner_loop_exact(const TabularMdp& mdp,
                                              const SoftmaxPolicy& policy,
                                              const RunConfig& config,
                                              int num_steps);

Eigen::VectorXd outer_step(const Eigen::VectorXd& theta,
                           const Eigen::VectorXd& omega, double eta);

RunHistory run_qnpg(const TabularMdp& mdp, const RunConfig& config,
                    const NoiseModel& noise, Rng& rng,
                    bool record_inner = false);

// Same loop driven by classical geometric-horizon estimators averaged to the
// variance targets; the ledger meters classical environment steps.
RunHistory run_classical_npg(const TabularMdp& mdp, const RunConfig& config,
                             Rng& rng);

}  // namespace qnpg
