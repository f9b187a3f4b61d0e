#pragma once

#include <cstdint>

namespace qnpg {

// Decomposition of one composed-oracle query into primitive oracle uses.
struct OracleCost {
  std::uint64_t u_rho = 0;
  std::uint64_t u_p = 0;
  std::uint64_t pi = 0;

  OracleCost& operator+=(const OracleCost& other) {
    u_rho += other.u_rho;
    u_p += other.u_p;
    pi += other.pi;
    return *this;
  }

  OracleCost scaled(std::uint64_t n) const {
    return {u_rho * n, u_p * n, pi * n};
  }

  bool operator==(const OracleCost&) const = default;
};

enum class HandleKind { gradient, fisher };

// Oracle-query meter: the artifact's sample-complexity measure. One quantum
// query of a composed oracle costs 1 U_rho + N U_P + N Pi; a classical
// length-T sample costs 1 U_rho + T U_P + T Pi.
struct QueryLedger {
  OracleCost totals;
  std::uint64_t u_g_queries = 0;
  std::uint64_t u_f_queries = 0;
  std::uint64_t classical_samples = 0;
  std::uint64_t classical_steps = 0;  // sum of classical sample lengths

  void charge_quantum(HandleKind kind, std::uint64_t queries,
                      const OracleCost& per_query) {
    totals += per_query.scaled(queries);
    (kind == HandleKind::gradient ? u_g_queries : u_f_queries) += queries;
  }

  void charge_classical(int length) {
    const auto steps = static_cast<std::uint64_t>(length);
    totals += OracleCost{1, steps, steps};
    classical_samples += 1;
    classical_steps += steps;
  }

  // Recomputes the totals from the per-kind counters for a run where every
  // quantum query used truncation level N.
  bool consistent(int truncation) const {
    const auto n = static_cast<std::uint64_t>(truncation);
    const std::uint64_t quantum = u_g_queries + u_f_queries;
    return totals.u_rho == quantum + classical_samples &&
           totals.u_p == n * quantum + classical_steps &&
           totals.pi == n * quantum + classical_steps;
  }
};

}  // namespace qnpg
