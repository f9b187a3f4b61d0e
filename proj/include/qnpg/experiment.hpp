#pragma once

#include "qnpg/bounds.hpp"
#include "qnpg/errors.hpp"
#include "qnpg/estimation.hpp"
#include "qnpg/mdp.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qnpg {

inline constexpr int kRecordSchemaVersion = 1;

enum class ExitCode : int {
  ok = 0,
  validation = 2,
  divergence = 3,
  io = 4,
};

enum class ExperimentMode {
  qnpg,
  classical,
  bias_sweep,
  variance_check,
  slope_study,
  qvr_stats,
};

ExperimentMode parse_mode(const std::string& name);
std::string mode_name(ExperimentMode mode);

// Optional knobs layered on top of the epsilon schedule.
struct ExperimentOverrides {
  std::optional<int> K, H, N, num_samples, reps, record_stride;
  std::optional<double> eta, alpha, sigma2_g, sigma2_F, lambda_reg;
  std::optional<double> G, B, mu_F;
  std::optional<double> c_K, c_H, c_N, c_g, c_F;
  std::optional<double> bias_coefficient, theta_scale;
  std::optional<bool> record_inner;
  std::optional<std::string> algorithm;  // slope_study: qnpg | classical
  std::optional<std::string> noise;      // zero_mean_gaussian | biased_per_level
  std::vector<int> n_list;               // bias_sweep truncation sweep
};

struct ExperimentSpec {
  ExperimentMode mode = ExperimentMode::qnpg;
  std::string mdp_path;
  double epsilon = 0.1;
  std::vector<double> epsilon_list;
  std::vector<std::uint64_t> seeds;
  std::string output_path;
  ExperimentOverrides overrides;
  int workers = 1;

  static ExperimentSpec from_file(const std::string& path);
  static ExperimentSpec from_json_text(const std::string& text,
                                       const std::string& origin);
  void validate() const;
};

// Builds the run configuration the spec implies for one epsilon: schedule
// first, explicit overrides second.
RunConfig config_for(const ExperimentSpec& spec, const TabularMdp& mdp,
                     double epsilon, std::uint64_t seed);
NoiseModel noise_for(const ExperimentSpec& spec);

// Executes the spec, streaming JSONL records to the output path and a
// one-line summary per run to the summary stream. Returns a process exit
// code; failures are reported on the summary stream.
int cmd_run(const ExperimentSpec& spec, std::ostream& summary);

// Aggregates a results file: per-epsilon means and standard errors, plus a
// fitted log-log slope of oracle cost against 1/epsilon when the data spans
// several epsilons.
int cmd_report(const std::string& results_path, std::ostream& out);

struct SlopeFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
  int points = 0;
};

// Ordinary least squares of ln(y) on ln(x); requires >= 2 distinct x.
std::optional<SlopeFit> fit_loglog(const std::vector<double>& x,
                                   const std::vector<double>& y);

}  // namespace qnpg
