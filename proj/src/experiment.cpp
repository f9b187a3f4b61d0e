#include "qnpg/experiment.hpp"

#include "qnpg/errors.hpp"
#include "qnpg/optimizer.hpp"
#include "qnpg/trajectory.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <map>
#include <sstream>

namespace qnpg {

using nlohmann::json;

ExperimentMode parse_mode(const std::string& name) {
  if (name == "qnpg") return ExperimentMode::qnpg;
  if (name == "classical") return ExperimentMode::classical;
  if (name == "bias_sweep") return ExperimentMode::bias_sweep;
  if (name == "variance_check") return ExperimentMode::variance_check;
  if (name == "slope_study") return ExperimentMode::slope_study;
  if (name == "qvr_stats") return ExperimentMode::qvr_stats;
  throw std::invalid_argument("unknown experiment mode '" + name + "'");
}

std::string mode_name(ExperimentMode mode) {
  switch (mode) {
    case ExperimentMode::qnpg: return "qnpg";
    case ExperimentMode::classical: return "classical";
    case ExperimentMode::bias_sweep: return "bias_sweep";
    case ExperimentMode::variance_check: return "variance_check";
    case ExperimentMode::slope_study: return "slope_study";
    case ExperimentMode::qvr_stats: return "qvr_stats";
  }
  return "unknown";
}

namespace {

ExperimentOverrides parse_overrides(const json& j, const std::string& origin) {
  ExperimentOverrides o;
  for (const auto& [key, value] : j.items()) {
    if (key == "K") o.K = value.get<int>();
    else if (key == "H") o.H = value.get<int>();
    else if (key == "N") o.N = value.get<int>();
    else if (key == "num_samples") o.num_samples = value.get<int>();
    else if (key == "reps") o.reps = value.get<int>();
    else if (key == "record_stride") o.record_stride = value.get<int>();
    else if (key == "eta") o.eta = value.get<double>();
    else if (key == "alpha") o.alpha = value.get<double>();
    else if (key == "sigma2_g") o.sigma2_g = value.get<double>();
    else if (key == "sigma2_F") o.sigma2_F = value.get<double>();
    else if (key == "lambda_reg") o.lambda_reg = value.get<double>();
    else if (key == "G") o.G = value.get<double>();
    else if (key == "B") o.B = value.get<double>();
    else if (key == "mu_F") o.mu_F = value.get<double>();
    else if (key == "c_K") o.c_K = value.get<double>();
    else if (key == "c_H") o.c_H = value.get<double>();
    else if (key == "c_N") o.c_N = value.get<double>();
    else if (key == "c_g") o.c_g = value.get<double>();
    else if (key == "c_F") o.c_F = value.get<double>();
    else if (key == "bias_coefficient") o.bias_coefficient = value.get<double>();
    else if (key == "theta_scale") o.theta_scale = value.get<double>();
    else if (key == "record_inner") o.record_inner = value.get<bool>();
    else if (key == "algorithm") o.algorithm = value.get<std::string>();
    else if (key == "noise") o.noise = value.get<std::string>();
    else if (key == "n_list") o.n_list = value.get<std::vector<int>>();
    else {
      throw std::invalid_argument(origin + ": unknown override '" + key + "'");
    }
  }
  return o;
}

}  // namespace

ExperimentSpec ExperimentSpec::from_json_text(const std::string& text,
                                              const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(origin + ": JSON parse error: " + e.what());
  }
  ExperimentSpec spec;
  if (!j.contains("mode")) {
    throw std::invalid_argument(origin + ": missing field 'mode'");
  }
  spec.mode = parse_mode(j.at("mode").get<std::string>());
  if (!j.contains("mdp")) {
    throw std::invalid_argument(origin + ": missing field 'mdp'");
  }
  spec.mdp_path = j.at("mdp").get<std::string>();
  if (j.contains("epsilon")) spec.epsilon = j.at("epsilon").get<double>();
  if (j.contains("epsilon_list")) {
    spec.epsilon_list = j.at("epsilon_list").get<std::vector<double>>();
  }
  if (!j.contains("seeds")) {
    throw std::invalid_argument(origin + ": missing field 'seeds'");
  }
  spec.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  if (!j.contains("output")) {
    throw std::invalid_argument(origin + ": missing field 'output'");
  }
  spec.output_path = j.at("output").get<std::string>();
  if (j.contains("overrides")) {
    spec.overrides = parse_overrides(j.at("overrides"), origin);
  }
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return from_json_text(buffer.str(), path);
}

void ExperimentSpec::validate() const {
  if (seeds.empty()) {
    throw std::invalid_argument("experiment spec: seeds must be nonempty");
  }
  if (mode == ExperimentMode::slope_study && epsilon_list.empty()) {
    throw std::invalid_argument(
        "experiment spec: slope_study requires a nonempty epsilon_list");
  }
  if (overrides.algorithm &&
      *overrides.algorithm != "qnpg" && *overrides.algorithm != "classical") {
    throw std::invalid_argument("experiment spec: algorithm must be 'qnpg' or 'classical'");
  }
  if (overrides.noise && *overrides.noise != "zero_mean_gaussian" &&
      *overrides.noise != "biased_per_level") {
    throw std::invalid_argument(
        "experiment spec: noise must be 'zero_mean_gaussian' or 'biased_per_level'");
  }
}

RunConfig config_for(const ExperimentSpec& spec, const TabularMdp& mdp,
                     double epsilon, std::uint64_t seed) {
  const auto& o = spec.overrides;
  const double lambda = o.lambda_reg.value_or(kDefaultFisherRidge);
  const double mu_F = o.mu_F.value_or(lambda);
  const SmoothnessConstants constants = make_smoothness_constants(
      mdp.discount, o.G.value_or(kDefaultScoreBound),
      o.B.value_or(kDefaultScoreSmoothness), mu_F);
  ScheduleConstants multipliers;
  multipliers.c_K = o.c_K.value_or(1.0);
  multipliers.c_H = o.c_H.value_or(1.0);
  multipliers.c_N = o.c_N.value_or(1.0);
  multipliers.c_g = o.c_g.value_or(1.0);
  multipliers.c_F = o.c_F.value_or(1.0);
  RunConfig config =
      schedule_from_epsilon(epsilon, mdp.discount, constants, multipliers);
  config.lambda_reg = lambda;
  if (o.K) config.K = *o.K;
  if (o.H) config.H = *o.H;
  if (o.N) config.N = *o.N;
  if (o.eta) config.eta = *o.eta;
  if (o.alpha) config.alpha = *o.alpha;
  if (o.sigma2_g) config.sigma2_g = *o.sigma2_g;
  if (o.sigma2_F) config.sigma2_F = *o.sigma2_F;
  config.seed = seed;
  config.validate();
  return config;
}

NoiseModel noise_for(const ExperimentSpec& spec) {
  NoiseModel noise;
  if (spec.overrides.noise && *spec.overrides.noise == "biased_per_level") {
    noise.kind = NoiseModel::Kind::biased_per_level;
  }
  noise.bias_coefficient = spec.overrides.bias_coefficient.value_or(0.0);
  return noise;
}

namespace {

json ledger_json(const LedgerSnapshot& s) {
  return json{{"u_rho", s.totals.u_rho},
              {"u_p", s.totals.u_p},
              {"pi", s.totals.pi},
              {"u_g_queries", s.u_g_queries},
              {"u_f_queries", s.u_f_queries},
              {"classical_samples", s.classical_samples},
              {"classical_steps", s.classical_steps}};
}

struct JobOutput {
  std::vector<std::string> records;
  std::vector<std::string> summaries;
};

void emit(JobOutput& out, const json& record) {
  out.records.push_back(record.dump());
}

std::string run_id(const std::string& mode, double epsilon,
                   std::uint64_t seed) {
  std::ostringstream os;
  os << mode << "-e" << epsilon << "-s" << seed;
  return os.str();
}

Eigen::VectorXd draw_theta(const TabularMdp& mdp, std::uint64_t seed,
                           double scale) {
  Rng rng(seed);
  const int d = mdp.num_states * mdp.num_actions;
  Eigen::VectorXd theta(d);
  for (int i = 0; i < d; ++i) theta[i] = scale * (2.0 * rng.uniform() - 1.0);
  return theta;
}

double spectral_norm_symmetric(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

JobOutput run_npg_job(const ExperimentSpec& spec, const TabularMdp& mdp,
                      const std::string& mode, double epsilon,
                      std::uint64_t seed) {
  JobOutput out;
  const RunConfig config = config_for(spec, mdp, epsilon, seed);
  const std::string id = run_id(mode, epsilon, seed);

  const BiasBounds bias =
      bias_bounds(config.constants.G, mdp.discount, config.N);
  const BoundsReport bounds =
      inner_residual_constants(config, mdp.discount, bias);
  emit(out, json{{"schema_version", kRecordSchemaVersion},
                 {"record", "bounds"},
                 {"run_id", id},
                 {"delta_g", bounds.delta_g},
                 {"delta_F", bounds.delta_F},
                 {"R0", bounds.R0},
                 {"R1", bounds.R1},
                 {"C0", bounds.C0},
                 {"C1", bounds.C1}});

  const auto start = std::chrono::steady_clock::now();
  Rng rng(seed);
  const bool record_inner = spec.overrides.record_inner.value_or(false);
  const RunHistory history =
      mode == "classical"
          ? run_classical_npg(mdp, config, rng)
          : run_qnpg(mdp, config, noise_for(spec), rng, record_inner);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  for (const auto& inner : history.inner_records) {
    emit(out, json{{"schema_version", kRecordSchemaVersion},
                   {"record", "inner"},
                   {"run_id", id},
                   {"k", inner.k},
                   {"h", inner.h},
                   {"grad_norm", inner.grad_norm},
                   {"u_rho", inner.ledger.totals.u_rho},
                   {"u_p", inner.ledger.totals.u_p},
                   {"pi", inner.ledger.totals.pi},
                   {"u_g_queries", inner.ledger.u_g_queries},
                   {"u_f_queries", inner.ledger.u_f_queries},
                   {"classical_samples", inner.ledger.classical_samples}});
  }

  int stride = spec.overrides.record_stride.value_or(0);
  if (stride <= 0) stride = std::max(1, config.K / 200);
  for (const auto& record : history.records) {
    if (record.k % stride != 0 && record.k != config.K - 1) continue;
    emit(out, json{{"schema_version", kRecordSchemaVersion},
                   {"record", "iter"},
                   {"run_id", id},
                   {"k", record.k},
                   {"j", record.j_value},
                   {"omega_norm", record.omega.norm()},
                   {"u_rho", record.ledger.totals.u_rho},
                   {"u_p", record.ledger.totals.u_p},
                   {"pi", record.ledger.totals.pi},
                   {"u_g_queries", record.ledger.u_g_queries},
                   {"u_f_queries", record.ledger.u_f_queries},
                   {"classical_samples", record.ledger.classical_samples}});
  }
  const double gap = history.j_star - history.j_final;
  emit(out, json{{"schema_version", kRecordSchemaVersion},
                 {"record", "run"},
                 {"run_id", id},
                 {"mode", mode},
                 {"seed", seed},
                 {"epsilon", epsilon},
                 {"K", config.K},
                 {"H", config.H},
                 {"N", config.N},
                 {"final_j", history.j_final},
                 {"j_star", history.j_star},
                 {"final_gap", gap},
                 {"kl_theta0", history.kl_theta0},
                 {"ledger", ledger_json(snapshot(history.ledger))}});

  std::ostringstream summary;
  summary << id << ": final gap " << gap << ", u_p "
          << history.ledger.totals.u_p << ", wall " << wall << " s";
  out.summaries.push_back(summary.str());
  return out;
}

JobOutput run_bias_sweep_job(const ExperimentSpec& spec, const TabularMdp& mdp,
                             std::uint64_t seed) {
  JobOutput out;
  const std::string id = run_id("bias_sweep", 0.0, seed);
  std::vector<int> n_list = spec.overrides.n_list;
  if (n_list.empty()) n_list = {5, 10, 20, 40};
  const double scale = spec.overrides.theta_scale.value_or(1.0);

  SoftmaxPolicy policy(mdp.num_states, mdp.num_actions,
                       draw_theta(mdp, seed, scale));
  const double g_measured = measured_score_bound(policy);
  const Eigen::VectorXd grad = exact_policy_gradient(mdp, policy);
  const Eigen::MatrixXd fisher = exact_fisher(mdp, policy);
  int violations = 0;
  for (const int n : n_list) {
    const EstimatorMoments moments = exact_truncated_moments_dp(mdp, policy, n);
    const BiasBounds bounds = bias_bounds(g_measured, mdp.discount, n);
    const double bias_g = (moments.mean_g - grad).norm();
    const double bias_F = spectral_norm_symmetric(moments.mean_F - fisher);
    if (bias_g > bounds.delta_g || bias_F > bounds.delta_F) ++violations;
    emit(out, json{{"schema_version", kRecordSchemaVersion},
                   {"record", "bias"},
                   {"run_id", id},
                   {"seed", seed},
                   {"N", n},
                   {"bias_g", bias_g},
                   {"delta_g", bounds.delta_g},
                   {"bias_F", bias_F},
                   {"delta_F", bounds.delta_F},
                   {"G_measured", g_measured}});
  }
  std::ostringstream summary;
  summary << id << ": " << n_list.size() << " truncation levels, "
          << violations << " bound violations";
  out.summaries.push_back(summary.str());
  return out;
}

JobOutput run_variance_job(const ExperimentSpec& spec, const TabularMdp& mdp,
                           std::uint64_t seed) {
  JobOutput out;
  const std::string id = run_id("variance_check", 0.0, seed);
  const int truncation = spec.overrides.N.value_or(10);
  const int num_samples = spec.overrides.num_samples.value_or(100000);
  const double scale = spec.overrides.theta_scale.value_or(1.0);

  SoftmaxPolicy policy(mdp.num_states, mdp.num_actions,
                       draw_theta(mdp, seed, scale));
  Rng rng(seed);
  const EstimatorMoments mc =
      monte_carlo_moments(mdp, policy, truncation, num_samples, rng);
  const double g_measured = measured_score_bound(policy);
  const int d = policy.param_dim();
  const double one_minus = 1.0 - mdp.discount;
  const double bound_g =
      d * g_measured * g_measured / std::pow(one_minus, 4.0);
  const double bound_F = d * std::pow(g_measured, 4.0);
  emit(out, json{{"schema_version", kRecordSchemaVersion},
                 {"record", "variance"},
                 {"run_id", id},
                 {"seed", seed},
                 {"N", truncation},
                 {"num_samples", num_samples},
                 {"var_g", *mc.var_g},
                 {"var_g_bound", bound_g},
                 {"var_F", *mc.var_F},
                 {"var_F_bound", bound_F}});
  std::ostringstream summary;
  summary << id << ": var_g " << *mc.var_g << " (bound " << bound_g
          << "), var_F " << *mc.var_F << " (bound " << bound_F << ")";
  out.summaries.push_back(summary.str());
  return out;
}

JobOutput run_qvr_job(const ExperimentSpec& spec, const TabularMdp& mdp,
                      std::uint64_t seed) {
  JobOutput out;
  const std::string id = run_id("qvr_stats", 0.0, seed);
  const int truncation = spec.overrides.N.value_or(10);
  const int reps = spec.overrides.reps.value_or(100000);
  const double sigma2 = spec.overrides.sigma2_g.value_or(0.04);
  const NoiseModel noise = noise_for(spec);

  SoftmaxPolicy policy(mdp.num_states, mdp.num_actions);
  const SmoothnessConstants constants =
      make_smoothness_constants(mdp.discount);
  const EstimatorMoments moments =
      exact_truncated_moments_dp(mdp, policy, truncation);
  const RandomVariableHandle handle =
      make_g_handle(mdp, policy, truncation, constants, moments);

  Rng rng(seed);
  QueryLedger ledger;
  const int d = handle.dimension();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(d);
  double sum_sq = 0.0;
  for (int i = 0; i < reps; ++i) {
    const Eigen::VectorXd value =
        qvariance_reduce(handle, sigma2, noise, ledger, rng);
    sum += value;
    sum_sq += value.squaredNorm();
  }
  const double n = reps;
  const Eigen::VectorXd mean = sum / n;
  const double trace_var =
      std::max(0.0, (sum_sq - n * mean.squaredNorm()) / (n - 1.0));
  emit(out, json{{"schema_version", kRecordSchemaVersion},
                 {"record", "qvr"},
                 {"run_id", id},
                 {"seed", seed},
                 {"N", truncation},
                 {"reps", reps},
                 {"sigma2", sigma2},
                 {"noise", noise.kind == NoiseModel::Kind::biased_per_level
                               ? "biased_per_level"
                               : "zero_mean_gaussian"},
                 {"emp_mean", std::vector<double>(mean.data(), mean.data() + d)},
                 {"exact_mean",
                  std::vector<double>(handle.exact_mean().data(),
                                      handle.exact_mean().data() + d)},
                 {"emp_trace_var", trace_var},
                 {"mean_u_p_per_call",
                  static_cast<double>(ledger.totals.u_p) / n}});
  std::ostringstream summary;
  summary << id << ": trace var " << trace_var << " (target " << sigma2
          << ")";
  out.summaries.push_back(summary.str());
  return out;
}

}  // namespace

int cmd_run(const ExperimentSpec& spec, std::ostream& summary) {
  try {
    const TabularMdp mdp = load_mdp(spec.mdp_path);

    struct Job {
      double epsilon;
      std::uint64_t seed;
    };
    std::vector<Job> jobs;
    if (spec.mode == ExperimentMode::slope_study) {
      for (const double eps : spec.epsilon_list) {
        for (const auto seed : spec.seeds) jobs.push_back({eps, seed});
      }
    } else {
      for (const auto seed : spec.seeds) jobs.push_back({spec.epsilon, seed});
    }

    auto run_job = [&](const Job& job) -> JobOutput {
      switch (spec.mode) {
        case ExperimentMode::qnpg:
          return run_npg_job(spec, mdp, "qnpg", job.epsilon, job.seed);
        case ExperimentMode::classical:
          return run_npg_job(spec, mdp, "classical", job.epsilon, job.seed);
        case ExperimentMode::slope_study:
          return run_npg_job(spec, mdp,
                             spec.overrides.algorithm.value_or("qnpg"),
                             job.epsilon, job.seed);
        case ExperimentMode::bias_sweep:
          return run_bias_sweep_job(spec, mdp, job.seed);
        case ExperimentMode::variance_check:
          return run_variance_job(spec, mdp, job.seed);
        case ExperimentMode::qvr_stats:
          return run_qvr_job(spec, mdp, job.seed);
      }
      throw std::logic_error("unreachable mode");
    };

    std::vector<JobOutput> outputs(jobs.size());
    const int workers = std::max(1, spec.workers);
    if (workers == 1 || jobs.size() <= 1) {
      for (std::size_t i = 0; i < jobs.size(); ++i) outputs[i] = run_job(jobs[i]);
    } else {
      // Jobs are independent; outputs are buffered and emitted in job order
      // so the record stream stays deterministic.
      for (std::size_t base = 0; base < jobs.size();
           base += static_cast<std::size_t>(workers)) {
        const std::size_t end =
            std::min(jobs.size(), base + static_cast<std::size_t>(workers));
        std::vector<std::future<JobOutput>> futures;
        for (std::size_t i = base; i < end; ++i) {
          futures.push_back(std::async(std::launch::async,
                                       [&run_job, job = jobs[i]] {
                                         return run_job(job);
                                       }));
        }
        for (std::size_t i = base; i < end; ++i) {
          outputs[i] = futures[i - base].get();
        }
      }
    }

    std::ofstream out(spec.output_path, std::ios::trunc);
    if (!out) throw IoError("cannot open output file: " + spec.output_path);
    for (const auto& output : outputs) {
      for (const auto& line : output.records) out << line << '\n';
      for (const auto& line : output.summaries) summary << line << '\n';
    }
    if (!out.good()) throw IoError("failed writing output file: " + spec.output_path);
    return static_cast<int>(ExitCode::ok);
  } catch (const IoError& e) {
    summary << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::io);
  } catch (const NumericalDivergence& e) {
    summary << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::divergence);
  } catch (const std::invalid_argument& e) {
    summary << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::validation);
  } catch (const ResourceError& e) {
    summary << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::validation);
  }
}

std::optional<SlopeFit> fit_loglog(const std::vector<double>& x,
                                   const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::nullopt;
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::nullopt;
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double n = static_cast<double>(x.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mean_x += lx[i];
    mean_y += ly[i];
  }
  mean_x /= n;
  mean_y /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (lx[i] - mean_x) * (lx[i] - mean_x);
    sxy += (lx[i] - mean_x) * (ly[i] - mean_y);
  }
  if (sxx == 0.0) return std::nullopt;
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.points = static_cast<int>(x.size());
  if (x.size() > 2) {
    double ss_res = 0.0;
    const double intercept = mean_y - fit.slope * mean_x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double resid = ly[i] - intercept - fit.slope * lx[i];
      ss_res += resid * resid;
    }
    fit.stderr_slope = std::sqrt(ss_res / (n - 2.0) / sxx);
  } else {
    fit.stderr_slope = std::numeric_limits<double>::quiet_NaN();
  }
  return fit;
}

namespace {

struct RunPoint {
  std::string mode;
  double epsilon = 0.0;
  double gap = 0.0;
  double u_p = 0.0;
};

}  // namespace

int cmd_report(const std::string& results_path, std::ostream& out) {
  std::ifstream in(results_path);
  if (!in) {
    out << "error: cannot open results file: " << results_path << '\n';
    return static_cast<int>(ExitCode::io);
  }
  std::vector<RunPoint> runs;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      out << "error: " << results_path << ":" << line_number
          << ": JSON parse error: " << e.what() << '\n';
      return static_cast<int>(ExitCode::validation);
    }
    try {
      const std::string type = record.value("record", "");
      if (type == "run") {
        runs.push_back({record.at("mode").get<std::string>(),
                        record.at("epsilon").get<double>(),
                        record.at("final_gap").get<double>(),
                        static_cast<double>(
                            record.at("ledger").at("u_p").get<double>())});
      }
    } catch (const json::exception& e) {
      out << "error: " << results_path << ":" << line_number
          << ": malformed record: " << e.what() << '\n';
      return static_cast<int>(ExitCode::validation);
    }
  }

  if (runs.empty()) {
    out << "no run records in " << results_path << '\n';
    return static_cast<int>(ExitCode::ok);
  }

  std::map<std::pair<std::string, double>, std::vector<RunPoint>> groups;
  for (const auto& run : runs) groups[{run.mode, run.epsilon}].push_back(run);

  out << "mode epsilon runs mean_gap se_gap mean_u_p\n";
  for (const auto& [key, members] : groups) {
    double mean_gap = 0.0, mean_up = 0.0;
    for (const auto& m : members) {
      mean_gap += m.gap;
      mean_up += m.u_p;
    }
    mean_gap /= members.size();
    mean_up /= members.size();
    double se = 0.0;
    if (members.size() > 1) {
      double ss = 0.0;
      for (const auto& m : members) ss += (m.gap - mean_gap) * (m.gap - mean_gap);
      se = std::sqrt(ss / (members.size() - 1) / members.size());
    }
    out << key.first << ' ' << key.second << ' ' << members.size() << ' '
        << mean_gap << ' ' << se << ' ' << mean_up << '\n';
  }

  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      by_mode;
  for (const auto& run : runs) {
    by_mode[run.mode].first.push_back(1.0 / run.epsilon);
    by_mode[run.mode].second.push_back(run.u_p);
  }
  for (const auto& [mode, series] : by_mode) {
    std::map<double, int> distinct;
    for (const double v : series.first) distinct[v]++;
    if (distinct.size() < 2) {
      out << mode << ": slope omitted (need at least two epsilon values)\n";
      continue;
    }
    const auto fit = fit_loglog(series.first, series.second);
    if (!fit) {
      out << mode << ": slope omitted (degenerate data)\n";
      continue;
    }
    out << mode << ": u_p vs 1/epsilon log-log slope " << fit->slope;
    if (std::isfinite(fit->stderr_slope)) {
      out << " +/- " << 1.96 * fit->stderr_slope << " (95% CI, " << fit->points
          << " points)";
    } else {
      out << " (" << fit->points << " points, CI omitted)";
    }
    out << '\n';
  }
  return static_cast<int>(ExitCode::ok);
}

}  // namespace qnpg
