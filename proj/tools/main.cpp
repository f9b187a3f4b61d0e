#include "qnpg/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"qnpg: natural policy gradient experiments with oracle-query accounting"};
  app.require_subcommand(1);

  std::string spec_path;
  int workers = 0;
  auto* run = app.add_subcommand("run", "execute an experiment spec");
  run->add_option("--spec", spec_path, "experiment spec file (JSON)")
      ->required();
  run->add_option("--workers", workers,
                  "parallel seed workers (default: QNPG_WORKERS or 1)");

  std::string results_path;
  auto* report = app.add_subcommand("report", "summarize a results file");
  report->add_option("--input", results_path, "results file (JSON lines)")
      ->required();

  CLI11_PARSE(app, argc, argv);

  if (run->parsed()) {
    qnpg::ExperimentSpec spec;
    try {
      spec = qnpg::ExperimentSpec::from_file(spec_path);
    } catch (const qnpg::IoError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return static_cast<int>(qnpg::ExitCode::io);
    } catch (const std::invalid_argument& e) {
      std::cerr << "error: " << e.what() << '\n';
      return static_cast<int>(qnpg::ExitCode::validation);
    }
    if (workers > 0) {
      spec.workers = workers;
    } else if (const char* env = std::getenv("QNPG_WORKERS")) {
      spec.workers = std::max(1, std::atoi(env));
    }
    return qnpg::cmd_run(spec, std::cout);
  }
  return qnpg::cmd_report(results_path, std::cout);
}
