#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "ctevo/config.hpp"
#include "ctevo/error.hpp"
#include "ctevo/pipeline.hpp"

namespace {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kConfig = 2,
  kIo = 3,
  kPipeline = 4,
  kInternal = 5,
};

int exit_code_for(ctevo::ErrorCode code) {
  switch (code) {
    case ctevo::ErrorCode::ConfigError: return kConfig;
    case ctevo::ErrorCode::IoError:
    case ctevo::ErrorCode::ParseError:
    case ctevo::ErrorCode::NonMonotonicTime: return kIo;
    case ctevo::ErrorCode::PipelineFailure: return kPipeline;
    default: return kInternal;
  }
}

struct CommonFlags {
  std::string config;
  std::string log_level = "info";
  std::optional<std::uint64_t> seed;
};

ctevo::PipelineConfig load(const CommonFlags& flags, bool require_config) {
  ctevo::PipelineConfig config;
  if (!flags.config.empty()) {
    config = ctevo::load_config(flags.config);
  } else if (require_config) {
    throw ctevo::Error(ctevo::ErrorCode::ConfigError, "--config: required for this subcommand");
  }
  if (flags.seed) ctevo::apply_seed(config, *flags.seed);
  return config;
}

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Configuration file (section.key = value)");
  cmd->add_option("--seed", flags.seed, "Overrides ransac.seed and sim.seed");
  cmd->add_option("--log-level", flags.log_level, "Log verbosity")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time stereo event-camera visual odometry"};
  app.require_subcommand(1);

  CommonFlags common;
  ctevo::RunRequest run_req;
  auto* run = app.add_subcommand("run", "Estimate a trajectory from events (or tracklets)");
  add_common(run, common);
  run->add_option("--events", run_req.events_path, "Event file")->check(CLI::ExistingFile);
  run->add_option("--tracklets", run_req.tracklets_path, "Tracklet file, bypasses the event front end")
      ->check(CLI::ExistingFile);
  run->add_option("--gt", run_req.gt_path, "Ground-truth trajectory (TUM)")->check(CLI::ExistingFile);
  run->add_option("--eval-times", run_req.eval_times_path, "Evaluation times, one per line")
      ->check(CLI::ExistingFile);
  run->add_option("--out", run_req.out_dir, "Output directory")->required();

  std::string sim_out;
  auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset");
  add_common(simulate, common);
  simulate->add_option("--out", sim_out, "Output directory")->required();

  std::string est_path, gt_path, times_path, eval_out;
  auto* evaluate = app.add_subcommand("evaluate", "Error metrics of an estimate against ground truth");
  add_common(evaluate, common);
  evaluate->add_option("--est", est_path, "Estimated trajectory (TUM)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--gt", gt_path, "Ground-truth trajectory (TUM)")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--eval-times", times_path, "Evaluation times")->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_out, "Directory for metrics.tsv and errors.csv");

  std::string inspect_events_path, inspect_out;
  auto* inspect = app.add_subcommand("inspect", "Per-cluster event and feature statistics");
  add_common(inspect, common);
  inspect->add_option("--events", inspect_events_path, "Event file")->required()->check(CLI::ExistingFile);
  inspect->add_option("--out", inspect_out, "Write the report here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  spdlog::set_level(spdlog::level::from_str(common.log_level));

  try {
    if (*run) {
      const auto config = load(common, true);
      const auto result = ctevo::run_pipeline(config, run_req);
      if (result.report) ctevo::write_table(std::cout, *result.report);
    } else if (*simulate) {
      const auto config = load(common, false);
      ctevo::simulate_dataset(config, sim_out);
    } else if (*evaluate) {
      const auto report = ctevo::evaluate_files(est_path, gt_path, times_path, eval_out);
      ctevo::write_table(std::cout, report);
    } else if (*inspect) {
      const auto config = load(common, true);
      const auto events =
          ctevo::read_events_file(inspect_events_path, config.camera.width(), config.camera.height());
      const auto report = ctevo::inspect_events(config, events);
      if (inspect_out.empty()) {
        ctevo::write_inspect(std::cout, report);
      } else {
        std::ofstream out(inspect_out);
        if (!out) throw ctevo::Error(ctevo::ErrorCode::IoError, "cannot write " + inspect_out);
        ctevo::write_inspect(out, report);
      }
    }
  } catch (const ctevo::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kInternal;
  }
  return kOk;
}
