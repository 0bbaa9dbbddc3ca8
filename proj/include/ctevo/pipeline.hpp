#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctevo/config.hpp"
#include "ctevo/events.hpp"
#include "ctevo/metrics.hpp"
#include "ctevo/sliding_window.hpp"
#include "ctevo/tracklets.hpp"

namespace ctevo {

/// Clusters events, builds tracklets per window and runs the sliding-window estimator.
SlidingWindowOutput estimate_from_events(const PipelineConfig& config, std::span<const Event> events);

/// Same, starting from externally supplied tracklets (cluster ids already set).
SlidingWindowOutput estimate_from_tracklets(const PipelineConfig& config, std::span<const FeatureTracklet> tracklets);

struct RunRequest {
  std::string events_path;
  /// Used instead of events when set.
  std::string tracklets_path;
  std::string gt_path;
  std::string eval_times_path;
  std::string out_dir;
};

struct RunResult {
  SlidingWindowOutput estimate;
  std::optional<ErrorReport> report;
  std::vector<double> eval_times;
};

/**
 * Full `run` subcommand. Writes trajectory.txt, knots.txt, diagnostics.tsv
 * and, with evaluation times, trajectory_eval.txt; with ground truth also
 * metrics.tsv and errors.csv. Failures are rethrown as PipelineFailure
 * naming the stage.
 */
RunResult run_pipeline(const PipelineConfig& config, const RunRequest& request);

/// Writes config.txt, events.txt, tracklets.txt, gt.txt and eval_times.txt.
SyntheticScene simulate_dataset(const PipelineConfig& config, const std::string& out_dir);

SceneOptions scene_options(const PipelineConfig& config);

/// Evaluation times: the sampling grid intersected with the span of observation times.
std::vector<double> evaluation_grid(const SyntheticScene& scene, double rate_hz, double t_first, double t_last);

/// Metrics from two TUM files; writes metrics.tsv and errors.csv into out_dir when non-empty.
ErrorReport evaluate_files(const std::string& est_path, const std::string& gt_path, const std::string& times_path,
                           const std::string& out_dir);

struct InspectReport {
  std::vector<ClusterStats> clusters;
  std::size_t full_tracklets = 0;
  std::size_t half_tracklets = 0;
};

InspectReport inspect_events(const PipelineConfig& config, std::span<const Event> events);
void write_inspect(std::ostream& out, const InspectReport& report);

void write_diagnostics(std::ostream& out, std::span<const WindowDiagnostics> diagnostics);
void write_knots(std::ostream& out, std::span<const TrajectoryState> knots);

}  // namespace ctevo
