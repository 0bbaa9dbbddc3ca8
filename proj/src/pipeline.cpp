#include "ctevo/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>

#include "ctevo/error.hpp"

namespace ctevo {

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::PipelineFailure) throw;
    throw Error(ErrorCode::PipelineFailure, std::string(name) + " stage: " + e.what());
  }
}

std::string join_path(const std::string& dir, const char* name) {
  return (std::filesystem::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create output directory " + dir + ": " + ec.message());
}

std::vector<double> covered_times(std::span<const double> times, const PoseQuery& a, const PoseQuery& b) {
  std::vector<double> out;
  for (double t : times) {
    if (a.covers(t) && b.covers(t)) out.push_back(t);
  }
  if (out.size() < times.size()) {
    spdlog::warn("{} of {} evaluation times fall outside the estimated or ground-truth span and are skipped",
                 times.size() - out.size(), times.size());
  }
  return out;
}

void log_windows(const SlidingWindowOutput& out) {
  std::size_t failed = 0;
  for (const auto& d : out.diagnostics) {
    if (d.ok) {
      spdlog::debug("window {}: {} knots, {} landmarks, {} GN iterations, cost {:.3e} -> {:.3e}", d.window, d.knots,
                    d.landmarks, d.iterations, d.initial_cost, d.final_cost);
    } else {
      ++failed;
      spdlog::warn("window {} skipped: {}", d.window, d.failure);
    }
  }
  spdlog::info("{} windows solved, {} skipped, {} knots", out.diagnostics.size() - failed, failed, out.knots.size());
}

}  // namespace

SlidingWindowOutput estimate_from_events(const PipelineConfig& config, std::span<const Event> events) {
  const auto clusters = cluster_events(events, config.camera.width(), config.camera.height(), config.cluster);
  spdlog::info("{} events in {} clusters", events.size(), clusters.size());
  const auto windows = build_tracklets(clusters, config.frontend, config.camera, config.estimator.window_width);
  auto out = slide_window(windows, config.camera, config.estimator);
  log_windows(out);
  return out;
}

SlidingWindowOutput estimate_from_tracklets(const PipelineConfig& config, std::span<const FeatureTracklet> tracklets) {
  const auto windows = window_tracklets_by_cluster(tracklets, config.estimator.window_width);
  spdlog::info("{} tracklets in {} windows", tracklets.size(), windows.size());
  auto out = slide_window(windows, config.camera, config.estimator);
  log_windows(out);
  return out;
}

void write_diagnostics(std::ostream& out, std::span<const WindowDiagnostics> diagnostics) {
  out << "window\tok\titerations\tinitial_cost\tfinal_cost\tknots\tlandmarks\tconverged\ttracklets\tsegments\t"
         "inliers\transac_iterations\trefine_iterations\tdropped_observations\tfailure\n";
  out.precision(10);
  for (const auto& d : diagnostics) {
    out << d.window << '\t' << d.ok << '\t' << d.iterations << '\t' << d.initial_cost << '\t' << d.final_cost << '\t'
        << d.knots << '\t' << d.landmarks << '\t' << d.converged << '\t' << d.tracklets << '\t' << d.segments << '\t'
        << d.inliers << '\t' << d.ransac_iterations << '\t' << d.refine_iterations << '\t' << d.dropped_observations
        << '\t' << d.failure << '\n';
  }
}

void write_knots(std::ostream& out, std::span<const TrajectoryState> knots) {
  out << "# t vx vy vz wx wy wz\n";
  out.precision(17);
  for (const auto& k : knots) {
    out << k.t;
    for (int i = 0; i < 6; ++i) out << ' ' << k.varpi(i);
    out << '\n';
  }
}

RunResult run_pipeline(const PipelineConfig& config, const RunRequest& request) {
  if (request.events_path.empty() && request.tracklets_path.empty()) {
    throw Error(ErrorCode::PipelineFailure, "input stage: no event or tracklet file given");
  }
  stage("output", [&] {
    ensure_dir(request.out_dir);
    return 0;
  });

  RunResult result;
  if (!request.tracklets_path.empty()) {
    const auto tracklets =
        stage("input", [&] { return read_tracklets_file(request.tracklets_path, config.cluster.window_s); });
    result.estimate = stage("estimate", [&] { return estimate_from_tracklets(config, tracklets); });
  } else {
    const auto events = stage("input", [&] {
      return read_events_file(request.events_path, config.camera.width(), config.camera.height());
    });
    result.estimate = stage("estimate", [&] { return estimate_from_events(config, events); });
  }
  if (result.estimate.knots.empty()) {
    throw Error(ErrorCode::PipelineFailure, "estimate stage: no window produced a solution");
  }

  const ContinuousTrajectory est(result.estimate.knots, config.estimator.prior);
  stage("output", [&] {
    std::vector<double> times;
    std::vector<Pose> poses;
    for (const auto& k : result.estimate.knots) {
      times.push_back(k.t);
      poses.push_back(k.T_k1);
    }
    write_tum_file(join_path(request.out_dir, "trajectory.txt"), times, poses);
    std::ofstream kf(join_path(request.out_dir, "knots.txt"));
    std::ofstream df(join_path(request.out_dir, "diagnostics.tsv"));
    if (!kf || !df) throw Error(ErrorCode::IoError, "cannot write into " + request.out_dir);
    write_knots(kf, result.estimate.knots);
    write_diagnostics(df, result.estimate.diagnostics);
    return 0;
  });

  std::optional<SampledTrajectory> gt;
  if (!request.gt_path.empty()) gt = stage("input", [&] { return read_tum_file(request.gt_path); });
  if (!request.eval_times_path.empty()) {
    result.eval_times = stage("input", [&] { return read_times_file(request.eval_times_path); });
  } else if (gt) {
    result.eval_times = gt->times();
  }

  if (!result.eval_times.empty()) {
    stage("output", [&] {
      std::vector<double> times;
      std::vector<Pose> poses;
      for (double t : result.eval_times) {
        if (!est.covers(t)) continue;
        times.push_back(t);
        poses.push_back(est.pose_at(t));
      }
      write_tum_file(join_path(request.out_dir, "trajectory_eval.txt"), times, poses);
      return 0;
    });
  }

  if (gt) {
    result.report = stage("evaluate", [&] {
      const auto times = covered_times(result.eval_times, est, *gt);
      return make_report(est, *gt, times);
    });
    stage("output", [&] {
      write_table_file(join_path(request.out_dir, "metrics.tsv"), *result.report);
      write_errors_csv_file(join_path(request.out_dir, "errors.csv"), *result.report);
      return 0;
    });
  }
  return result;
}

SceneOptions scene_options(const PipelineConfig& config) {
  SceneOptions o;
  o.camera = config.camera;
  o.motion = Motion{config.sim.varpi, config.sim.osc_axis, config.sim.osc_amplitude, config.sim.osc_frequency};
  o.duration = config.sim.duration;
  o.n_landmarks = config.sim.n_landmarks;
  o.depth_min = config.sim.depth_min;
  o.depth_max = config.sim.depth_max;
  o.cluster_period = config.cluster.window_s;
  o.noise_sigma = config.sim.noise_sigma;
  o.outlier_fraction = config.sim.outlier_fraction;
  o.seed = config.sim.seed;
  return o;
}

std::vector<double> evaluation_grid(const SyntheticScene& scene, double rate_hz, double t_first, double t_last) {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor(scene.duration * rate_hz + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / rate_hz;
    if (t >= t_first && t <= t_last) out.push_back(t);
  }
  return out;
}

SyntheticScene simulate_dataset(const PipelineConfig& config, const std::string& out_dir) {
  ensure_dir(out_dir);
  const SyntheticScene scene = generate_scene(scene_options(config));
  const LabeledTracklets tracks = render_tracklets(scene);
  EventRenderOptions ev;
  ev.pattern_radius = config.sim.pattern_radius;
  const std::vector<Event> events = render_events(scene, ev);

  double t_first = std::numeric_limits<double>::infinity();
  double t_last = -std::numeric_limits<double>::infinity();
  for (const auto& tr : tracks.tracklets) {
    t_first = std::min(t_first, tr.observations.front().t);
    t_last = std::max(t_last, tr.observations.back().t);
  }

  std::vector<double> gt_times;
  const auto n = static_cast<long>(std::floor(scene.duration * config.sim.eval_rate_hz + 1e-9));
  for (long i = 0; i <= n; ++i) gt_times.push_back(static_cast<double>(i) / config.sim.eval_rate_hz);
  std::vector<Pose> gt_poses;
  for (double t : gt_times) gt_poses.push_back(scene.motion.pose_at(t));

  write_config_file(join_path(out_dir, "config.txt"), config);
  write_events_file(join_path(out_dir, "events.txt"), events);
  write_tracklets_file(join_path(out_dir, "tracklets.txt"), tracks.tracklets);
  write_tum_file(join_path(out_dir, "gt.txt"), gt_times, gt_poses);
  write_times_file(join_path(out_dir, "eval_times.txt"),
                   evaluation_grid(scene, config.sim.eval_rate_hz, t_first, t_last));
  spdlog::info("simulated {} landmarks, {} tracklets, {} events", scene.landmarks.size(), tracks.tracklets.size(),
               events.size());
  return scene;
}

ErrorReport evaluate_files(const std::string& est_path, const std::string& gt_path, const std::string& times_path,
                           const std::string& out_dir) {
  const SampledTrajectory est = read_tum_file(est_path);
  const SampledTrajectory gt = read_tum_file(gt_path);
  const std::vector<double> all_times = times_path.empty() ? est.times() : read_times_file(times_path);
  const auto times = covered_times(all_times, est, gt);
  ErrorReport report = make_report(est, gt, times);
  if (!out_dir.empty()) {
    ensure_dir(out_dir);
    write_table_file(join_path(out_dir, "metrics.tsv"), report);
    write_errors_csv_file(join_path(out_dir, "errors.csv"), report);
  }
  return report;
}

InspectReport inspect_events(const PipelineConfig& config, std::span<const Event> events) {
  InspectReport r;
  const auto clusters = cluster_events(events, config.camera.width(), config.camera.height(), config.cluster);
  TrackletBuilder builder(config.frontend);
  for (const auto& c : clusters) r.clusters.push_back(builder.process(c));
  r.full_tracklets = builder.tracklets(ResolutionLevel::Full).size();
  r.half_tracklets = builder.tracklets(ResolutionLevel::Half).size();
  return r;
}

void write_inspect(std::ostream& out, const InspectReport& r) {
  out << "cluster\tt_start\tt_end\tevents_left\tevents_right\tfeatures_left\tfeatures_right\tquads\n";
  out.precision(12);
  for (const auto& c : r.clusters) {
    out << c.cluster_id << '\t' << c.t_start << '\t' << c.t_end << '\t' << c.events_left << '\t' << c.events_right
        << '\t' << c.features_left << '\t' << c.features_right << '\t' << c.quads << '\n';
  }
  out << "# clusters " << r.clusters.size() << ", tracklets full " << r.full_tracklets << ", half "
      << r.half_tracklets << '\n';
}

}  // namespace ctevo
