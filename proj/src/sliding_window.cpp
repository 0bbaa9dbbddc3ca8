#include "ctevo/sliding_window.hpp"

#include <algorithm>
#include <limits>

#include "ctevo/error.hpp"

namespace ctevo {

WindowSolution solve_window(std::span<const FeatureTracklet> tracklets, const StereoCameraModel& camera,
                            const EstimatorOptions& options, int window_index) {
  WindowSolution sol;
  WindowDiagnostics& d = sol.diagnostics;
  d.window = window_index;
  d.tracklets = tracklets.size();

  const std::vector<TrackletSegment> segments = make_segments(tracklets, camera);
  d.segments = segments.size();
  RansacOptions ransac_options = options.ransac;
  ransac_options.seed += static_cast<std::uint64_t>(window_index);
  const RansacResult ransac = mc_ransac(segments, camera, ransac_options);
  d.inliers = ransac.inliers.size();
  d.ransac_iterations = ransac.iterations_used;
  d.refine_iterations = ransac.refine_iterations;
  d.ransac_velocity = ransac.velocity;

  std::vector<FeatureTracklet> inliers;
  inliers.reserve(ransac.inliers.size());
  for (std::size_t i : ransac.inliers) inliers.push_back(tracklets[segments[i].tracklet]);

  sol.window = initialize_window(inliers, ransac.velocity, camera, options.r_inv);
  const SolveReport report = gauss_newton_solve(sol.window, options.prior, camera, options.solver);
  d.iterations = report.iterations;
  d.initial_cost = report.initial_cost;
  d.final_cost = report.final_cost;
  d.converged = report.converged;
  d.knots = sol.window.knot_count();
  d.landmarks = sol.window.landmarks.size();
  d.dropped_observations = sol.window.dropped_observations;
  d.ok = true;
  return sol;
}

SlidingWindowOutput slide_window(std::span<const std::vector<FeatureTracklet>> windows,
                                 const StereoCameraModel& camera, const EstimatorOptions& options) {
  SlidingWindowOutput out;
  std::vector<WindowSolution> solved;
  std::optional<ContinuousTrajectory> previous;

  for (std::size_t w = 0; w < windows.size(); ++w) {
    WindowSolution sol;
    try {
      sol = solve_window(windows[w], camera, options, static_cast<int>(w));
    } catch (const Error& e) {
      WindowDiagnostics d;
      d.window = static_cast<int>(w);
      d.tracklets = windows[w].size();
      d.failure = e.what();
      out.diagnostics.push_back(d);
      continue;
    }
    const double t1 = sol.window.states.front().t;
    sol.origin = previous ? previous->extrapolate(t1) : Pose::identity();
    for (const auto& s : sol.window.states) sol.global_knots.push_back(TrajectoryState{s.T_k1 * sol.origin, s.varpi, s.t});
    previous.emplace(sol.global_knots, options.prior);
    out.diagnostics.push_back(sol.diagnostics);
    solved.push_back(std::move(sol));
  }

  double last_t = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < solved.size(); ++i) {
    const double next_start = i + 1 < solved.size() ? solved[i + 1].global_knots.front().t
                                                    : std::numeric_limits<double>::infinity();
    for (const auto& k : solved[i].global_knots) {
      if (k.t > last_t && k.t < next_start) {
        out.knots.push_back(k);
        last_t = k.t;
      }
    }
  }
  return out;
}

std::vector<std::vector<FeatureTracklet>> window_tracklets_by_cluster(std::span<const FeatureTracklet> tracklets,
                                                                      int width) {
  if (width < 1) throw Error(ErrorCode::InvalidArgument, "window width must be positive");
  std::vector<std::vector<FeatureTracklet>> out;
  int lo = std::numeric_limits<int>::max();
  int hi = std::numeric_limits<int>::min();
  for (const auto& tr : tracklets) {
    for (const auto& o : tr.observations) {
      lo = std::min(lo, o.cluster_id);
      hi = std::max(hi, o.cluster_id);
    }
  }
  if (lo > hi) return out;
  const int clusters = hi - lo + 1;
  const int n_windows = std::max(1, clusters - width + 1);
  for (int w = 0; w < n_windows; ++w) {
    const int a = lo + w;
    const int b = a + width - 1;
    std::vector<FeatureTracklet> win;
    for (const auto& tr : tracklets) {
      FeatureTracklet sub;
      sub.id = tr.id;
      sub.last_descriptor = tr.last_descriptor;
      for (const auto& o : tr.observations) {
        if (o.cluster_id >= a && o.cluster_id <= b) sub.observations.push_back(o);
      }
      if (sub.observations.size() >= 2) win.push_back(std::move(sub));
    }
    out.push_back(std::move(win));
  }
  return out;
}

}  // namespace ctevo
