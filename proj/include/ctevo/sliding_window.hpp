#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctevo/mc_ransac.hpp"
#include "ctevo/trajectory.hpp"
#include "ctevo/wnoa.hpp"

namespace ctevo {

struct EstimatorOptions {
  WnoaPrior prior = default_prior();
  Matrix3 r_inv = default_measurement_information();
  int window_width = 5;
  SolverOptions solver;
  RansacOptions ransac;
};

/// Per-window record for the diagnostics log.
struct WindowDiagnostics {
  int window = 0;
  bool ok = false;
  std::string failure;
  std::size_t tracklets = 0;
  std::size_t segments = 0;
  std::size_t inliers = 0;
  int ransac_iterations = 0;
  int refine_iterations = 0;
  Twist ransac_velocity = Twist::Zero();
  int iterations = 0;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  std::size_t knots = 0;
  std::size_t landmarks = 0;
  std::size_t dropped_observations = 0;
  bool converged = false;
};

/// One solved window, with knot poses expressed in the world frame.
struct WindowSolution {
  WindowDiagnostics diagnostics;
  EstimationWindow window;
  Pose origin;  // T_{1,w}
  std::vector<TrajectoryState> global_knots;
};

/**
 * RANSAC, initialization and Gauss-Newton for one window's tracklets. The
 * window's knot poses are returned relative to its first knot. Throws on
 * any stage failure.
 */
WindowSolution solve_window(std::span<const FeatureTracklet> tracklets, const StereoCameraModel& camera,
                            const EstimatorOptions& options, int window_index = 0);

struct SlidingWindowOutput {
  /// Concatenated knots T_{k,w}; every knot time is an observation time.
  std::vector<TrajectoryState> knots;
  std::vector<WindowDiagnostics> diagnostics;
};

/**
 * Solves every window independently and chains them: a window's origin is
 * the previous successful window's estimate at the new first knot time.
 * Each window contributes the knots before the next window starts.
 * Failed windows are logged and skipped.
 */
SlidingWindowOutput slide_window(std::span<const std::vector<FeatureTracklet>> windows,
                                 const StereoCameraModel& camera, const EstimatorOptions& options);

/**
 * Groups tracklets (with cluster ids) into windows of `width` consecutive
 * clusters. Only tracklets with at least two observations inside a window
 * are kept for it; no other filtering is applied.
 */
std::vector<std::vector<FeatureTracklet>> window_tracklets_by_cluster(std::span<const FeatureTracklet> tracklets,
                                                                      int width);

}  // namespace ctevo
