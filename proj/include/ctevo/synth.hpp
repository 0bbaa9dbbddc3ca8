#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ctevo/events.hpp"
#include "ctevo/mc_ransac.hpp"
#include "ctevo/se3.hpp"
#include "ctevo/stereo_camera.hpp"
#include "ctevo/tracklets.hpp"
#include "ctevo/wnoa.hpp"

namespace ctevo {

/**
 * Ground-truth motion T(t) = exp(a sin(2 pi f t) osc^) exp(t varpi^), as
 * world-to-camera poses T_{t,w}. With a = 0 this is constant velocity.
 */
struct Motion {
  Twist varpi = Twist::Zero();
  Twist osc_axis = Twist::Zero();
  double osc_amplitude = 0.0;
  double osc_frequency = 0.0;

  Pose pose_at(double t) const;
  /// Body velocity w with dT/dt = w^ T.
  Twist velocity_at(double t) const;
};

/// MVSEC-like 346x260 stereo rig with a 10 cm baseline.
StereoCameraModel default_sim_camera();

struct SceneOptions {
  StereoCameraModel camera = default_sim_camera();
  Motion motion;
  double duration = 2.0;
  int n_landmarks = 50;
  double depth_min = 1.0;
  double depth_max = 5.0;
  /// Landmarks are only spawned this far inside the image border.
  double margin = 8.0;
  double cluster_period = 0.025;
  double noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  StereoCameraModel camera;
  Motion motion;
  double duration = 0.0;
  double cluster_period = 0.025;
  double margin = 8.0;
  double noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  std::uint64_t seed = 0;
  /// World-frame landmarks.
  std::vector<HomogeneousPoint> landmarks;

  int cluster_count() const;
  /// True when the landmark projects inside the margin with positive depth.
  bool visible(std::size_t landmark, double t) const;
  Vector3 project(std::size_t landmark, double t) const;
};

/// Throws NoVisibleLandmarks when landmarks cannot be placed.
SyntheticScene generate_scene(const SceneOptions& options);

/// Constant-velocity scene observed at `sample_times` (used only for the visibility check).
SyntheticScene generate_constant_velocity_scene(const Twist& varpi, double duration, int n_landmarks,
                                                std::span<const double> sample_times, SceneOptions options = {});

struct LabeledTracklets {
  std::vector<FeatureTracklet> tracklets;
  /// Parallel to `tracklets`.
  std::vector<bool> outlier;
  std::vector<std::size_t> landmark;
};

/**
 * One observation per visible landmark per cluster period, at distinct
 * interleaved times. Outlier tracklets observe a different wrong landmark
 * at every time. Pixel noise is i.i.d. Gaussian with the scene sigma.
 */
LabeledTracklets render_tracklets(const SyntheticScene& scene);

/// Explicit observation times per landmark (sorted); invisible samples are skipped.
LabeledTracklets render_tracklets(const SyntheticScene& scene, std::span<const std::vector<double>> times);

struct EventRenderOptions {
  /// Half-size of each landmark's random footprint; 0 renders a single pixel.
  int pattern_radius = 2;
  /// Maximum image motion between rendered samples (px).
  double max_step_px = 0.5;
};

/// Geometric event rendering along each landmark's projected path in both cameras.
std::vector<Event> render_events(const SyntheticScene& scene, const EventRenderOptions& options = {});

/// Ground-truth knots (T_{k,w}, velocity, t) at the given times.
std::vector<TrajectoryState> ground_truth_states(const SyntheticScene& scene, std::span<const double> times);

/**
 * Least-squares velocity of the linearized segment model, solved by
 * stacking all rows and a column-pivoting QR. Throws SingularSystem.
 */
Twist brute_force_velocity(std::span<const TrackletSegment> segments);

}  // namespace ctevo
