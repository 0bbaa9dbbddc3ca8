#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ctevo/se3.hpp"
#include "ctevo/stereo_camera.hpp"
#include "ctevo/tracklets.hpp"

namespace ctevo {

using Matrix36 = Eigen::Matrix<double, 3, 6>;

/// Two observations of one landmark, each triangulated in its own camera frame.
struct TrackletSegment {
  HomogeneousPoint p_early = HomogeneousPoint(0.0, 0.0, 1.0, 1.0);
  HomogeneousPoint p_late = HomogeneousPoint(0.0, 0.0, 1.0, 1.0);
  StereoMeasurement y_early;
  StereoMeasurement y_late;
  double dt = 0.0;
  /// Index of the source tracklet in the caller's list.
  std::size_t tracklet = 0;
};

/**
 * One segment per tracklet, spanning its first and last observation.
 * Tracklets whose endpoints cannot be triangulated are skipped.
 */
std::vector<TrackletSegment> make_segments(std::span<const FeatureTracklet> tracklets, const StereoCameraModel& camera);

TrackletSegment make_segment(const StereoMeasurement& early, const StereoMeasurement& late,
                             const StereoCameraModel& camera);

struct RansacResult {
  Twist velocity = Twist::Zero();
  std::vector<std::size_t> inliers;
  std::vector<std::size_t> outliers;
  int iterations_used = 0;
  int refine_iterations = 0;
  double mean_inlier_error = 0.0;
  bool converged = true;
};

struct RansacOptions {
  int iterations = 10000;
  int sample_size = 3;
  double threshold = 0.05;
  std::uint64_t seed = 0;
  Matrix3 r_inv = 0.1 * Eigen::Vector3d(5.0, 5.0, 1.0).asDiagonal().toDenseMatrix();
  int refine_max_iters = 50;
  double refine_tol = 1e-6;
};

/// Closed-form velocity of the linearized constant-velocity model. Throws SingularNormalMatrix.
Twist fast_velocity_solve(std::span<const TrackletSegment> segments);
Twist fast_velocity_solve(std::span<const TrackletSegment> segments, std::span<const std::size_t> subset);

/// y_late - s(exp(dt * hat(velocity)) * p_early). Throws NonPositiveDepth.
Vector3 segment_error(const TrackletSegment& segment, const Twist& velocity, const StereoCameraModel& camera);

/// d(prediction)/d(velocity), so that segment_error(v + d) ~ segment_error(v) - H d.
Matrix36 segment_jacobian(const TrackletSegment& segment, const Twist& velocity, const StereoCameraModel& camera);

/// Reprojection error norm over the stereo track length; +inf if the
/// prediction falls behind the camera. Short segments are handled by classify().
double relative_error(const TrackletSegment& segment, const Twist& velocity, const StereoCameraModel& camera);

struct Partition {
  std::vector<std::size_t> inliers;
  std::vector<std::size_t> outliers;
  double mean_inlier_error = 0.0;
};

Partition classify(std::span<const TrackletSegment> segments, const Twist& velocity, const StereoCameraModel& camera,
                   double threshold);

/// Throws NoValidHypothesis when every sampled subset is singular.
RansacResult fast_mc_ransac(std::span<const TrackletSegment> segments, const StereoCameraModel& camera,
                            const RansacOptions& options);

/**
 * Gauss-Newton refinement of the velocity over `subset` (all segments when
 * empty), followed by classification of every segment. A result that hits
 * the iteration cap is returned with converged = false.
 */
RansacResult iterative_mc_ransac(std::span<const TrackletSegment> segments, const Twist& init,
                                 const StereoCameraModel& camera, const RansacOptions& options,
                                 std::span<const std::size_t> subset = {});

/// Fast stage followed by refinement on its inliers.
RansacResult mc_ransac(std::span<const TrackletSegment> segments, const StereoCameraModel& camera,
                       const RansacOptions& options);

}  // namespace ctevo
