#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctevo/se3.hpp"
#include "ctevo/wnoa.hpp"

namespace ctevo {

/// Anything that can report the world-to-camera pose T_{t,w} at a time.
class PoseQuery {
 public:
  virtual ~PoseQuery() = default;
  virtual Pose pose_at(double t) const = 0;
  virtual double start_time() const = 0;
  virtual double end_time() const = 0;
  bool covers(double t) const { return t >= start_time() && t <= end_time(); }
};

struct InterpolatedState {
  Pose pose;
  Twist velocity = Twist::Zero();
};

/**
 * Knots (T_{k,w}, body velocity, time) joined by WNOA Gaussian-process
 * interpolation. Between knots m and n the local state
 *
 *   gamma(tau) = [log(T(tau) T_m^-1); d/dt log(T(tau) T_m^-1)]
 *
 * is Lambda(tau) gamma_m + Omega(tau) gamma_n.
 */
class ContinuousTrajectory final : public PoseQuery {
 public:
  ContinuousTrajectory() = default;
  /// Throws InvalidArgument unless knot times strictly increase.
  explicit ContinuousTrajectory(std::vector<TrajectoryState> knots, WnoaPrior prior = default_prior());

  const std::vector<TrajectoryState>& knots() const { return knots_; }
  const WnoaPrior& prior() const { return prior_; }

  /// Throws OutOfWindow outside [t_1, t_K].
  InterpolatedState query(double tau) const;
  Pose pose_at(double tau) const override { return query(tau).pose; }

  /// Constant-velocity propagation from the nearest end knot when tau lies outside.
  Pose extrapolate(double tau) const;

  double start_time() const override;
  double end_time() const override;

 private:
  std::vector<TrajectoryState> knots_;
  WnoaPrior prior_;
};

/// Interpolation weights (Lambda, Omega) per 6x6 block, as 2x2 scalar matrices.
struct InterpolationWeights {
  Eigen::Matrix2d lambda;
  Eigen::Matrix2d omega;
};
InterpolationWeights interpolation_weights(double t_m, double t_n, double tau);

/**
 * Time-stamped poses with linear interpolation: camera positions linearly,
 * rotations along the geodesic between neighbours. Exact at samples.
 */
class SampledTrajectory final : public PoseQuery {
 public:
  SampledTrajectory() = default;
  /// Poses are T_{k,w}; times must strictly increase.
  SampledTrajectory(std::vector<double> times, std::vector<Pose> poses);

  const std::vector<double>& times() const { return times_; }
  const std::vector<Pose>& poses() const { return poses_; }
  std::size_t size() const { return times_.size(); }

  /// Throws OutOfWindow outside the sampled range.
  Pose pose_at(double t) const override;
  double start_time() const override;
  double end_time() const override;

 private:
  std::vector<double> times_;
  std::vector<Pose> poses_;
};

/**
 * TUM lines `t tx ty tz qx qy qz qw` give the camera pose in the world
 * (T_{w,k}); in memory poses are stored as T_{k,w}.
 */
SampledTrajectory read_tum(std::istream& in);
SampledTrajectory read_tum_file(const std::string& path);
void write_tum(std::ostream& out, std::span<const double> times, std::span<const Pose> poses_kw);
void write_tum_file(const std::string& path, std::span<const double> times, std::span<const Pose> poses_kw);

/// One time per line; blank lines and '#' comments ignored.
std::vector<double> read_times(std::istream& in);
std::vector<double> read_times_file(const std::string& path);
void write_times_file(const std::string& path, std::span<const double> times);

}  // namespace ctevo
