#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctevo/se3.hpp"
#include "ctevo/trajectory.hpp"

namespace ctevo {

/// log(A * T_est_nm * A^-1 * T_gt_nm^-1).
Twist pose_error(const Pose& est_nm, const Pose& gt_nm, const Pose& align = Pose::identity());

struct ErrorSample {
  double t = 0.0;
  /// Error of the pose relative to the first evaluation time.
  Twist global = Twist::Zero();
  /// Error of the pose relative to the previous evaluation time; unset for the first sample.
  Twist relative = Twist::Zero();
  bool has_relative = false;
};

/// T_{n,w} T_{m,w}^{-1} read from a trajectory.
Pose relative_pose(const PoseQuery& traj, double t_n, double t_m);

Twist global_error(const PoseQuery& est, const PoseQuery& gt, std::span<const double> times, std::size_t k,
                   const Pose& align = Pose::identity());
Twist relative_error(const PoseQuery& est, const PoseQuery& gt, std::span<const double> times, std::size_t k,
                     const Pose& align = Pose::identity());

/// GE and RE at every evaluation time. Throws OutOfWindow if a time is not covered.
std::vector<ErrorSample> evaluate_errors(const PoseQuery& est, const PoseQuery& gt, std::span<const double> times,
                                         const Pose& align = Pose::identity());

/// Integrated ground-truth motion between consecutive evaluation times.
struct PathLength {
  double translation = 0.0;
  double rotation = 0.0;
  double se3 = 0.0;
};
PathLength path_length(const PoseQuery& gt, std::span<const double> times);

struct AggregateRow {
  double max = 0.0;
  double max_pct = 0.0;
  double final_pct = 0.0;
  double rms = 0.0;
  double stdev = 0.0;
};

struct ErrorTable {
  AggregateRow translation;
  AggregateRow rotation;
  AggregateRow se3;
};

/// Max, Max %, Final %, RMS and population St. Dev. of the sample norms. Throws EmptyReport.
ErrorTable aggregate(std::span<const Twist> samples, const PathLength& path);

struct ErrorReport {
  std::vector<ErrorSample> samples;
  PathLength path;
  ErrorTable global;
  ErrorTable relative;
};

ErrorReport make_report(const PoseQuery& est, const PoseQuery& gt, std::span<const double> times,
                        const Pose& align = Pose::identity());

/// Tab-separated table: one row per (GE|RE, tran|rota|SE3).
void write_table(std::ostream& out, const ErrorReport& report);
void write_table_file(const std::string& path, const ErrorReport& report);
/// Per-sample CSV: t, GE 6-vector, RE 6-vector.
void write_errors_csv(std::ostream& out, const ErrorReport& report);
void write_errors_csv_file(const std::string& path, const ErrorReport& report);

}  // namespace ctevo
