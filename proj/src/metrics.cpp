#include "ctevo/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>

#include "ctevo/error.hpp"

namespace ctevo {

namespace {

double percent(double value, double path) {
  if (path > 0.0) return 100.0 * value / path;
  return value == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

AggregateRow aggregate_norms(const std::vector<double>& norms, double path) {
  AggregateRow row;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double v : norms) {
    row.max = std::max(row.max, v);
    sum += v;
    sum_sq += v * v;
  }
  const auto n = static_cast<double>(norms.size());
  const double mean = sum / n;
  row.rms = std::sqrt(sum_sq / n);
  double var = 0.0;
  for (double v : norms) var += (v - mean) * (v - mean);
  row.stdev = std::sqrt(var / n);
  row.max_pct = percent(row.max, path);
  row.final_pct = percent(norms.back(), path);
  return row;
}

void write_row(std::ostream& out, const char* metric, const char* component, const AggregateRow& r) {
  out << metric << '\t' << component << '\t' << r.max << '\t' << r.max_pct << '\t' << r.final_pct << '\t' << r.rms
      << '\t' << r.stdev << '\n';
}

}  // namespace

Twist pose_error(const Pose& est_nm, const Pose& gt_nm, const Pose& align) {
  const Pose aligned = align * est_nm * align.inverse();
  if (aligned.rotation() == gt_nm.rotation() && aligned.translation() == gt_nm.translation()) return Twist::Zero();
  return log_map(aligned * gt_nm.inverse());
}

Pose relative_pose(const PoseQuery& traj, double t_n, double t_m) {
  return traj.pose_at(t_n) * traj.pose_at(t_m).inverse();
}

Twist global_error(const PoseQuery& est, const PoseQuery& gt, std::span<const double> times, std::size_t k,
                   const Pose& align) {
  return pose_error(relative_pose(est, times[k], times[0]), relative_pose(gt, times[k], times[0]), align);
}

Twist relative_error(const PoseQuery& est, const PoseQuery& gt, std::span<const double> times, std::size_t k,
                     const Pose& align) {
  if (k == 0) throw Error(ErrorCode::InvalidArgument, "relative error needs a previous time");
  return pose_error(relative_pose(est, times[k], times[k - 1]), relative_pose(gt, times[k], times[k - 1]), align);
}

std::vector<ErrorSample> evaluate_errors(const PoseQuery& est, const PoseQuery& gt, std::span<const double> times,
                                         const Pose& align) {
  std::vector<ErrorSample> out;
  out.reserve(times.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    ErrorSample s;
    s.t = times[k];
    s.global = global_error(est, gt, times, k, align);
    if (k > 0) {
      s.relative = relative_error(est, gt, times, k, align);
      s.has_relative = true;
    }
    out.push_back(s);
  }
  return out;
}

PathLength path_length(const PoseQuery& gt, std::span<const double> times) {
  PathLength p;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const Twist xi = log_map(relative_pose(gt, times[k], times[k - 1]));
    p.translation += linear(xi).norm();
    p.rotation += angular(xi).norm();
    p.se3 += xi.norm();
  }
  return p;
}

ErrorTable aggregate(std::span<const Twist> samples, const PathLength& path) {
  if (samples.empty()) throw Error(ErrorCode::EmptyReport, "no error samples to aggregate");
  std::vector<double> tran;
  std::vector<double> rota;
  std::vector<double> full;
  for (const Twist& s : samples) {
    tran.push_back(linear(s).norm());
    rota.push_back(angular(s).norm());
    full.push_back(s.norm());
  }
  return ErrorTable{aggregate_norms(tran, path.translation), aggregate_norms(rota, path.rotation),
                    aggregate_norms(full, path.se3)};
}

ErrorReport make_report(const PoseQuery& est, const PoseQuery& gt, std::span<const double> times, const Pose& align) {
  if (times.empty()) throw Error(ErrorCode::EmptyReport, "no evaluation times");
  ErrorReport r;
  r.samples = evaluate_errors(est, gt, times, align);
  r.path = path_length(gt, times);
  std::vector<Twist> ge;
  std::vector<Twist> re;
  for (const auto& s : r.samples) {
    ge.push_back(s.global);
    if (s.has_relative) re.push_back(s.relative);
  }
  r.global = aggregate(ge, r.path);
  r.relative = re.empty() ? ErrorTable{} : aggregate(re, r.path);
  return r;
}

void write_table(std::ostream& out, const ErrorReport& r) {
  out << "metric\tcomponent\tmax\tmax_pct\tfinal_pct\trms\tstdev\n";
  write_row(out, "GE", "tran", r.global.translation);
  write_row(out, "GE", "rota", r.global.rotation);
  write_row(out, "GE", "SE3", r.global.se3);
  write_row(out, "RE", "tran", r.relative.translation);
  write_row(out, "RE", "rota", r.relative.rotation);
  write_row(out, "RE", "SE3", r.relative.se3);
}

void write_table_file(const std::string& path, const ErrorReport& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write metrics table " + path);
  out.precision(10);
  write_table(out, report);
}

void write_errors_csv(std::ostream& out, const ErrorReport& report) {
  out << "t,ge_rho1,ge_rho2,ge_rho3,ge_phi1,ge_phi2,ge_phi3,re_rho1,re_rho2,re_rho3,re_phi1,re_phi2,re_phi3\n";
  for (const auto& s : report.samples) {
    out << s.t;
    for (int i = 0; i < 6; ++i) out << ',' << s.global(i);
    for (int i = 0; i < 6; ++i) out << ',' << s.relative(i);
    out << '\n';
  }
}

void write_errors_csv_file(const std::string& path, const ErrorReport& report) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write error CSV " + path);
  out.precision(17);
  write_errors_csv(out, report);
}

}  // namespace ctevo
