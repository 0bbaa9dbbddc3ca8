#include "ctevo/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "ctevo/error.hpp"

namespace ctevo {

namespace {

Eigen::Matrix2d gp_block(double dt) {
  Eigen::Matrix2d A;
  A << dt * dt * dt / 3.0, dt * dt / 2.0, dt * dt / 2.0, dt;
  return A;
}

Eigen::Matrix2d transition(double dt) {
  Eigen::Matrix2d P;
  P << 1.0, dt, 0.0, 1.0;
  return P;
}

void put_double(std::ostream& out, double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

[[noreturn]] void out_of_window(double t, double a, double b) {
  std::ostringstream os;
  os << "time " << t << " outside [" << a << ", " << b << "]";
  throw Error(ErrorCode::OutOfWindow, os.str());
}

}  // namespace

InterpolationWeights interpolation_weights(double t_m, double t_n, double tau) {
  const double dt = t_n - t_m;
  if (!(dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "interpolation interval must be positive");
  const double s = tau - t_m;
  InterpolationWeights w;
  w.omega = gp_block(s) * transition(t_n - tau).transpose() * gp_block(dt).inverse();
  w.lambda = transition(s) - w.omega * transition(dt);
  return w;
}

ContinuousTrajectory::ContinuousTrajectory(std::vector<TrajectoryState> knots, WnoaPrior prior)
    : knots_(std::move(knots)), prior_(prior) {
  if (knots_.empty()) throw Error(ErrorCode::InvalidArgument, "trajectory needs at least one knot");
  for (std::size_t k = 1; k < knots_.size(); ++k) {
    if (!(knots_[k].t > knots_[k - 1].t)) throw Error(ErrorCode::InvalidArgument, "knot times must increase");
  }
}

double ContinuousTrajectory::start_time() const { return knots_.front().t; }
double ContinuousTrajectory::end_time() const { return knots_.back().t; }

InterpolatedState ContinuousTrajectory::query(double tau) const {
  if (knots_.empty() || !covers(tau)) {
    out_of_window(tau, knots_.empty() ? 0.0 : start_time(), knots_.empty() ? 0.0 : end_time());
  }
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), tau,
                                   [](double t, const TrajectoryState& s) { return t < s.t; });
  const std::size_t m = static_cast<std::size_t>(it - knots_.begin()) - 1;
  const TrajectoryState& km = knots_[m];
  if (tau == km.t) return {km.T_k1, km.varpi};
  const TrajectoryState& kn = knots_[m + 1];

  const Twist xi_n = log_map(kn.T_k1 * km.T_k1.inverse());
  const Twist dxi_n = left_jacobian_inv(xi_n) * kn.varpi;
  const InterpolationWeights w = interpolation_weights(km.t, kn.t, tau);
  const Twist xi = w.lambda(0, 1) * km.varpi + w.omega(0, 0) * xi_n + w.omega(0, 1) * dxi_n;
  const Twist dxi = w.lambda(1, 1) * km.varpi + w.omega(1, 0) * xi_n + w.omega(1, 1) * dxi_n;
  return {exp_map(xi) * km.T_k1, left_jacobian(xi) * dxi};
}

Pose ContinuousTrajectory::extrapolate(double tau) const {
  if (knots_.empty()) throw Error(ErrorCode::OutOfWindow, "empty trajectory");
  if (tau < start_time()) return exp_map((tau - knots_.front().t) * knots_.front().varpi) * knots_.front().T_k1;
  if (tau > end_time()) return exp_map((tau - knots_.back().t) * knots_.back().varpi) * knots_.back().T_k1;
  return pose_at(tau);
}

SampledTrajectory::SampledTrajectory(std::vector<double> times, std::vector<Pose> poses)
    : times_(std::move(times)), poses_(std::move(poses)) {
  if (times_.size() != poses_.size()) throw Error(ErrorCode::InvalidArgument, "times and poses differ in length");
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1])) throw Error(ErrorCode::NonMonotonicTime, "trajectory times must increase");
  }
}

double SampledTrajectory::start_time() const { return times_.empty() ? 0.0 : times_.front(); }
double SampledTrajectory::end_time() const { return times_.empty() ? 0.0 : times_.back(); }

Pose SampledTrajectory::pose_at(double t) const {
  if (times_.empty() || !covers(t)) out_of_window(t, start_time(), end_time());
  const auto it = std::lower_bound(times_.begin(), times_.end(), t);
  const auto i = static_cast<std::size_t>(it - times_.begin());
  if (times_[i] == t) return poses_[i];

  const Pose Wa = poses_[i - 1].inverse();
  const Pose Wb = poses_[i].inverse();
  const double a = (t - times_[i - 1]) / (times_[i] - times_[i - 1]);
  const Vector3 c = (1.0 - a) * Wa.translation() + a * Wb.translation();
  const Matrix3 R = Wa.rotation() * so3_exp(a * so3_log(Wa.rotation().transpose() * Wb.rotation()));
  return Pose(R, c).inverse();
}

SampledTrajectory read_tum(std::istream& in) {
  std::vector<double> times;
  std::vector<Pose> poses;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first.front() == '#') continue;
    double v[8];
    bool ok = true;
    {
      std::istringstream fs(first);
      ok = static_cast<bool>(fs >> v[0]);
    }
    for (int i = 1; i < 8 && ok; ++i) ok = static_cast<bool>(ls >> v[i]);
    std::string extra;
    if (!ok || (ls >> extra)) {
      std::ostringstream os;
      os << "line " << line_no << ": expected `t tx ty tz qx qy qz qw`";
      throw Error(ErrorCode::ParseError, os.str());
    }
    const Eigen::Quaterniond q(v[7], v[4], v[5], v[6]);
    if (!(q.norm() > 0.5)) {
      std::ostringstream os;
      os << "line " << line_no << ": quaternion is not unit length";
      throw Error(ErrorCode::ParseError, os.str());
    }
    if (!times.empty() && !(v[0] > times.back())) {
      std::ostringstream os;
      os << "line " << line_no << ": time " << v[0] << " does not increase";
      throw Error(ErrorCode::NonMonotonicTime, os.str());
    }
    times.push_back(v[0]);
    poses.push_back(Pose::from_quaternion(q, Vector3(v[1], v[2], v[3])).inverse());
  }
  return SampledTrajectory(std::move(times), std::move(poses));
}

SampledTrajectory read_tum_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open trajectory file " + path);
  return read_tum(in);
}

void write_tum(std::ostream& out, std::span<const double> times, std::span<const Pose> poses_kw) {
  if (times.size() != poses_kw.size()) throw Error(ErrorCode::InvalidArgument, "times and poses differ in length");
  for (std::size_t i = 0; i < times.size(); ++i) {
    const Pose W = poses_kw[i].inverse();
    const Eigen::Quaterniond q = W.quaternion();
    const double vals[8] = {times[i], W.translation().x(), W.translation().y(), W.translation().z(),
                            q.x(), q.y(), q.z(), q.w()};
    for (int k = 0; k < 8; ++k) {
      if (k) out << ' ';
      put_double(out, vals[k]);
    }
    out << '\n';
  }
}

void write_tum_file(const std::string& path, std::span<const double> times, std::span<const Pose> poses_kw) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write trajectory file " + path);
  out << "# t tx ty tz qx qy qz qw\n";
  write_tum(out, times, poses_kw);
}

std::vector<double> read_times(std::istream& in) {
  std::vector<double> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string tok;
    if (!(ls >> tok) || tok.front() == '#') continue;
    double t = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), t);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      std::ostringstream os;
      os << "line " << line_no << ": bad time `" << tok << "`";
      throw Error(ErrorCode::ParseError, os.str());
    }
    out.push_back(t);
  }
  return out;
}

std::vector<double> read_times_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open times file " + path);
  return read_times(in);
}

void write_times_file(const std::string& path, std::span<const double> times) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write times file " + path);
  for (double t : times) {
    put_double(out, t);
    out << '\n';
  }
}

}  // namespace ctevo
