#include "ctevo/mc_ransac.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "ctevo/error.hpp"

namespace ctevo {

namespace {

constexpr double kMaxCondition = 1e12;
constexpr double kShortSegment = 1e-6;
constexpr double kShortSegmentPx = 1.0;
constexpr int kMaxHalvings = 8;

struct Score {
  bool inlier = false;
  double value = 0.0;
};

Score score_segment(const TrackletSegment& s, const Twist& v, const StereoCameraModel& camera, double threshold) {
  const double length = (s.y_late.coords() - s.y_early.coords()).norm();
  Vector3 e;
  try {
    e = segment_error(s, v, camera);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NonPositiveDepth) throw;
    return {false, std::numeric_limits<double>::infinity()};
  }
  if (length < kShortSegment) {
    const double abs_err = e.norm();
    return {abs_err <= kShortSegmentPx, abs_err};
  }
  const double rel = e.norm() / length;
  return {rel <= threshold, rel};
}

double refinement_cost(std::span<const TrackletSegment> segments, std::span<const std::size_t> subset,
                       const Twist& v, const StereoCameraModel& camera, const Matrix3& r_inv) {
  double cost = 0.0;
  for (std::size_t i : subset) {
    const Vector3 e = segment_error(segments[i], v, camera);
    cost += 0.5 * e.dot(r_inv * e);
  }
  return cost;
}

}  // namespace

TrackletSegment make_segment(const StereoMeasurement& early, const StereoMeasurement& late,
                             const StereoCameraModel& camera) {
  TrackletSegment s;
  s.y_early = early;
  s.y_late = late;
  s.dt = late.time - early.time;
  if (!(s.dt > 0.0)) throw Error(ErrorCode::NonPositiveDt, "segment endpoints must be time ordered");
  s.p_early = camera.triangulate(early.coords());
  s.p_late = camera.triangulate(late.coords());
  return s;
}

std::vector<TrackletSegment> make_segments(std::span<const FeatureTracklet> tracklets,
                                           const StereoCameraModel& camera) {
  std::vector<TrackletSegment> out;
  out.reserve(tracklets.size());
  for (std::size_t i = 0; i < tracklets.size(); ++i) {
    const auto& obs = tracklets[i].observations;
    if (obs.size() < 2) continue;
    StereoMeasurement early = obs.front().y;
    StereoMeasurement late = obs.back().y;
    early.time = obs.front().t;
    late.time = obs.back().t;
    try {
      TrackletSegment s = make_segment(early, late, camera);
      s.tracklet = i;
      out.push_back(s);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDisparity && e.code() != ErrorCode::NonPositiveDt) throw;
    }
  }
  return out;
}

Twist fast_velocity_solve(std::span<const TrackletSegment> segments, std::span<const std::size_t> subset) {
  if (subset.size() < 2) throw Error(ErrorCode::SingularNormalMatrix, "need at least two segments");
  Matrix6 A = Matrix6::Zero();
  Vector6 b = Vector6::Zero();
  for (std::size_t i : subset) {
    const TrackletSegment& s = segments[i];
    const Eigen::Matrix<double, 3, 6> D = odot(s.p_early).topRows<3>();
    const Vector3 d = (s.p_late - s.p_early).head<3>();
    A.noalias() += s.dt * s.dt * D.transpose() * D;
    b.noalias() += s.dt * D.transpose() * d;
  }
  Eigen::SelfAdjointEigenSolver<Matrix6> eig(A, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues()(0);
  const double hi = eig.eigenvalues()(5);
  if (!(lo > 0.0) || hi / lo >= kMaxCondition) {
    throw Error(ErrorCode::SingularNormalMatrix, "segment geometry does not constrain all six velocity components");
  }
  return A.ldlt().solve(b);
}

Twist fast_velocity_solve(std::span<const TrackletSegment> segments) {
  std::vector<std::size_t> all(segments.size());
  std::iota(all.begin(), all.end(), 0);
  return fast_velocity_solve(segments, all);
}

Vector3 segment_error(const TrackletSegment& s, const Twist& v, const StereoCameraModel& camera) {
  const Pose T = exp_map(s.dt * v);
  return s.y_late.coords() - camera.project(T * s.p_early);
}

Matrix36 segment_jacobian(const TrackletSegment& s, const Twist& v, const StereoCameraModel& camera) {
  const Twist xi = s.dt * v;
  const Pose T = exp_map(xi);
  const HomogeneousPoint z = T * s.p_early;
  const Matrix46 z_odot = odot(z);
  return camera.projection_jacobian(z) * z_odot * (s.dt * left_jacobian(xi));
}

double relative_error(const TrackletSegment& s, const Twist& v, const StereoCameraModel& camera) {
  const double length = (s.y_late.coords() - s.y_early.coords()).norm();
  try {
    return segment_error(s, v, camera).norm() / length;
  } catch (const Error& err) {
    if (err.code() != ErrorCode::NonPositiveDepth) throw;
    return std::numeric_limits<double>::infinity();
  }
}

Partition classify(std::span<const TrackletSegment> segments, const Twist& velocity, const StereoCameraModel& camera,
                   double threshold) {
  if (!(threshold > 0.0)) throw Error(ErrorCode::InvalidArgument, "inlier threshold must be positive");
  Partition p;
  double sum = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const Score s = score_segment(segments[i], velocity, camera, threshold);
    if (s.inlier) {
      p.inliers.push_back(i);
      sum += s.value;
    } else {
      p.outliers.push_back(i);
    }
  }
  p.mean_inlier_error = p.inliers.empty() ? 0.0 : sum / static_cast<double>(p.inliers.size());
  return p;
}

RansacResult fast_mc_ransac(std::span<const TrackletSegment> segments, const StereoCameraModel& camera,
                            const RansacOptions& options) {
  if (options.iterations < 1) throw Error(ErrorCode::InvalidArgument, "RANSAC needs at least one iteration");
  if (options.sample_size < 2) throw Error(ErrorCode::InvalidArgument, "RANSAC sample size must be at least 2");
  const std::size_t n = segments.size();
  const auto k = static_cast<std::size_t>(options.sample_size);
  if (n < k) throw Error(ErrorCode::NoValidHypothesis, "fewer segments than the sample size");

  std::mt19937_64 rng(options.seed);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  std::vector<std::size_t> sample(k);

  bool have_best = false;
  RansacResult best;
  int it = 0;
  while (it < options.iterations) {
    ++it;
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(pool[i], pool[pick(rng)]);
      sample[i] = pool[i];
    }
    Twist v;
    try {
      v = fast_velocity_solve(segments, sample);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SingularNormalMatrix) throw;
      continue;
    }
    Partition p = classify(segments, v, camera, options.threshold);
    const bool better = !have_best || p.inliers.size() > best.inliers.size() ||
                        (p.inliers.size() == best.inliers.size() && p.mean_inlier_error < best.mean_inlier_error);
    if (better) {
      have_best = true;
      best.velocity = v;
      best.inliers = std::move(p.inliers);
      best.outliers = std::move(p.outliers);
      best.mean_inlier_error = p.mean_inlier_error;
    }
    if (have_best && best.outliers.empty()) break;
  }
  if (!have_best) throw Error(ErrorCode::NoValidHypothesis, "every sampled segment subset was degenerate");
  best.iterations_used = it;
  return best;
}

RansacResult iterative_mc_ransac(std::span<const TrackletSegment> segments, const Twist& init,
                                 const StereoCameraModel& camera, const RansacOptions& options,
                                 std::span<const std::size_t> subset) {
  std::vector<std::size_t> all;
  if (subset.empty()) {
    all.resize(segments.size());
    std::iota(all.begin(), all.end(), 0);
    subset = all;
  }

  Twist v = init;
  double cost = refinement_cost(segments, subset, v, camera, options.r_inv);
  bool converged = false;
  int it = 0;
  for (; it < options.refine_max_iters; ++it) {
    if (cost <= 0.0) {
      converged = true;
      break;
    }
    Matrix6 A = Matrix6::Zero();
    Vector6 b = Vector6::Zero();
    for (std::size_t i : subset) {
      const Matrix36 H = segment_jacobian(segments[i], v, camera);
      const Vector3 e = segment_error(segments[i], v, camera);
      A.noalias() += H.transpose() * options.r_inv * H;
      b.noalias() += H.transpose() * options.r_inv * e;
    }
    Eigen::LDLT<Matrix6> ldlt(A);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.vectorD().minCoeff() <= 0.0) {
      throw Error(ErrorCode::SingularNormalMatrix, "refinement normal matrix is singular");
    }
    const Twist delta = ldlt.solve(b);

    double step = 1.0;
    bool accepted = false;
    double trial_cost = cost;
    for (int h = 0; h <= kMaxHalvings; ++h, step *= 0.5) {
      try {
        trial_cost = refinement_cost(segments, subset, v + step * delta, camera, options.r_inv);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NonPositiveDepth) throw;
        continue;
      }
      if (trial_cost <= cost) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      converged = true;
      break;
    }
    v += step * delta;
    const double change = std::abs(cost - trial_cost) / cost;
    cost = trial_cost;
    if (change < options.refine_tol) {
      converged = true;
      ++it;
      break;
    }
  }

  Partition p = classify(segments, v, camera, options.threshold);
  RansacResult out;
  out.velocity = v;
  out.inliers = std::move(p.inliers);
  out.outliers = std::move(p.outliers);
  out.mean_inlier_error = p.mean_inlier_error;
  out.refine_iterations = it;
  out.converged = converged;
  return out;
}

RansacResult mc_ransac(std::span<const TrackletSegment> segments, const StereoCameraModel& camera,
                       const RansacOptions& options) {
  const RansacResult fast = fast_mc_ransac(segments, camera, options);
  RansacResult refined = iterative_mc_ransac(segments, fast.velocity, camera, options, fast.inliers);
  refined.iterations_used = fast.iterations_used;
  return refined;
}

}  // namespace ctevo
