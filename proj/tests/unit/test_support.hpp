#pragma once

#include <Eigen/Dense>
#include <optional>
#include <random>
#include <unsupported/Eigen/MatrixFunctions>

#include "ctevo/error.hpp"
#include "ctevo/se3.hpp"
#include "ctevo/stereo_camera.hpp"

namespace ctevo::testing {

/// Code of the ctevo::Error thrown by fn, or nullopt when nothing is thrown.
template <typename F>
std::optional<ErrorCode> code_of(F&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline std::mt19937_64& rng() {
  static std::mt19937_64 gen(12345);
  return gen;
}

inline double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng()); }

template <int N>
Eigen::Matrix<double, N, 1> random_vector(double scale) {
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = uniform(-scale, scale);
  return v;
}

inline Twist random_twist(double scale = 1.0) { return random_vector<6>(scale); }

inline Pose random_pose(double scale = 1.0) { return exp_map(random_twist(scale)); }

/// Matrix exponential of hat(xi) computed by Eigen's Padé scaling-and-squaring.
inline Pose expm_pose(const Twist& xi) { return Pose::from_matrix(hat(xi).exp()); }

inline Twist logm_pose(const Pose& T) {
  const Matrix4 L = T.matrix().log();
  return vee(L);
}

/// Central-difference Jacobian of f: R^N -> R^M.
template <int M, int N, typename F>
Eigen::Matrix<double, M, N> numeric_jacobian(F&& f, const Eigen::Matrix<double, N, 1>& x, double eps = 1e-6) {
  Eigen::Matrix<double, M, N> J;
  for (int i = 0; i < N; ++i) {
    Eigen::Matrix<double, N, 1> dp = x;
    Eigen::Matrix<double, N, 1> dm = x;
    dp(i) += eps;
    dm(i) -= eps;
    J.col(i) = (f(dp) - f(dm)) / (2.0 * eps);
  }
  return J;
}

inline double relative_difference(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

inline StereoCameraModel test_camera() { return StereoCameraModel(226.0, 226.0, 173.0, 130.0, 0.1, 346, 260); }

inline HomogeneousPoint random_point_in_front(double zmin = 1.0, double zmax = 5.0) {
  const double z = uniform(zmin, zmax);
  return HomogeneousPoint(uniform(-0.5, 0.5) * z, uniform(-0.4, 0.4) * z, z, 1.0);
}

}  // namespace ctevo::testing
