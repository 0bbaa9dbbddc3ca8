#pragma once

#include <Eigen/Core>

#include "ctevo/se3.hpp"

namespace ctevo {

using Matrix34 = Eigen::Matrix<double, 3, 4>;

/// Stereo pixel measurement y = (u_left, v_left, u_right).
struct StereoMeasurement {
  double u_left = 0.0;
  double v_left = 0.0;
  double u_right = 0.0;
  double time = 0.0;

  Vector3 coords() const { return Vector3(u_left, v_left, u_right); }
  double disparity() const { return u_left - u_right; }

  static StereoMeasurement from_coords(const Vector3& y, double time = 0.0) {
    return StereoMeasurement{y.x(), y.y(), y.z(), time};
  }
};

/**
 * Rectified stereo pinhole pair with identical intrinsics. The right
 * camera sits `baseline` metres along +x of the left camera; v is shared.
 */
class StereoCameraModel {
 public:
  static constexpr double kMinDepth = 0.05;
  static constexpr double kMinDisparity = 0.1;

  StereoCameraModel() = default;
  /// Throws Error(InvalidArgument) when the intrinsics violate their invariants.
  StereoCameraModel(double fu, double fv, double cu, double cv, double baseline, int width, int height);

  double fu() const { return fu_; }
  double fv() const { return fv_; }
  double cu() const { return cu_; }
  double cv() const { return cv_; }
  double baseline() const { return baseline_; }
  int width() const { return width_; }
  int height() const { return height_; }

  /// s(p): (fu x/z + cu, fv y/z + cv, fu (x-b)/z + cu). Throws NonPositiveDepth.
  Vector3 project(const HomogeneousPoint& p_cam, double min_depth = kMinDepth) const;

  /// Inverse of project. Throws DegenerateDisparity when u_l - u_r <= min_disparity.
  HomogeneousPoint triangulate(const Vector3& y, double min_disparity = kMinDisparity) const;

  /// d s / d p in homogeneous coordinates (fourth column zero).
  Matrix34 projection_jacobian(const HomogeneousPoint& p_cam, double min_depth = kMinDepth) const;

  bool in_image(const Vector3& y) const;

 private:
  double fu_ = 1.0;
  double fv_ = 1.0;
  double cu_ = 0.0;
  double cv_ = 0.0;
  double baseline_ = 1.0;
  int width_ = 1;
  int height_ = 1;
};

}  // namespace ctevo
