#include "ctevo/stereo_camera.hpp"

#include <cmath>
#include <sstream>

#include "ctevo/error.hpp"

namespace ctevo {

StereoCameraModel::StereoCameraModel(double fu, double fv, double cu, double cv, double baseline, int width,
                                     int height)
    : fu_(fu), fv_(fv), cu_(cu), cv_(cv), baseline_(baseline), width_(width), height_(height) {
  if (!(fu > 0.0) || !(fv > 0.0) || !(baseline > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths and baseline must be positive");
  }
  if (width <= 0 || height <= 0 || !(cu >= 0.0 && cu < width) || !(cv >= 0.0 && cv < height)) {
    throw Error(ErrorCode::InvalidArgument, "principal point must lie inside the sensor");
  }
}

Vector3 StereoCameraModel::project(const HomogeneousPoint& p, double min_depth) const {
  const double z = p.z();
  if (!(z > min_depth)) {
    std::ostringstream os;
    os << "point depth " << z << " m is not above " << min_depth << " m";
    throw Error(ErrorCode::NonPositiveDepth, os.str());
  }
  const double inv_z = 1.0 / z;
  return Vector3(fu_ * p.x() * inv_z + cu_, fv_ * p.y() * inv_z + cv_, fu_ * (p.x() - baseline_) * inv_z + cu_);
}

HomogeneousPoint StereoCameraModel::triangulate(const Vector3& y, double min_disparity) const {
  const double d = y.x() - y.z();
  if (!(d > min_disparity)) {
    std::ostringstream os;
    os << "disparity " << d << " px is not above " << min_disparity << " px";
    throw Error(ErrorCode::DegenerateDisparity, os.str());
  }
  const double z = fu_ * baseline_ / d;
  return HomogeneousPoint((y.x() - cu_) * z / fu_, (y.y() - cv_) * z / fv_, z, 1.0);
}

Matrix34 StereoCameraModel::projection_jacobian(const HomogeneousPoint& p, double min_depth) const {
  const double z = p.z();
  if (!(z > min_depth)) {
    throw Error(ErrorCode::NonPositiveDepth, "projection Jacobian requested behind the camera");
  }
  const double iz = 1.0 / z;
  const double iz2 = iz * iz;
  Matrix34 J = Matrix34::Zero();
  J(0, 0) = fu_ * iz;
  J(0, 2) = -fu_ * p.x() * iz2;
  J(1, 1) = fv_ * iz;
  J(1, 2) = -fv_ * p.y() * iz2;
  J(2, 0) = fu_ * iz;
  J(2, 2) = -fu_ * (p.x() - baseline_) * iz2;
  return J;
}

bool StereoCameraModel::in_image(const Vector3& y) const {
  const auto inside = [&](double u, double v) { return u >= 0.0 && v >= 0.0 && u <= width_ - 1 && v <= height_ - 1; };
  return inside(y.x(), y.y()) && inside(y.z(), y.y());
}

}  // namespace ctevo
