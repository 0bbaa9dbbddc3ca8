#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace ctevo {

using Vector3 = Eigen::Vector3d;
using Vector4 = Eigen::Vector4d;
using Vector6 = Eigen::Matrix<double, 6, 1>;
using Matrix3 = Eigen::Matrix3d;
using Matrix4 = Eigen::Matrix4d;
using Matrix6 = Eigen::Matrix<double, 6, 6>;
using Matrix46 = Eigen::Matrix<double, 4, 6>;

/**
 * se(3) tangent vector, translational part first:
 *
 *   xi = [v; omega]
 *
 * Used both for pose vectors (m, rad) and body-centric velocities
 * (m/s, rad/s).
 */
using Twist = Vector6;

/// Homogeneous point [x y z 1]^T.
using HomogeneousPoint = Vector4;

inline Vector3 linear(const Twist& xi) { return xi.head<3>(); }
inline Vector3 angular(const Twist& xi) { return xi.tail<3>(); }
inline Twist make_twist(const Vector3& v, const Vector3& omega) {
  Twist xi;
  xi << v, omega;
  return xi;
}

inline HomogeneousPoint homogeneous(const Vector3& p) { return HomogeneousPoint(p.x(), p.y(), p.z(), 1.0); }

/// Fixed 3x4 selector P mapping homogeneous to Euclidean coordinates.
inline Vector3 euclidean(const HomogeneousPoint& p) { return p.head<3>(); }

/**
 * Rigid transform in SE(3) stored as rotation + translation.
 *
 * A Pose T_ab maps points expressed in frame b into frame a.
 */
class Pose {
 public:
  Pose() : rotation_(Matrix3::Identity()), translation_(Vector3::Zero()) {}
  Pose(const Matrix3& rotation, const Vector3& translation) : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return Pose(); }
  static Pose from_matrix(const Matrix4& m) { return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()); }
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Vector3& t) {
    return Pose(q.normalized().toRotationMatrix(), t);
  }

  const Matrix3& rotation() const { return rotation_; }
  const Vector3& translation() const { return translation_; }
  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation_).normalized(); }

  Matrix4 matrix() const;
  Pose inverse() const;

  Pose operator*(const Pose& rhs) const {
    return Pose(rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_);
  }
  HomogeneousPoint operator*(const HomogeneousPoint& p) const;
  Vector3 operator*(const Vector3& p) const { return rotation_ * p + translation_; }

  /// Orthonormality and determinant check within `tol`.
  bool is_valid(double tol = 1e-9) const;

 private:
  Matrix3 rotation_;
  Vector3 translation_;
};

Matrix3 skew(const Vector3& a);
Vector3 vee3(const Matrix3& m);

/// Lifting operator (.)^: R^6 -> 4x4.
Matrix4 hat(const Twist& xi);
/// Inverse of hat for a 4x4 se(3) matrix.
Twist vee(const Matrix4& m);

Pose exp_map(const Twist& xi);

/// Principal-branch logarithm. Throws Error(AmbiguousBranch) when the
/// rotation angle is within 1e-6 rad of pi.
Twist log_map(const Pose& T);

/// 6x6 adjoint [[R, t^R], [0, R]].
Matrix6 adjoint(const Pose& T);

/// (.)^curlywedge: [[omega^, v^], [0, omega^]].
Matrix6 curlyhat(const Twist& xi);

/// (.)^odot for p = [eps; eta]: [[eta*I, -eps^], [0, 0]], so that hat(xi)*p == odot(p)*xi.
Matrix46 odot(const HomogeneousPoint& p);

/// Left Jacobian of SE(3) and its inverse.
Matrix6 left_jacobian(const Twist& xi);
Matrix6 left_jacobian_inv(const Twist& xi);

/**
 * Derivative of J(xi)^{-1} * w with respect to xi, evaluated from the
 * Bernoulli series of the inverse left Jacobian. The leading term is
 * 0.5 * curlyhat(w).
 */
Matrix6 left_jacobian_inv_product_derivative(const Twist& xi, const Twist& w);

inline HomogeneousPoint transform_point(const Pose& T, const HomogeneousPoint& p) { return T * p; }

// SO(3) pieces shared with interpolation code.
Matrix3 so3_exp(const Vector3& phi);
Vector3 so3_log(const Matrix3& R);
Matrix3 so3_left_jacobian(const Vector3& phi);
Matrix3 so3_left_jacobian_inv(const Vector3& phi);

}  // namespace ctevo
