#include "ctevo/se3.hpp"

#include <cmath>
#include <numbers>

#include "ctevo/error.hpp"

namespace ctevo {

namespace {

// Below this angle the Rodrigues-type coefficients switch to Taylor series.
constexpr double kSmallAngle = 1e-4;
// Below this angle Q(xi) is taken from the curlyhat power series.
constexpr double kSeriesAngle = 1e-2;
constexpr int kSeriesTerms = 10;
constexpr double kBranchEps = 1e-6;

struct RodriguesCoefficients {
  double a;  // sin(t)/t
  double b;  // (1 - cos(t))/t^2
  double c;  // (t - sin(t))/t^3
};

RodriguesCoefficients rodrigues(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) {
    return {1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0};
  }
  const double s = std::sin(theta);
  const double half = std::sin(0.5 * theta);
  return {s / theta, 2.0 * half * half / t2, (theta - s) / (t2 * theta)};
}

// (1 - a / (2b)) / t^2, the W^2 coefficient of the inverse SO(3) Jacobian.
double inverse_jacobian_coefficient(double theta) {
  const double t2 = theta * theta;
  if (theta < kSmallAngle) return 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  const auto k = rodrigues(theta);
  return (1.0 - k.a / (2.0 * k.b)) / t2;
}

Matrix3 se3_q_matrix(const Vector3& rho, const Vector3& phi) {
  const double theta = phi.norm();
  const Matrix3 rx = skew(rho);
  const Matrix3 px = skew(phi);
  const Matrix3 pr = px * rx;
  const Matrix3 rp = rx * px;
  const Matrix3 prp = pr * px;
  const double t2 = theta * theta;
  const double t3 = t2 * theta;
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  const double c1 = (theta - s) / t3;
  const double c2 = (t2 + 2.0 * c - 2.0) / (2.0 * t2 * t2);
  const double c3 = (2.0 * theta - 3.0 * s + theta * c) / (2.0 * t2 * t3);
  return 0.5 * rx + c1 * (pr + rp + prp) + c2 * (px * pr + rp * px - 3.0 * prp) + c3 * (prp * px + px * prp);
}

Matrix6 left_jacobian_series(const Twist& xi) {
  const Matrix6 X = curlyhat(xi);
  Matrix6 term = Matrix6::Identity();
  Matrix6 sum = Matrix6::Identity();
  double factorial = 1.0;
  for (int n = 1; n < kSeriesTerms; ++n) {
    term = term * X;
    factorial *= static_cast<double>(n + 1);
    sum += term / factorial;
  }
  return sum;
}

}  // namespace

Matrix4 Pose::matrix() const {
  Matrix4 m = Matrix4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::inverse() const {
  const Matrix3 rt = rotation_.transpose();
  return Pose(rt, -rt * translation_);
}

HomogeneousPoint Pose::operator*(const HomogeneousPoint& p) const {
  HomogeneousPoint out;
  out.head<3>() = rotation_ * p.head<3>() + translation_ * p(3);
  out(3) = p(3);
  return out;
}

bool Pose::is_valid(double tol) const {
  if (!rotation_.allFinite() || !translation_.allFinite()) return false;
  const double ortho = (rotation_.transpose() * rotation_ - Matrix3::Identity()).cwiseAbs().maxCoeff();
  return ortho < tol && std::abs(rotation_.determinant() - 1.0) < tol;
}

Matrix3 skew(const Vector3& a) {
  Matrix3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return m;
}

Vector3 vee3(const Matrix3& m) { return Vector3(m(2, 1), m(0, 2), m(1, 0)); }

Matrix4 hat(const Twist& xi) {
  Matrix4 m = Matrix4::Zero();
  m.topLeftCorner<3, 3>() = skew(angular(xi));
  m.topRightCorner<3, 1>() = linear(xi);
  return m;
}

Twist vee(const Matrix4& m) {
  return make_twist(m.topRightCorner<3, 1>(), vee3(m.topLeftCorner<3, 3>()));
}

Matrix3 so3_exp(const Vector3& phi) {
  const auto k = rodrigues(phi.norm());
  const Matrix3 W = skew(phi);
  return Matrix3::Identity() + k.a * W + k.b * W * W;
}

Matrix3 so3_left_jacobian(const Vector3& phi) {
  const auto k = rodrigues(phi.norm());
  const Matrix3 W = skew(phi);
  return Matrix3::Identity() + k.b * W + k.c * W * W;
}

Matrix3 so3_left_jacobian_inv(const Vector3& phi) {
  const Matrix3 W = skew(phi);
  return Matrix3::Identity() - 0.5 * W + inverse_jacobian_coefficient(phi.norm()) * W * W;
}

Vector3 so3_log(const Matrix3& R) {
  const Vector3 axis2 = vee3(R - R.transpose());  // 2 sin(t) a
  const double s = 0.5 * axis2.norm();
  const double c = 0.5 * (R.trace() - 1.0);
  const double theta = std::atan2(s, c);
  if (std::numbers::pi - theta < kBranchEps) {
    throw Error(ErrorCode::AmbiguousBranch, "rotation angle is pi; logarithm branch is ambiguous");
  }
  if (theta < kSmallAngle) {
    const double t2 = theta * theta;
    return 0.5 * (1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0) * axis2;
  }
  return theta / (2.0 * std::sin(theta)) * axis2;
}

Pose exp_map(const Twist& xi) {
  const Vector3 phi = angular(xi);
  const auto k = rodrigues(phi.norm());
  const Matrix3 W = skew(phi);
  const Matrix3 W2 = W * W;
  const Matrix3 R = Matrix3::Identity() + k.a * W + k.b * W2;
  const Matrix3 V = Matrix3::Identity() + k.b * W + k.c * W2;
  return Pose(R, V * linear(xi));
}

Twist log_map(const Pose& T) {
  const Vector3 phi = so3_log(T.rotation());
  return make_twist(so3_left_jacobian_inv(phi) * T.translation(), phi);
}

Matrix6 adjoint(const Pose& T) {
  Matrix6 ad = Matrix6::Zero();
  const Matrix3& R = T.rotation();
  ad.topLeftCorner<3, 3>() = R;
  ad.topRightCorner<3, 3>() = skew(T.translation()) * R;
  ad.bottomRightCorner<3, 3>() = R;
  return ad;
}

Matrix6 curlyhat(const Twist& xi) {
  Matrix6 m = Matrix6::Zero();
  const Matrix3 w = skew(angular(xi));
  m.topLeftCorner<3, 3>() = w;
  m.topRightCorner<3, 3>() = skew(linear(xi));
  m.bottomRightCorner<3, 3>() = w;
  return m;
}

Matrix46 odot(const HomogeneousPoint& p) {
  Matrix46 m = Matrix46::Zero();
  m.topLeftCorner<3, 3>() = p(3) * Matrix3::Identity();
  m.topRightCorner<3, 3>() = -skew(p.head<3>());
  return m;
}

Matrix6 left_jacobian(const Twist& xi) {
  const Vector3 phi = angular(xi);
  if (phi.norm() < kSeriesAngle) return left_jacobian_series(xi);
  Matrix6 J = Matrix6::Zero();
  const Matrix3 Js = so3_left_jacobian(phi);
  J.topLeftCorner<3, 3>() = Js;
  J.bottomRightCorner<3, 3>() = Js;
  J.topRightCorner<3, 3>() = se3_q_matrix(linear(xi), phi);
  return J;
}

Matrix6 left_jacobian_inv(const Twist& xi) {
  const Vector3 phi = angular(xi);
  Matrix3 Q;
  if (phi.norm() < kSeriesAngle) {
    Q = left_jacobian_series(xi).topRightCorner<3, 3>();
  } else {
    Q = se3_q_matrix(linear(xi), phi);
  }
  const Matrix3 Ji = so3_left_jacobian_inv(phi);
  Matrix6 out = Matrix6::Zero();
  out.topLeftCorner<3, 3>() = Ji;
  out.bottomRightCorner<3, 3>() = Ji;
  out.topRightCorner<3, 3>() = -Ji * Q * Ji;
  return out;
}

Matrix6 left_jacobian_inv_product_derivative(const Twist& xi, const Twist& w) {
  // J^{-1}(xi) = sum_n B_n/n! X^n with X = curlyhat(xi). Differentiating
  // X^n w in xi gives -sum_i X^i curlyhat(X^{n-1-i} w).
  static constexpr int kTerms = 17;
  static constexpr double kBernoulli[kTerms] = {
      1.0, -0.5, 1.0 / 6.0, 0.0, -1.0 / 30.0, 0.0, 1.0 / 42.0, 0.0, -1.0 / 30.0,
      0.0, 5.0 / 66.0, 0.0, -691.0 / 2730.0, 0.0, 7.0 / 6.0, 0.0, -3617.0 / 510.0};

  const Matrix6 X = curlyhat(xi);
  Matrix6 powers[kTerms];
  Twist moved[kTerms];  // X^m w
  powers[0] = Matrix6::Identity();
  moved[0] = w;
  for (int m = 1; m < kTerms; ++m) {
    powers[m] = powers[m - 1] * X;
    moved[m] = X * moved[m - 1];
  }

  Matrix6 D = Matrix6::Zero();
  double factorial = 1.0;
  for (int n = 1; n < kTerms; ++n) {
    factorial *= static_cast<double>(n);
    if (kBernoulli[n] == 0.0) continue;
    Matrix6 inner = Matrix6::Zero();
    for (int i = 0; i < n; ++i) inner += powers[i] * curlyhat(moved[n - 1 - i]);
    D -= (kBernoulli[n] / factorial) * inner;
  }
  return D;
}

}  // namespace ctevo
