#include <doctest.h>

#include <numbers>

#include "ctevo/error.hpp"
#include "test_support.hpp"

using namespace ctevo;
using namespace ctevo::testing;

TEST_CASE("hat and skew layout") {
  CHECK(hat(Twist::Zero()).isZero(0.0));

  const Matrix4 H = hat(make_twist(Vector3(1, 2, 3), Vector3::Zero()));
  CHECK(H.topRightCorner<3, 1>() == Vector3(1, 2, 3));
  CHECK(H.topLeftCorner<3, 3>().isZero(0.0));
  CHECK(H.row(3).isZero(0.0));

  Matrix3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  CHECK(hat(make_twist(Vector3::Zero(), Vector3(0, 0, 1))).topLeftCorner<3, 3>() == expected);
  CHECK(vee(hat(make_twist(Vector3(1, 2, 3), Vector3(4, 5, 6)))) == make_twist(Vector3(1, 2, 3), Vector3(4, 5, 6)));
}

TEST_CASE("exp_map closed cases") {
  const Pose I = exp_map(Twist::Zero());
  CHECK(I.rotation() == Matrix3::Identity());
  CHECK(I.translation().isZero(0.0));

  const Pose T = exp_map(make_twist(Vector3(1, 2, 3), Vector3::Zero()));
  CHECK(T.rotation().isIdentity(1e-15));
  CHECK((T.translation() - Vector3(1, 2, 3)).norm() < 1e-15);

  const Pose Rz = exp_map(make_twist(Vector3::Zero(), Vector3(0, 0, std::numbers::pi / 2)));
  Matrix3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((Rz.rotation() - expected).norm() < 1e-15);
  CHECK(Rz.translation().norm() < 1e-15);
}

TEST_CASE("exp_map agrees with the Pade matrix exponential") {
  for (int i = 0; i < 200; ++i) {
    const Twist xi = random_twist(i < 100 ? 1.0 : 1e-5);
    CHECK((exp_map(xi).matrix() - expm_pose(xi).matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }
  const Twist xi = make_twist(Vector3(0.3, -0.2, 0.1), Vector3(1.0, 1.5, -1.2));
  CHECK((exp_map(xi).matrix() - expm_pose(xi).matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log_map inverts exp_map") {
  CHECK(log_map(Pose::identity()).isZero(0.0));
  const Twist t = log_map(Pose(Matrix3::Identity(), Vector3(1, 2, 3)));
  CHECK((t - make_twist(Vector3(1, 2, 3), Vector3::Zero())).norm() < 1e-15);

  for (int i = 0; i < 1000; ++i) {
    const Twist xi = random_twist(1.0);
    CHECK((log_map(exp_map(xi)) - xi).cwiseAbs().maxCoeff() < 1e-9);
  }
  // Larger angles, still on the principal branch.
  for (int i = 0; i < 200; ++i) {
    Twist xi = random_twist(1.0);
    xi.tail<3>() = xi.tail<3>().normalized() * uniform(2.0, 3.0);
    CHECK((log_map(exp_map(xi)) - xi).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((log_map(exp_map(xi)) - logm_pose(exp_map(xi))).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("log_map rejects a rotation of pi") {
  const Pose T = exp_map(make_twist(Vector3(0.1, 0, 0), Vector3(0, std::numbers::pi, 0)));
  CHECK_THROWS_AS(log_map(T), Error);
  try {
    log_map(T);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::AmbiguousBranch);
  }
}

TEST_CASE("composition and inverse") {
  for (int i = 0; i < 100; ++i) {
    const Twist xi = random_twist(1.0);
    const Pose P = exp_map(xi) * exp_map(-xi);
    CHECK((P.matrix() - Matrix4::Identity()).norm() < 1e-9);
    const Pose T = random_pose();
    CHECK(((T * T.inverse()).matrix() - Matrix4::Identity()).norm() < 1e-12);
    CHECK(T.is_valid());
  }
}

TEST_CASE("adjoint") {
  CHECK(adjoint(Pose::identity()) == Matrix6::Identity());

  const Matrix3 R = exp_map(make_twist(Vector3::Zero(), Vector3(0.3, -0.1, 0.5))).rotation();
  const Matrix6 A = adjoint(Pose(R, Vector3::Zero()));
  CHECK((A.topLeftCorner<3, 3>() - R).norm() < 1e-15);
  CHECK((A.bottomRightCorner<3, 3>() - R).norm() < 1e-15);
  CHECK(A.topRightCorner<3, 3>().isZero(0.0));
  CHECK(A.bottomLeftCorner<3, 3>().isZero(0.0));

  for (int i = 0; i < 100; ++i) {
    const Pose T = random_pose();
    const Twist xi = random_twist();
    const Twist lhs = adjoint(T) * xi;
    const Twist rhs = vee(T.matrix() * hat(xi) * T.inverse().matrix());
    CHECK((lhs - rhs).norm() < 1e-12);

    const Pose T2 = random_pose();
    CHECK((adjoint(T * T2) - adjoint(T) * adjoint(T2)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("curlyhat") {
  CHECK(curlyhat(Twist::Zero()).isZero(0.0));
  for (int i = 0; i < 100; ++i) {
    const Twist w = random_twist(2.0);
    CHECK((curlyhat(w) * w).norm() < 1e-14);
    const Matrix6 series = curlyhat(w).exp();
    CHECK((adjoint(exp_map(w)) - series).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("odot") {
  const Matrix46 O = odot(HomogeneousPoint(0, 0, 0, 1));
  CHECK(O.topLeftCorner<3, 3>() == Matrix3::Identity());
  CHECK(O.topRightCorner<3, 3>().isZero(0.0));
  CHECK(O.row(3).isZero(0.0));

  const Vector3 eps(0, 0, 1);
  const Matrix46 Oe = odot(homogeneous(eps));
  CHECK(Oe.topRightCorner<3, 3>() == -skew(eps));

  for (int i = 0; i < 100; ++i) {
    const HomogeneousPoint p = homogeneous(random_vector<3>(5.0));
    const Twist xi = random_twist();
    CHECK((hat(xi) * p - odot(p) * xi).norm() < 1e-12);
  }
}

TEST_CASE("transform_point") {
  const HomogeneousPoint p(0.3, -0.2, 2.0, 1.0);
  CHECK(transform_point(Pose::identity(), p) == p);
  CHECK((transform_point(Pose(Matrix3::Identity(), Vector3(1, 0, 0)), HomogeneousPoint(0, 0, 1, 1)) -
         HomogeneousPoint(1, 0, 1, 1))
            .norm() < 1e-15);
  const Pose Rz = exp_map(make_twist(Vector3::Zero(), Vector3(0, 0, std::numbers::pi / 2)));
  const HomogeneousPoint q = transform_point(Rz, HomogeneousPoint(1, 0, 0, 1));
  CHECK((q - HomogeneousPoint(0, 1, 0, 1)).norm() < 1e-15);
  CHECK(q(3) == 1.0);
}

namespace {

// J(xi) = integral over a in [0,1] of Ad(exp(a xi)), by composite Simpson on the Pade exponential.
Matrix6 integrated_left_jacobian(const Twist& xi) {
  constexpr int n = 400;
  Matrix6 sum = Matrix6::Zero();
  for (int i = 0; i <= n; ++i) {
    const double a = static_cast<double>(i) / n;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    sum += w * (a * curlyhat(xi)).exp();
  }
  return sum / (3.0 * n);
}

}  // namespace

TEST_CASE("left Jacobian") {
  CHECK((left_jacobian(Twist::Zero()) - Matrix6::Identity()).norm() < 1e-15);
  CHECK((left_jacobian_inv(Twist::Zero()) - Matrix6::Identity()).norm() < 1e-15);

  for (int i = 0; i < 100; ++i) {
    const double scale = i < 50 ? 1.0 : (i < 75 ? 1e-3 : 1e-6);
    const Twist xi = random_twist(scale);
    const Matrix6 J = left_jacobian(xi);
    CHECK((J * xi - xi).norm() < 1e-12);
    CHECK((J * left_jacobian_inv(xi) - Matrix6::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((J - integrated_left_jacobian(xi)).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("left Jacobian matches finite differences of the exponential") {
  for (int i = 0; i < 50; ++i) {
    const Twist xi = random_twist(1.0);
    const Pose T = exp_map(xi);
    auto f = [&](const Twist& x) -> Twist { return log_map(exp_map(x) * T.inverse()); };
    const Matrix6 num = numeric_jacobian<6, 6>(f, xi);
    CHECK(relative_difference(num, left_jacobian(xi)) < 1e-5);
  }
}

TEST_CASE("left Jacobian is continuous across the series switch") {
  const Vector3 axis = Vector3(0.3, -0.5, 0.8).normalized();
  for (double angle : {1e-5, 9.9e-5, 1e-4, 1.01e-4, 1e-3, 9.9e-3, 1e-2, 1.01e-2}) {
    const Twist xi = make_twist(Vector3(0.4, -0.1, 0.2), angle * axis);
    CHECK((left_jacobian(xi) - integrated_left_jacobian(xi)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((exp_map(xi).matrix() - expm_pose(xi).matrix()).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("derivative of the inverse left Jacobian product") {
  for (int i = 0; i < 50; ++i) {
    const Twist xi = random_twist(0.8);
    const Twist w = random_twist(1.0);
    auto f = [&](const Twist& x) -> Twist { return left_jacobian_inv(x) * w; };
    const Matrix6 num = numeric_jacobian<6, 6>(f, xi);
    CHECK(relative_difference(num, left_jacobian_inv_product_derivative(xi, w)) < 1e-6);
  }
}
