#include <doctest.h>

#include "test_support.hpp"

using namespace ctevo;
using namespace ctevo::testing;

namespace {

const StereoCameraModel kToy(100.0, 100.0, 50.0, 50.0, 0.1, 100, 100);

}  // namespace

TEST_CASE("projection of hand-computed points") {
  CHECK((kToy.project(HomogeneousPoint(0, 0, 1, 1)) - Vector3(50, 50, 40)).norm() < 1e-12);
  CHECK((kToy.project(HomogeneousPoint(0.1, 0, 1, 1)) - Vector3(60, 50, 50)).norm() < 1e-12);
  CHECK(code_of([] { kToy.project(HomogeneousPoint(0, 0, 0.01, 1)); }) == ErrorCode::NonPositiveDepth);
  CHECK(code_of([] { kToy.project(HomogeneousPoint(0, 0, -1, 1)); }) == ErrorCode::NonPositiveDepth);
}

TEST_CASE("triangulation of hand-computed measurements") {
  CHECK((kToy.triangulate(Vector3(50, 50, 40)) - HomogeneousPoint(0, 0, 1, 1)).norm() < 1e-12);
  CHECK((kToy.triangulate(Vector3(60, 50, 50)) - HomogeneousPoint(0.1, 0, 1, 1)).norm() < 1e-12);
  CHECK(code_of([] { kToy.triangulate(Vector3(50, 50, 49.95)); }) == ErrorCode::DegenerateDisparity);
  CHECK(code_of([] { kToy.triangulate(Vector3(50, 50, 52)); }) == ErrorCode::DegenerateDisparity);
}

TEST_CASE("project and triangulate are mutual inverses") {
  const StereoCameraModel cam = test_camera();
  for (int i = 0; i < 1000; ++i) {
    const double z = uniform(0.5, 10.0);
    const HomogeneousPoint p(uniform(-1, 1) * z, uniform(-1, 1) * z, z, 1.0);
    CHECK((cam.triangulate(cam.project(p)) - p).norm() < 1e-9 * z);

    const Vector3 y(uniform(0, 346), uniform(0, 260), 0.0);
    const Vector3 y2(y.x(), y.y(), y.x() - uniform(0.5, 60.0));
    CHECK((cam.project(cam.triangulate(y2)) - y2).norm() < 1e-9);
  }
}

TEST_CASE("projection Jacobian") {
  const Matrix34 J0 = kToy.projection_jacobian(HomogeneousPoint(0, 0, 1, 1));
  CHECK(J0(0, 0) == doctest::Approx(100.0));
  CHECK(J0(0, 1) == 0.0);
  CHECK(J0.col(3).isZero(0.0));

  const StereoCameraModel cam = test_camera();
  for (int i = 0; i < 100; ++i) {
    const HomogeneousPoint p = random_point_in_front(0.5, 10.0);
    auto f = [&](const Vector4& q) -> Vector3 { return cam.project(q); };
    const Eigen::Matrix<double, 3, 4> num = numeric_jacobian<3, 4>(f, Vector4(p));
    const Matrix34 J = cam.projection_jacobian(p);
    CHECK(relative_difference(num.leftCols<3>(), J.leftCols<3>()) < 1e-5);
    CHECK(J.col(3).isZero(0.0));
  }
}

TEST_CASE("image bounds cover both cameras") {
  CHECK(kToy.in_image(Vector3(10, 0, 0)));
  CHECK(kToy.in_image(Vector3(99, 99, 90)));
  CHECK_FALSE(kToy.in_image(Vector3(99.5, 10, 90)));
  CHECK_FALSE(kToy.in_image(Vector3(10, -1, 5)));
  CHECK_FALSE(kToy.in_image(Vector3(5, 10, -0.5)));
}

TEST_CASE("model validation") {
  CHECK(code_of([] { StereoCameraModel(0.0, 1, 1, 1, 0.1, 10, 10); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { StereoCameraModel(1, 1, 1, 1, -0.1, 10, 10); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { StereoCameraModel(1, 1, 10, 1, 0.1, 10, 10); }) == ErrorCode::InvalidArgument);
}
