#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "ctevo/sliding_window.hpp"
#include "ctevo/synth.hpp"
#include "ctevo/wnoa.hpp"
#include "test_support.hpp"

using namespace ctevo;
using namespace ctevo::testing;

namespace {

const Twist kVarpi = (Twist() << 0.4, -0.1, 0.3, 0.1, 0.3, -0.05).finished();

struct WindowFixture {
  SyntheticScene scene;
  std::vector<FeatureTracklet> tracklets;
};

WindowFixture constant_velocity_window(int n_landmarks, double duration, double noise = 0.0, std::uint64_t seed = 1) {
  SceneOptions o;
  o.n_landmarks = n_landmarks;
  o.noise_sigma = noise;
  o.seed = seed;
  o.depth_max = 4.0;
  o.motion.varpi = kVarpi;
  o.duration = duration;
  WindowFixture f;
  f.scene = generate_scene(o);
  f.tracklets = render_tracklets(f.scene).tracklets;
  return f;
}

// Knot poses relative to the first knot of the window, from the scene motion.
std::vector<Pose> true_relative_poses(const SyntheticScene& scene, const EstimationWindow& w) {
  const Pose first = scene.motion.pose_at(w.states.front().t);
  std::vector<Pose> out;
  for (const auto& s : w.states) out.push_back(scene.motion.pose_at(s.t) * first.inverse());
  return out;
}

double max_pose_error(const std::vector<Pose>& a, const std::vector<Pose>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, log_map(a[i] * b[i].inverse()).norm());
  return worst;
}

TrajectoryState state(const Pose& T, const Twist& v, double t) { return TrajectoryState{T, v, t}; }

EstimationWindow toy_window() {
  WindowFixture f = constant_velocity_window(6, 0.06);
  EstimationWindow w = initialize_window(f.tracklets, kVarpi, f.scene.camera, Matrix3::Identity());
  return w;
}

}  // namespace

TEST_CASE("prior error vanishes on constant velocity") {
  for (int i = 0; i < 50; ++i) {
    const Twist v = random_twist(1.0);
    const Pose T = random_pose(1.0);
    const double dt = uniform(0.001, 0.5);
    const Vector12 e = prior_error(state(T, v, 0.0), state(exp_map(dt * v) * T, v, dt));
    CHECK(e.norm() < 1e-12);
  }
  CHECK(prior_error(state(Pose(), Twist::Zero(), 0.0), state(Pose(), Twist::Zero(), 1.0)).norm() == 0.0);
}

TEST_CASE("prior Jacobian matches finite differences") {
  for (int i = 0; i < 100; ++i) {
    const Twist v = random_twist(0.8);
    const double dt = uniform(0.01, 0.3);
    const TrajectoryState k = state(random_pose(1.0), v, 0.0);
    const TrajectoryState k1 = state(exp_map(dt * v + random_twist(0.05)) * k.T_k1, v + random_twist(0.1), dt);
    auto err = [&](const Eigen::Matrix<double, 24, 1>& d) -> Vector12 {
      TrajectoryState a = k, b = k1;
      a.T_k1 = exp_map(d.segment<6>(0)) * a.T_k1;
      a.varpi += d.segment<6>(6);
      b.T_k1 = exp_map(d.segment<6>(12)) * b.T_k1;
      b.varpi += d.segment<6>(18);
      return prior_error(a, b);
    };
    const Eigen::Matrix<double, 12, 24> num = -numeric_jacobian<12, 24>(err, Eigen::Matrix<double, 24, 1>::Zero());
    CHECK(relative_difference(prior_jacobian(k, k1), num) < 1e-5);
  }
}

TEST_CASE("prior covariance blocks") {
  WnoaPrior unit;
  const Matrix12 q1 = prior_covariance(unit, 1.0);
  CHECK((q1.topLeftCorner<6, 6>() - Matrix6::Identity() / 3.0).norm() < 1e-15);
  CHECK((q1.topRightCorner<6, 6>() - Matrix6::Identity() / 2.0).norm() < 1e-15);
  CHECK((q1.bottomLeftCorner<6, 6>() - Matrix6::Identity() / 2.0).norm() < 1e-15);
  CHECK((q1.bottomRightCorner<6, 6>() - Matrix6::Identity()).norm() < 1e-15);

  const Matrix12 q2 = prior_covariance(unit, 2.0);
  CHECK((q2.topLeftCorner<6, 6>() - Matrix6::Identity() * 8.0 / 3.0).norm() < 1e-14);
  CHECK((q2.topRightCorner<6, 6>() - 2.0 * Matrix6::Identity()).norm() < 1e-14);
  CHECK((q2.bottomRightCorner<6, 6>() - 2.0 * Matrix6::Identity()).norm() < 1e-14);

  CHECK(code_of([&] { prior_covariance(unit, 0.0); }) == ErrorCode::NonPositiveDt);
  CHECK(code_of([&] { prior_covariance(unit, -1.0); }) == ErrorCode::NonPositiveDt);

  const WnoaPrior defaults = default_prior();
  for (double dt = 1e-4; dt <= 10.0 + 1e-9; dt *= 10.0) {
    const Matrix12 q = prior_covariance(defaults, dt);
    CHECK(Eigen::LLT<Matrix12>(q).info() == Eigen::Success);
    const Matrix12 qi = prior_information(defaults, dt);
    CHECK((q * qi - Matrix12::Identity()).norm() < 1e-8);
  }
}

TEST_CASE("measurement error of a shifted landmark") {
  const StereoCameraModel toy(100.0, 100.0, 50.0, 50.0, 0.1, 100, 100);
  const TrajectoryState s = state(Pose(), Twist::Zero(), 0.0);
  const Vector3 y = toy.project(HomogeneousPoint(0, 0, 1, 1));
  CHECK(measurement_error(s, HomogeneousPoint(0, 0, 1, 1), y, toy).norm() == 0.0);
  const Vector3 e = measurement_error(s, HomogeneousPoint(0.01, 0, 1, 1), y, toy);
  CHECK((e - Vector3(-1, 0, -1)).norm() < 1e-12);
  CHECK(code_of([&] { measurement_error(s, HomogeneousPoint(0, 0, -1, 1), y, toy); }) == ErrorCode::NonPositiveDepth);
}

TEST_CASE("measurement Jacobian matches finite differences") {
  const StereoCameraModel cam = test_camera();
  for (int i = 0; i < 100; ++i) {
    const TrajectoryState s = state(random_pose(0.2), Twist::Zero(), 0.0);
    const HomogeneousPoint p = s.T_k1.inverse() * random_point_in_front(1.0, 6.0);
    const Vector3 y = Vector3::Zero();
    auto err = [&](const Eigen::Matrix<double, 9, 1>& d) -> Vector3 {
      TrajectoryState t = s;
      t.T_k1 = exp_map(d.head<6>()) * t.T_k1;
      HomogeneousPoint q = p;
      q.head<3>() += d.tail<3>();
      return measurement_error(t, q, y, cam);
    };
    const Eigen::Matrix<double, 3, 9> num = -numeric_jacobian<3, 9>(err, Eigen::Matrix<double, 9, 1>::Zero());
    const MeasurementJacobian G = measurement_jacobian(s, p, cam);
    CHECK(relative_difference(G.pose, num.leftCols<6>()) < 1e-5);
    CHECK(relative_difference(G.landmark, num.rightCols<3>()) < 1e-5);
  }
}

TEST_CASE("initialize_window creates one knot per unique time") {
  const StereoCameraModel cam = test_camera();
  auto observe = [&](const HomogeneousPoint& p, double t) {
    FeatureObservation o;
    o.t = t;
    o.t_right = t;
    o.y = StereoMeasurement::from_coords(cam.project(p), t);
    return o;
  };
  const HomogeneousPoint a(0.1, 0.0, 2.0, 1.0), b(-0.2, 0.1, 3.0, 1.0), c(0.0, -0.1, 1.5, 1.0);
  FeatureTracklet ta, tb, tc;
  ta.id = 0, tb.id = 1, tc.id = 2;
  ta.observations = {observe(a, 0.00), observe(a, 0.03), observe(a, 0.06)};
  tb.observations = {observe(b, 0.01), observe(b, 0.04)};
  tc.observations = {observe(c, 0.02), observe(c, 0.05)};
  const std::vector<FeatureTracklet> seven = {ta, tb, tc};
  const EstimationWindow w = initialize_window(seven, Twist::Zero(), cam, Matrix3::Identity());
  CHECK(w.knot_count() == 7);
  CHECK(w.landmarks.size() == 3);
  CHECK(w.observations.size() == 7);
  for (const auto& s : w.states) CHECK(s.T_k1.matrix() == Pose().matrix());
  for (std::size_t k = 1; k < w.states.size(); ++k) CHECK(w.states[k].t > w.states[k - 1].t);

  tc.observations[0] = observe(c, 0.01);
  const std::vector<FeatureTracklet> shared = {ta, tb, tc};
  const EstimationWindow w2 = initialize_window(shared, kVarpi, cam, Matrix3::Identity());
  CHECK(w2.knot_count() == 6);
  for (const auto& s : w2.states) {
    const Pose expected = exp_map((s.t - w2.states.front().t) * kVarpi);
    CHECK(log_map(s.T_k1 * expected.inverse()).norm() < 1e-12);
    CHECK(s.varpi == kVarpi);
  }

  CHECK(code_of([&] { initialize_window(std::vector<FeatureTracklet>{}, kVarpi, cam, Matrix3::Identity()); }) ==
        ErrorCode::EmptyTrackletSet);
}

TEST_CASE("normal equations on a toy window") {
  EstimationWindow w = toy_window();
  const StereoCameraModel cam = test_camera();
  const WnoaPrior prior = default_prior();
  REQUIRE(w.knot_count() >= 3);

  const NormalEquations at_truth = build_normal_equations(w, prior, cam);
  const Eigen::MatrixXd A(at_truth.A);
  CHECK(at_truth.b.norm() < 1e-15 * A.norm());
  CHECK(at_truth.cost < 1e-16);

  CHECK(A.rows() == static_cast<Eigen::Index>(w.dimension()));
  CHECK((A - A.transpose()).norm() < 1e-12 * A.norm());
  const Eigen::VectorXd eig = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(A).eigenvalues();
  CHECK(eig.minCoeff() > 0.0);
  CHECK(Eigen::LLT<Eigen::MatrixXd>(A).info() == Eigen::Success);
}

TEST_CASE("quadratic model is exact to second order") {
  const StereoCameraModel cam = test_camera();
  const WnoaPrior prior = default_prior();
  const EstimationWindow w = toy_window();
  const NormalEquations ne = build_normal_equations(w, prior, cam);
  const Eigen::VectorXd dir = Eigen::VectorXd::Random(w.dimension()).normalized();

  auto remainder = [&](const EstimationWindow& at, const NormalEquations& n, double h, bool second_order) {
    const Eigen::VectorXd d = h * dir;
    const double exact = window_cost(apply_update(at, d), prior, cam);
    double model = n.cost - n.b.dot(d);
    if (second_order) model += 0.5 * d.dot(n.A * d);
    return std::abs(exact - model);
  };

  // At the zero-residual optimum the Gauss-Newton model is the full Taylor expansion.
  const double r1 = remainder(w, ne, 1e-3, true);
  const double r2 = remainder(w, ne, 5e-4, true);
  CHECK(r1 / r2 > 6.0);
  CHECK(r1 / r2 < 10.0);

  // Away from it, b is the exact gradient.
  Eigen::VectorXd kick = 1e-3 * Eigen::VectorXd::Random(w.dimension());
  const EstimationWindow off = apply_update(w, kick);
  const NormalEquations ne_off = build_normal_equations(off, prior, cam);
  const double g1 = remainder(off, ne_off, 1e-4, false);
  const double g2 = remainder(off, ne_off, 5e-5, false);
  CHECK(g1 / g2 > 3.5);
  CHECK(g1 / g2 < 4.5);
}

TEST_CASE("Gauss-Newton from ground truth stays there") {
  WindowFixture f = constant_velocity_window(30, 0.1);
  EstimationWindow w = initialize_window(f.tracklets, kVarpi, f.scene.camera, default_measurement_information());
  const SolveReport r = gauss_newton_solve(w, default_prior(), f.scene.camera);
  CHECK(r.iterations <= 1);
  CHECK(r.final_cost < 1e-16);
  std::vector<Pose> est;
  for (const auto& s : w.states) est.push_back(s.T_k1);
  CHECK(max_pose_error(est, true_relative_poses(f.scene, w)) < 1e-9);
}

TEST_CASE("Gauss-Newton recovers from a perturbed velocity") {
  WindowFixture f = constant_velocity_window(40, 0.1);
  for (int trial = 0; trial < 5; ++trial) {
    const Twist init = kVarpi + random_twist(1.0).normalized() * 0.1;
    EstimationWindow w = initialize_window(f.tracklets, init, f.scene.camera, default_measurement_information());
    const SolveReport r = gauss_newton_solve(w, default_prior(), f.scene.camera);
    std::vector<Pose> est;
    for (const auto& s : w.states) est.push_back(s.T_k1);
    CHECK(max_pose_error(est, true_relative_poses(f.scene, w)) < 1e-6);
    for (std::size_t i = 1; i < r.costs.size(); ++i) CHECK(r.costs[i] <= r.costs[i - 1]);
  }
}

TEST_CASE("cost decreases monotonically on noisy data") {
  WindowFixture f = constant_velocity_window(40, 0.1, 1.0, 4);
  EstimationWindow w =
      initialize_window(f.tracklets, kVarpi + random_twist(0.05), f.scene.camera, default_measurement_information());
  const SolveReport r = gauss_newton_solve(w, default_prior(), f.scene.camera);
  REQUIRE(r.costs.size() >= 2);
  for (std::size_t i = 1; i < r.costs.size(); ++i) CHECK(r.costs[i] <= r.costs[i - 1]);
  CHECK(r.final_cost < r.initial_cost);
}

TEST_CASE("solution is invariant to the gauge placement") {
  WindowFixture f = constant_velocity_window(30, 0.1, 1.0, 9);
  SolverOptions tight;
  tight.convergence_tol = 1e-12;
  tight.max_iters = 30;
  const EstimationWindow init =
      initialize_window(f.tracklets, kVarpi, f.scene.camera, default_measurement_information());

  EstimationWindow a = init;
  gauss_newton_solve(a, default_prior(), f.scene.camera, tight);

  const Pose G = random_pose(0.5);
  EstimationWindow b = init;
  for (auto& s : b.states) s.T_k1 = s.T_k1 * G;
  for (auto& p : b.landmarks) p = G.inverse() * p;
  gauss_newton_solve(b, default_prior(), f.scene.camera, tight);

  double worst = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    const Pose rel_b = b.states[k].T_k1 * b.states.front().T_k1.inverse();
    worst = std::max(worst, log_map(a.states[k].T_k1 * rel_b.inverse()).norm());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("joint scaling of the information matrices keeps the argmin") {
  WindowFixture f = constant_velocity_window(30, 0.1, 1.0, 12);
  SolverOptions tight;
  tight.convergence_tol = 1e-12;
  tight.max_iters = 30;
  EstimationWindow a = initialize_window(f.tracklets, kVarpi, f.scene.camera, Matrix3::Identity());
  EstimationWindow b = initialize_window(f.tracklets, kVarpi, f.scene.camera, 2.0 * Matrix3::Identity());
  const WnoaPrior p = default_prior();
  const WnoaPrior p2 = WnoaPrior::from_inverse(2.0 * p.qc_inv_diag());
  gauss_newton_solve(a, p, f.scene.camera, tight);
  gauss_newton_solve(b, p2, f.scene.camera, tight);
  double worst = 0.0;
  for (std::size_t k = 0; k < a.states.size(); ++k)
    worst = std::max(worst, log_map(a.states[k].T_k1 * b.states[k].T_k1.inverse()).norm());
  CHECK(worst < 1e-8);
}

TEST_CASE("sliding windows agree with a single batch on noiseless data") {
  WindowFixture f = constant_velocity_window(40, 0.25);
  REQUIRE(f.scene.cluster_count() == 10);
  EstimatorOptions opt;
  opt.ransac.iterations = 200;

  const auto windows = window_tracklets_by_cluster(f.tracklets, 5);
  CHECK(windows.size() == 6);
  const SlidingWindowOutput slid = slide_window(windows, f.scene.camera, opt);
  for (const auto& d : slid.diagnostics) CHECK(d.ok);

  const auto single = window_tracklets_by_cluster(f.tracklets, 10);
  CHECK(single.size() == 1);
  const SlidingWindowOutput batch = slide_window(single, f.scene.camera, opt);
  REQUIRE(batch.knots.size() >= slid.knots.size());

  const ContinuousTrajectory batch_traj(batch.knots);
  double worst = 0.0;
  for (std::size_t k = 1; k < slid.knots.size(); ++k) CHECK(slid.knots[k].t > slid.knots[k - 1].t);
  for (const auto& s : slid.knots) {
    const Pose b = batch_traj.pose_at(s.t);
    worst = std::max(worst, log_map(s.T_k1 * b.inverse()).norm());
  }
  CHECK(worst < 1e-6);
}
