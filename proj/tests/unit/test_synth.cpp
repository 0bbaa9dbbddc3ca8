#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "ctevo/synth.hpp"
#include "test_support.hpp"

using namespace ctevo;
using namespace ctevo::testing;

namespace {

SceneOptions scene_with(int n, double duration, double noise, double outliers, std::uint64_t seed) {
  SceneOptions o;
  o.n_landmarks = n;
  o.duration = duration;
  o.noise_sigma = noise;
  o.outlier_fraction = outliers;
  o.seed = seed;
  o.motion.varpi << 0.3, 0.0, 0.2, 0.0, 0.2, 0.05;
  return o;
}

// Residuals of every observation under the ground-truth motion.
std::vector<Vector3> residuals(const SyntheticScene& scene, const LabeledTracklets& lt, bool inliers_only) {
  std::vector<Vector3> out;
  for (std::size_t i = 0; i < lt.tracklets.size(); ++i) {
    if (inliers_only && lt.outlier[i]) continue;
    const HomogeneousPoint& p = scene.landmarks[lt.landmark[i]];
    for (const auto& o : lt.tracklets[i].observations) {
      const TrajectoryState gt{scene.motion.pose_at(o.t), Twist::Zero(), o.t};
      out.push_back(measurement_error(gt, p, o.y.coords(), scene.camera));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("closed-form motion") {
  Motion still;
  for (double t : {0.0, 0.3, 1.7}) CHECK(still.pose_at(t).matrix() == Pose().matrix());

  Motion forward;
  forward.varpi << 1, 0, 0, 0, 0, 0;
  const Pose T = forward.pose_at(0.5);
  CHECK((T.translation() - Vector3(0.5, 0, 0)).norm() < 1e-15);
  CHECK(T.rotation() == Matrix3::Identity());

  Motion wobble;
  wobble.varpi = random_twist(0.5);
  wobble.osc_axis = random_twist(0.5);
  wobble.osc_amplitude = 0.3;
  wobble.osc_frequency = 2.0;
  for (int i = 0; i < 20; ++i) {
    const double t = uniform(0, 2);
    auto pose_vec = [&](const Eigen::Matrix<double, 1, 1>& s) -> Twist {
      return log_map(wobble.pose_at(t + s(0)) * wobble.pose_at(t).inverse());
    };
    const Twist num = numeric_jacobian<6, 1>(pose_vec, Eigen::Matrix<double, 1, 1>::Zero());
    CHECK((num - wobble.velocity_at(t)).norm() < 1e-6);
  }
}

TEST_CASE("landmarks are visible from at least two sample times") {
  const std::vector<double> times = {0.0, 0.1, 0.2, 0.3};
  Twist v;
  v << 0.5, 0.1, 0.2, 0.1, 0.2, 0.0;
  const SyntheticScene scene = generate_constant_velocity_scene(v, 0.3, 50, times);
  REQUIRE(scene.landmarks.size() == 50);
  for (std::size_t j = 0; j < scene.landmarks.size(); ++j) {
    int seen = 0;
    for (double t : times) seen += scene.visible(j, t);
    CHECK(seen >= 2);
    CHECK(scene.landmarks[j](3) == 1.0);
  }
}

TEST_CASE("noiseless tracklets have zero residual") {
  const SyntheticScene scene = generate_scene(scene_with(50, 0.3, 0.0, 0.0, 3));
  const LabeledTracklets lt = render_tracklets(scene);
  REQUIRE(!lt.tracklets.empty());
  double worst = 0.0;
  for (const auto& r : residuals(scene, lt, false)) worst = std::max(worst, r.norm());
  CHECK(worst < 1e-9);

  std::set<double> times;
  std::size_t count = 0;
  for (const auto& tr : lt.tracklets)
    for (const auto& o : tr.observations) times.insert(o.t), ++count;
  CHECK(times.size() == count);
}

TEST_CASE("outlier labelling is exact") {
  const SyntheticScene scene = generate_scene(scene_with(100, 0.3, 0.0, 0.3, 5));
  const LabeledTracklets lt = render_tracklets(scene);
  REQUIRE(lt.tracklets.size() == 100);
  int outliers = 0;
  for (bool b : lt.outlier) outliers += b;
  CHECK(outliers == 30);
  double worst_inlier = 0.0;
  for (const auto& r : residuals(scene, lt, true)) worst_inlier = std::max(worst_inlier, r.norm());
  CHECK(worst_inlier < 1e-9);
}

TEST_CASE("pixel noise has the configured spread") {
  const SyntheticScene scene = generate_scene(scene_with(150, 1.0, 1.0, 0.0, 8));
  const LabeledTracklets lt = render_tracklets(scene);
  const auto res = residuals(scene, lt, true);
  double sum = 0.0, sum_sq = 0.0, worst = 0.0;
  std::size_t n = 0;
  for (const auto& r : res) {
    for (int i = 0; i < 3; ++i) {
      sum += r(i);
      sum_sq += r(i) * r(i);
      worst = std::max(worst, std::abs(r(i)));
      ++n;
    }
  }
  REQUIRE(n >= 10000);
  const double mean = sum / n;
  const double sd = std::sqrt(sum_sq / n - mean * mean);
  CHECK(sd > 0.9);
  CHECK(sd < 1.1);
  CHECK(worst < 5.0);
}

TEST_CASE("generation is deterministic") {
  auto dump = [](std::uint64_t seed) {
    const SyntheticScene scene = generate_scene(scene_with(30, 0.2, 0.5, 0.1, seed));
    std::ostringstream out;
    write_tracklets(out, render_tracklets(scene).tracklets);
    write_events(out, render_events(scene));
    return out.str();
  };
  CHECK(dump(4) == dump(4));
  CHECK(dump(4) != dump(5));
}

TEST_CASE("event rendering of a static landmark") {
  SceneOptions o = scene_with(1, 0.1, 0.0, 0.0, 2);
  o.motion = Motion{};
  const SyntheticScene scene = generate_scene(o);
  EventRenderOptions ro;
  ro.pattern_radius = 0;
  const auto events = render_events(scene, ro);
  REQUIRE(!events.empty());
  std::set<std::pair<int, int>> pixels[2];
  for (const auto& e : events) pixels[side_index(e.side)].insert({e.x, e.y});
  CHECK(pixels[0].size() == 1);
  CHECK(pixels[1].size() == 1);
}

TEST_CASE("event rendering follows a moving landmark") {
  SceneOptions o = scene_with(1, 0.1, 0.0, 0.0, 6);
  o.motion = Motion{};
  o.motion.varpi << 0.0, 0.0, 0.0, 0.0, 0.5, 0.0;
  const SyntheticScene scene = generate_scene(o);
  const Vector3 a = scene.project(0, 0.0);
  const Vector3 b = scene.project(0, 0.1);
  REQUIRE(std::abs(b.x() - a.x()) >= 10.0);

  EventRenderOptions ro;
  ro.pattern_radius = 0;
  const auto events = render_events(scene, ro);
  std::set<std::pair<int, int>> left;
  for (const auto& e : events) {
    if (e.side == Side::Left) left.insert({e.x, e.y});
  }
  CHECK(left.size() >= 10);
  CHECK(events.size() >= 10);

  std::stringstream ss;
  write_events(ss, events);
  const auto back = read_events(ss, scene.camera.width(), scene.camera.height());
  CHECK(back == events);
  CHECK(!cluster_events(back, scene.camera.width(), scene.camera.height()).empty());
}

TEST_CASE("brute-force velocity basics") {
  std::vector<TrackletSegment> segs;
  for (int i = 0; i < 4; ++i) {
    TrackletSegment s;
    s.p_early = random_point_in_front();
    s.p_late = s.p_early;
    s.dt = 0.05;
    segs.push_back(s);
  }
  CHECK(brute_force_velocity(segs).norm() < 1e-15);
  CHECK(code_of([&] { brute_force_velocity(std::span(segs).first(1)); }) == ErrorCode::SingularSystem);
}

TEST_CASE("ground-truth states carry the motion") {
  const SyntheticScene scene = generate_scene(scene_with(10, 0.2, 0.0, 0.0, 1));
  const std::vector<double> times = {0.0, 0.05, 0.1};
  const auto states = ground_truth_states(scene, times);
  REQUIRE(states.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(states[i].t == times[i]);
    CHECK(log_map(states[i].T_k1 * scene.motion.pose_at(times[i]).inverse()).norm() < 1e-15);
    CHECK((states[i].varpi - scene.motion.velocity_at(times[i])).norm() < 1e-15);
  }
}
