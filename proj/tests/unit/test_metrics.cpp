#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ctevo/metrics.hpp"
#include "test_support.hpp"

using namespace ctevo;
using namespace ctevo::testing;

namespace {

SampledTrajectory random_walk(int n, double dt) {
  std::vector<double> times;
  std::vector<Pose> poses;
  Pose T = random_pose(1.0);
  for (int i = 0; i < n; ++i) {
    times.push_back(i * dt);
    poses.push_back(T);
    T = exp_map(random_twist(0.05)) * T;
  }
  return SampledTrajectory(times, poses);
}

Twist translation_sample(double x, double y, double z) { return (Twist() << x, y, z, 0, 0, 0).finished(); }

}  // namespace

TEST_CASE("pose error") {
  const Pose T = random_pose(1.0);
  CHECK(pose_error(T, T).norm() == 0.0);
  for (int i = 0; i < 20; ++i) {
    const Twist d = random_twist(1e-3);
    CHECK((pose_error(exp_map(d), Pose()) - d).norm() < 10.0 * d.squaredNorm());
    CHECK(pose_error(Pose(), Pose(), random_pose(1.0)).norm() < 1e-15);
  }
  const Pose A = random_pose(1.0);
  const Pose est = random_pose(0.1);
  const Pose gt = random_pose(0.1);
  const Twist direct = log_map(A * est * A.inverse() * gt.inverse());
  CHECK((pose_error(est, gt, A) - direct).norm() < 1e-14);
}

TEST_CASE("a trajectory against itself has zero error") {
  const SampledTrajectory gt = random_walk(50, 0.01);
  const ErrorReport r = make_report(gt, gt, gt.times());
  for (const auto& s : r.samples) {
    CHECK(s.global.norm() == 0.0);
    CHECK(s.relative.norm() == 0.0);
  }
  for (const ErrorTable* t : {&r.global, &r.relative}) {
    for (const AggregateRow* row : {&t->translation, &t->rotation, &t->se3}) {
      CHECK(row->max == 0.0);
      CHECK(row->rms == 0.0);
      CHECK(row->stdev == 0.0);
      CHECK(row->final_pct == 0.0);
    }
  }
  CHECK_FALSE(r.samples.front().has_relative);
  CHECK(r.samples.back().has_relative);
}

TEST_CASE("a constant world offset cancels") {
  const SampledTrajectory gt = random_walk(40, 0.01);
  const Pose offset = random_pose(1.0);
  std::vector<Pose> shifted;
  for (const auto& T : gt.poses()) shifted.push_back(T * offset);
  const SampledTrajectory est(gt.times(), shifted);
  for (const auto& s : evaluate_errors(est, gt, gt.times())) {
    CHECK(s.global.norm() < 1e-12);
    CHECK(s.relative.norm() < 1e-12);
  }
}

TEST_CASE("a single corrupted sample spikes the relative error locally") {
  const SampledTrajectory gt = random_walk(30, 0.01);
  constexpr std::size_t kBad = 12;
  std::vector<Pose> poses = gt.poses();
  poses[kBad] = exp_map(translation_sample(0.05, 0, 0)) * poses[kBad];
  const SampledTrajectory est(gt.times(), poses);
  const auto samples = evaluate_errors(est, gt, gt.times());
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const double n = samples[k].relative.norm();
    if (k == kBad || k == kBad + 1) {
      CHECK(n > 0.01);
    } else {
      CHECK(n < 1e-12);
    }
  }
  CHECK(samples[kBad].global.norm() > 0.01);
  CHECK(samples[kBad + 1].global.norm() < 1e-12);
}

TEST_CASE("aggregates of a hand-built sample set") {
  const std::vector<Twist> samples = {translation_sample(3, 4, 0), translation_sample(0, 0, 1),
                                      translation_sample(1, 2, 2)};
  PathLength path;
  path.translation = 10.0;
  path.se3 = 20.0;
  const ErrorTable t = aggregate(samples, path);
  CHECK(t.translation.max == 5.0);
  CHECK(t.translation.max_pct == doctest::Approx(50.0));
  CHECK(t.translation.final_pct == doctest::Approx(30.0));
  CHECK(t.translation.rms == doctest::Approx(std::sqrt(35.0 / 3.0)));
  CHECK(t.translation.stdev == doctest::Approx(std::sqrt(8.0 / 3.0)));
  CHECK(t.se3.max_pct == doctest::Approx(25.0));
  CHECK(t.rotation.max == 0.0);
  CHECK(t.rotation.max_pct == 0.0);

  const ErrorTable one = aggregate(std::vector<Twist>{translation_sample(0, 3, 4)}, path);
  CHECK(one.translation.max == 5.0);
  CHECK(one.translation.rms == 5.0);
  CHECK(one.translation.stdev == 0.0);

  CHECK(code_of([&] { aggregate(std::vector<Twist>{}, path); }) == ErrorCode::EmptyReport);
}

TEST_CASE("RMS, mean and standard deviation are consistent") {
  std::vector<Twist> samples;
  for (int i = 0; i < 100; ++i) samples.push_back(random_twist(1.0));
  const ErrorTable t = aggregate(samples, PathLength{1, 1, 1});
  double mean = 0.0;
  for (const auto& s : samples) mean += s.norm() / samples.size();
  CHECK(t.se3.rms * t.se3.rms == doctest::Approx(mean * mean + t.se3.stdev * t.se3.stdev));
  CHECK(t.se3.rms <= t.se3.max);
}

TEST_CASE("path length of straight motion") {
  std::vector<double> times;
  std::vector<Pose> poses;
  for (int i = 0; i <= 10; ++i) {
    times.push_back(0.1 * i);
    poses.push_back(Pose(Matrix3::Identity(), Vector3(-0.1 * i, 0, 0)));
  }
  const SampledTrajectory gt(times, poses);
  const PathLength p = path_length(gt, times);
  CHECK(p.translation == doctest::Approx(1.0));
  CHECK(p.rotation == 0.0);
  CHECK(p.se3 == doctest::Approx(1.0));
}

TEST_CASE("uncovered evaluation times are rejected") {
  const SampledTrajectory gt = random_walk(10, 0.01);
  const std::vector<double> times = {0.0, 0.05, 0.2};
  CHECK(code_of([&] { evaluate_errors(gt, gt, times); }) == ErrorCode::OutOfWindow);
  CHECK(code_of([&] { make_report(gt, gt, std::vector<double>{}); }) == ErrorCode::EmptyReport);
}

TEST_CASE("table output has six rows") {
  const SampledTrajectory gt = random_walk(10, 0.01);
  std::ostringstream out;
  write_table(out, make_report(gt, gt, gt.times()));
  std::istringstream lines(out.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 7);
}
