#include "ctevo/synth.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <tuple>

#include "ctevo/error.hpp"

namespace ctevo {

namespace {

constexpr std::uint64_t kTrackletStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kEventStream = 0xc2b2ae3d27d4eb4fULL;

std::vector<double> cluster_sample_times(double duration, double period) {
  std::vector<double> out;
  const int n = std::max(1, static_cast<int>(std::ceil(duration / period - 1e-9)));
  for (int c = 0; c < n; ++c) out.push_back((c + 0.5) * period);
  return out;
}

SyntheticScene place_landmarks(const SceneOptions& o, std::span<const double> sample_times) {
  if (o.n_landmarks < 1) throw Error(ErrorCode::InvalidArgument, "scene needs at least one landmark");
  if (!(o.duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "scene duration must be positive");
  if (!(o.depth_min > 0.0) || !(o.depth_max >= o.depth_min)) {
    throw Error(ErrorCode::InvalidArgument, "invalid depth range");
  }
  SyntheticScene s;
  s.camera = o.camera;
  s.motion = o.motion;
  s.duration = o.duration;
  s.cluster_period = o.cluster_period;
  s.margin = o.margin;
  s.noise_sigma = o.noise_sigma;
  s.outlier_fraction = o.outlier_fraction;
  s.seed = o.seed;

  const StereoCameraModel& cam = o.camera;
  std::mt19937_64 rng(o.seed);
  std::uniform_real_distribution<double> when(0.0, o.duration);
  std::uniform_real_distribution<double> u(o.margin, cam.width() - 1 - o.margin);
  std::uniform_real_distribution<double> v(o.margin, cam.height() - 1 - o.margin);
  std::uniform_real_distribution<double> depth(o.depth_min, o.depth_max);

  const long max_attempts = 1000L * o.n_landmarks;
  long attempts = 0;
  while (static_cast<int>(s.landmarks.size()) < o.n_landmarks) {
    if (++attempts > max_attempts) {
      throw Error(ErrorCode::NoVisibleLandmarks, "could not place landmarks visible at two sample times");
    }
    const double tau = when(rng);
    const double z = depth(rng);
    const double uu = u(rng);
    const double vv = v(rng);
    const HomogeneousPoint p_cam((uu - cam.cu()) * z / cam.fu(), (vv - cam.cv()) * z / cam.fv(), z, 1.0);
    s.landmarks.push_back(o.motion.pose_at(tau).inverse() * p_cam);
    const std::size_t j = s.landmarks.size() - 1;
    const auto seen = std::count_if(sample_times.begin(), sample_times.end(), [&](double t) { return s.visible(j, t); });
    if (seen < 2) s.landmarks.pop_back();
  }
  return s;
}

// Every landmark's 0/1 footprint, identical in both cameras.
std::vector<std::vector<std::pair<int, int>>> make_patterns(std::size_t n, int radius, std::mt19937_64& rng) {
  std::bernoulli_distribution coin(0.5);
  std::vector<std::vector<std::pair<int, int>>> out(n);
  for (auto& pat : out) {
    for (int dy = -radius; dy <= radius; ++dy) {
      for (int dx = -radius; dx <= radius; ++dx) {
        if ((dx == 0 && dy == 0) || coin(rng)) pat.emplace_back(dx, dy);
      }
    }
  }
  return out;
}

}  // namespace

Pose Motion::pose_at(double t) const {
  const double s = osc_amplitude * std::sin(2.0 * std::numbers::pi * osc_frequency * t);
  return exp_map(s * osc_axis) * exp_map(t * varpi);
}

Twist Motion::velocity_at(double t) const {
  const double w = 2.0 * std::numbers::pi * osc_frequency;
  const double s = osc_amplitude * std::sin(w * t);
  const double ds = osc_amplitude * w * std::cos(w * t);
  return ds * osc_axis + adjoint(exp_map(s * osc_axis)) * varpi;
}

StereoCameraModel default_sim_camera() { return StereoCameraModel(226.0, 226.0, 173.0, 130.0, 0.1, 346, 260); }

int SyntheticScene::cluster_count() const {
  return std::max(1, static_cast<int>(std::ceil(duration / cluster_period - 1e-9)));
}

bool SyntheticScene::visible(std::size_t j, double t) const {
  const HomogeneousPoint p = motion.pose_at(t) * landmarks[j];
  if (!(p.z() > StereoCameraModel::kMinDepth)) return false;
  const Vector3 y = camera.project(p);
  const auto inside = [&](double a, double b, double w, double h) {
    return a >= margin && b >= margin && a <= w - 1 - margin && b <= h - 1 - margin;
  };
  return inside(y.x(), y.y(), camera.width(), camera.height()) &&
         inside(y.z(), y.y(), camera.width(), camera.height());
}

Vector3 SyntheticScene::project(std::size_t j, double t) const {
  return camera.project(motion.pose_at(t) * landmarks[j]);
}

SyntheticScene generate_scene(const SceneOptions& options) {
  return place_landmarks(options, cluster_sample_times(options.duration, options.cluster_period));
}

SyntheticScene generate_constant_velocity_scene(const Twist& varpi, double duration, int n_landmarks,
                                                std::span<const double> sample_times, SceneOptions options) {
  options.motion = Motion{varpi};
  options.duration = duration;
  options.n_landmarks = n_landmarks;
  return place_landmarks(options, sample_times);
}

LabeledTracklets render_tracklets(const SyntheticScene& scene) {
  const std::size_t n = scene.landmarks.size();
  const int clusters = scene.cluster_count();
  std::mt19937_64 rng(scene.seed ^ kTrackletStream);
  std::uniform_real_distribution<double> jitter(0.1, 0.9);
  std::vector<std::vector<double>> times(n);
  const double slot = scene.cluster_period / static_cast<double>(n);
  for (int c = 0; c < clusters; ++c) {
    for (std::size_t j = 0; j < n; ++j) {
      const double t = c * scene.cluster_period + (static_cast<double>(j) + jitter(rng)) * slot;
      if (t <= scene.duration) times[j].push_back(t);
    }
  }
  return render_tracklets(scene, times);
}

LabeledTracklets render_tracklets(const SyntheticScene& scene, std::span<const std::vector<double>> times) {
  const std::size_t n = scene.landmarks.size();
  if (times.size() != n) throw Error(ErrorCode::InvalidArgument, "one time list per landmark is required");
  std::mt19937_64 rng((scene.seed + 1) ^ kTrackletStream);

  LabeledTracklets out;
  for (std::size_t j = 0; j < n; ++j) {
    FeatureTracklet tr;
    tr.id = static_cast<std::int64_t>(j);
    for (double t : times[j]) {
      if (!scene.visible(j, t)) continue;
      FeatureObservation o;
      o.t = t;
      o.t_right = t;
      o.cluster_id = static_cast<int>(std::floor(t / scene.cluster_period));
      o.y = StereoMeasurement::from_coords(scene.project(j, t), t);
      tr.observations.push_back(o);
    }
    if (tr.observations.size() < 2) continue;
    out.tracklets.push_back(std::move(tr));
    out.outlier.push_back(false);
    out.landmark.push_back(j);
  }

  const auto n_out = static_cast<std::size_t>(std::lround(scene.outlier_fraction * out.tracklets.size()));
  std::vector<std::size_t> order(out.tracklets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_out));

  for (std::size_t k = 0; k < n_out; ++k) {
    const std::size_t i = order[k];
    out.outlier[i] = true;
    const std::size_t own = out.landmark[i];
    std::vector<std::size_t> used{own};
    int parity = 0;
    for (auto& o : out.tracklets[i].observations) {
      std::vector<std::size_t> options;
      for (std::size_t q = 0; q < n; ++q) {
        if (std::find(used.begin(), used.end(), q) == used.end() && scene.visible(q, o.t)) options.push_back(q);
      }
      if (!options.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, options.size() - 1);
        const std::size_t q = options[pick(rng)];
        used.push_back(q);
        o.y = StereoMeasurement::from_coords(scene.project(q, o.t), o.t);
      } else {
        const double shift = (parity++ % 2 == 0) ? 15.0 : -15.0;
        o.y.u_left += shift;
        o.y.u_right += shift;
        o.y.v_left += shift;
      }
    }
  }

  if (scene.noise_sigma > 0.0) {
    std::normal_distribution<double> noise(0.0, scene.noise_sigma);
    for (auto& tr : out.tracklets) {
      for (auto& o : tr.observations) {
        o.y.u_left += noise(rng);
        o.y.v_left += noise(rng);
        o.y.u_right += noise(rng);
      }
    }
  }

  for (auto& tr : out.tracklets) {
    try {
      tr.landmark_seed = scene.camera.triangulate(tr.observations.front().y.coords());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDisparity) throw;
    }
  }
  return out;
}

std::vector<Event> render_events(const SyntheticScene& scene, const EventRenderOptions& options) {
  if (options.pattern_radius < 0 || !(options.max_step_px > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid event rendering options");
  }
  std::mt19937_64 rng(scene.seed ^ kEventStream);
  const auto patterns = make_patterns(scene.landmarks.size(), options.pattern_radius, rng);
  const int w = scene.camera.width();
  const int h = scene.camera.height();

  std::vector<Event> events;
  for (std::size_t j = 0; j < scene.landmarks.size(); ++j) {
    bool have_last[2] = {false, false};
    int last_px[2][2] = {{0, 0}, {0, 0}};
    double t = 0.0;
    double dt = 1e-3;
    while (t <= scene.duration) {
      if (scene.visible(j, t)) {
        const Vector3 y = scene.project(j, t);
        const double xs[2] = {y.x(), y.z()};
        for (int s = 0; s < 2; ++s) {
          const int px = static_cast<int>(std::lround(xs[s]));
          const int py = static_cast<int>(std::lround(y.y()));
          if (have_last[s] && last_px[s][0] == px && last_px[s][1] == py) continue;
          have_last[s] = true;
          last_px[s][0] = px;
          last_px[s][1] = py;
          for (const auto& [dx, dy] : patterns[j]) {
            const int x = px + dx;
            const int yy = py + dy;
            if (x >= 0 && yy >= 0 && x < w && yy < h) events.push_back(Event{t, x, yy, 1, s == 0 ? Side::Left : Side::Right});
          }
        }
      } else {
        have_last[0] = have_last[1] = false;
      }

      // Shrink the step until the image motion per sample is small enough.
      dt = std::min(dt * 2.0, 1e-3);
      for (int guard = 0; guard < 40; ++guard) {
        const double t2 = t + dt;
        if (t2 > scene.duration || !scene.visible(j, t) || !scene.visible(j, t2)) break;
        const Vector3 a = scene.project(j, t);
        const Vector3 b = scene.project(j, t2);
        if ((b - a).cwiseAbs().maxCoeff() <= options.max_step_px) break;
        dt *= 0.5;
      }
      t += dt;
    }
  }

  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    return std::tie(a.t, a.side, a.y, a.x) < std::tie(b.t, b.side, b.y, b.x);
  });
  return events;
}

std::vector<TrajectoryState> ground_truth_states(const SyntheticScene& scene, std::span<const double> times) {
  std::vector<TrajectoryState> out;
  out.reserve(times.size());
  for (double t : times) out.push_back(TrajectoryState{scene.motion.pose_at(t), scene.motion.velocity_at(t), t});
  return out;
}

Twist brute_force_velocity(std::span<const TrackletSegment> segments) {
  const auto rows = static_cast<Eigen::Index>(3 * segments.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(rows, 6);
  Eigen::VectorXd rhs(rows);
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const TrackletSegment& s = segments[i];
    const double x = s.p_early(0), y = s.p_early(1), z = s.p_early(2), eta = s.p_early(3);
    const auto r = static_cast<Eigen::Index>(3 * i);
    // Rows of d(hat(w) p)/dw scaled by the segment duration.
    M.block<3, 6>(r, 0) << eta, 0, 0, 0, z, -y,
                           0, eta, 0, -z, 0, x,
                           0, 0, eta, y, -x, 0;
    M.block<3, 6>(r, 0) *= s.dt;
    rhs.segment<3>(r) = s.p_late.head<3>() - s.p_early.head<3>();
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(M);
  qr.setThreshold(1e-10);
  if (qr.rank() < 6) throw Error(ErrorCode::SingularSystem, "stacked segment system is rank deficient");
  return qr.solve(rhs);
}

}  // namespace ctevo
