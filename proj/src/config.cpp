#include "ctevo/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <vector>

#include "ctevo/error.hpp"

namespace ctevo {

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& msg) {
  throw Error(ErrorCode::ConfigError, key + ": " + msg);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<double> parse_numbers(const std::string& key, const std::string& value) {
  std::string v = value;
  std::replace(v.begin(), v.end(), ',', ' ');
  std::istringstream in(v);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    double x = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) config_error(key, "`" + tok + "` is not a number");
    out.push_back(x);
  }
  return out;
}

double parse_scalar(const std::string& key, const std::string& value) {
  const auto v = parse_numbers(key, value);
  if (v.size() != 1) config_error(key, "expected one number");
  return v.front();
}

int parse_int(const std::string& key, const std::string& value) {
  const double d = parse_scalar(key, value);
  if (d != static_cast<double>(static_cast<long long>(d))) config_error(key, "expected an integer");
  return static_cast<int>(d);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  config_error(key, "expected true or false");
}

template <int N>
Eigen::Matrix<double, N, 1> parse_vector(const std::string& key, const std::string& value) {
  const auto v = parse_numbers(key, value);
  if (static_cast<int>(v.size()) != N) config_error(key, "expected " + std::to_string(N) + " numbers");
  Eigen::Matrix<double, N, 1> out;
  for (int i = 0; i < N; ++i) out(i) = v[static_cast<std::size_t>(i)];
  return out;
}

void require_positive(const std::string& key, double v) {
  if (!(v > 0.0)) config_error(key, "must be positive");
}

template <typename Vec>
std::string join(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? " " : "") << v(i);
  return os.str();
}

struct CameraValues {
  double fu = 0, fv = 0, cu = 0, cv = 0, baseline = 0;
  int width = 0, height = 0;
};

}  // namespace

PipelineConfig parse_config(std::istream& in, bool require_camera) {
  PipelineConfig c;
  CameraValues cam;
  std::set<std::string> seen;

  using Setter = std::function<void(const std::string&, const std::string&)>;
  const auto num = [](double& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) { dst = parse_scalar(k, v); };
  };
  const auto pos = [](double& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) {
      dst = parse_scalar(k, v);
      require_positive(k, dst);
    };
  };
  const auto integer = [](int& dst) -> Setter {
    return [&dst](const std::string& k, const std::string& v) { dst = parse_int(k, v); };
  };

  Vector6 qc_inv = c.estimator.prior.qc_inv_diag();
  Vector3 r_inv = c.estimator.r_inv.diagonal();
  int max_count = static_cast<int>(c.cluster.max_count);
  int sim_seed = 0;
  int ransac_seed = 0;

  auto& th = c.frontend.thresholds;
  auto& sim = c.sim;
  const std::map<std::string, Setter> setters = {
      {"camera.fu", pos(cam.fu)},
      {"camera.fv", pos(cam.fv)},
      {"camera.cu", num(cam.cu)},
      {"camera.cv", num(cam.cv)},
      {"camera.baseline", pos(cam.baseline)},
      {"camera.width", integer(cam.width)},
      {"camera.height", integer(cam.height)},
      {"cluster.window_s", pos(c.cluster.window_s)},
      {"cluster.max_count", integer(max_count)},
      {"tracklet.stereo_dt_max", pos(th.stereo_dt_max)},
      {"tracklet.disparity_min", pos(th.disparity_min)},
      {"tracklet.length_min", pos(th.length_min)},
      {"tracklet.duration_min", pos(th.duration_min)},
      {"tracklet.extension_depth", integer(c.frontend.extension.depth)},
      {"tracklet.sae_radius", integer(c.frontend.sae_radius)},
      {"tracklet.half_resolution",
       [&](const std::string& k, const std::string& v) { c.frontend.use_half_resolution = parse_bool(k, v); }},
      {"tracklet.min_response", pos(c.frontend.detector.min_response)},
      {"ransac.iterations", integer(c.estimator.ransac.iterations)},
      {"ransac.threshold", pos(c.estimator.ransac.threshold)},
      {"ransac.sample_size", integer(c.estimator.ransac.sample_size)},
      {"ransac.seed", integer(ransac_seed)},
      {"estimator.qc_inv", [&](const std::string& k, const std::string& v) { qc_inv = parse_vector<6>(k, v); }},
      {"estimator.r_inv", [&](const std::string& k, const std::string& v) { r_inv = parse_vector<3>(k, v); }},
      {"estimator.window_width", integer(c.estimator.window_width)},
      {"estimator.convergence_tol", pos(c.estimator.solver.convergence_tol)},
      {"estimator.max_iters", integer(c.estimator.solver.max_iters)},
      {"sim.duration", pos(sim.duration)},
      {"sim.n_landmarks", integer(sim.n_landmarks)},
      {"sim.varpi", [&](const std::string& k, const std::string& v) { sim.varpi = parse_vector<6>(k, v); }},
      {"sim.osc_axis", [&](const std::string& k, const std::string& v) { sim.osc_axis = parse_vector<6>(k, v); }},
      {"sim.osc_amplitude", num(sim.osc_amplitude)},
      {"sim.osc_frequency", num(sim.osc_frequency)},
      {"sim.depth_min", pos(sim.depth_min)},
      {"sim.depth_max", pos(sim.depth_max)},
      {"sim.noise_sigma", num(sim.noise_sigma)},
      {"sim.outlier_fraction", num(sim.outlier_fraction)},
      {"sim.pattern_radius", integer(sim.pattern_radius)},
      {"sim.eval_rate_hz", pos(sim.eval_rate_hz)},
      {"sim.seed", integer(sim_seed)},
  };

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(line_no) + ": expected `section.key = value`");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) config_error(key, "unknown key");
    if (value.empty()) config_error(key, "missing value");
    it->second(key, value);
    seen.insert(key);
  }

  static const char* kCameraKeys[] = {"camera.fu",       "camera.fv",    "camera.cu",    "camera.cv",
                                      "camera.baseline", "camera.width", "camera.height"};
  bool any_camera = false;
  for (const char* k : kCameraKeys) any_camera = any_camera || seen.count(k);
  if (require_camera || any_camera) {
    for (const char* k : kCameraKeys) {
      if (!seen.count(k)) config_error(k, "missing calibration key");
    }
    try {
      c.camera = StereoCameraModel(cam.fu, cam.fv, cam.cu, cam.cv, cam.baseline, cam.width, cam.height);
    } catch (const Error& e) {
      config_error("camera", e.what());
    }
  }

  if (max_count <= 0) config_error("cluster.max_count", "must be positive");
  c.cluster.max_count = static_cast<std::size_t>(max_count);
  if (c.estimator.window_width < 2) config_error("estimator.window_width", "must be at least 2");
  if (c.estimator.solver.max_iters < 0) config_error("estimator.max_iters", "must not be negative");
  if (c.estimator.ransac.iterations < 1) config_error("ransac.iterations", "must be positive");
  if (c.estimator.ransac.sample_size < 2) config_error("ransac.sample_size", "must be at least 2");
  if (c.frontend.extension.depth < 1) config_error("tracklet.extension_depth", "must be positive");
  if (c.frontend.sae_radius < 0) config_error("tracklet.sae_radius", "must not be negative");
  if ((qc_inv.array() <= 0.0).any()) config_error("estimator.qc_inv", "entries must be positive");
  if ((r_inv.array() <= 0.0).any()) config_error("estimator.r_inv", "entries must be positive");
  if (sim.n_landmarks < 1) config_error("sim.n_landmarks", "must be positive");
  if (sim.noise_sigma < 0.0) config_error("sim.noise_sigma", "must not be negative");
  if (sim.outlier_fraction < 0.0 || sim.outlier_fraction >= 1.0) config_error("sim.outlier_fraction", "must be in [0, 1)");
  if (sim.depth_max < sim.depth_min) config_error("sim.depth_max", "must not be below sim.depth_min");
  if (sim.pattern_radius < 0) config_error("sim.pattern_radius", "must not be negative");
  if (sim_seed < 0 || ransac_seed < 0) config_error("seed", "must not be negative");

  c.estimator.prior = WnoaPrior::from_inverse(qc_inv);
  c.estimator.r_inv = r_inv.asDiagonal();
  c.estimator.ransac.r_inv = c.estimator.r_inv;
  c.estimator.ransac.seed = static_cast<std::uint64_t>(ransac_seed);
  c.sim.seed = static_cast<std::uint64_t>(sim_seed);
  c.frontend.extension.max_hamming = c.frontend.matching.max_hamming;
  return c;
}

PipelineConfig load_config(const std::string& path, bool require_camera) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config file " + path);
  return parse_config(in, require_camera);
}

void write_config(std::ostream& out, const PipelineConfig& c) {
  out.precision(17);
  const auto& th = c.frontend.thresholds;
  out << "camera.fu = " << c.camera.fu() << '\n'
      << "camera.fv = " << c.camera.fv() << '\n'
      << "camera.cu = " << c.camera.cu() << '\n'
      << "camera.cv = " << c.camera.cv() << '\n'
      << "camera.baseline = " << c.camera.baseline() << '\n'
      << "camera.width = " << c.camera.width() << '\n'
      << "camera.height = " << c.camera.height() << '\n'
      << "cluster.window_s = " << c.cluster.window_s << '\n'
      << "cluster.max_count = " << c.cluster.max_count << '\n'
      << "tracklet.stereo_dt_max = " << th.stereo_dt_max << '\n'
      << "tracklet.disparity_min = " << th.disparity_min << '\n'
      << "tracklet.length_min = " << th.length_min << '\n'
      << "tracklet.duration_min = " << th.duration_min << '\n'
      << "tracklet.extension_depth = " << c.frontend.extension.depth << '\n'
      << "tracklet.sae_radius = " << c.frontend.sae_radius << '\n'
      << "tracklet.half_resolution = " << (c.frontend.use_half_resolution ? "true" : "false") << '\n'
      << "tracklet.min_response = " << c.frontend.detector.min_response << '\n'
      << "ransac.iterations = " << c.estimator.ransac.iterations << '\n'
      << "ransac.threshold = " << c.estimator.ransac.threshold << '\n'
      << "ransac.sample_size = " << c.estimator.ransac.sample_size << '\n'
      << "ransac.seed = " << c.estimator.ransac.seed << '\n'
      << "estimator.qc_inv = " << join(c.estimator.prior.qc_inv_diag()) << '\n'
      << "estimator.r_inv = " << join(Vector3(c.estimator.r_inv.diagonal())) << '\n'
      << "estimator.window_width = " << c.estimator.window_width << '\n'
      << "estimator.convergence_tol = " << c.estimator.solver.convergence_tol << '\n'
      << "estimator.max_iters = " << c.estimator.solver.max_iters << '\n'
      << "sim.duration = " << c.sim.duration << '\n'
      << "sim.n_landmarks = " << c.sim.n_landmarks << '\n'
      << "sim.varpi = " << join(c.sim.varpi) << '\n'
      << "sim.osc_axis = " << join(c.sim.osc_axis) << '\n'
      << "sim.osc_amplitude = " << c.sim.osc_amplitude << '\n'
      << "sim.osc_frequency = " << c.sim.osc_frequency << '\n'
      << "sim.depth_min = " << c.sim.depth_min << '\n'
      << "sim.depth_max = " << c.sim.depth_max << '\n'
      << "sim.noise_sigma = " << c.sim.noise_sigma << '\n'
      << "sim.outlier_fraction = " << c.sim.outlier_fraction << '\n'
      << "sim.pattern_radius = " << c.sim.pattern_radius << '\n'
      << "sim.eval_rate_hz = " << c.sim.eval_rate_hz << '\n'
      << "sim.seed = " << c.sim.seed << '\n';
}

void write_config_file(const std::string& path, const PipelineConfig& config) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write config file " + path);
  write_config(out, config);
}

void apply_seed(PipelineConfig& config, std::uint64_t seed) {
  config.estimator.ransac.seed = seed;
  config.sim.seed = seed;
}

}  // namespace ctevo
