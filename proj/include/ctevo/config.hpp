#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "ctevo/events.hpp"
#include "ctevo/sliding_window.hpp"
#include "ctevo/stereo_camera.hpp"
#include "ctevo/synth.hpp"
#include "ctevo/tracklets.hpp"

namespace ctevo {

/// Parameters of the `simulate` subcommand.
struct SimulationConfig {
  double duration = 2.0;
  int n_landmarks = 50;
  Twist varpi = (Twist() << 0.2, 0.0, 0.1, 0.0, 0.15, 0.0).finished();
  Twist osc_axis = Twist::Zero();
  double osc_amplitude = 0.0;
  double osc_frequency = 0.0;
  double depth_min = 1.0;
  double depth_max = 5.0;
  double noise_sigma = 0.0;
  double outlier_fraction = 0.0;
  int pattern_radius = 2;
  double eval_rate_hz = 100.0;
  std::uint64_t seed = 0;
};

struct PipelineConfig {
  StereoCameraModel camera = default_sim_camera();
  ClusterOptions cluster;
  FrontendOptions frontend;
  EstimatorOptions estimator;
  SimulationConfig sim;
};

/**
 * Reads `section.key = value` lines. Vector values are whitespace or comma
 * separated. Throws ConfigError naming the offending key, including any
 * missing camera.* key when `require_camera` is set.
 */
PipelineConfig parse_config(std::istream& in, bool require_camera = true);
PipelineConfig load_config(const std::string& path, bool require_camera = true);

/// Writes every key, so that parse_config(write_config(c)) == c.
void write_config(std::ostream& out, const PipelineConfig& config);
void write_config_file(const std::string& path, const PipelineConfig& config);

/// Sets both the RANSAC and the simulation seed.
void apply_seed(PipelineConfig& config, std::uint64_t seed);

}  // namespace ctevo
