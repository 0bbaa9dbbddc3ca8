#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ctevo/events.hpp"
#include "ctevo/features.hpp"
#include "ctevo/stereo_camera.hpp"

namespace ctevo {

enum class ResolutionLevel : std::uint8_t { Full = 0, Half = 1 };

/// One stereo observation of a landmark at its own (left-SAE) time.
struct FeatureObservation {
  StereoMeasurement y;
  double t = 0.0;
  /// Right-camera SAE time, used only by the stereo-time filter.
  double t_right = 0.0;
  int cluster_id = 0;
  ResolutionLevel level = ResolutionLevel::Full;

  double stereo_dt() const { return t - t_right; }
};

struct FeatureTracklet {
  std::int64_t id = 0;
  std::vector<FeatureObservation> observations;
  HomogeneousPoint landmark_seed = HomogeneousPoint(0.0, 0.0, 0.0, 1.0);

  // Appearance of the newest observation, used for tracklet extension.
  Descriptor last_descriptor;

  double duration() const { return observations.back().t - observations.front().t; }
  int last_cluster() const { return observations.back().cluster_id; }
};

struct TrackletThresholds {
  double stereo_dt_max = 0.020;
  double disparity_min = 2.0;
  double length_min = 2.0;
  double duration_min = 0.040;
};

enum class DiscardReason { TooShort, StereoTime, Disparity, Length, Duration };

std::string_view to_string(DiscardReason reason);

struct FilterResult {
  std::vector<FeatureTracklet> kept;
  std::vector<std::pair<FeatureTracklet, DiscardReason>> discarded;
};

/**
 * Drops tracklets with a stereo SAE time gap above stereo_dt_max, any
 * disparity below disparity_min, a left-image first-to-last distance
 * below length_min, or a duration below duration_min.
 */
FilterResult filter_tracklets(std::vector<FeatureTracklet> tracklets, const TrackletThresholds& thresholds);

/// Time of the nearest event to the (rounded) feature position. Throws NoEventNearby.
double assign_timestamp(const Feature& feature, const Sae& sae, int radius = 2);

/// A two-observation tracklet produced by one quad.
struct QuadTracklet {
  FeatureObservation previous;
  FeatureObservation current;
  Descriptor previous_descriptor;
  Descriptor current_descriptor;
};

struct ExtensionOptions {
  int depth = 3;
  int max_hamming = 40;
  double search_radius = 30.0;
};

/**
 * Merges each new quad into an existing tracklet that ended within the
 * last `depth` clusters and whose newest descriptor matches the quad's
 * oldest one; unmatched quads start new tracklets with ids drawn from
 * `next_id` (advanced by `id_stride`).
 */
void extend_tracklets(std::span<const QuadTracklet> new_quads, int cluster_id, std::vector<FeatureTracklet>& history,
                      const ExtensionOptions& options, std::int64_t& next_id, std::int64_t id_stride = 1);

struct FrontendOptions {
  DetectorOptions detector;
  MatchOptions matching;
  ExtensionOptions extension;
  TrackletThresholds thresholds;
  int sae_radius = 2;
  bool use_half_resolution = true;
};

/// Per-cluster feature statistics, reported by `inspect`.
struct ClusterStats {
  int cluster_id = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  std::size_t events_left = 0;
  std::size_t events_right = 0;
  std::size_t features_left = 0;
  std::size_t features_right = 0;
  std::size_t quads = 0;
};

/**
 * Incremental front end: feeds clusters one at a time, keeps only the
 * previous cluster's timestamped features, and grows tracklets at full
 * and half resolution.
 */
class TrackletBuilder {
 public:
  explicit TrackletBuilder(FrontendOptions options = {},
                           std::shared_ptr<const FeatureDetector> detector = nullptr);

  ClusterStats process(const EventCluster& cluster);

  const std::vector<FeatureTracklet>& tracklets(ResolutionLevel level) const {
    return store_[static_cast<int>(level)];
  }
  int clusters_seen() const { return clusters_seen_; }

 private:
  struct TimedFeatures {
    std::vector<Feature> features;
    std::vector<double> times;
  };
  struct LevelState {
    bool has_previous = false;
    int previous_cluster = -1;
    TimedFeatures previous[2];
  };

  TimedFeatures detect_timed(const BinaryFrame& frame, const Sae& sae, ResolutionLevel level) const;
  std::size_t process_level(const EventCluster& cluster, ResolutionLevel level, std::size_t* n_left,
                            std::size_t* n_right);

  FrontendOptions options_;
  std::shared_ptr<const FeatureDetector> detector_;
  LevelState levels_[2];
  std::vector<FeatureTracklet> store_[2];
  std::int64_t next_id_[2] = {0, 1};
  int clusters_seen_ = 0;
};

/**
 * Restricts tracklets to clusters [first_cluster, last_cluster], applies
 * the filters, and seeds each landmark by triangulating its first
 * observation.
 */
std::vector<FeatureTracklet> window_tracklets(std::span<const FeatureTracklet> tracklets, int first_cluster,
                                              int last_cluster, const TrackletThresholds& thresholds,
                                              const StereoCameraModel& camera, bool apply_filters = true);

/// Window view over both resolutions, dropping half-resolution tracklets that
/// duplicate a full-resolution observation (within 1 px at the same time).
std::vector<FeatureTracklet> merge_resolutions(std::vector<FeatureTracklet> full, std::vector<FeatureTracklet> half);

/// Runs the builder over a cluster stream and returns the filtered tracklets of
/// every sliding window of `window_width` clusters.
std::vector<std::vector<FeatureTracklet>> build_tracklets(std::span<const EventCluster> clusters,
                                                          const FrontendOptions& options,
                                                          const StereoCameraModel& camera, int window_width);

/// `tracklet_id t u_l v_l u_r` per observation.
void write_tracklets(std::ostream& out, std::span<const FeatureTracklet> tracklets);
void write_tracklets_file(const std::string& path, std::span<const FeatureTracklet> tracklets);

/// Reads a tracklet dump; cluster ids are assigned by binning times into
/// `bin_s` intervals from the earliest observation.
std::vector<FeatureTracklet> read_tracklets(std::istream& in, double bin_s);
std::vector<FeatureTracklet> read_tracklets_file(const std::string& path, double bin_s);

}  // namespace ctevo
