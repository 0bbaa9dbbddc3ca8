#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ctevo/events.hpp"

namespace ctevo {

/// 128 pairwise intensity comparisons on the smoothed frame inside a 15x15 patch.
struct Descriptor {
  static constexpr int kRadius = 7;
  static constexpr int kBits = 128;
  std::array<std::uint64_t, 2> bits{};

  bool operator==(const Descriptor&) const = default;
};

int hamming(const Descriptor& a, const Descriptor& b);

/// Keypoint in full-resolution pixel coordinates.
struct Feature {
  double x = 0.0;
  double y = 0.0;
  double response = 0.0;
  Descriptor descriptor;
};

struct DetectorOptions {
  /// Minimum Shi-Tomasi response on the smoothed binary frame.
  double min_response = 2e-3;
  int nms_radius = 3;
};

/// Pluggable detector interface; any frame-based detector can sit behind it.
class FeatureDetector {
 public:
  virtual ~FeatureDetector() = default;
  virtual std::vector<Feature> detect(const BinaryFrame& frame) const = 0;
};

/**
 * Shi-Tomasi corners on a Gaussian-smoothed binary event frame, with
 * strict non-maximum suppression and a binary patch descriptor. Features
 * whose descriptor patch would leave the frame are not reported.
 */
class BinaryCornerDetector final : public FeatureDetector {
 public:
  explicit BinaryCornerDetector(DetectorOptions options = {}) : options_(options) {}
  std::vector<Feature> detect(const BinaryFrame& frame) const override;

  /// Dense response map, exposed for tests.
  Image<double> response(const BinaryFrame& frame) const;

 private:
  Image<double> response_of_smoothed(const Image<double>& smoothed) const;

  DetectorOptions options_;
};

std::vector<Feature> detect_features(const BinaryFrame& frame, const DetectorOptions& options = {});

Descriptor sample_descriptor(const BinaryFrame& frame, int x, int y);

/// 2x2 OR-pooling of a binary frame and 2x2 max-pooling of an SAE.
BinaryFrame downsample(const BinaryFrame& frame);
Sae downsample(const Sae& sae);

struct MatchOptions {
  double ratio = 0.8;
  int max_hamming = 40;
  double stereo_dv_max = 2.0;
  double max_disparity = 120.0;
  double temporal_radius = 15.0;
};

enum class MatchGate { LeftToRight, RightToLeft, Temporal };

/**
 * Nearest-descriptor matching with gating, ratio test and mutual
 * consistency. Returns, for each `from` feature, the index into `to` or -1.
 */
std::vector<int> match_features(std::span<const Feature> from, std::span<const Feature> to, MatchGate gate,
                                const MatchOptions& options = {});

struct Quad {
  int cur_left = -1;
  int cur_right = -1;
  int prev_right = -1;
  int prev_left = -1;

  bool operator==(const Quad&) const = default;
};

/// Cyclic cur-left -> cur-right -> prev-right -> prev-left -> cur-left matching.
std::vector<Quad> quad_match(std::span<const Feature> cur_left, std::span<const Feature> cur_right,
                             std::span<const Feature> prev_right, std::span<const Feature> prev_left,
                             const MatchOptions& options = {});

}  // namespace ctevo
