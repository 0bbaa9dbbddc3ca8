#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ctevo {

enum class Side : std::uint8_t { Left = 0, Right = 1 };

inline constexpr int side_index(Side s) { return static_cast<int>(s); }

/// One asynchronous brightness change.
struct Event {
  double t = 0.0;
  int x = 0;
  int y = 0;
  int polarity = 1;
  Side side = Side::Left;

  bool operator==(const Event&) const = default;
};

/// Row-major dense image.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  T& operator()(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& operator()(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  const std::vector<T>& data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using BinaryFrame = Image<std::uint8_t>;
/// Surface of Active Events: latest event time per pixel, NaN where none fired.
using Sae = Image<double>;

inline constexpr double kNoEvent = std::numeric_limits<double>::quiet_NaN();

/**
 * Synchronously clustered stereo events. Both sides share [t_start, t_end).
 * SAEs are rebuilt for every cluster.
 */
struct EventCluster {
  int index = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  BinaryFrame frames[2];
  Sae saes[2];
  std::size_t counts[2] = {0, 0};

  const BinaryFrame& frame(Side s) const { return frames[side_index(s)]; }
  const Sae& sae(Side s) const { return saes[side_index(s)]; }
  std::size_t count(Side s) const { return counts[side_index(s)]; }
};

struct ClusterOptions {
  double window_s = 0.025;
  std::size_t max_count = 15000;
};

/// Parses the `t x y polarity side` text format. Throws ParseError (with
/// line number) or NonMonotonicTime.
std::vector<Event> read_events(std::istream& in, int width, int height);
std::vector<Event> read_events_file(const std::string& path, int width, int height);

void write_events(std::ostream& out, std::span<const Event> events);
void write_events_file(const std::string& path, std::span<const Event> events);

/**
 * Stateful stream transducer. Feed events in nondecreasing time order;
 * completed clusters are returned as they close.
 */
class EventClusterer {
 public:
  EventClusterer(int width, int height, ClusterOptions options);

  std::vector<EventCluster> push(const Event& e);
  /// Closes the open cluster, if any.
  std::optional<EventCluster> finish();

 private:
  void open(double t);
  EventCluster close(double t_end);

  int width_;
  int height_;
  ClusterOptions options_;
  std::optional<EventCluster> current_;
  int next_index_ = 0;
  double last_t_ = -std::numeric_limits<double>::infinity();
};

/// Clusters a whole stream (events are stably time-ordered first).
std::vector<EventCluster> cluster_events(std::span<const Event> events, int width, int height,
                                         ClusterOptions options = {});

/**
 * Time of the nearest fired SAE pixel within a Chebyshev radius. Ties go
 * to the larger timestamp, then row-major order. Throws NoEventNearby.
 */
double sae_lookup(const Sae& sae, int x, int y, int radius = 2);
inline double sae_lookup(const EventCluster& cluster, Side side, int x, int y, int radius = 2) {
  return sae_lookup(cluster.sae(side), x, y, radius);
}

}  // namespace ctevo
