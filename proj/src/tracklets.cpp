#include "ctevo/tracklets.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "ctevo/error.hpp"

namespace ctevo {

std::string_view to_string(DiscardReason reason) {
  switch (reason) {
    case DiscardReason::TooShort: return "too_short";
    case DiscardReason::StereoTime: return "stereo_time";
    case DiscardReason::Disparity: return "disparity";
    case DiscardReason::Length: return "length";
    case DiscardReason::Duration: return "duration";
  }
  return "unknown";
}

FilterResult filter_tracklets(std::vector<FeatureTracklet> tracklets, const TrackletThresholds& th) {
  FilterResult result;
  for (auto& tr : tracklets) {
    const auto& obs = tr.observations;
    std::optional<DiscardReason> reason;
    if (obs.size() < 2) {
      reason = DiscardReason::TooShort;
    } else if (std::any_of(obs.begin(), obs.end(),
                           [&](const auto& o) { return std::abs(o.stereo_dt()) > th.stereo_dt_max; })) {
      reason = DiscardReason::StereoTime;
    } else if (std::any_of(obs.begin(), obs.end(),
                           [&](const auto& o) { return o.y.disparity() < th.disparity_min; })) {
      reason = DiscardReason::Disparity;
    } else if (std::hypot(obs.back().y.u_left - obs.front().y.u_left, obs.back().y.v_left - obs.front().y.v_left) <
               th.length_min) {
      reason = DiscardReason::Length;
    } else if (tr.duration() < th.duration_min) {
      reason = DiscardReason::Duration;
    }
    if (reason) {
      result.discarded.emplace_back(std::move(tr), *reason);
    } else {
      result.kept.push_back(std::move(tr));
    }
  }
  return result;
}

double assign_timestamp(const Feature& feature, const Sae& sae, int radius) {
  const int x = static_cast<int>(std::lround(feature.x));
  const int y = static_cast<int>(std::lround(feature.y));
  if (!sae.contains(x, y)) throw Error(ErrorCode::InvalidArgument, "feature outside the SAE");
  return sae_lookup(sae, x, y, radius);
}

void extend_tracklets(std::span<const QuadTracklet> new_quads, int cluster_id, std::vector<FeatureTracklet>& history,
                      const ExtensionOptions& options, std::int64_t& next_id, std::int64_t id_stride) {
  std::vector<std::size_t> candidates;
  if (options.depth > 0) {
    for (std::size_t i = 0; i < history.size(); ++i) {
      const int gap = cluster_id - history[i].last_cluster();
      if (gap >= 1 && gap <= options.depth) candidates.push_back(i);
    }
  }
  std::vector<bool> used(history.size(), false);

  for (const QuadTracklet& q : new_quads) {
    std::optional<std::size_t> best;
    std::tuple<int, double, std::size_t> best_key;
    for (std::size_t idx : candidates) {
      if (used[idx]) continue;
      const FeatureTracklet& tr = history[idx];
      const FeatureObservation& last = tr.observations.back();
      const int gap = cluster_id - tr.last_cluster();
      const double dist = std::hypot(q.previous.y.u_left - last.y.u_left, q.previous.y.v_left - last.y.v_left);
      if (dist > options.search_radius * (gap - 1) + 2.0) continue;
      const int h = hamming(q.previous_descriptor, tr.last_descriptor);
      if (h > options.max_hamming) continue;
      const auto key = std::make_tuple(h, dist, idx);
      if (!best || key < best_key) {
        best = idx;
        best_key = key;
      }
    }

    if (best) {
      FeatureTracklet& tr = history[*best];
      const FeatureObservation& last = tr.observations.back();
      if (q.previous.cluster_id > last.cluster_id && q.previous.t > last.t) tr.observations.push_back(q.previous);
      if (q.current.t > tr.observations.back().t) tr.observations.push_back(q.current);
      tr.last_descriptor = q.current_descriptor;
      used[*best] = true;
    } else {
      FeatureTracklet tr;
      tr.id = next_id;
      next_id += id_stride;
      tr.observations = {q.previous, q.current};
      tr.last_descriptor = q.current_descriptor;
      history.push_back(std::move(tr));
      used.push_back(true);
    }
  }
}

TrackletBuilder::TrackletBuilder(FrontendOptions options, std::shared_ptr<const FeatureDetector> detector)
    : options_(options), detector_(std::move(detector)) {
  if (!detector_) detector_ = std::make_shared<BinaryCornerDetector>(options_.detector);
}

TrackletBuilder::TimedFeatures TrackletBuilder::detect_timed(const BinaryFrame& frame, const Sae& sae,
                                                             ResolutionLevel level) const {
  TimedFeatures out;
  for (Feature f : detector_->detect(frame)) {
    double t = 0.0;
    try {
      t = assign_timestamp(f, sae, options_.sae_radius);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoEventNearby) throw;
      continue;
    }
    if (level == ResolutionLevel::Half) {
      f.x = 2.0 * f.x + 0.5;
      f.y = 2.0 * f.y + 0.5;
    }
    out.features.push_back(f);
    out.times.push_back(t);
  }
  return out;
}

std::size_t TrackletBuilder::process_level(const EventCluster& cluster, ResolutionLevel level, std::size_t* n_left,
                                           std::size_t* n_right) {
  const int li = static_cast<int>(level);
  LevelState& state = levels_[li];

  TimedFeatures current[2];
  for (int s = 0; s < 2; ++s) {
    if (level == ResolutionLevel::Full) {
      current[s] = detect_timed(cluster.frames[s], cluster.saes[s], level);
    } else {
      current[s] = detect_timed(downsample(cluster.frames[s]), downsample(cluster.saes[s]), level);
    }
  }
  if (n_left) *n_left = current[0].features.size();
  if (n_right) *n_right = current[1].features.size();

  std::size_t n_quads = 0;
  if (state.has_previous && state.previous_cluster == cluster.index - 1) {
    const TimedFeatures& cl = current[0];
    const TimedFeatures& cr = current[1];
    const TimedFeatures& pl = state.previous[0];
    const TimedFeatures& pr = state.previous[1];
    const auto quads = quad_match(cl.features, cr.features, pr.features, pl.features, options_.matching);
    n_quads = quads.size();

    std::vector<QuadTracklet> fresh;
    fresh.reserve(quads.size());
    for (const Quad& q : quads) {
      QuadTracklet qt;
      const Feature& fpl = pl.features[q.prev_left];
      const Feature& fpr = pr.features[q.prev_right];
      const Feature& fcl = cl.features[q.cur_left];
      const Feature& fcr = cr.features[q.cur_right];
      qt.previous = FeatureObservation{StereoMeasurement{fpl.x, fpl.y, fpr.x, pl.times[q.prev_left]},
                                       pl.times[q.prev_left], pr.times[q.prev_right], state.previous_cluster, level};
      qt.current = FeatureObservation{StereoMeasurement{fcl.x, fcl.y, fcr.x, cl.times[q.cur_left]},
                                      cl.times[q.cur_left], cr.times[q.cur_right], cluster.index, level};
      qt.previous_descriptor = fpl.descriptor;
      qt.current_descriptor = fcl.descriptor;
      fresh.push_back(qt);
    }
    extend_tracklets(fresh, cluster.index, store_[li], options_.extension, next_id_[li], 2);
  }

  state.has_previous = true;
  state.previous_cluster = cluster.index;
  state.previous[0] = std::move(current[0]);
  state.previous[1] = std::move(current[1]);
  return n_quads;
}

ClusterStats TrackletBuilder::process(const EventCluster& cluster) {
  ClusterStats stats;
  stats.cluster_id = cluster.index;
  stats.t_start = cluster.t_start;
  stats.t_end = cluster.t_end;
  stats.events_left = cluster.count(Side::Left);
  stats.events_right = cluster.count(Side::Right);
  stats.quads = process_level(cluster, ResolutionLevel::Full, &stats.features_left, &stats.features_right);
  if (options_.use_half_resolution) {
    std::size_t hl = 0;
    std::size_t hr = 0;
    stats.quads += process_level(cluster, ResolutionLevel::Half, &hl, &hr);
    stats.features_left += hl;
    stats.features_right += hr;
  }
  ++clusters_seen_;
  return stats;
}

std::vector<FeatureTracklet> window_tracklets(std::span<const FeatureTracklet> tracklets, int first_cluster,
                                              int last_cluster, const TrackletThresholds& thresholds,
                                              const StereoCameraModel& camera, bool apply_filters) {
  std::vector<FeatureTracklet> restricted;
  for (const FeatureTracklet& tr : tracklets) {
    FeatureTracklet sub;
    sub.id = tr.id;
    sub.last_descriptor = tr.last_descriptor;
    for (const auto& o : tr.observations) {
      if (o.cluster_id >= first_cluster && o.cluster_id <= last_cluster) sub.observations.push_back(o);
    }
    if (sub.observations.size() >= 2) restricted.push_back(std::move(sub));
  }
  if (apply_filters) restricted = filter_tracklets(std::move(restricted), thresholds).kept;

  std::vector<FeatureTracklet> out;
  out.reserve(restricted.size());
  for (auto& tr : restricted) {
    try {
      tr.landmark_seed = camera.triangulate(tr.observations.front().y.coords());
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateDisparity) throw;
      continue;
    }
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<FeatureTracklet> merge_resolutions(std::vector<FeatureTracklet> full, std::vector<FeatureTracklet> half) {
  std::map<double, std::vector<std::pair<double, double>>> by_time;
  for (const auto& tr : full)
    for (const auto& o : tr.observations) by_time[o.t].emplace_back(o.y.u_left, o.y.v_left);

  for (auto& tr : half) {
    const bool duplicate = std::any_of(tr.observations.begin(), tr.observations.end(), [&](const auto& o) {
      const auto it = by_time.find(o.t);
      if (it == by_time.end()) return false;
      return std::any_of(it->second.begin(), it->second.end(), [&](const auto& uv) {
        return std::hypot(uv.first - o.y.u_left, uv.second - o.y.v_left) < 1.0;
      });
    });
    if (!duplicate) full.push_back(std::move(tr));
  }
  return full;
}

std::vector<std::vector<FeatureTracklet>> build_tracklets(std::span<const EventCluster> clusters,
                                                          const FrontendOptions& options,
                                                          const StereoCameraModel& camera, int window_width) {
  if (window_width < 1) throw Error(ErrorCode::InvalidArgument, "window width must be positive");
  std::vector<std::vector<FeatureTracklet>> windows;
  if (clusters.empty()) return windows;

  TrackletBuilder builder(options);
  for (const auto& c : clusters) builder.process(c);

  const int first_index = clusters.front().index;
  const int n = static_cast<int>(clusters.size());
  const int n_windows = std::max(1, n - window_width + 1);
  for (int w = 0; w < n_windows; ++w) {
    const int a = first_index + w;
    const int b = first_index + std::min(w + window_width, n) - 1;
    auto full = window_tracklets(builder.tracklets(ResolutionLevel::Full), a, b, options.thresholds, camera);
    auto half = window_tracklets(builder.tracklets(ResolutionLevel::Half), a, b, options.thresholds, camera);
    windows.push_back(merge_resolutions(std::move(full), std::move(half)));
  }
  return windows;
}

void write_tracklets(std::ostream& out, std::span<const FeatureTracklet> tracklets) {
  char buf[64];
  const auto put = [&](double v) {
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, res.ptr - buf);
  };
  for (const auto& tr : tracklets) {
    for (const auto& o : tr.observations) {
      out << tr.id << ' ';
      put(o.t);
      out << ' ';
      put(o.y.u_left);
      out << ' ';
      put(o.y.v_left);
      out << ' ';
      put(o.y.u_right);
      out << '\n';
    }
  }
}

void write_tracklets_file(const std::string& path, std::span<const FeatureTracklet> tracklets) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write tracklet file " + path);
  out << "# tracklet_id t u_l v_l u_r\n";
  write_tracklets(out, tracklets);
}

std::vector<FeatureTracklet> read_tracklets(std::istream& in, double bin_s) {
  if (!(bin_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "tracklet time bin must be positive");
  std::map<std::int64_t, FeatureTracklet> by_id;
  std::string line;
  std::size_t line_no = 0;
  double t0 = std::numeric_limits<double>::infinity();
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first.front() == '#') continue;
    FeatureObservation o;
    std::int64_t id = 0;
    std::istringstream ids(first);
    if (!(ids >> id) || !(ls >> o.t >> o.y.u_left >> o.y.v_left >> o.y.u_right) || !std::isfinite(o.t)) {
      std::ostringstream os;
      os << "line " << line_no << ": expected `tracklet_id t u_l v_l u_r`";
      throw Error(ErrorCode::ParseError, os.str());
    }
    o.y.time = o.t;
    o.t_right = o.t;
    t0 = std::min(t0, o.t);
    auto& tr = by_id[id];
    tr.id = id;
    tr.observations.push_back(o);
  }

  std::vector<FeatureTracklet> out;
  out.reserve(by_id.size());
  for (auto& [id, tr] : by_id) {
    std::stable_sort(tr.observations.begin(), tr.observations.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < tr.observations.size(); ++i) {
      if (!(tr.observations[i].t > tr.observations[i - 1].t)) {
        throw Error(ErrorCode::ParseError, "tracklet " + std::to_string(id) + " repeats an observation time");
      }
    }
    for (auto& o : tr.observations) o.cluster_id = static_cast<int>(std::floor((o.t - t0) / bin_s));
    out.push_back(std::move(tr));
  }
  return out;
}

std::vector<FeatureTracklet> read_tracklets_file(const std::string& path, double bin_s) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open tracklet file " + path);
  return read_tracklets(in, bin_s);
}

}  // namespace ctevo
