#include "ctevo/events.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "ctevo/error.hpp"

namespace ctevo {

namespace {

// Guards the window comparison against decimal round-off in file times.
constexpr double kTimeEps = 1e-12;

[[noreturn]] void parse_error(std::size_t line_no, const std::string& msg) {
  std::ostringstream os;
  os << "line " << line_no << ": " << msg;
  throw Error(ErrorCode::ParseError, os.str());
}

template <typename T>
bool parse_token(std::string_view tok, T& value) {
  const auto* first = tok.data();
  const auto* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace

std::vector<Event> read_events(std::istream& in, int width, int height) {
  std::vector<Event> events;
  double last_t[2] = {-1.0, -1.0};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto toks = split_ws(line);
    if (toks.empty() || toks.front().front() == '#') continue;
    if (toks.size() != 5) parse_error(line_no, "expected `t x y polarity side`");

    Event e;
    if (!parse_token(toks[0], e.t) || !std::isfinite(e.t) || e.t < 0.0) parse_error(line_no, "bad timestamp");
    if (!parse_token(toks[1], e.x) || !parse_token(toks[2], e.y)) parse_error(line_no, "bad pixel coordinate");
    if (e.x < 0 || e.x >= width || e.y < 0 || e.y >= height) {
      std::ostringstream os;
      os << "pixel (" << e.x << ", " << e.y << ") outside " << width << "x" << height;
      parse_error(line_no, os.str());
    }
    if (!parse_token(toks[3], e.polarity) || (e.polarity != 1 && e.polarity != -1)) {
      parse_error(line_no, "polarity must be 1 or -1");
    }
    if (toks[4] == "L") {
      e.side = Side::Left;
    } else if (toks[4] == "R") {
      e.side = Side::Right;
    } else {
      parse_error(line_no, "side must be L or R");
    }

    double& prev = last_t[side_index(e.side)];
    if (e.t < prev) {
      std::ostringstream os;
      os << "line " << line_no << ": time " << e.t << " precedes " << prev << " on the same camera";
      throw Error(ErrorCode::NonMonotonicTime, os.str());
    }
    prev = e.t;
    events.push_back(e);
  }
  return events;
}

std::vector<Event> read_events_file(const std::string& path, int width, int height) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open event file " + path);
  return read_events(in, width, height);
}

void write_events(std::ostream& out, std::span<const Event> events) {
  char buf[64];
  for (const Event& e : events) {
    auto res = std::to_chars(buf, buf + sizeof(buf), e.t);
    out.write(buf, res.ptr - buf);
    out << ' ' << e.x << ' ' << e.y << ' ' << e.polarity << ' ' << (e.side == Side::Left ? 'L' : 'R') << '\n';
  }
}

void write_events_file(const std::string& path, std::span<const Event> events) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write event file " + path);
  out << "# t x y polarity side\n";
  write_events(out, events);
}

EventClusterer::EventClusterer(int width, int height, ClusterOptions options)
    : width_(width), height_(height), options_(options) {
  if (!(options.window_s > 0.0) || options.max_count == 0) {
    throw Error(ErrorCode::InvalidArgument, "cluster window and max count must be positive");
  }
}

void EventClusterer::open(double t) {
  EventCluster c;
  c.index = next_index_++;
  c.t_start = t;
  for (int s = 0; s < 2; ++s) {
    c.frames[s] = BinaryFrame(width_, height_, 0);
    c.saes[s] = Sae(width_, height_, kNoEvent);
  }
  current_ = std::move(c);
}

EventCluster EventClusterer::close(double t_end) {
  EventCluster c = std::move(*current_);
  current_.reset();
  c.t_end = t_end;
  return c;
}

std::vector<EventCluster> EventClusterer::push(const Event& e) {
  if (e.t < last_t_) throw Error(ErrorCode::NonMonotonicTime, "clusterer fed out-of-order events");
  last_t_ = e.t;

  std::vector<EventCluster> closed;
  if (current_ && e.t - current_->t_start >= options_.window_s - kTimeEps) {
    closed.push_back(close(current_->t_start + options_.window_s));
  }
  if (!current_) open(e.t);

  EventCluster& c = *current_;
  const int s = side_index(e.side);
  c.frames[s](e.x, e.y) = 1;
  double& sae = c.saes[s](e.x, e.y);
  if (std::isnan(sae) || e.t > sae) sae = e.t;
  if (++c.counts[s] >= options_.max_count) {
    closed.push_back(close(std::nextafter(e.t, std::numeric_limits<double>::infinity())));
  }
  return closed;
}

std::optional<EventCluster> EventClusterer::finish() {
  if (!current_) return std::nullopt;
  return close(current_->t_start + options_.window_s);
}

std::vector<EventCluster> cluster_events(std::span<const Event> events, int width, int height,
                                         ClusterOptions options) {
  std::vector<Event> ordered(events.begin(), events.end());
  std::stable_sort(ordered.begin(), ordered.end(), [](const Event& a, const Event& b) { return a.t < b.t; });

  EventClusterer clusterer(width, height, options);
  std::vector<EventCluster> out;
  for (const Event& e : ordered) {
    for (auto& c : clusterer.push(e)) out.push_back(std::move(c));
  }
  if (auto last = clusterer.finish()) out.push_back(std::move(*last));
  return out;
}

double sae_lookup(const Sae& sae, int x, int y, int radius) {
  if (!sae.contains(x, y)) throw Error(ErrorCode::InvalidArgument, "SAE lookup outside the image");
  bool found = false;
  int best_d2 = 0;
  double best_t = 0.0;
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int qx = x + dx;
      const int qy = y + dy;
      if (!sae.contains(qx, qy)) continue;
      const double t = sae(qx, qy);
      if (std::isnan(t)) continue;
      const int d2 = dx * dx + dy * dy;
      // Row-major scan: an equal (distance, time) pair never replaces an earlier hit.
      if (!found || d2 < best_d2 || (d2 == best_d2 && t > best_t)) {
        found = true;
        best_d2 = d2;
        best_t = t;
      }
    }
  }
  if (!found) {
    std::ostringstream os;
    os << "no event within " << radius << " px of (" << x << ", " << y << ")";
    throw Error(ErrorCode::NoEventNearby, os.str());
  }
  return best_t;
}

}  // namespace ctevo
