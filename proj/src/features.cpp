#include "ctevo/features.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

namespace ctevo {

namespace {

std::vector<double> gaussian_kernel(double sigma, int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable convolution with zero padding.
Image<double> blur(const Image<double>& in, const std::vector<double>& k) {
  const int r = static_cast<int>(k.size() / 2);
  const int w = in.width();
  const int h = in.height();
  Image<double> tmp(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int q = x + i;
        if (q >= 0 && q < w) acc += k[i + r] * in(q, y);
      }
      tmp(x, y) = acc;
    }
  }
  Image<double> out(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = -r; i <= r; ++i) {
        const int q = y + i;
        if (q >= 0 && q < h) acc += k[i + r] * tmp(x, q);
      }
      out(x, y) = acc;
    }
  }
  return out;
}

bool stereo_ok(const Feature& left, const Feature& right, const MatchOptions& o) {
  const double d = left.x - right.x;
  return std::abs(left.y - right.y) <= o.stereo_dv_max && d >= 0.0 && d <= o.max_disparity;
}

bool gate_pass(const Feature& from, const Feature& to, MatchGate gate, const MatchOptions& o) {
  switch (gate) {
    case MatchGate::LeftToRight: return stereo_ok(from, to, o);
    case MatchGate::RightToLeft: return stereo_ok(to, from, o);
    case MatchGate::Temporal: return std::hypot(from.x - to.x, from.y - to.y) <= o.temporal_radius;
  }
  return false;
}

struct TestPair {
  int x0, y0, x1, y1;
};

// Fixed pseudo-random comparison pattern, isotropic Gaussian around the keypoint.
const std::array<TestPair, Descriptor::kBits>& test_pairs() {
  static const auto pairs = [] {
    std::array<TestPair, Descriptor::kBits> out{};
    std::mt19937 gen(0x5eed);
    std::normal_distribution<double> n(0.0, (2 * Descriptor::kRadius + 1) / 5.0);
    auto draw = [&] { return std::clamp(static_cast<int>(std::lround(n(gen))), -Descriptor::kRadius, Descriptor::kRadius); };
    for (auto& p : out) {
      do {
        p = TestPair{draw(), draw(), draw(), draw()};
      } while (p.x0 == p.x1 && p.y0 == p.y1);
    }
    return out;
  }();
  return pairs;
}

Image<double> smooth(const BinaryFrame& frame) {
  static const std::vector<double> kSmooth = gaussian_kernel(1.0, 2);
  Image<double> img(frame.width(), frame.height(), 0.0);
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x) img(x, y) = frame(x, y) ? 1.0 : 0.0;
  return blur(img, kSmooth);
}

Descriptor sample_smoothed(const Image<double>& s, int x, int y) {
  auto at = [&](int qx, int qy) { return s.contains(qx, qy) ? s(qx, qy) : 0.0; };
  Descriptor d;
  const auto& pairs = test_pairs();
  for (int bit = 0; bit < Descriptor::kBits; ++bit) {
    const TestPair& p = pairs[bit];
    if (at(x + p.x0, y + p.y0) < at(x + p.x1, y + p.y1)) d.bits[bit / 64] |= std::uint64_t{1} << (bit % 64);
  }
  return d;
}

}  // namespace

int hamming(const Descriptor& a, const Descriptor& b) {
  return std::popcount(a.bits[0] ^ b.bits[0]) + std::popcount(a.bits[1] ^ b.bits[1]);
}

Descriptor sample_descriptor(const BinaryFrame& frame, int x, int y) { return sample_smoothed(smooth(frame), x, y); }

Image<double> BinaryCornerDetector::response(const BinaryFrame& frame) const {
  return response_of_smoothed(smooth(frame));
}

Image<double> BinaryCornerDetector::response_of_smoothed(const Image<double>& s) const {
  const int w = s.width();
  const int h = s.height();
  static const std::vector<double> kTensor = gaussian_kernel(1.5, 3);

  Image<double> gxx(w, h, 0.0), gxy(w, h, 0.0), gyy(w, h, 0.0);
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      const double gx = 0.5 * (s(x + 1, y) - s(x - 1, y));
      const double gy = 0.5 * (s(x, y + 1) - s(x, y - 1));
      gxx(x, y) = gx * gx;
      gxy(x, y) = gx * gy;
      gyy(x, y) = gy * gy;
    }
  }
  const Image<double> a = blur(gxx, kTensor);
  const Image<double> b = blur(gxy, kTensor);
  const Image<double> c = blur(gyy, kTensor);

  Image<double> r(w, h, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double half_tr = 0.5 * (a(x, y) + c(x, y));
      const double det = a(x, y) * c(x, y) - b(x, y) * b(x, y);
      r(x, y) = half_tr - std::sqrt(std::max(half_tr * half_tr - det, 0.0));
    }
  }
  return r;
}

std::vector<Feature> BinaryCornerDetector::detect(const BinaryFrame& frame) const {
  const Image<double> s = smooth(frame);
  const Image<double> r = response_of_smoothed(s);
  const int w = frame.width();
  const int h = frame.height();
  const int border = Descriptor::kRadius;
  const int n = options_.nms_radius;

  std::vector<Feature> out;
  for (int y = border; y < h - border; ++y) {
    for (int x = border; x < w - border; ++x) {
      const double v = r(x, y);
      if (v < options_.min_response) continue;
      bool is_max = true;
      for (int dy = -n; dy <= n && is_max; ++dy) {
        for (int dx = -n; dx <= n; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const int qx = x + dx;
          const int qy = y + dy;
          if (!r.contains(qx, qy)) continue;
          const double q = r(qx, qy);
          // Strict maximum; plateaus resolve to the first pixel in row-major order.
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          if (q > v || (earlier && q == v)) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      out.push_back(Feature{static_cast<double>(x), static_cast<double>(y), v, sample_smoothed(s, x, y)});
    }
  }
  return out;
}

std::vector<Feature> detect_features(const BinaryFrame& frame, const DetectorOptions& options) {
  return BinaryCornerDetector(options).detect(frame);
}

BinaryFrame downsample(const BinaryFrame& frame) {
  const int w = frame.width() / 2;
  const int h = frame.height() / 2;
  BinaryFrame out(w, h, 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      out(x, y) = frame(2 * x, 2 * y) | frame(2 * x + 1, 2 * y) | frame(2 * x, 2 * y + 1) | frame(2 * x + 1, 2 * y + 1);
  return out;
}

Sae downsample(const Sae& sae) {
  const int w = sae.width() / 2;
  const int h = sae.height() / 2;
  Sae out(w, h, kNoEvent);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double best = kNoEvent;
      for (int k = 0; k < 4; ++k) {
        const double t = sae(2 * x + (k & 1), 2 * y + (k >> 1));
        if (!std::isnan(t) && (std::isnan(best) || t > best)) best = t;
      }
      out(x, y) = best;
    }
  }
  return out;
}

std::vector<int> match_features(std::span<const Feature> from, std::span<const Feature> to, MatchGate gate,
                                const MatchOptions& options) {
  constexpr int kNone = std::numeric_limits<int>::max();
  const auto n_from = static_cast<int>(from.size());
  const auto n_to = static_cast<int>(to.size());

  // Best and runner-up distances in both directions over gated pairs.
  std::vector<int> fwd_best(n_from, -1), fwd_d1(n_from, kNone), fwd_d2(n_from, kNone);
  std::vector<int> rev_best(n_to, -1), rev_d1(n_to, kNone), rev_d2(n_to, kNone);
  for (int i = 0; i < n_from; ++i) {
    for (int j = 0; j < n_to; ++j) {
      if (!gate_pass(from[i], to[j], gate, options)) continue;
      const int d = hamming(from[i].descriptor, to[j].descriptor);
      if (d < fwd_d1[i]) {
        fwd_d2[i] = fwd_d1[i];
        fwd_d1[i] = d;
        fwd_best[i] = j;
      } else if (d < fwd_d2[i]) {
        fwd_d2[i] = d;
      }
      if (d < rev_d1[j]) {
        rev_d2[j] = rev_d1[j];
        rev_d1[j] = d;
        rev_best[j] = i;
      } else if (d < rev_d2[j]) {
        rev_d2[j] = d;
      }
    }
  }

  std::vector<int> out(n_from, -1);
  for (int i = 0; i < n_from; ++i) {
    const int j = fwd_best[i];
    if (j < 0 || fwd_d1[i] > options.max_hamming) continue;
    if (fwd_d2[i] != kNone && !(fwd_d1[i] < options.ratio * fwd_d2[i])) continue;
    if (rev_best[j] != i || rev_d2[j] == rev_d1[j]) continue;
    out[i] = j;
  }
  return out;
}

std::vector<Quad> quad_match(std::span<const Feature> cur_left, std::span<const Feature> cur_right,
                             std::span<const Feature> prev_right, std::span<const Feature> prev_left,
                             const MatchOptions& options) {
  const auto cl_cr = match_features(cur_left, cur_right, MatchGate::LeftToRight, options);
  const auto cr_pr = match_features(cur_right, prev_right, MatchGate::Temporal, options);
  const auto pr_pl = match_features(prev_right, prev_left, MatchGate::RightToLeft, options);
  const auto pl_cl = match_features(prev_left, cur_left, MatchGate::Temporal, options);

  std::vector<Quad> quads;
  for (int i = 0; i < static_cast<int>(cur_left.size()); ++i) {
    const int cr = cl_cr[i];
    if (cr < 0) continue;
    const int pr = cr_pr[cr];
    if (pr < 0) continue;
    const int pl = pr_pl[pr];
    if (pl < 0) continue;
    if (pl_cl[pl] != i) continue;
    quads.push_back(Quad{i, cr, pr, pl});
  }
  return quads;
}

}  // namespace ctevo
