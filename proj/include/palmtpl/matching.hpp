#pragma once

// Similarity scores before (positional orientation/LBP) and after
// (index collision rate) the IOM transform. All scores lie in [0, 1].

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>

#include "palmtpl/error.hpp"
#include "palmtpl/pipeline.hpp"
#include "palmtpl/template.hpp"

namespace palmtpl {

struct MatchConfig {
  double w_o = 0.5;      // weight of the orientation similarity
  int shift_radius = 0;  // cell-grid shift search, 0 = off

  static MatchConfig from(const Config& c) { return {c.w_o, c.shift_radius}; }
};

/// Circular distance between 12-level orientation codes, in [0, 6].
inline int angular_dist(int a, int b) {
  if (a < 0 || a >= kOrientationCodes || b < 0 || b >= kOrientationCodes) {
    throw Error(Errc::invalid_argument, "orientation code out of range");
  }
  const int d = a > b ? a - b : b - a;
  return std::min(d, kOrientationCodes - d);
}

namespace detail {

inline constexpr int kMaxAngularDist = kOrientationCodes / 2;

// Orientation similarity with `b` shifted by (dr, dc) cells; only
// overlapping cells count. Returns -1 when nothing overlaps.
inline double orientation_similarity(const OrientationFeature& a, const OrientationFeature& b, int dr, int dc) {
  long total = 0;
  long n = 0;
  for (int r = std::max(0, -dr); r < std::min(a.rows, a.rows - dr); ++r) {
    for (int c = std::max(0, -dc); c < std::min(a.cols, a.cols - dc); ++c) {
      total += angular_dist(a.at(r, c), b.at(r + dr, c + dc));
      ++n;
    }
  }
  if (n == 0) return -1.0;
  return 1.0 - static_cast<double>(total) / (static_cast<double>(n) * kMaxAngularDist);
}

}  // namespace detail

inline double pre_transform_score(const Features& f1, const Features& f2, const MatchConfig& cfg = {}) {
  const auto& o1 = f1.orientation;
  const auto& o2 = f2.orientation;
  if (o1.rows != o2.rows || o1.cols != o2.cols || o1.size() != o2.size() || f1.points.size() != f2.points.size()) {
    throw Error(Errc::dimension_mismatch, "features of different length cannot be compared");
  }
  double s_o = 1.0;
  if (o1.size() > 0) {
    s_o = detail::orientation_similarity(o1, o2, 0, 0);
    for (int dr = -cfg.shift_radius; dr <= cfg.shift_radius; ++dr) {
      for (int dc = -cfg.shift_radius; dc <= cfg.shift_radius; ++dc) {
        s_o = std::max(s_o, detail::orientation_similarity(o1, o2, dr, dc));
      }
    }
  }
  double s_p = 1.0;
  if (f1.points.size() > 0) {
    long bits = 0;
    for (std::size_t i = 0; i < f1.points.size(); ++i) {
      bits += std::popcount(static_cast<unsigned>(f1.points.codes[i] ^ f2.points.codes[i]));
    }
    s_p = 1.0 - static_cast<double>(bits) / (8.0 * static_cast<double>(f1.points.size()));
  }
  return cfg.w_o * s_o + (1.0 - cfg.w_o) * s_p;
}

/// Collision rate without any seed or parameter check. Only meant for
/// revocability and unlinkability statistics.
inline double post_transform_score_unchecked(const RevocableTemplate& a, const RevocableTemplate& b) {
  if (a.l() != b.l() || a.l() == 0) throw Error(Errc::param_mismatch, "templates differ in length");
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.l(); ++i) same += a.indices[i] == b.indices[i] ? 1 : 0;
  return static_cast<double>(same) / static_cast<double>(a.l());
}

inline double post_transform_score(const RevocableTemplate& a, const RevocableTemplate& b) {
  if (a.seed != b.seed) throw Error(Errc::seed_mismatch, "templates were issued under different seeds");
  if (a.l() != b.l() || a.k != b.k || a.dim != b.dim || a.mode != b.mode) {
    throw Error(Errc::param_mismatch, "templates were issued with different parameters");
  }
  return post_transform_score_unchecked(a, b);
}

}  // namespace palmtpl
