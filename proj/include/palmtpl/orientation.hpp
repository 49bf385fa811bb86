#pragma once

// Line-orientation coding with a 6-direction MFRAT filter bank and
// two-direction fusion into 12 orientation levels.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "palmtpl/error.hpp"
#include "palmtpl/imaging.hpp"

namespace palmtpl {

inline constexpr int kDirections = 6;
inline constexpr int kOrientationCodes = 12;

/// Discrete line masks through the window centre at angles (pi/6) q, q = 0..5.
/// Image coordinates: x to the right, y downwards; angle measured from +x toward +y.
struct MfratBank {
  int window = 13;
  std::array<std::vector<Offset>, kDirections> masks;
};

/// Oblique lines are rounded along their major axis so every mask has exactly
/// `window` offsets and is symmetric under (dx, dy) -> (-dx, -dy).
inline MfratBank build_bank(int window = 13) {
  if (window < 5 || window % 2 == 0) {
    throw Error(Errc::invalid_argument, "MFRAT window must be odd and >= 5");
  }
  constexpr double kPi = 3.14159265358979323846;
  MfratBank bank;
  bank.window = window;
  const int half = (window - 1) / 2;
  for (int q = 0; q < kDirections; ++q) {
    const double theta = kPi / 6.0 * q;
    auto& mask = bank.masks[q];
    mask.reserve(static_cast<std::size_t>(window));
    if (q == 0) {
      for (int t = -half; t <= half; ++t) mask.push_back({t, 0});
    } else if (q == 3) {
      for (int t = -half; t <= half; ++t) mask.push_back({0, t});
    } else if (q == 1 || q == 5) {
      // |theta| within 45 degrees of horizontal: x-major.
      const double slope = std::tan(theta);
      for (int t = -half; t <= half; ++t) {
        mask.push_back({t, static_cast<int>(std::lround(t * slope))});
      }
    } else {
      const double inv = std::cos(theta) / std::sin(theta);
      for (int t = -half; t <= half; ++t) {
        mask.push_back({static_cast<int>(std::lround(t * inv)), t});
      }
    }
  }
  return bank;
}

/// Line sums f_0..f_5 at one pixel.
using Responses = std::array<std::uint64_t, kDirections>;

inline Responses responses_at(const GrayImage& img, const MfratBank& bank, int x, int y) {
  Responses f{};
  for (int q = 0; q < kDirections; ++q) {
    std::uint64_t sum = 0;
    for (const Offset o : bank.masks[q]) sum += img.clamped(x + o.dx, y + o.dy);
    f[q] = sum;
  }
  return f;
}

struct FusionParams {
  std::uint64_t threshold = 8;  // r, in line-sum units
  bool cyclic_wrap = false;     // treat directions 5 and 0 as adjacent
};

/// Two-direction fusion. Ties on the minimum and second minimum resolve to
/// the smaller direction index.
inline int fuse_directions(const Responses& f, const FusionParams& params) noexcept {
  int qmin = 0;
  for (int q = 1; q < kDirections; ++q) {
    if (f[q] < f[qmin]) qmin = q;
  }
  int qsec = -1;
  for (int q = 0; q < kDirections; ++q) {
    if (q == qmin) continue;
    if (qsec < 0 || f[q] < f[qsec]) qsec = q;
  }
  const bool close = f[qsec] - f[qmin] < params.threshold;
  const int gap = qmin > qsec ? qmin - qsec : qsec - qmin;
  if (close && gap == 1) return qmin + qsec;
  if (close && params.cyclic_wrap && gap == kDirections - 1) return kOrientationCodes - 1;
  return 2 * qmin;
}

/// Per-pixel orientation codes in [0, 11].
struct OrientationMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> codes;

  std::uint8_t operator()(int x, int y) const noexcept {
    return codes[static_cast<std::size_t>(y) * width + x];
  }
};

inline OrientationMap orientation_map(const GrayImage& img, const MfratBank& bank, const FusionParams& params) {
  OrientationMap map;
  map.width = img.width();
  map.height = img.height();
  map.codes.resize(static_cast<std::size_t>(map.width) * map.height);

  // Interior pixels read without clamping; a border ring of `half` uses
  // the clamped path. Both produce the same sums as responses_at.
  const int half = (bank.window - 1) / 2;
  const int w = img.width();
  const auto px = img.pixels();
  std::array<std::vector<std::ptrdiff_t>, kDirections> linear;
  for (int q = 0; q < kDirections; ++q) {
    for (const Offset o : bank.masks[q]) linear[q].push_back(static_cast<std::ptrdiff_t>(o.dy) * w + o.dx);
  }
  for (int y = 0; y < img.height(); ++y) {
    const bool row_inside = y >= half && y < img.height() - half;
    for (int x = 0; x < w; ++x) {
      Responses f;
      if (row_inside && x >= half && x < w - half) {
        const std::uint8_t* centre = px.data() + static_cast<std::ptrdiff_t>(y) * w + x;
        for (int q = 0; q < kDirections; ++q) {
          std::uint64_t sum = 0;
          for (const std::ptrdiff_t off : linear[q]) sum += centre[off];
          f[q] = sum;
        }
      } else {
        f = responses_at(img, bank, x, y);
      }
      map.codes[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint8_t>(fuse_directions(f, params));
    }
  }
  return map;
}

/// Fixed-length ordered orientation feature: one code per cell, row-major.
struct OrientationFeature {
  int rows = 0;
  int cols = 0;
  std::vector<std::uint8_t> codes;

  std::size_t size() const noexcept { return codes.size(); }
  std::uint8_t at(int r, int c) const noexcept { return codes[static_cast<std::size_t>(r) * cols + c]; }
};

/// Mode of each non-overlapping cell x cell tile; ties go to the smallest code.
inline OrientationFeature downsample_codes(const OrientationMap& map, int cell) {
  if (cell < 1 || map.width % cell != 0 || map.height % cell != 0) {
    throw Error(Errc::invalid_argument, "cell size must divide the orientation map dimensions");
  }
  OrientationFeature feat;
  feat.rows = map.height / cell;
  feat.cols = map.width / cell;
  feat.codes.reserve(static_cast<std::size_t>(feat.rows) * feat.cols);
  for (int r = 0; r < feat.rows; ++r) {
    for (int c = 0; c < feat.cols; ++c) {
      std::array<int, kOrientationCodes> hist{};
      for (int y = r * cell; y < (r + 1) * cell; ++y) {
        for (int x = c * cell; x < (c + 1) * cell; ++x) ++hist[map(x, y)];
      }
      int best = 0;
      for (int v = 1; v < kOrientationCodes; ++v) {
        if (hist[v] > hist[best]) best = v;
      }
      feat.codes.push_back(static_cast<std::uint8_t>(best));
    }
  }
  return feat;
}

/// Orientation map rendered as a PGM-ready raster (code * 21).
inline GrayImage render_orientation(const OrientationMap& map) {
  GrayImage img(map.width, map.height);
  auto out = img.pixels();
  for (std::size_t i = 0; i < map.codes.size(); ++i) out[i] = static_cast<std::uint8_t>(map.codes[i] * 21);
  return img;
}

}  // namespace palmtpl
