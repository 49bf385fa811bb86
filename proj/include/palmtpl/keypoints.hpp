#pragma once

// Fixed-length ordered point feature: SURF-style Hessian detection on the
// integral image, one representative keypoint per block (minimum summed
// distance to the block's other keypoints), LBP code at that point.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "palmtpl/error.hpp"
#include "palmtpl/imaging.hpp"

namespace palmtpl {

struct HessianParams {
  std::vector<int> filter_sizes{9, 15, 21};
  double threshold = 1000.0;
  double dxy_weight = 0.9;

  void validate() const {
    if (filter_sizes.empty()) throw Error(Errc::invalid_argument, "no Hessian filter sizes");
    for (std::size_t i = 0; i < filter_sizes.size(); ++i) {
      const int L = filter_sizes[i];
      if (L < 3 || L % 3 != 0 || (L / 3) % 2 == 0) {
        throw Error(Errc::invalid_argument, "Hessian filter sizes must be odd multiples of 3");
      }
      if (i > 0 && L <= filter_sizes[i - 1]) {
        throw Error(Errc::invalid_argument, "Hessian filter sizes must be strictly increasing");
      }
    }
  }
};

struct Keypoint {
  int x = 0;
  int y = 0;
  int scale = 0;  // filter size
  double response = 0.0;
  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

/// Second-derivative box-filter sums at one pixel for filter size L (lobe L/3),
/// before area normalisation. Regions outside the image count as zero.
struct HessianSums {
  std::int64_t dxx = 0;
  std::int64_t dyy = 0;
  std::int64_t dxy = 0;
};

inline HessianSums hessian_sums(const IntegralImage& ii, int x, int y, int L) noexcept {
  const int lobe = L / 3;
  const int b = (L - 1) / 2;
  auto box = [&](int x0, int y0, int w, int h) { return static_cast<std::int64_t>(ii.box_sum({x0, y0, w, h})); };
  HessianSums s;
  // Three horizontally stacked lobes (+1, -2, +1), each lobe wide, 2*lobe-1 tall.
  s.dxx = box(x - b, y - lobe + 1, L, 2 * lobe - 1) - 3 * box(x - lobe / 2, y - lobe + 1, lobe, 2 * lobe - 1);
  s.dyy = box(x - lobe + 1, y - b, 2 * lobe - 1, L) - 3 * box(x - lobe + 1, y - lobe / 2, 2 * lobe - 1, lobe);
  // Diagonal quadrants around a one-pixel cross.
  s.dxy = box(x - lobe, y - lobe, lobe, lobe) + box(x + 1, y + 1, lobe, lobe) - box(x + 1, y - lobe, lobe, lobe) -
          box(x - lobe, y + 1, lobe, lobe);
  return s;
}

inline double hessian_det(const HessianSums& s, int L, double dxy_weight) noexcept {
  const double area = static_cast<double>(L) * static_cast<double>(L);
  const double dxx = static_cast<double>(s.dxx) / area;
  const double dyy = static_cast<double>(s.dyy) / area;
  const double dxy = dxy_weight * (static_cast<double>(s.dxy) / area);
  return dxx * dyy - dxy * dxy;
}

/// Dense determinant maps for every configured scale that fits the image.
struct HessianStack {
  int width = 0;
  int height = 0;
  std::vector<int> scales;
  std::vector<std::vector<double>> det;  // det[s][y * width + x]

  double at(std::size_t s, int x, int y) const noexcept {
    return det[s][static_cast<std::size_t>(y) * width + x];
  }
  /// Pixels whose full filter footprint lies inside the image.
  bool valid(std::size_t s, int x, int y) const noexcept {
    const int b = (scales[s] - 1) / 2;
    return x >= b && y >= b && x < width - b && y < height - b;
  }
};

inline HessianStack hessian_stack(const GrayImage& img, const HessianParams& params) {
  params.validate();
  const IntegralImage ii(img);
  HessianStack st;
  st.width = img.width();
  st.height = img.height();
  for (const int L : params.filter_sizes) {
    if (L > img.width() || L > img.height()) continue;
    st.scales.push_back(L);
    std::vector<double> det(static_cast<std::size_t>(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) {
        det[static_cast<std::size_t>(y) * img.width() + x] = hessian_det(hessian_sums(ii, x, y, L), L, params.dxy_weight);
      }
    }
    st.det.push_back(std::move(det));
  }
  return st;
}

/// Local maxima over space and adjacent scales (3x3x3, or 3x3x2 at the
/// first/last scale) at or above the threshold, sorted by (y, x, scale).
inline std::vector<Keypoint> detect_surf(const HessianStack& st, double threshold) {
  std::vector<Keypoint> out;
  const std::size_t ns = st.scales.size();
  for (std::size_t s = 0; s < ns; ++s) {
    const std::size_t s_lo = s == 0 ? 0 : s - 1;
    const std::size_t s_hi = s + 1 < ns ? s + 1 : s;
    for (int y = 1; y + 1 < st.height; ++y) {
      for (int x = 1; x + 1 < st.width; ++x) {
        if (!st.valid(s, x, y)) continue;
        const double v = st.at(s, x, y);
        if (v < threshold) continue;
        bool is_max = true;
        for (std::size_t t = s_lo; t <= s_hi && is_max; ++t) {
          for (int dy = -1; dy <= 1 && is_max; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              if (t == s && dx == 0 && dy == 0) continue;
              if (st.at(t, x + dx, y + dy) >= v) {
                is_max = false;
                break;
              }
            }
          }
        }
        if (is_max) out.push_back({x, y, st.scales[s], v});
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
    return std::tie(a.y, a.x, a.scale) < std::tie(b.y, b.x, b.scale);
  });
  return out;
}

inline std::vector<Keypoint> detect_surf(const GrayImage& img, const HessianParams& params) {
  return detect_surf(hessian_stack(img, params), params.threshold);
}

struct PixelPoint {
  int x = 0;
  int y = 0;
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

inline constexpr double kDistanceTieTolerance = 1e-9;

/// Index of the point minimising the summed Euclidean distance to all other
/// points; ties go to the lowest index. Sums within a relative 1e-9 count as
/// tied, so equal sums reached in a different summation order still tie.
/// Empty input gives nullopt.
inline std::optional<std::size_t> representative_index(std::span<const PixelPoint> pts) {
  if (pts.empty()) return std::nullopt;
  std::size_t best = 0;
  double best_sum = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < pts.size(); ++j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k == j) continue;
      const double dx = pts[j].x - pts[k].x;
      const double dy = pts[j].y - pts[k].y;
      sum += std::sqrt(dx * dx + dy * dy);
    }
    if (j == 0 || sum < best_sum - kDistanceTieTolerance * std::max(1.0, best_sum)) {
      best_sum = sum;
      best = j;
    }
  }
  return best;
}

/// Where the representative point of a block came from.
enum class RepresentativeSource : std::uint8_t { keypoint, max_response, block_centre };

struct Representative {
  PixelPoint point;
  RepresentativeSource source = RepresentativeSource::keypoint;
};

/// Representative point of one block. Without keypoints, falls back to the
/// pixel of largest positive determinant (any scale, full footprint inside
/// the image), then to the block centre.
inline Representative representative_point(std::span<const PixelPoint> block_points, const Rect& block,
                                           const HessianStack* stack = nullptr) {
  if (const auto idx = representative_index(block_points)) {
    return {block_points[*idx], RepresentativeSource::keypoint};
  }
  if (stack != nullptr) {
    double best = 0.0;
    std::optional<PixelPoint> arg;
    for (int y = block.y; y < block.y + block.h; ++y) {
      for (int x = block.x; x < block.x + block.w; ++x) {
        if (x >= stack->width || y >= stack->height) continue;
        for (std::size_t s = 0; s < stack->scales.size(); ++s) {
          if (!stack->valid(s, x, y)) continue;
          const double v = stack->at(s, x, y);
          if (v > best) {
            best = v;
            arg = PixelPoint{x, y};
          }
        }
      }
    }
    if (arg) return {*arg, RepresentativeSource::max_response};
  }
  return {{block.x + block.w / 2, block.y + block.h / 2}, RepresentativeSource::block_centre};
}

/// Neighbour order of the LBP code: clockwise from top-left, bit L = 2^L.
inline constexpr std::array<Offset, 8> kLbpNeighbours{
    {{-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}}};

/// 8-neighbour LBP; a bit is set when the neighbour is >= the centre.
inline std::uint8_t lbp_code(const GrayImage& img, int x, int y) noexcept {
  const int centre = img.clamped(x, y);
  unsigned code = 0;
  for (unsigned bit = 0; bit < kLbpNeighbours.size(); ++bit) {
    const auto o = kLbpNeighbours[bit];
    if (img.clamped(x + o.dx, y + o.dy) >= centre) code |= 1u << bit;
  }
  return static_cast<std::uint8_t>(code);
}

struct PointFeature {
  std::vector<std::uint8_t> codes;              // p_1..p_m, block order
  std::vector<Representative> representatives;  // RP_1..RP_m
  std::vector<std::size_t> counts;              // keypoints per block

  std::size_t size() const noexcept { return codes.size(); }
};

/// Detect once on the padded image, bin keypoints by block, pick one
/// representative per block and LBP-code it.
inline PointFeature point_feature(const BlockGrid& grid, const HessianParams& params,
                                  std::vector<Keypoint>* keypoints_out = nullptr) {
  const GrayImage& img = grid.padded;
  const HessianStack stack = hessian_stack(img, params);
  const std::vector<Keypoint> kps = detect_surf(stack, params.threshold);

  std::vector<std::vector<PixelPoint>> per_block(grid.count());
  for (const Keypoint& kp : kps) per_block[grid.block_of(kp.x, kp.y)].push_back({kp.x, kp.y});

  PointFeature feat;
  feat.codes.reserve(grid.count());
  feat.representatives.reserve(grid.count());
  feat.counts.reserve(grid.count());
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const Representative rp = representative_point(per_block[i], grid.blocks[i], &stack);
    feat.codes.push_back(lbp_code(img, rp.point.x, rp.point.y));
    feat.representatives.push_back(rp);
    feat.counts.push_back(per_block[i].size());
  }
  if (keypoints_out != nullptr) *keypoints_out = kps;
  return feat;
}

}  // namespace palmtpl
