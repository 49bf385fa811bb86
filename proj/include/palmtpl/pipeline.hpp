#pragma once

// Image -> (O, P) -> C -> template, wired from a Config.

#include <cstdint>
#include <vector>

#include "palmtpl/config.hpp"
#include "palmtpl/imaging.hpp"
#include "palmtpl/keypoints.hpp"
#include "palmtpl/orientation.hpp"
#include "palmtpl/template.hpp"

namespace palmtpl {

struct Features {
  OrientationFeature orientation;
  PointFeature points;
};

class Extractor {
 public:
  explicit Extractor(Config cfg) : cfg_(std::move(cfg)), bank_(build_bank(cfg_.mfrat_window)) {
    cfg_.validate();
    hessian_.threshold = cfg_.hessian_threshold;
    hessian_.validate();
    fusion_.threshold = cfg_.fusion_r;
    fusion_.cyclic_wrap = cfg_.cyclic_wrap;
  }

  const Config& config() const noexcept { return cfg_; }
  const MfratBank& bank() const noexcept { return bank_; }
  const HessianParams& hessian() const noexcept { return hessian_; }
  const FusionParams& fusion() const noexcept { return fusion_; }

  BlockGrid blocks(const GrayImage& img) const {
    return pad_and_block(img, cfg_.block_size, static_cast<std::size_t>(cfg_.block_count));
  }

  Features extract(const GrayImage& img, std::vector<Keypoint>* keypoints_out = nullptr) const {
    const BlockGrid grid = blocks(img);
    Features f;
    f.orientation = downsample_codes(orientation_map(grid.padded, bank_, fusion_), cfg_.cell_size);
    f.points = point_feature(grid, hessian_, keypoints_out);
    return f;
  }

  FuseOptions fuse_options(std::size_t orientation_len = 0) const {
    FuseOptions o;
    o.mode = cfg_.mode;
    o.scale_segments = cfg_.scale_segments;
    o.expected_orientation = orientation_len;
    o.expected_points = static_cast<std::size_t>(cfg_.block_count);
    return o;
  }

  FusedFeature fused(const Features& f) const { return fuse(f.orientation, f.points, fuse_options()); }

  IomParams iom_params(std::uint64_t seed) const {
    IomParams p;
    p.l = cfg_.iom_l;
    p.k = cfg_.iom_k;
    p.seed = seed;
    p.mode = cfg_.mode;
    return p;
  }

  /// Single-image enrolment without a materialised bank.
  RevocableTemplate enroll(const GrayImage& img, std::uint64_t seed) const {
    return iom_hash_streaming(fused(extract(img)), iom_params(seed));
  }

 private:
  Config cfg_;
  MfratBank bank_;
  HessianParams hessian_;
  FusionParams fusion_;
};

}  // namespace palmtpl
