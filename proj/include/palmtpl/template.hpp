#pragma once

// Feature-level fusion and Index-of-Max hashing into revocable templates.
//
// Projection entries: W^i column j is the Gaussian stream (see rng.hpp)
// keyed by combine(combine(seed, i), j), i and j zero-based; component c of
// the column is entry c of that stream. Inner products accumulate in double
// in component order c = 0, 1, ..., d-1.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "palmtpl/error.hpp"
#include "palmtpl/keypoints.hpp"
#include "palmtpl/orientation.hpp"
#include "palmtpl/rng.hpp"

namespace palmtpl {

enum class FusionMode : std::uint8_t { raw = 0, angular = 1 };

inline std::string to_string(FusionMode m) { return m == FusionMode::raw ? "raw" : "angular"; }

// Affine maps to zero mean / unit variance under a uniform code alphabet.
inline constexpr double kOrientationCentre = 5.5;
inline constexpr double kOrientationScale = 3.452;
inline constexpr double kLbpCentre = 127.5;
inline constexpr double kLbpScale = 73.9;

struct FusedFeature {
  FusionMode mode = FusionMode::raw;
  std::vector<double> values;

  std::size_t dim() const noexcept { return values.size(); }
};

inline std::size_t fused_dim(std::size_t orientation_len, std::size_t point_len, FusionMode mode) noexcept {
  return (mode == FusionMode::angular ? 2 * orientation_len : orientation_len) + point_len;
}

struct FuseOptions {
  FusionMode mode = FusionMode::raw;
  bool scale_segments = true;
  std::size_t expected_orientation = 0;  // 0: not checked
  std::size_t expected_points = 0;       // 0: not checked
};

/// C = [O P]: orientation segment first, then the point segment.
inline FusedFeature fuse(std::span<const std::uint8_t> orientation, std::span<const std::uint8_t> points,
                         const FuseOptions& opt = {}) {
  if (opt.expected_orientation != 0 && orientation.size() != opt.expected_orientation) {
    throw Error(Errc::dimension_mismatch, "orientation feature has " + std::to_string(orientation.size()) +
                                              " codes, expected " + std::to_string(opt.expected_orientation));
  }
  if (opt.expected_points != 0 && points.size() != opt.expected_points) {
    throw Error(Errc::dimension_mismatch, "point feature has " + std::to_string(points.size()) +
                                              " codes, expected " + std::to_string(opt.expected_points));
  }
  FusedFeature c;
  c.mode = opt.mode;
  c.values.reserve(fused_dim(orientation.size(), points.size(), opt.mode));
  for (const std::uint8_t v : orientation) {
    if (opt.mode == FusionMode::angular) {
      // Codes are line directions, period 12: code v sits at angle 2 pi v / 12.
      const SinCos sc = sincos_2pi(static_cast<double>(v) / kOrientationCodes);
      c.values.push_back(sc.cos);
      c.values.push_back(sc.sin);
    } else if (opt.scale_segments) {
      c.values.push_back((static_cast<double>(v) - kOrientationCentre) / kOrientationScale);
    } else {
      c.values.push_back(static_cast<double>(v));
    }
  }
  for (const std::uint8_t v : points) {
    c.values.push_back(opt.scale_segments ? (static_cast<double>(v) - kLbpCentre) / kLbpScale
                                          : static_cast<double>(v));
  }
  return c;
}

inline FusedFeature fuse(const OrientationFeature& o, const PointFeature& p, const FuseOptions& opt = {}) {
  return fuse(std::span<const std::uint8_t>(o.codes), std::span<const std::uint8_t>(p.codes), opt);
}

struct IomParams {
  std::uint32_t l = 420;  // hash functions
  std::uint32_t k = 50;   // projections per hash
  std::uint64_t seed = 0;
  FusionMode mode = FusionMode::raw;

  void validate() const {
    if (l < 1) throw Error(Errc::invalid_argument, "IOM l must be >= 1");
    if (k < 1 || k > 65536) throw Error(Errc::invalid_argument, "IOM k must be in [1, 65536]");
  }
  /// k = 1 hashes every input to the same template.
  bool degenerate() const noexcept { return k == 1; }
};

inline std::uint64_t column_key(std::uint64_t seed, std::uint32_t i, std::uint32_t j) noexcept {
  return combine(combine(seed, i), j);
}

/// Materialised projection bank: l * k columns of dimension d.
class ProjectionBank {
 public:
  ProjectionBank(const IomParams& params, std::size_t dim) : params_(params), dim_(dim) {
    params.validate();
    if (dim < 1) throw Error(Errc::invalid_argument, "projection dimension must be >= 1");
    entries_.resize(static_cast<std::size_t>(params.l) * params.k * dim);
    for (std::uint32_t i = 0; i < params.l; ++i) {
      for (std::uint32_t j = 0; j < params.k; ++j) {
        fill_gaussian(column_key(params.seed, i, j), column_mut(i, j));
      }
    }
  }

  /// Explicit entries, column-major per hash: entry c of w_j^i sits at
  /// ((i * k) + j) * dim + c.
  ProjectionBank(const IomParams& params, std::size_t dim, std::vector<double> entries)
      : params_(params), dim_(dim), entries_(std::move(entries)) {
    params.validate();
    if (dim < 1) throw Error(Errc::invalid_argument, "projection dimension must be >= 1");
    if (entries_.size() != static_cast<std::size_t>(params.l) * params.k * dim) {
      throw Error(Errc::dimension_mismatch, "bank entry count does not match l * k * d");
    }
  }

  const IomParams& params() const noexcept { return params_; }
  std::size_t dim() const noexcept { return dim_; }

  std::span<const double> column(std::uint32_t i, std::uint32_t j) const noexcept {
    return {entries_.data() + (static_cast<std::size_t>(i) * params_.k + j) * dim_, dim_};
  }
  std::span<const double> entries() const noexcept { return entries_; }

 private:
  std::span<double> column_mut(std::uint32_t i, std::uint32_t j) noexcept {
    return {entries_.data() + (static_cast<std::size_t>(i) * params_.k + j) * dim_, dim_};
  }

  IomParams params_;
  std::size_t dim_;
  std::vector<double> entries_;
};

inline ProjectionBank gaussian_bank(const IomParams& params, std::size_t dim) { return ProjectionBank(params, dim); }

struct RevocableTemplate {
  std::vector<std::uint16_t> indices;  // X_1..X_l, zero-based
  std::uint32_t k = 0;
  std::uint32_t dim = 0;
  FusionMode mode = FusionMode::raw;
  std::uint64_t seed = 0;

  std::size_t l() const noexcept { return indices.size(); }
  friend bool operator==(const RevocableTemplate&, const RevocableTemplate&) = default;
};

namespace detail {

inline double dot(std::span<const double> w, std::span<const double> x) noexcept {
  double acc = 0.0;
  for (std::size_t c = 0; c < x.size(); ++c) acc += w[c] * x[c];
  return acc;
}

inline RevocableTemplate empty_template(const IomParams& p, std::size_t dim) {
  RevocableTemplate t;
  t.indices.assign(p.l, 0);
  t.k = p.k;
  t.dim = static_cast<std::uint32_t>(dim);
  t.mode = p.mode;
  t.seed = p.seed;
  return t;
}

}  // namespace detail

/// X_i = argmax_j <w_j^i, C>, ties to the smallest j.
inline RevocableTemplate iom_hash(const FusedFeature& c, const ProjectionBank& bank) {
  if (c.dim() != bank.dim()) {
    throw Error(Errc::dimension_mismatch, "feature dimension " + std::to_string(c.dim()) +
                                              " does not match bank dimension " + std::to_string(bank.dim()));
  }
  const IomParams& p = bank.params();
  RevocableTemplate t = detail::empty_template(p, c.dim());
  t.mode = c.mode;
  for (std::uint32_t i = 0; i < p.l; ++i) {
    std::uint32_t best = 0;
    double best_v = detail::dot(bank.column(i, 0), c.values);
    for (std::uint32_t j = 1; j < p.k; ++j) {
      const double v = detail::dot(bank.column(i, j), c.values);
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    t.indices[i] = static_cast<std::uint16_t>(best);
  }
  return t;
}

/// Hash many features under one seed without materialising the bank: each
/// column is generated once and applied to every feature. Results equal
/// iom_hash with a materialised bank.
inline std::vector<RevocableTemplate> iom_hash_streaming(std::span<const FusedFeature> features,
                                                         const IomParams& params) {
  params.validate();
  std::vector<RevocableTemplate> out;
  if (features.empty()) return out;
  const std::size_t dim = features.front().dim();
  for (const auto& f : features) {
    if (f.dim() != dim) throw Error(Errc::dimension_mismatch, "features of differing dimension in one batch");
  }
  if (dim < 1) throw Error(Errc::invalid_argument, "projection dimension must be >= 1");
  out.reserve(features.size());
  for (const auto& f : features) {
    out.push_back(detail::empty_template(params, dim));
    out.back().mode = f.mode;
  }
  std::vector<double> best_v(features.size());
  std::vector<double> column(dim);
  for (std::uint32_t i = 0; i < params.l; ++i) {
    for (std::uint32_t j = 0; j < params.k; ++j) {
      fill_gaussian(column_key(params.seed, i, j), column);
      for (std::size_t n = 0; n < features.size(); ++n) {
        const double v = detail::dot(column, features[n].values);
        if (j == 0 || v > best_v[n]) {
          best_v[n] = v;
          out[n].indices[i] = static_cast<std::uint16_t>(j);
        }
      }
    }
  }
  return out;
}

inline RevocableTemplate iom_hash_streaming(const FusedFeature& feature, const IomParams& params) {
  return iom_hash_streaming(std::span<const FusedFeature>(&feature, 1), params).front();
}

/// Whether hashing lambda * C reproduces the template of C (always true for lambda > 0).
inline bool scale_invariance_check(const FusedFeature& c, const ProjectionBank& bank, double lambda) {
  if (!(lambda > 0.0)) throw Error(Errc::invalid_argument, "scale factor must be positive");
  FusedFeature scaled = c;
  for (double& v : scaled.values) v *= lambda;
  return iom_hash(scaled, bank) == iom_hash(c, bank);
}

// ---------------------------------------------------------------------------
// Template file format, little-endian:
//   "IOMX" | u16 version = 1 | u8 mode | u8 reserved = 0 | u64 seed |
//   u32 l | u32 k | u32 d | l x u16 indices

inline constexpr std::uint16_t kTemplateVersion = 1;
inline constexpr std::size_t kTemplateHeaderSize = 4 + 2 + 1 + 1 + 8 + 4 + 4 + 4;

inline std::size_t serialized_size(std::size_t l) noexcept { return kTemplateHeaderSize + 2 * l; }

inline std::vector<std::uint8_t> serialize(const RevocableTemplate& t) {
  std::vector<std::uint8_t> out;
  out.reserve(serialized_size(t.l()));
  auto put = [&out](std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  };
  for (const char c : {'I', 'O', 'M', 'X'}) out.push_back(static_cast<std::uint8_t>(c));
  put(kTemplateVersion, 2);
  put(static_cast<std::uint8_t>(t.mode), 1);
  put(0, 1);
  put(t.seed, 8);
  put(t.l(), 4);
  put(t.k, 4);
  put(t.dim, 4);
  for (const std::uint16_t x : t.indices) put(x, 2);
  return out;
}

inline RevocableTemplate deserialize(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTemplateHeaderSize) {
    throw Error(Errc::truncated, "template header needs " + std::to_string(kTemplateHeaderSize) + " bytes, got " +
                                     std::to_string(bytes.size()));
  }
  if (bytes[0] != 'I' || bytes[1] != 'O' || bytes[2] != 'M' || bytes[3] != 'X') {
    throw Error(Errc::bad_magic, "not an IOMX template");
  }
  std::size_t pos = 4;
  auto get = [&](int n) {
    std::uint64_t v = 0;
    for (int b = 0; b < n; ++b) v |= static_cast<std::uint64_t>(bytes[pos + b]) << (8 * b);
    pos += static_cast<std::size_t>(n);
    return v;
  };
  const auto version = get(2);
  if (version != kTemplateVersion) throw Error(Errc::bad_version, "template version " + std::to_string(version));
  const auto mode = get(1);
  const auto reserved = get(1);
  if (mode > 1 || reserved != 0) throw Error(Errc::malformed_header, "bad mode or reserved byte");
  RevocableTemplate t;
  t.mode = static_cast<FusionMode>(mode);
  t.seed = get(8);
  const auto l = get(4);
  t.k = static_cast<std::uint32_t>(get(4));
  t.dim = static_cast<std::uint32_t>(get(4));
  if (l == 0 || t.k == 0 || t.k > 65536) throw Error(Errc::malformed_header, "template l/k out of range");
  const std::size_t need = serialized_size(l);
  if (bytes.size() < need) {
    throw Error(Errc::truncated, "template body needs " + std::to_string(need) + " bytes, got " +
                                     std::to_string(bytes.size()));
  }
  if (bytes.size() > need) throw Error(Errc::trailing_data, std::to_string(bytes.size() - need) + " extra bytes");
  t.indices.resize(l);
  for (std::size_t i = 0; i < l; ++i) {
    const auto x = get(2);
    if (x >= t.k) {
      throw Error(Errc::index_out_of_range,
                  "index " + std::to_string(x) + " at position " + std::to_string(i) + " not below k=" + std::to_string(t.k));
    }
    t.indices[i] = static_cast<std::uint16_t>(x);
  }
  return t;
}

}  // namespace palmtpl
