#pragma once

// Rasters, integral images, PGM codec, padding/blocking and the synthetic
// palmprint generator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "palmtpl/error.hpp"
#include "palmtpl/rng.hpp"

namespace palmtpl {

/// 8-bit grayscale raster, row-major, origin top-left.
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, std::uint8_t fill = 0) : width_(width), height_(height) {
    if (width < 1 || height < 1) {
      throw Error(Errc::invalid_argument, "image dimensions must be positive");
    }
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
  }

  GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (width < 1 || height < 1) {
      throw Error(Errc::invalid_argument, "image dimensions must be positive");
    }
    if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
      throw Error(Errc::invalid_argument, "pixel count does not match dimensions");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  std::uint8_t operator()(int x, int y) const noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::uint8_t& operator()(int x, int y) noexcept {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }

  /// Read with edge replication for out-of-bounds coordinates.
  std::uint8_t clamped(int x, int y) const noexcept {
    x = std::clamp(x, 0, width_ - 1);
    y = std::clamp(y, 0, height_ - 1);
    return (*this)(x, y);
  }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  friend bool operator==(const GrayImage&, const GrayImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Axis-aligned pixel rectangle [x, x+w) x [y, y+h).
struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool contains(int px, int py) const noexcept {
    return px >= x && px < x + w && py >= y && py < y + h;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Offset {
  int dx = 0;
  int dy = 0;
  friend bool operator==(const Offset&, const Offset&) = default;
};

/// (width+1) x (height+1) table of prefix sums; at(u, v) is the sum over [0,u) x [0,v).
class IntegralImage {
 public:
  IntegralImage() = default;

  explicit IntegralImage(const GrayImage& img)
      : width_(img.width()), height_(img.height()),
        table_(static_cast<std::size_t>(width_ + 1) * static_cast<std::size_t>(height_ + 1), 0) {
    const std::size_t stride = static_cast<std::size_t>(width_) + 1;
    for (int v = 1; v <= height_; ++v) {
      std::uint64_t row = 0;
      for (int u = 1; u <= width_; ++u) {
        row += img(u - 1, v - 1);
        table_[v * stride + u] = table_[(v - 1) * stride + u] + row;
      }
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }

  std::uint64_t at(int u, int v) const noexcept {
    return table_[static_cast<std::size_t>(v) * (static_cast<std::size_t>(width_) + 1) + u];
  }

  /// Sum of pixels inside `r`; the part outside the image contributes zero.
  std::uint64_t box_sum(Rect r) const noexcept {
    const int x0 = std::clamp(r.x, 0, width_);
    const int y0 = std::clamp(r.y, 0, height_);
    const int x1 = std::clamp(r.x + std::max(r.w, 0), 0, width_);
    const int y1 = std::clamp(r.y + std::max(r.h, 0), 0, height_);
    if (x1 <= x0 || y1 <= y0) return 0;
    return at(x1, y1) + at(x0, y0) - at(x0, y1) - at(x1, y0);
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint64_t> table_;
};

inline IntegralImage integral(const GrayImage& img) { return IntegralImage(img); }

inline std::uint64_t box_sum(const IntegralImage& ii, Rect r) noexcept { return ii.box_sum(r); }

// ---------------------------------------------------------------------------
// PGM (binary P5, maxval <= 255)

namespace detail {

class PgmHeaderReader {
 public:
  explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  // Skips whitespace and '#' comments, then reads a decimal integer.
  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || bytes_[pos_] < '0' || bytes_[pos_] > '9') {
      throw Error(Errc::malformed_header, "expected a decimal number in PGM header");
    }
    long v = 0;
    while (pos_ < bytes_.size() && bytes_[pos_] >= '0' && bytes_[pos_] <= '9') {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1L << 30)) throw Error(Errc::malformed_header, "PGM header value too large");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the payload.
  void single_space() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw Error(Errc::malformed_header, "missing whitespace after maxval");
    }
    ++pos_;
  }

  std::size_t pos() const noexcept { return pos_; }

 private:
  static bool is_space(std::uint8_t c) noexcept {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f';
  }

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (is_space(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

}  // namespace detail

inline GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') {
    throw Error(Errc::unsupported_magic, "not a PGM file");
  }
  if (bytes[1] != '5') {
    throw Error(Errc::unsupported_magic,
                std::string("unsupported magic P") + static_cast<char>(bytes[1]));
  }
  detail::PgmHeaderReader rd(bytes);
  const long width = rd.next_int();
  const long height = rd.next_int();
  const long maxval = rd.next_int();
  if (width < 1 || height < 1) throw Error(Errc::malformed_header, "zero image dimension");
  if (maxval < 1) throw Error(Errc::malformed_header, "maxval must be positive");
  if (maxval > 255) {
    throw Error(Errc::maxval_too_large, "maxval " + std::to_string(maxval) + " exceeds 255");
  }
  rd.single_space();
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() - rd.pos() < need) {
    throw Error(Errc::truncated_payload, "expected " + std::to_string(need) + " pixel bytes, got " +
                                             std::to_string(bytes.size() - rd.pos()));
  }
  std::vector<std::uint8_t> px(bytes.begin() + static_cast<std::ptrdiff_t>(rd.pos()),
                               bytes.begin() + static_cast<std::ptrdiff_t>(rd.pos() + need));
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(px));
}

/// Binary PGM with maxval 255. A non-empty `comment` is written as one
/// '#' line after the magic (used by debug dumps to echo configuration).
inline std::vector<std::uint8_t> save_pgm(const GrayImage& img, std::string_view comment = {}) {
  std::string header = "P5\n";
  if (!comment.empty()) {
    std::size_t start = 0;
    while (start <= comment.size()) {
      const std::size_t end = std::min(comment.find('\n', start), comment.size());
      header += "# ";
      header.append(comment.substr(start, end - start));
      header += '\n';
      start = end + 1;
    }
  }
  header += std::to_string(img.width()) + ' ' + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

// ---------------------------------------------------------------------------
// Padding and blocking

struct BlockGrid {
  GrayImage padded;
  int block_size = 0;
  int rows = 0;
  int cols = 0;
  std::vector<Rect> blocks;  // row-major

  std::size_t count() const noexcept { return blocks.size(); }

  /// Index of the block containing pixel (x, y) of the padded image.
  std::size_t block_of(int x, int y) const noexcept {
    return static_cast<std::size_t>(y / block_size) * cols + static_cast<std::size_t>(x / block_size);
  }
};

/// Pad by edge replication to multiples of `n`, then tile into n x n blocks.
/// When `target_m` is given, a different block count is an error.
inline BlockGrid pad_and_block(const GrayImage& img, int n, std::optional<std::size_t> target_m = {}) {
  if (n < 3) throw Error(Errc::invalid_argument, "block size must be at least 3");
  const int cols = (img.width() + n - 1) / n;
  const int rows = (img.height() + n - 1) / n;
  const std::size_t m = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (target_m && *target_m != m) {
    throw Error(Errc::block_count_mismatch,
                std::to_string(img.width()) + "x" + std::to_string(img.height()) + " image with block size " +
                    std::to_string(n) + " gives " + std::to_string(m) + " blocks, configured " +
                    std::to_string(*target_m));
  }
  BlockGrid grid;
  grid.block_size = n;
  grid.rows = rows;
  grid.cols = cols;
  if (cols * n == img.width() && rows * n == img.height()) {
    grid.padded = img;
  } else {
    GrayImage padded(cols * n, rows * n);
    for (int y = 0; y < padded.height(); ++y) {
      for (int x = 0; x < padded.width(); ++x) padded(x, y) = img.clamped(x, y);
    }
    grid.padded = std::move(padded);
  }
  grid.blocks.reserve(m);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) grid.blocks.push_back(Rect{c * n, r * n, n, n});
  }
  return grid;
}

// ---------------------------------------------------------------------------
// Synthetic palmprints

struct SynthSpec {
  int identities = 20;
  int samples = 8;
  std::uint64_t master_seed = 0x9A1D5EEDULL;
  int line_count = 40;
  double jitter_translation = 0.75;  // px, uniform in [-t, t]
  double jitter_rotation = 0.01;     // rad, uniform in [-r, r]
  double noise_sigma = 3.0;          // intensity units
  int width = 144;
  int height = 144;
  double background = 200.0;
  double ink = 40.0;
  double min_stroke = 2.0;
  double max_stroke = 4.0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// One quadratic Bezier stroke in ROI coordinates.
struct Stroke {
  Point2 p0, p1, p2;
  double width = 2.0;
};

/// Identity-determined strokes before any per-sample jitter.
inline std::vector<Stroke> synth_strokes(const SynthSpec& spec, int identity) {
  SplitMix rng(combine(combine(spec.master_seed, 0x51D0), static_cast<std::uint64_t>(identity)));
  std::vector<Stroke> strokes;
  strokes.reserve(static_cast<std::size_t>(spec.line_count));
  const double w = spec.width;
  const double h = spec.height;
  const double diag = std::sqrt(w * w + h * h);
  for (int s = 0; s < spec.line_count; ++s) {
    Stroke st;
    const Point2 mid{rng.uniform(0.0, w), rng.uniform(0.0, h)};
    // Direction uniform over half a turn.
    const SinCos dir = sincos_2pi(0.5 * rng.uniform());
    const double len = rng.uniform(0.25, 0.75) * diag;
    const double bend = rng.uniform(-0.15, 0.15) * len;
    const double dx = dir.cos * 0.5 * len;
    const double dy = dir.sin * 0.5 * len;
    st.p0 = {mid.x - dx, mid.y - dy};
    st.p2 = {mid.x + dx, mid.y + dy};
    // Control point pushed off the chord along its normal.
    st.p1 = {mid.x - dir.sin * bend, mid.y + dir.cos * bend};
    st.width = rng.uniform(spec.min_stroke, spec.max_stroke);
    strokes.push_back(st);
  }
  return strokes;
}

namespace detail {

inline double segment_distance(Point2 p, Point2 a, Point2 b) noexcept {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = p.x - (a.x + t * vx);
  const double ey = p.y - (a.y + t * vy);
  return std::sqrt(ex * ex + ey * ey);
}

}  // namespace detail

/// Deterministic synthetic palm ROI for (master seed, identity, sample).
inline GrayImage synth_palm(const SynthSpec& spec, int identity, int sample) {
  if (identity < 0 || identity >= spec.identities || sample < 0 || sample >= spec.samples) {
    throw Error(Errc::invalid_argument, "identity/sample index outside synth spec");
  }
  const auto strokes = synth_strokes(spec, identity);

  SplitMix jit(combine(combine(combine(spec.master_seed, 0x7A11), static_cast<std::uint64_t>(identity)),
                       static_cast<std::uint64_t>(sample)));
  const double tx = jit.uniform(-spec.jitter_translation, spec.jitter_translation);
  const double ty = jit.uniform(-spec.jitter_translation, spec.jitter_translation);
  const double rot = jit.uniform(-spec.jitter_rotation, spec.jitter_rotation);
  const double cx = 0.5 * spec.width;
  const double cy = 0.5 * spec.height;
  constexpr double kTwoPi = 6.283185307179586477;
  const SinCos turn = sincos_2pi(rot / kTwoPi);
  const double cr = turn.cos;
  const double sr = turn.sin;
  auto jitter = [&](Point2 p) {
    const double x = p.x - cx;
    const double y = p.y - cy;
    return Point2{cx + cr * x - sr * y + tx, cy + sr * x + cr * y + ty};
  };

  std::vector<double> canvas(static_cast<std::size_t>(spec.width) * spec.height, spec.background);
  constexpr int kSegments = 48;
  for (const Stroke& st : strokes) {
    const Point2 a = jitter(st.p0);
    const Point2 b = jitter(st.p1);
    const Point2 c = jitter(st.p2);
    std::vector<Point2> poly(kSegments + 1);
    for (int i = 0; i <= kSegments; ++i) {
      const double t = static_cast<double>(i) / kSegments;
      const double u = 1.0 - t;
      poly[i] = {u * u * a.x + 2 * u * t * b.x + t * t * c.x, u * u * a.y + 2 * u * t * b.y + t * t * c.y};
    }
    const double half = 0.5 * st.width;
    for (int i = 0; i < kSegments; ++i) {
      const Point2 p = poly[i];
      const Point2 q = poly[i + 1];
      const int x0 = std::max(0, static_cast<int>(std::floor(std::min(p.x, q.x) - half - 1)));
      const int x1 = std::min(spec.width - 1, static_cast<int>(std::ceil(std::max(p.x, q.x) + half + 1)));
      const int y0 = std::max(0, static_cast<int>(std::floor(std::min(p.y, q.y) - half - 1)));
      const int y1 = std::min(spec.height - 1, static_cast<int>(std::ceil(std::max(p.y, q.y) + half + 1)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dist = detail::segment_distance({x + 0.0, y + 0.0}, p, q);
          const double coverage = std::clamp(half + 0.5 - dist, 0.0, 1.0);
          if (coverage <= 0.0) continue;
          const double v = spec.background + (spec.ink - spec.background) * coverage;
          double& px = canvas[static_cast<std::size_t>(y) * spec.width + x];
          px = std::min(px, v);
        }
      }
    }
  }

  SplitMix noise(combine(combine(combine(spec.master_seed, 0x0415E), static_cast<std::uint64_t>(identity)),
                         static_cast<std::uint64_t>(sample)));
  GrayImage img(spec.width, spec.height);
  auto out = img.pixels();
  for (std::size_t i = 0; i < canvas.size(); ++i) {
    const double v = canvas[i] + spec.noise_sigma * noise.normal();
    out[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return img;
}

}  // namespace palmtpl
