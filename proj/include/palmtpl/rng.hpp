#pragma once

// Deterministic random streams.
//
// Everything random in the library (projection banks, synthetic palms,
// protocol subsampling) is derived from the primitives in this header so that
// output is a pure function of the seed on every platform. The transcendental
// kernels below deliberately avoid libm: they use only IEEE +, -, *, / and
// sqrt, which are correctly rounded, so the same inputs give the same bits
// everywhere. Builds must not contract a*b+c into FMA (-ffp-contract=off).
//
// Stream definition (reference for other implementations):
//
//   mix64(z):   z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//               z ^= z >> 27; z *= 0x94D049BB133111EB;
//               z ^= z >> 31
//   counter:    state += 0x9E3779B97F4A7C15; return mix64(state)
//   uniform:    ((x >> 12) + 0.5) * 2^-52               in (0, 1)
//   gaussian pair from (u1, u2):
//               rad = sqrt(-2 * ln(u1))
//               (rad * cos(2 pi u2), rad * sin(2 pi u2))
//
// ln and sincos(2 pi u) are the polynomial kernels `ln_unit` and
// `sincos_2pi` below, evaluated with exactly the operation order written.

#include <bit>
#include <cstdint>
#include <span>
#include <utility>

namespace palmtpl {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

/// Combine a key with one more word. Not commutative: combine(a, b) != combine(b, a).
constexpr std::uint64_t combine(std::uint64_t key, std::uint64_t word) noexcept {
  return mix64(key ^ mix64(word + kGolden));
}

constexpr double to_unit(std::uint64_t x) noexcept {
  return (static_cast<double>(x >> 12) + 0.5) * 0x1p-52;
}

namespace detail {
// Branch-free select: `pick ? a : b` for pick in {0, 1}.
inline double select(std::uint64_t pick, double a, double b) noexcept {
  const std::uint64_t m = std::uint64_t{0} - pick;
  return std::bit_cast<double>((std::bit_cast<std::uint64_t>(a) & m) |
                               (std::bit_cast<std::uint64_t>(b) & ~m));
}
}  // namespace detail

/// Natural logarithm for u in (0, 1], as used by the Gaussian stream.
///
/// u = f * 2^e with f in [sqrt(1/2), sqrt(2)); ln f = 2 atanh(s),
/// s = (f - 1) / (f + 1), |s| <= 0.1716, series truncated after s^21.
inline double ln_unit(double u) noexcept {
  constexpr double kLn2 = 0.6931471805599453094;
  constexpr double kSqrt2 = 1.4142135623730950488;
  const auto bits = std::bit_cast<std::uint64_t>(u);
  // Biased exponent as an exact double: (2^52 + field) - 2^52.
  const double biased =
      std::bit_cast<double>(((bits >> 52) & 0x7FFULL) | 0x4330000000000000ULL) - 0x1p52;
  const double f0 = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFULL) | 0x3FF0000000000000ULL);
  // f0 > sqrt(2) compared on the bit pattern (both positive).
  const std::uint64_t big =
      (std::bit_cast<std::uint64_t>(kSqrt2) - std::bit_cast<std::uint64_t>(f0)) >> 63;
  const double f = detail::select(big, f0 * 0.5, f0);
  const double e = detail::select(big, biased + 1.0, biased) - 1023.0;
  const double s = (f - 1.0) / (f + 1.0);
  const double s2 = s * s;
  double p = 1.0 / 21.0;
  p = p * s2 + 1.0 / 19.0;
  p = p * s2 + 1.0 / 17.0;
  p = p * s2 + 1.0 / 15.0;
  p = p * s2 + 1.0 / 13.0;
  p = p * s2 + 1.0 / 11.0;
  p = p * s2 + 1.0 / 9.0;
  p = p * s2 + 1.0 / 7.0;
  p = p * s2 + 1.0 / 5.0;
  p = p * s2 + 1.0 / 3.0;
  p = p * s2 + 1.0;
  return e * kLn2 + 2.0 * s * p;
}

/// (cos 2 pi u, sin 2 pi u) for u in [0, 1].
///
/// n = nearest quarter turn, r = u - n/4 is exact, x = 2 pi r in [-pi/4, pi/4];
/// Taylor series to x^18 / x^17, then rotated by n quarter turns.
struct SinCos {
  double cos;
  double sin;
};

inline SinCos sincos_2pi(double u) noexcept {
  constexpr double kTwoPi = 6.283185307179586477;
  const auto q = static_cast<std::int64_t>(u * 4.0 + 0.5);
  const double r = u - static_cast<double>(q) * 0.25;
  const double x = r * kTwoPi;
  const double x2 = x * x;

  double sp = 1.0 / 355687428096000.0;   // 1/17!
  sp = sp * x2 - 1.0 / 1307674368000.0;  // 1/15!
  sp = sp * x2 + 1.0 / 6227020800.0;     // 1/13!
  sp = sp * x2 - 1.0 / 39916800.0;       // 1/11!
  sp = sp * x2 + 1.0 / 362880.0;         // 1/9!
  sp = sp * x2 - 1.0 / 5040.0;
  sp = sp * x2 + 1.0 / 120.0;
  sp = sp * x2 - 1.0 / 6.0;
  sp = sp * x2 + 1.0;
  const double s = x * sp;

  double cp = 1.0 / 6402373705728000.0;  // 1/18!
  cp = cp * x2 - 1.0 / 20922789888000.0; // 1/16!
  cp = cp * x2 + 1.0 / 87178291200.0;    // 1/14!
  cp = cp * x2 - 1.0 / 479001600.0;      // 1/12!
  cp = cp * x2 + 1.0 / 3628800.0;        // 1/10!
  cp = cp * x2 - 1.0 / 40320.0;
  cp = cp * x2 + 1.0 / 720.0;
  cp = cp * x2 - 1.0 / 24.0;
  cp = cp * x2 + 1.0 / 2.0;
  const double c = 1.0 - x2 * cp;

  // Quarter-turn rotation, written as selects so batches vectorize.
  const auto uq = static_cast<std::uint64_t>(q);
  const std::uint64_t odd = uq & 1;
  const std::uint64_t flip_c = ((uq + 1) >> 1) & 1;  // quarter turns 1, 2
  const std::uint64_t flip_s = (uq >> 1) & 1;        // quarter turns 2, 3
  const double cc = detail::select(odd, s, c);
  const double ss = detail::select(odd, c, s);
  return {std::bit_cast<double>(std::bit_cast<std::uint64_t>(cc) ^ (flip_c << 63)),
          std::bit_cast<double>(std::bit_cast<std::uint64_t>(ss) ^ (flip_s << 63))};
}

/// Two independent standard normals from two uniforms in (0, 1).
inline std::pair<double, double> box_muller(double u1, double u2) noexcept {
  const double rad = __builtin_sqrt(-2.0 * ln_unit(u1));
  const SinCos t = sincos_2pi(u2);
  return {rad * t.cos, rad * t.sin};
}

/// Counter-based split-mix stream.
class SplitMix {
 public:
  explicit constexpr SplitMix(std::uint64_t key) noexcept : state_(key) {}

  constexpr std::uint64_t next() noexcept {
    state_ += kGolden;
    return mix64(state_);
  }

  constexpr double uniform() noexcept { return to_unit(next()); }

  /// Uniform in [lo, hi).
  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Slight modulo bias is irrelevant for n << 2^64.
  constexpr std::uint64_t below(std::uint64_t n) noexcept { return next() % n; }

  double normal() noexcept {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const auto [a, b] = box_muller(u1, u2);
    spare_ = b;
    has_spare_ = true;
    return a;
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Fill `out` with standard normals from the stream keyed by `key`, in
/// component order: pair t covers components 2t and 2t+1; for odd lengths the
/// sine half of the last pair is dropped.
///
/// Uniforms are drawn in batches and transformed in a separate loop so the
/// compiler can vectorize the kernels; lane-wise IEEE arithmetic makes the
/// result identical to the scalar `box_muller` path.
inline void fill_gaussian(std::uint64_t key, std::span<double> out) noexcept {
  constexpr std::size_t kBatch = 256;
  alignas(64) double u1[kBatch];
  alignas(64) double u2[kBatch];
  alignas(64) double zc[kBatch];
  alignas(64) double zs[kBatch];

  SplitMix stream(key);
  const std::size_t n = out.size();
  const std::size_t pairs = (n + 1) / 2;
  for (std::size_t base = 0; base < pairs; base += kBatch) {
    const std::size_t m = pairs - base < kBatch ? pairs - base : kBatch;
    for (std::size_t t = 0; t < m; ++t) {
      u1[t] = stream.uniform();
      u2[t] = stream.uniform();
    }
    for (std::size_t t = 0; t < m; ++t) {
      const double rad = __builtin_sqrt(-2.0 * ln_unit(u1[t]));
      const SinCos sc = sincos_2pi(u2[t]);
      zc[t] = rad * sc.cos;
      zs[t] = rad * sc.sin;
    }
    for (std::size_t t = 0; t < m; ++t) {
      const std::size_t c = 2 * (base + t);
      out[c] = zc[t];
      if (c + 1 < n) out[c + 1] = zs[t];
    }
  }
}

}  // namespace palmtpl
