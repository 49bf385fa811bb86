#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "palmtpl/orientation.hpp"
#include "test_util.hpp"

using namespace palmtpl;
using palmtpl::testing::line_image;
using palmtpl::testing::random_image;

namespace {

int circ(int a, int b) {
  const int d = std::abs(a - b) % kOrientationCodes;
  return std::min(d, kOrientationCodes - d);
}

int dominant_code(const OrientationMap& m, const std::vector<std::pair<int, int>>& px) {
  std::array<int, kOrientationCodes> hist{};
  for (const auto& [x, y] : px) ++hist[m(x, y)];
  return static_cast<int>(std::max_element(hist.begin(), hist.end()) - hist.begin());
}

}  // namespace

TEST(Bank, AxisAlignedMasks) {
  const auto bank = build_bank(13);
  std::vector<Offset> h;
  std::vector<Offset> v;
  for (int t = -6; t <= 6; ++t) {
    h.push_back({t, 0});
    v.push_back({0, t});
  }
  EXPECT_EQ(bank.masks[0], h);
  EXPECT_EQ(bank.masks[3], v);
}

TEST(Bank, ObliqueMaskThirtyDegrees) {
  const auto bank = build_bank(13);
  const auto& m = bank.masks[1];
  ASSERT_EQ(m.size(), 13u);
  int max_dy = 0;
  for (const auto o : m) max_dy = std::max(max_dy, std::abs(o.dy));
  EXPECT_EQ(max_dy, static_cast<int>(std::lround(6.0 * std::tan(3.14159265358979323846 / 6.0))));
  EXPECT_EQ(max_dy, 3);
  // x-major: every column of the window appears once
  std::set<int> xs;
  for (const auto o : m) xs.insert(o.dx);
  EXPECT_EQ(xs.size(), 13u);
}

TEST(Bank, EveryMaskSymmetricWithWindowOffsets) {
  for (const int p : {5, 7, 13, 21}) {
    const auto bank = build_bank(p);
    for (const auto& mask : bank.masks) {
      ASSERT_EQ(mask.size(), static_cast<std::size_t>(p));
      std::set<std::pair<int, int>> s;
      for (const auto o : mask) s.insert({o.dx, o.dy});
      EXPECT_EQ(s.size(), mask.size());
      for (const auto o : mask) {
        EXPECT_TRUE(s.count({-o.dx, -o.dy})) << "p=" << p;
        EXPECT_LE(std::abs(o.dx), (p - 1) / 2);
        EXPECT_LE(std::abs(o.dy), (p - 1) / 2);
      }
    }
  }
}

TEST(Bank, MaskDirectionsFollowAngles) {
  // Each mask's endpoint lies within half a pixel of the ideal ray.
  const auto bank = build_bank(13);
  for (int q = 0; q < kDirections; ++q) {
    const double th = 3.14159265358979323846 / 6.0 * q;
    for (const auto o : bank.masks[q]) {
      const double off = std::abs(-o.dx * std::sin(th) + o.dy * std::cos(th));
      EXPECT_LE(off, 0.5 + 1e-9) << "q=" << q;
    }
  }
}

TEST(Bank, RejectsBadWindow) {
  EXPECT_THROW(build_bank(4), Error);
  EXPECT_THROW(build_bank(3), Error);
  EXPECT_THROW(build_bank(12), Error);
}

TEST(Responses, ConstantField) {
  const auto bank = build_bank(13);
  const GrayImage img(20, 20, 77);
  for (const auto f : responses_at(img, bank, 3, 17)) EXPECT_EQ(f, 13u * 77u);
}

TEST(Responses, HorizontalDarkLine) {
  const auto bank = build_bank(13);
  GrayImage img(32, 32, 255);
  for (int x = 0; x < 32; ++x) img(x, 16) = 0;
  const auto f = responses_at(img, bank, 16, 16);
  EXPECT_EQ(f[0], 0u);
  for (int q = 1; q < kDirections; ++q) EXPECT_GT(f[q], 0u);
}

TEST(Responses, MatchDirectMaskSum) {
  std::mt19937_64 rng(21);
  const auto bank = build_bank(13);
  for (int t = 0; t < 100; ++t) {
    const GrayImage img = random_image(rng, 16, 16);
    std::uniform_int_distribution<int> pos(0, 15);
    const int x = pos(rng);
    const int y = pos(rng);
    const auto f = responses_at(img, bank, x, y);
    for (int q = 0; q < kDirections; ++q) {
      std::uint64_t s = 0;
      for (const auto o : bank.masks[q]) {
        s += img(std::clamp(x + o.dx, 0, 15), std::clamp(y + o.dy, 0, 15));
      }
      EXPECT_EQ(f[q], s);
    }
  }
}

TEST(Fuse, Examples) {
  const FusionParams p{8, false};
  EXPECT_EQ(fuse_directions({10, 12, 100, 90, 80, 70}, p), 1);
  EXPECT_EQ(fuse_directions({10, 100, 90, 12, 80, 70}, p), 0);
  EXPECT_EQ(fuse_directions({10, 30, 100, 90, 80, 70}, p), 0);
  EXPECT_EQ(fuse_directions({12, 100, 90, 80, 70, 10}, p), 10);
  EXPECT_EQ(fuse_directions({12, 100, 90, 80, 70, 10}, FusionParams{8, true}), 11);
}

TEST(Fuse, TiesPreferSmallerDirection) {
  const FusionParams p{8, false};
  EXPECT_EQ(fuse_directions({5, 5, 5, 5, 5, 5}, p), 1);
  EXPECT_EQ(fuse_directions({9, 4, 4, 9, 9, 9}, p), 3);
  EXPECT_EQ(fuse_directions({9, 9, 9, 4, 9, 4}, p), 6);
}

TEST(Fuse, OutputRangeAndOddOnlyWhenAdjacent) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> v(0, 40);
  for (int t = 0; t < 5000; ++t) {
    Responses f;
    for (auto& x : f) x = static_cast<std::uint64_t>(v(rng));
    for (const bool wrap : {false, true}) {
      const int o = fuse_directions(f, {8, wrap});
      ASSERT_GE(o, 0);
      ASSERT_LE(o, 11);
      if (!wrap && o % 2 == 1) {
        int qmin = 0;
        for (int q = 1; q < 6; ++q) qmin = f[q] < f[qmin] ? q : qmin;
        int qsec = qmin == 0 ? 1 : 0;
        for (int q = 0; q < 6; ++q) qsec = (q != qmin && f[q] < f[qsec]) ? q : qsec;
        EXPECT_EQ(std::abs(qmin - qsec), 1);
      }
    }
  }
}

TEST(Fuse, MonotoneInThreshold) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> v(0, 60);
  for (int t = 0; t < 2000; ++t) {
    Responses f;
    for (auto& x : f) x = static_cast<std::uint64_t>(v(rng));
    for (std::uint64_t r = 0; r < 60; ++r) {
      const int lo = fuse_directions(f, {r, true});
      const int hi = fuse_directions(f, {r + 1, true});
      if (lo % 2 == 1) {
        EXPECT_EQ(hi, lo);
      }
    }
  }
}

TEST(Map, ConstantImageAllOne) {
  const auto m = orientation_map(GrayImage(20, 14, 100), build_bank(13), {});
  for (const auto c : m.codes) EXPECT_EQ(c, 1);
}

TEST(Map, EqualsPixelwiseFusion) {
  std::mt19937_64 rng(24);
  const auto bank = build_bank(13);
  for (int t = 0; t < 20; ++t) {
    const GrayImage img = random_image(rng, 16, 16);
    const FusionParams p{static_cast<std::uint64_t>(t * 10), t % 2 == 1};
    const auto m = orientation_map(img, bank, p);
    for (int y = 0; y < 16; ++y) {
      for (int x = 0; x < 16; ++x) ASSERT_EQ(m(x, y), fuse_directions(responses_at(img, bank, x, y), p));
    }
  }
  const GrayImage big = random_image(rng, 40, 33);
  const auto m = orientation_map(big, bank, {});
  for (int y = 0; y < 33; ++y) {
    for (int x = 0; x < 40; ++x) ASSERT_EQ(m(x, y), fuse_directions(responses_at(big, bank, x, y), {}));
  }
}

TEST(Map, ThirtyAndFifteenDegreeLines) {
  const auto bank = build_bank(13);
  for (const auto& [deg, code] : {std::pair{30.0, 2}, {15.0, 1}}) {
    const auto li = line_image(deg);
    const auto m = orientation_map(li.image, bank, {});
    int hits = 0;
    for (const auto& [x, y] : li.interior) hits += m(x, y) == code ? 1 : 0;
    EXPECT_GE(hits, static_cast<int>(0.8 * static_cast<double>(li.interior.size()))) << deg;
  }
}

TEST(Map, RotationByThirtyShiftsCodeByTwo) {
  const auto bank = build_bank(13);
  const FusionParams p{8, true};
  for (int t = 0; t < 12; ++t) {
    const auto a = line_image(15.0 * t);
    const auto b = line_image(15.0 * t + 30.0);
    const int ca = dominant_code(orientation_map(a.image, bank, p), a.interior);
    const int cb = dominant_code(orientation_map(b.image, bank, p), b.interior);
    EXPECT_LE(circ(cb, (ca + 2) % kOrientationCodes), 1) << t;
  }
}

TEST(Downsample, UniformAndTie) {
  OrientationMap m{8, 8, std::vector<std::uint8_t>(64, 7)};
  const auto f = downsample_codes(m, 4);
  EXPECT_EQ(f.size(), 4u);
  for (const auto c : f.codes) EXPECT_EQ(c, 7);

  OrientationMap t{4, 4, {}};
  for (int i = 0; i < 16; ++i) t.codes.push_back(i % 2 == 0 ? 9 : 3);
  EXPECT_EQ(downsample_codes(t, 4).codes, std::vector<std::uint8_t>{3});
}

TEST(Downsample, ModeOracle) {
  std::mt19937_64 rng(25);
  std::uniform_int_distribution<int> code(0, 11);
  std::uniform_int_distribution<int> few(0, 2);
  for (int t = 0; t < 200; ++t) {
    OrientationMap m{8, 8, {}};
    // Few distinct codes make ties common.
    const int base = code(rng);
    for (int i = 0; i < 64; ++i) m.codes.push_back(static_cast<std::uint8_t>(t % 2 ? code(rng) : (base + few(rng)) % 12));
    const auto f = downsample_codes(m, 4);
    ASSERT_EQ(f.rows, 2);
    ASSERT_EQ(f.cols, 2);
    for (int r = 0; r < 2; ++r) {
      for (int c = 0; c < 2; ++c) {
        std::array<int, 12> hist{};
        for (int y = 4 * r; y < 4 * r + 4; ++y) {
          for (int x = 4 * c; x < 4 * c + 4; ++x) ++hist[m(x, y)];
        }
        const int top = *std::max_element(hist.begin(), hist.end());
        int expect = 0;
        while (hist[expect] != top) ++expect;
        EXPECT_EQ(f.at(r, c), expect);
      }
    }
  }
}

TEST(Downsample, FeatureLengthOnCanonicalRoi) {
  const auto m = orientation_map(GrayImage(144, 144, 128), build_bank(13), {});
  EXPECT_EQ(downsample_codes(m, 4).size(), 1296u);
  EXPECT_THROW(downsample_codes(m, 5), Error);
}

TEST(Render, ScalesCodes) {
  OrientationMap m{2, 1, {0, 11}};
  const auto img = render_orientation(m);
  EXPECT_EQ(img(0, 0), 0);
  EXPECT_EQ(img(1, 0), 231);
}
