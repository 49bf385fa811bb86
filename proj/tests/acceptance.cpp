// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "palmtpl/palmtpl.hpp"
#include "test_util.hpp"

using namespace palmtpl;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  char secs[32];
  std::snprintf(secs, sizeof secs, "%.2fs", seconds_since(t0));
  std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << id << "] " << name << ": " << o.detail << " (" << secs << ")"
            << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double v, int prec = 4, bool sci = false) {
  std::ostringstream os;
  os.setf(sci ? std::ios::scientific : std::ios::fixed);
  os.precision(prec);
  os << v;
  return os.str();
}

// ---------------------------------------------------------------------------

Outcome orientation_oracle() {
  const auto t0 = Clock::now();
  const MfratBank bank = build_bank(13);
  const FusionParams params{8, true};
  double worst_exact = 1.0;
  double worst_near = 1.0;
  for (int t = 0; t < 12; ++t) {
    const auto li = testing::line_image(15.0 * t);
    const OrientationMap m = orientation_map(li.image, bank, params);
    std::size_t exact = 0;
    std::size_t near = 0;
    for (const auto& [x, y] : li.interior) {
      const int c = m(x, y);
      exact += c == t ? 1 : 0;
      near += angular_dist(c, t) <= 1 ? 1 : 0;
    }
    const double n = static_cast<double>(li.interior.size());
    worst_exact = std::min(worst_exact, exact / n);
    worst_near = std::min(worst_near, near / n);
  }
  const double secs = seconds_since(t0);
  return {worst_exact >= 0.8 && worst_near == 1.0 && secs < 5.0,
          "min exact-code share " + fmt(worst_exact) + ", min within-1 share " + fmt(worst_near) + ", " +
              fmt(secs, 2) + " s"};
}

std::size_t brute_representative(const std::vector<PixelPoint>& pts, std::size_t* minima = nullptr) {
  std::vector<long double> d(pts.size(), 0.0L);
  for (std::size_t j = 0; j < pts.size(); ++j) {
    std::vector<long double> parts;
    for (std::size_t k = 0; k < pts.size(); ++k) {
      if (k != j) parts.push_back(std::hypot(static_cast<long double>(pts[j].x - pts[k].x),
                                             static_cast<long double>(pts[j].y - pts[k].y)));
    }
    std::sort(parts.begin(), parts.end());
    for (const auto p : parts) d[j] += p;
  }
  const long double m = *std::min_element(d.begin(), d.end());
  auto at_min = [&](long double v) { return v - m <= 1e-10L * std::max(1.0L, m); };
  if (minima) *minima = static_cast<std::size_t>(std::count_if(d.begin(), d.end(), at_min));
  return static_cast<std::size_t>(std::find_if(d.begin(), d.end(), at_min) - d.begin());
}

Outcome representative_oracle() {
  std::mt19937_64 rng(0xA11);
  std::size_t mismatches = 0;
  std::size_t ties = 0;
  for (int t = 0; t < 1000; ++t) {
    const int span = t % 2 == 0 ? 4 : 24;
    std::uniform_int_distribution<int> n(1, 12);
    std::uniform_int_distribution<int> c(0, span - 1);
    std::vector<PixelPoint> pts(static_cast<std::size_t>(n(rng)));
    for (auto& p : pts) p = {c(rng), c(rng)};
    std::size_t minima = 0;
    const std::size_t want = brute_representative(pts, &minima);
    ties += minima > 1 ? 1 : 0;
    const auto got = representative_index(pts);
    const Representative rp = representative_point(pts, Rect{0, 0, 24, 24});
    if (!got || *got != want || !(rp.point == pts[want])) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 1000 sets (" + std::to_string(ties) +
                               " sets with a tied minimum)"};
}

Outcome box_and_hessian_oracle() {
  std::mt19937_64 rng(0xB0C);
  std::size_t box_bad = 0;
  std::size_t rects = 0;
  double worst = 0.0;
  std::size_t dets = 0;
  for (int t = 0; t < 200; ++t) {
    std::uniform_int_distribution<int> dim(1, 16);
    const GrayImage img = testing::random_image(rng, dim(rng), dim(rng));
    const IntegralImage ii(img);
    std::uniform_int_distribution<int> pos(-4, 18);
    std::uniform_int_distribution<int> ext(0, 18);
    for (int r = 0; r < 25; ++r) {
      const Rect rect{pos(rng), pos(rng), ext(rng), ext(rng)};
      std::uint64_t direct = 0;
      for (int y = std::max(rect.y, 0); y < std::min(rect.y + rect.h, img.height()); ++y) {
        for (int x = std::max(rect.x, 0); x < std::min(rect.x + rect.w, img.width()); ++x) direct += img(x, y);
      }
      box_bad += box_sum(ii, rect) == direct ? 0 : 1;
      ++rects;
    }
    std::uniform_int_distribution<int> px(0, img.width() - 1);
    std::uniform_int_distribution<int> py(0, img.height() - 1);
    for (int r = 0; r < 10; ++r) {
      const int x = px(rng);
      const int y = py(rng);
      for (const int L : {9, 15, 21}) {
        const int l = L / 3;
        const int b = (L - 1) / 2;
        double xx = 0, yy = 0, xy = 0;
        for (int v = -b; v <= b; ++v) {
          for (int u = -b; u <= b; ++u) {
            if (x + u < 0 || y + v < 0 || x + u >= img.width() || y + v >= img.height()) continue;
            const double p = img(x + u, y + v);
            if (std::abs(v) < l) xx += (std::abs(u) <= l / 2 ? -2.0 : 1.0) * p;
            if (std::abs(u) < l) yy += (std::abs(v) <= l / 2 ? -2.0 : 1.0) * p;
            if (u != 0 && v != 0 && std::abs(u) <= l && std::abs(v) <= l) xy += ((u > 0) == (v > 0) ? 1.0 : -1.0) * p;
          }
        }
        const double a = static_cast<double>(L) * L;
        const double oracle = (xx / a) * (yy / a) - (0.9 * xy / a) * (0.9 * xy / a);
        const double got = hessian_det(hessian_sums(ii, x, y, L), L, 0.9);
        worst = std::max(worst, std::abs(got - oracle));
        ++dets;
      }
    }
  }
  return {box_bad == 0 && worst <= 1e-9, std::to_string(box_bad) + "/" + std::to_string(rects) +
                                             " box sums differ, max |det error| " + fmt(worst, 2, true) + " over " +
                                             std::to_string(dets) + " determinants"};
}

Outcome fixed_length() {
  std::mt19937_64 rng(0xF1E);
  const Extractor ex{Config{}};
  std::size_t bad = 0;
  std::vector<Rect> first_blocks;
  for (int t = 0; t < 100; ++t) {
    SynthSpec spec;
    spec.master_seed = rng();
    const GrayImage img = synth_palm(spec, static_cast<int>(rng() % spec.identities),
                                     static_cast<int>(rng() % spec.samples));
    const BlockGrid grid = ex.blocks(img);
    const Features f = ex.extract(img);
    if (t == 0) first_blocks = grid.blocks;
    bool ok = f.points.size() == 36 && f.orientation.size() == 1296 && f.orientation.rows == 36 &&
              f.orientation.cols == 36 && grid.blocks == first_blocks;
    for (std::size_t i = 0; ok && i < f.points.size(); ++i) {
      const PixelPoint p = f.points.representatives[i].point;
      ok = grid.blocks[i].contains(p.x, p.y) && f.points.codes[i] == lbp_code(grid.padded, p.x, p.y);
    }
    ok = ok && ex.fused(f).dim() == 1332;
    bad += ok ? 0 : 1;
  }
  return {bad == 0, std::to_string(100 - bad) + "/100 images give |P|=36, |O|=1296 in block/cell order"};
}

Outcome iom_oracle() {
  std::mt19937_64 rng(0x10A);
  std::size_t bad = 0;
  std::normal_distribution<double> nd;
  for (int t = 0; t < 200; ++t) {
    const std::size_t d = 1 + rng() % 16;
    const IomParams p{static_cast<std::uint32_t>(1 + rng() % 32), static_cast<std::uint32_t>(1 + rng() % 8), rng()};
    FusedFeature c;
    for (std::size_t i = 0; i < d; ++i) c.values.push_back(nd(rng));
    // Full W^i matrices from the keyed streams, then product and argmax.
    std::vector<std::uint16_t> want;
    for (std::uint32_t i = 0; i < p.l; ++i) {
      std::vector<double> prod(p.k, 0.0);
      for (std::uint32_t j = 0; j < p.k; ++j) {
        SplitMix s(combine(combine(p.seed, i), j));
        std::vector<double> w(d);
        for (std::size_t e = 0; e < d; e += 2) {
          const double u1 = s.uniform();
          const double u2 = s.uniform();
          const auto [a, b] = box_muller(u1, u2);
          w[e] = a;
          if (e + 1 < d) w[e + 1] = b;
        }
        for (std::size_t e = 0; e < d; ++e) prod[j] += w[e] * c.values[e];
      }
      want.push_back(static_cast<std::uint16_t>(std::max_element(prod.begin(), prod.end()) - prod.begin()));
    }
    const ProjectionBank bank(p, d);
    bad += iom_hash(c, bank).indices == want && iom_hash_streaming(c, p).indices == want ? 0 : 1;
  }
  std::size_t scale_bad = 0;
  const IomParams p{32, 8, 0x5CA1E};
  const ProjectionBank bank(p, 16);
  std::uniform_real_distribution<double> e(-6.0, 6.0);
  for (int t = 0; t < 100; ++t) {
    FusedFeature c;
    for (int i = 0; i < 16; ++i) c.values.push_back(nd(rng));
    scale_bad += scale_invariance_check(c, bank, std::pow(10.0, e(rng))) ? 0 : 1;
  }
  return {bad == 0 && scale_bad == 0, std::to_string(bad) + "/200 oracle mismatches, " + std::to_string(scale_bad) +
                                          "/100 scale-invariance failures"};
}

Outcome revocability() {
  const auto t0 = Clock::now();
  const Extractor ex{Config{}};
  const FusedFeature c = ex.fused(ex.extract(synth_palm(SynthSpec{}, 0, 0)));
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
  for (std::uint64_t t = 0; t < 100; ++t) pairs.emplace_back(combine(0x2E7, 2 * t), combine(0x2E7, 2 * t + 1));
  const RevocabilityStats r = revocability_test(c, ex.iom_params(0), pairs);
  const double secs = seconds_since(t0);
  const bool ok = std::abs(r.cross_seed.mean - 0.02) <= 0.01 && r.same_seed.mean == 1.0 && r.same_seed.sd == 0.0 &&
                  secs < 60.0;
  return {ok, "cross-seed mean " + fmt(r.cross_seed.mean) + " (sd " + fmt(r.cross_seed.sd) + "), same-seed " +
                  fmt(r.same_seed.mean) + ", " + fmt(secs, 1) + " s"};
}

Outcome synthetic_end_to_end() {
  const auto t0 = Clock::now();
  const fs::path root = fs::temp_directory_path() / "palmtpl_acceptance_corpus";
  fs::remove_all(root);
  const SynthSpec spec;
  for (int i = 0; i < spec.identities; ++i) {
    char d[16];
    std::snprintf(d, sizeof d, "%04d", i);
    fs::create_directories(root / d);
    for (int s = 0; s < spec.samples; ++s) {
      char f[16];
      std::snprintf(f, sizeof f, "%04d.pgm", s);
      write_file(root / d / f, save_pgm(synth_palm(spec, i, s)));
    }
  }
  const Extractor ex{Config{}};
  EvalOptions opt;
  opt.seed = 0xE2E;
  opt.timing = false;
  opt.revocability_pairs = 0;
  const EvalReport rep = evaluate_dataset(scan_dataset(root), ex, opt);
  fs::remove_all(root);
  const double gap = mean_sd(rep.post.genuine).mean - mean_sd(rep.post.impostor).mean;
  const double secs = seconds_since(t0);
  const bool ok = rep.eer_post < 5.0 && rep.eer_pre <= rep.eer_post + 1.0 && gap >= 0.2 && secs < 600.0 &&
                  rep.pre.genuine.size() == 560 && rep.pre.impostor.size() == 190;
  return {ok, "EER_pre " + fmt(rep.eer_pre, 3) + "%, EER_post " + fmt(rep.eer_post, 3) + "%, post genuine-impostor gap " +
                  fmt(gap) + ", " + fmt(secs, 1) + " s"};
}

double brute_eer(const ScoreSet& s) {
  std::vector<double> t = s.genuine;
  t.insert(t.end(), s.impostor.begin(), s.impostor.end());
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  t.push_back(INFINITY);
  double pf = 0, pr = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    double fa = 0, fr = 0;
    for (const double x : s.impostor) fa += x >= t[i];
    for (const double x : s.genuine) fr += x < t[i];
    fa /= static_cast<double>(s.impostor.size());
    fr /= static_cast<double>(s.genuine.size());
    if (fa == fr) return fa;
    if (fa < fr) return i == 0 ? fa : pf + (pf - pr) / ((pf - pr) - (fa - fr)) * (fa - pf);
    pf = fa;
    pr = fr;
  }
  return 0.0;
}

Outcome eer_oracle() {
  std::mt19937_64 rng(0xEE2);
  std::size_t bad = 0;
  for (int t = 0; t < 500; ++t) {
    ScoreSet s;
    std::uniform_int_distribution<int> n(1, 25);
    std::uniform_int_distribution<int> grid(0, 30);
    const int shift = static_cast<int>(rng() % 11) - 2;
    const int ng = n(rng);
    const int ni = n(rng);
    for (int i = 0; i < ng; ++i) s.genuine.push_back(std::clamp(grid(rng) + shift, 0, 30) / 30.0);
    for (int i = 0; i < ni; ++i) s.impostor.push_back(grid(rng) / 30.0);
    bad += std::abs(compute_eer(s) - brute_eer(s)) <= 1e-12 ? 0 : 1;
  }
  const double sep = compute_eer({{0.9, 0.95, 0.8}, {0.1, 0.2}});
  const double same = compute_eer({{0.2, 0.4, 0.4, 0.7}, {0.7, 0.4, 0.2, 0.4}});
  return {bad == 0 && sep == 0.0 && same == 0.5, std::to_string(bad) + "/500 mismatches, separated " + fmt(sep) +
                                                     ", identical " + fmt(same)};
}

Outcome performance() {
  const Extractor ex{Config{}};
  std::vector<GrayImage> imgs;
  for (int i = 0; i < 10; ++i) imgs.push_back(synth_palm(SynthSpec{}, i, 0));
  (void)ex.enroll(imgs[0], 1);
  // Bank generated on the fly inside each enrolment.
  double total = 0.0;
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const auto t0 = Clock::now();
    const RevocableTemplate t = ex.enroll(imgs[i], 0x1000 + i);
    total += seconds_since(t0);
    if (t.l() != 420) return {false, "unexpected template length"};
  }
  const double mean_ms = 1000.0 * total / static_cast<double>(imgs.size());
  const TimingStats pre = timing_report(imgs, ex, 1);
  return {mean_ms < 450.0, "mean " + fmt(mean_ms, 1) + " ms per 144x144 image incl. bank generation (" +
                               fmt(pre.mean_ms, 1) + " ms with a prebuilt bank)"};
}

Outcome serialization() {
  const Extractor ex{Config{}};
  const RevocableTemplate t = ex.enroll(synth_palm(SynthSpec{}, 3, 2), 0xC0FFEE);
  const auto bytes = serialize(t);
  const bool round = deserialize(bytes) == t && serialize(deserialize(bytes)) == bytes;
  auto code_of = [](std::vector<std::uint8_t> b) {
    try {
      deserialize(b);
    } catch (const Error& e) {
      return std::string(errc_name(e.code()));
    }
    return std::string("accepted");
  };
  auto magic = bytes;
  magic[1] = 'Q';
  auto index = bytes;
  index[kTemplateHeaderSize + 2 * 7] = 50;
  index[kTemplateHeaderSize + 2 * 7 + 1] = 0;
  const std::string em = code_of(magic);
  const std::string ei = code_of(index);
  const std::string et = code_of({bytes.begin(), bytes.end() - 2});
  const bool ok = round && bytes.size() == 868 && em == errc_name(Errc::bad_magic) &&
                  ei == errc_name(Errc::index_out_of_range) && et == errc_name(Errc::truncated) && em != ei;
  return {ok, std::to_string(bytes.size()) + " bytes, round-trip " + (round ? "exact" : "BROKEN") + ", magic -> '" +
                  em + "', index 50 -> '" + ei + "', short file -> '" + et + "'"};
}

}  // namespace

int main() {
  std::cout << "palmtpl acceptance suite" << std::endl;
  report(1, "orientation codes on synthetic lines", orientation_oracle);
  report(2, "representative point vs brute force", representative_oracle);
  report(3, "integral box sums and Hessian determinants", box_and_hessian_oracle);
  report(4, "fixed-length ordered features", fixed_length);
  report(5, "IOM hash oracle and scale invariance", iom_oracle);
  report(6, "revocability statistic", revocability);
  report(7, "synthetic end-to-end separability", synthetic_end_to_end);
  report(8, "EER vs exhaustive threshold sweep", eer_oracle);
  report(9, "pipeline time budget", performance);
  report(10, "template serialization", serialization);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
