#pragma once

// Verification protocols and statistics: dataset enumeration, genuine and
// impostor pair plans, ROC/EER, accuracy loss, revocability, unlinkability
// and timing.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <limits>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "palmtpl/error.hpp"
#include "palmtpl/imaging.hpp"
#include "palmtpl/matching.hpp"
#include "palmtpl/pipeline.hpp"
#include "palmtpl/template.hpp"

namespace palmtpl {

// ---------------------------------------------------------------------------
// Datasets

struct Identity {
  std::string name;
  std::vector<std::filesystem::path> samples;
};

struct Dataset {
  std::vector<Identity> identities;
  std::vector<std::string> warnings;
  std::size_t skipped_files = 0;
  std::size_t skipped_identities = 0;

  std::vector<std::size_t> shape() const {
    std::vector<std::size_t> s;
    for (const auto& id : identities) s.push_back(id.samples.size());
    return s;
  }
  std::size_t sample_count() const {
    std::size_t n = 0;
    for (const auto& id : identities) n += id.samples.size();
    return n;
  }
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open " + p.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(Errc::io, "read failed: " + p.string());
  return bytes;
}

inline void write_file(const std::filesystem::path& p, std::span<const std::uint8_t> bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::io, "cannot create " + p.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::io, "write failed: " + p.string());
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  write_file(p, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline GrayImage read_pgm(const std::filesystem::path& p) {
  const auto bytes = read_file(p);
  try {
    return load_pgm(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), p.string() + ": " + e.detail());
  }
}

/// `<root>/<identity>/<sample>.pgm`, both levels sorted lexicographically.
/// Files that fail to decode are skipped with a warning; identities left
/// with no images are skipped and counted.
inline Dataset scan_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw Error(Errc::io, "dataset root is not a directory: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory()) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  Dataset ds;
  for (const auto& dir : dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".pgm") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    Identity id;
    id.name = dir.filename().string();
    for (const auto& f : files) {
      try {
        (void)read_pgm(f);
        id.samples.push_back(f);
      } catch (const Error& e) {
        ds.warnings.push_back(std::string("skipped unreadable image ") + e.what());
        ++ds.skipped_files;
      }
    }
    if (id.samples.empty()) {
      ds.warnings.push_back("skipped identity without readable images: " + id.name);
      ++ds.skipped_identities;
      continue;
    }
    ds.identities.push_back(std::move(id));
  }
  if (ds.identities.empty()) throw Error(Errc::insufficient_data, "no readable identities under " + root.string());
  return ds;
}

// ---------------------------------------------------------------------------
// Pair plans and score sets

enum class ImpostorProtocol { first_vs_first, full_cross };

struct Protocol {
  ImpostorProtocol impostor = ImpostorProtocol::first_vs_first;
  std::size_t impostor_cap = 0;  // full_cross only; 0 = no cap
  std::uint64_t seed = 0;        // subsampling seed when capped
};

struct SampleRef {
  std::size_t identity = 0;
  std::size_t sample = 0;
  friend bool operator==(const SampleRef&, const SampleRef&) = default;
  friend auto operator<=>(const SampleRef&, const SampleRef&) = default;
};

struct SamplePair {
  SampleRef a;
  SampleRef b;
  friend bool operator==(const SamplePair&, const SamplePair&) = default;
  friend auto operator<=>(const SamplePair&, const SamplePair&) = default;
};

struct PairPlan {
  std::vector<SamplePair> genuine;
  std::vector<SamplePair> impostor;
};

/// Genuine: every unordered intra-identity pair. Impostor: first sample of
/// each identity against the first sample of every other identity, or
/// (full_cross) all inter-identity sample pairs, optionally subsampled.
inline PairPlan plan_pairs(const std::vector<std::size_t>& samples_per_identity, const Protocol& protocol = {}) {
  const std::size_t ids = samples_per_identity.size();
  if (ids < 2) throw Error(Errc::insufficient_data, "need at least two identities for impostor pairs");
  PairPlan plan;
  for (std::size_t i = 0; i < ids; ++i) {
    if (samples_per_identity[i] == 0) throw Error(Errc::insufficient_data, "identity without samples");
    for (std::size_t a = 0; a < samples_per_identity[i]; ++a) {
      for (std::size_t b = a + 1; b < samples_per_identity[i]; ++b) plan.genuine.push_back({{i, a}, {i, b}});
    }
  }
  if (plan.genuine.empty()) throw Error(Errc::insufficient_data, "need an identity with at least two samples");
  for (std::size_t i = 0; i < ids; ++i) {
    for (std::size_t j = i + 1; j < ids; ++j) {
      if (protocol.impostor == ImpostorProtocol::first_vs_first) {
        plan.impostor.push_back({{i, 0}, {j, 0}});
        continue;
      }
      for (std::size_t a = 0; a < samples_per_identity[i]; ++a) {
        for (std::size_t b = 0; b < samples_per_identity[j]; ++b) plan.impostor.push_back({{i, a}, {j, b}});
      }
    }
  }
  if (protocol.impostor == ImpostorProtocol::full_cross && protocol.impostor_cap != 0 &&
      plan.impostor.size() > protocol.impostor_cap) {
    // Partial Fisher-Yates, then back to canonical order.
    SplitMix rng(combine(protocol.seed, 0x1A905));
    for (std::size_t t = 0; t < protocol.impostor_cap; ++t) {
      const std::size_t pick = t + static_cast<std::size_t>(rng.below(plan.impostor.size() - t));
      std::swap(plan.impostor[t], plan.impostor[pick]);
    }
    plan.impostor.resize(protocol.impostor_cap);
    std::sort(plan.impostor.begin(), plan.impostor.end());
  }
  return plan;
}

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

/// Scores every planned pair with `score(SampleRef, SampleRef) -> double`.
template <class Scorer>
ScoreSet gen_scores(const PairPlan& plan, Scorer&& score) {
  ScoreSet s;
  s.genuine.reserve(plan.genuine.size());
  s.impostor.reserve(plan.impostor.size());
  for (const auto& p : plan.genuine) s.genuine.push_back(score(p.a, p.b));
  for (const auto& p : plan.impostor) s.impostor.push_back(score(p.a, p.b));
  return s;
}

// ---------------------------------------------------------------------------
// ROC / EER

struct RocPoint {
  double threshold = 0.0;
  double far = 0.0;  // impostor >= threshold
  double frr = 0.0;  // genuine < threshold
};

/// FAR/FRR at every distinct score, ascending, followed by a +inf point.
inline std::vector<RocPoint> roc_curve(const ScoreSet& s) {
  if (s.genuine.empty() || s.impostor.empty()) throw Error(Errc::insufficient_data, "ROC needs both score lists");
  std::vector<double> g = s.genuine;
  std::vector<double> im = s.impostor;
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> t;
  t.reserve(g.size() + im.size());
  std::merge(g.begin(), g.end(), im.begin(), im.end(), std::back_inserter(t));
  t.erase(std::unique(t.begin(), t.end()), t.end());

  std::vector<RocPoint> roc;
  roc.reserve(t.size() + 1);
  std::size_t gi = 0;  // genuine below threshold
  std::size_t ii = 0;  // impostor below threshold
  const double ng = static_cast<double>(g.size());
  const double ni = static_cast<double>(im.size());
  for (const double th : t) {
    while (gi < g.size() && g[gi] < th) ++gi;
    while (ii < im.size() && im[ii] < th) ++ii;
    roc.push_back({th, static_cast<double>(im.size() - ii) / ni, static_cast<double>(gi) / ng});
  }
  roc.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  return roc;
}

/// Equal error rate as a fraction. Where FAR and FRR cross between two
/// consecutive thresholds the crossing is linearly interpolated.
inline double compute_eer(const ScoreSet& s) {
  const auto roc = roc_curve(s);
  double prev_diff = roc.front().far - roc.front().frr;
  if (prev_diff <= 0.0) return roc.front().far;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    const double diff = roc[i].far - roc[i].frr;
    if (diff == 0.0) return roc[i].far;
    if (diff < 0.0) {
      const double alpha = prev_diff / (prev_diff - diff);
      return roc[i - 1].far + alpha * (roc[i].far - roc[i - 1].far);
    }
    prev_diff = diff;
  }
  return roc.back().far;  // unreachable: the +inf point has FAR 0, FRR 1
}

/// Accuracy loss in percentage points: post - pre.
inline double accuracy_loss(double eer_pre_percent, double eer_post_percent) noexcept {
  return eer_post_percent - eer_pre_percent;
}

// ---------------------------------------------------------------------------
// Revocability / unlinkability

struct MeanSd {
  double mean = 0.0;
  double sd = 0.0;
  std::size_t n = 0;
};

inline MeanSd mean_sd(const std::vector<double>& v) {
  MeanSd m;
  m.n = v.size();
  if (v.empty()) return m;
  m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - m.mean) * (x - m.mean);
  m.sd = std::sqrt(ss / static_cast<double>(v.size()));
  return m;
}

struct RevocabilityStats {
  MeanSd cross_seed;  // same feature, different seeds
  MeanSd same_seed;   // same feature re-hashed under the same seed
  double expected = 0.0;
  double bound = 0.0;  // 3 sigma binomial half-width
  bool pass = false;
};

/// For each (s1, s2): hash C under s1 twice (same pass) and once under s2.
inline RevocabilityStats revocability_test(const FusedFeature& c, const IomParams& base,
                                           const std::vector<std::pair<std::uint64_t, std::uint64_t>>& seed_pairs) {
  if (seed_pairs.empty()) throw Error(Errc::insufficient_data, "revocability needs at least one seed pair");
  std::vector<double> cross;
  std::vector<double> same;
  const FusedFeature twice[2] = {c, c};
  for (const auto& [s1, s2] : seed_pairs) {
    IomParams p1 = base;
    p1.seed = s1;
    IomParams p2 = base;
    p2.seed = s2;
    const auto t1 = iom_hash_streaming(std::span<const FusedFeature>(twice), p1);
    const auto t2 = iom_hash_streaming(c, p2);
    same.push_back(post_transform_score(t1[0], t1[1]));
    cross.push_back(post_transform_score_unchecked(t1[0], t2));
  }
  RevocabilityStats r;
  r.cross_seed = mean_sd(cross);
  r.same_seed = mean_sd(same);
  const double p = 1.0 / base.k;
  r.expected = p;
  r.bound = 3.0 * std::sqrt(p * (1.0 - p) / (static_cast<double>(seed_pairs.size()) * base.l));
  r.pass = std::abs(r.cross_seed.mean - p) <= r.bound;
  return r;
}

inline constexpr double kUnlinkabilityTolerance = 0.02;

struct UnlinkabilityStats {
  MeanSd mated;      // same identity, different samples, different seeds
  MeanSd non_mated;  // different identities, different seeds
  double delta = 0.0;
  bool pass = false;
};

/// `features[identity][sample]`; consecutive seeds (s_t, s_t+1) form the
/// seed pairs. Mated: every unordered intra-identity sample pair;
/// non-mated: first samples of every identity pair.
inline UnlinkabilityStats unlinkability_test(const std::vector<std::vector<FusedFeature>>& features,
                                             const IomParams& base, const std::vector<std::uint64_t>& seeds) {
  if (features.size() < 2) throw Error(Errc::insufficient_data, "unlinkability needs at least two identities");
  if (seeds.size() < 2) throw Error(Errc::insufficient_data, "unlinkability needs at least two seeds");
  std::vector<FusedFeature> flat;
  std::vector<std::size_t> offset;
  for (const auto& id : features) {
    if (id.empty()) throw Error(Errc::insufficient_data, "identity without samples");
    offset.push_back(flat.size());
    flat.insert(flat.end(), id.begin(), id.end());
  }
  std::vector<std::vector<RevocableTemplate>> per_seed;
  for (const std::uint64_t s : seeds) {
    IomParams p = base;
    p.seed = s;
    per_seed.push_back(iom_hash_streaming(flat, p));
  }
  std::vector<double> mated;
  std::vector<double> non_mated;
  for (std::size_t t = 0; t + 1 < seeds.size(); ++t) {
    const auto& ta = per_seed[t];
    const auto& tb = per_seed[t + 1];
    for (std::size_t i = 0; i < features.size(); ++i) {
      for (std::size_t a = 0; a < features[i].size(); ++a) {
        for (std::size_t b = a + 1; b < features[i].size(); ++b) {
          mated.push_back(post_transform_score_unchecked(ta[offset[i] + a], tb[offset[i] + b]));
        }
      }
      for (std::size_t j = i + 1; j < features.size(); ++j) {
        non_mated.push_back(post_transform_score_unchecked(ta[offset[i]], tb[offset[j]]));
      }
    }
  }
  if (mated.empty()) throw Error(Errc::insufficient_data, "unlinkability needs an identity with two samples");
  UnlinkabilityStats u;
  u.mated = mean_sd(mated);
  u.non_mated = mean_sd(non_mated);
  u.delta = std::abs(u.mated.mean - u.non_mated.mean);
  u.pass = u.delta <= kUnlinkabilityTolerance;
  return u;
}

// ---------------------------------------------------------------------------
// Timing

struct TimingStats {
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  std::size_t samples = 0;
};

/// Wall-clock extract + fuse + hash per image, single-threaded. The
/// projection bank is built once beforehand; decoding is not timed.
inline TimingStats timing_report(const std::vector<GrayImage>& images, const Extractor& ex, std::uint64_t seed,
                                 std::size_t repeats = 1) {
  if (images.empty()) throw Error(Errc::insufficient_data, "timing needs at least one image");
  const FusedFeature probe = ex.fused(ex.extract(images.front()));
  const ProjectionBank bank(ex.iom_params(seed), probe.dim());
  std::vector<double> ms;
  for (std::size_t r = 0; r < repeats; ++r) {
    for (const auto& img : images) {
      const auto t0 = std::chrono::steady_clock::now();
      const RevocableTemplate t = iom_hash(ex.fused(ex.extract(img)), bank);
      const auto t1 = std::chrono::steady_clock::now();
      if (t.l() == 0) throw Error(Errc::invalid_argument, "empty template");
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  }
  TimingStats st;
  st.samples = ms.size();
  st.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(ms.size());
  std::sort(ms.begin(), ms.end());
  // Nearest-rank percentile.
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(ms.size())));
  st.p95_ms = ms[std::max<std::size_t>(rank, 1) - 1];
  return st;
}

// ---------------------------------------------------------------------------
// Full evaluation

struct EvalOptions {
  std::uint64_t seed = 0;
  Protocol protocol;
  std::size_t revocability_pairs = 10;
  std::size_t timing_images = 10;
  bool timing = true;
};

struct EvalReport {
  Config config;
  std::uint64_t seed = 0;
  std::size_t identities = 0;
  std::size_t samples = 0;
  std::size_t skipped_files = 0;
  std::size_t skipped_identities = 0;
  ScoreSet pre;
  ScoreSet post;
  double eer_pre = 0.0;   // percent
  double eer_post = 0.0;  // percent
  double loss = 0.0;      // percentage points
  RevocabilityStats revocability;
  UnlinkabilityStats unlinkability;
  TimingStats timing;
  std::vector<std::string> notes;
};

inline EvalReport evaluate_dataset(const Dataset& ds, const Extractor& ex, const EvalOptions& opt) {
  const PairPlan plan = plan_pairs(ds.shape(), opt.protocol);

  std::vector<GrayImage> images;
  std::vector<std::size_t> offset;
  for (const auto& id : ds.identities) {
    offset.push_back(images.size());
    for (const auto& p : id.samples) images.push_back(read_pgm(p));
  }
  std::vector<Features> feats;
  std::vector<FusedFeature> fused;
  feats.reserve(images.size());
  fused.reserve(images.size());
  for (const auto& img : images) {
    feats.push_back(ex.extract(img));
    fused.push_back(ex.fused(feats.back()));
  }
  auto flat = [&](SampleRef r) { return offset[r.identity] + r.sample; };

  EvalReport rep;
  rep.config = ex.config();
  rep.seed = opt.seed;
  rep.identities = ds.identities.size();
  rep.samples = images.size();
  rep.skipped_files = ds.skipped_files;
  rep.skipped_identities = ds.skipped_identities;
  rep.notes = ds.warnings;

  const MatchConfig mc = MatchConfig::from(ex.config());
  rep.pre = gen_scores(plan, [&](SampleRef a, SampleRef b) { return pre_transform_score(feats[flat(a)], feats[flat(b)], mc); });

  const IomParams iom = ex.iom_params(opt.seed);
  const auto templates = iom_hash_streaming(fused, iom);
  rep.post = gen_scores(plan, [&](SampleRef a, SampleRef b) {
    return post_transform_score(templates[flat(a)], templates[flat(b)]);
  });

  rep.eer_pre = 100.0 * compute_eer(rep.pre);
  rep.eer_post = 100.0 * compute_eer(rep.post);
  rep.loss = accuracy_loss(rep.eer_pre, rep.eer_post);

  if (opt.revocability_pairs > 0) {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
    for (std::size_t t = 0; t < opt.revocability_pairs; ++t) {
      pairs.emplace_back(combine(combine(opt.seed, 0x2E70C), 2 * t), combine(combine(opt.seed, 0x2E70C), 2 * t + 1));
    }
    rep.revocability = revocability_test(fused.front(), iom, pairs);
  }

  std::vector<std::vector<FusedFeature>> by_id;
  for (std::size_t i = 0; i < ds.identities.size(); ++i) {
    by_id.emplace_back(fused.begin() + static_cast<std::ptrdiff_t>(offset[i]),
                       fused.begin() + static_cast<std::ptrdiff_t>(offset[i] + ds.identities[i].samples.size()));
  }
  rep.unlinkability =
      unlinkability_test(by_id, iom, {combine(opt.seed, 0x0711A), combine(opt.seed, 0x0711B)});

  if (opt.timing) {
    const std::size_t n = std::min(opt.timing_images, images.size());
    rep.timing = timing_report(std::vector<GrayImage>(images.begin(), images.begin() + static_cast<std::ptrdiff_t>(n)),
                               ex, opt.seed);
  }

  const double check = rep.eer_post - rep.eer_pre;
  rep.notes.push_back(std::string("accuracy_loss equals eer_post - eer_pre: ") + (check == rep.loss ? "yes" : "NO"));
  if (rep.skipped_files > 0 || rep.skipped_identities > 0) {
    rep.notes.push_back("skipped " + std::to_string(rep.skipped_files) + " files and " +
                        std::to_string(rep.skipped_identities) + " identities");
  }
  return rep;
}

inline std::string format_number(double v) {
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

/// `metric,value` rows. Rows whose name starts with `time_` are wall-clock
/// measurements; everything else is deterministic.
inline std::string report_csv(const EvalReport& r) {
  std::ostringstream os;
  auto row = [&os](const std::string& k, const std::string& v) { os << k << ',' << v << '\n'; };
  auto num = [&](const std::string& k, double v) { row(k, format_number(v)); };
  os << "metric,value\n";
  row("seed", std::to_string(r.seed));
  row("identities", std::to_string(r.identities));
  row("samples", std::to_string(r.samples));
  row("skipped_files", std::to_string(r.skipped_files));
  row("skipped_identities", std::to_string(r.skipped_identities));
  row("genuine_pairs", std::to_string(r.pre.genuine.size()));
  row("impostor_pairs", std::to_string(r.pre.impostor.size()));
  num("EER_pre", r.eer_pre);
  num("EER_post", r.eer_post);
  num("accuracy_loss", r.loss);
  num("genuine_mean_pre", mean_sd(r.pre.genuine).mean);
  num("impostor_mean_pre", mean_sd(r.pre.impostor).mean);
  num("genuine_mean_post", mean_sd(r.post.genuine).mean);
  num("impostor_mean_post", mean_sd(r.post.impostor).mean);
  num("revocability_cross_mean", r.revocability.cross_seed.mean);
  num("revocability_cross_sd", r.revocability.cross_seed.sd);
  num("revocability_same_mean", r.revocability.same_seed.mean);
  num("revocability_expected", r.revocability.expected);
  row("revocability_pass", r.revocability.pass ? "true" : "false");
  num("unlinkability_mated_mean", r.unlinkability.mated.mean);
  num("unlinkability_non_mated_mean", r.unlinkability.non_mated.mean);
  num("unlinkability_delta", r.unlinkability.delta);
  row("unlinkability_pass", r.unlinkability.pass ? "true" : "false");
  num("time_mean_ms", r.timing.mean_ms);
  num("time_p95_ms", r.timing.p95_ms);
  std::istringstream cfg(r.config.echo());
  for (std::string line; std::getline(cfg, line);) {
    const auto eq = line.find('=');
    row("config." + line.substr(0, eq), line.substr(eq + 1));
  }
  return os.str();
}

inline std::string roc_csv(const std::vector<RocPoint>& roc) {
  std::ostringstream os;
  os << "threshold,far,frr\n";
  for (const auto& p : roc) {
    os << (std::isinf(p.threshold) ? std::string("inf") : format_number(p.threshold)) << ',' << format_number(p.far)
       << ',' << format_number(p.frr) << '\n';
  }
  return os.str();
}

inline std::string report_summary(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(4);
  os << "identities " << r.identities << ", samples " << r.samples << " (" << r.pre.genuine.size() << " genuine, "
     << r.pre.impostor.size() << " impostor pairs)\n";
  os << "EER before transform  " << r.eer_pre << " %\n";
  os << "EER after transform   " << r.eer_post << " %\n";
  os << "accuracy loss         " << r.loss << " pp\n";
  os << "revocability          cross-seed mean " << r.revocability.cross_seed.mean << " (expected "
     << r.revocability.expected << " +/- " << r.revocability.bound << ") "
     << (r.revocability.pass ? "pass" : "FAIL") << '\n';
  os << "unlinkability         mated " << r.unlinkability.mated.mean << ", non-mated " << r.unlinkability.non_mated.mean
     << ", delta " << r.unlinkability.delta << ' ' << (r.unlinkability.pass ? "pass" : "FAIL") << '\n';
  os << "time per sample       mean " << r.timing.mean_ms << " ms, p95 " << r.timing.p95_ms << " ms\n";
  os << "configuration\n" << r.config.echo();
  return os.str();
}

}  // namespace palmtpl
