// palmtpl command-line front end.
//
// Exit codes: 0 success / accept, 1 reject, 2 error.

#include <CLI11.hpp>

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "palmtpl/palmtpl.hpp"

namespace fs = std::filesystem;
using namespace palmtpl;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitReject = 1;
constexpr int kExitError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::uint64_t parse_seed(const std::string& text) {
  std::string_view s = text;
  int base = 10;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    s.remove_prefix(2);
    base = 16;
  }
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size()) {
    throw UsageError("invalid seed '" + text + "' (expected decimal or 0x-hex u64)");
  }
  return v;
}

Config config_from(const std::string& path) { return path.empty() ? Config{} : load_config(path); }

std::string prefixed(const std::string& text, const std::string& prefix) {
  std::istringstream in(text);
  std::string out;
  for (std::string line; std::getline(in, line);) out += prefix + line + '\n';
  return out;
}

std::string config_comment(const Config& cfg) { return prefixed(cfg.echo(), "# "); }

std::string stem_sibling(const fs::path& report, const std::string& suffix) {
  fs::path p = report;
  p.replace_filename(report.stem().string() + suffix);
  return p.string();
}

void write_template(const fs::path& out, const RevocableTemplate& t, const Config& cfg) {
  write_file(out, serialize(t));
  // The template format is fixed-size; the effective configuration travels
  // in a sidecar next to it.
  std::ostringstream side;
  side << "seed=0x" << std::hex << t.seed << std::dec << '\n' << cfg.echo();
  write_text(fs::path(out.string() + ".config"), side.str());
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int ids = 20;
  int samples = 8;
  std::string seed = "0x9A1D5EED";
};

int cmd_synth(const SynthArgs& a) {
  if (a.ids < 1) throw UsageError("--ids must be at least 1");
  if (a.samples < 1) throw UsageError("--samples must be at least 1");
  SynthSpec spec;
  spec.identities = a.ids;
  spec.samples = a.samples;
  spec.master_seed = parse_seed(a.seed);

  std::ostringstream comment;
  comment << "palmtpl synth master_seed=0x" << std::hex << spec.master_seed << std::dec
          << " lines=" << spec.line_count << " translation=" << spec.jitter_translation
          << " rotation=" << spec.jitter_rotation << " noise=" << spec.noise_sigma;

  std::size_t files = 0;
  for (int id = 0; id < spec.identities; ++id) {
    char dir[16];
    std::snprintf(dir, sizeof dir, "%04d", id);
    const fs::path d = fs::path(a.out) / dir;
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec) throw Error(Errc::io, "cannot create " + d.string() + ": " + ec.message());
    for (int s = 0; s < spec.samples; ++s) {
      char name[16];
      std::snprintf(name, sizeof name, "%04d.pgm", s);
      write_file(d / name, save_pgm(synth_palm(spec, id, s), comment.str()));
      ++files;
    }
  }
  std::cout << "wrote " << files << " images (" << spec.identities << " identities x " << spec.samples
            << " samples) to " << a.out << '\n';
  return kExitOk;
}

struct EnrollArgs {
  std::string image;
  std::string seed;
  std::string out;
  std::string config;
};

int cmd_enroll(const EnrollArgs& a) {
  const Config cfg = config_from(a.config);
  const Extractor ex(cfg);
  const RevocableTemplate t = ex.enroll(read_pgm(a.image), parse_seed(a.seed));
  write_template(a.out, t, cfg);
  std::cout << "d=" << t.dim << " l=" << t.l() << " k=" << t.k << '\n';
  std::cout << "wrote " << serialize(t).size() << " bytes to " << a.out << '\n';
  return kExitOk;
}

struct VerifyArgs {
  std::string image;
  std::string tmpl;
  std::string seed;
  double threshold = 0.0;
  std::string config;
};

int cmd_verify(const VerifyArgs& a) {
  const Config cfg = config_from(a.config);
  const std::uint64_t seed = parse_seed(a.seed);
  const RevocableTemplate enrolled = deserialize(read_file(a.tmpl));
  if (enrolled.seed != seed) {
    throw Error(Errc::seed_mismatch, "template was issued under a different seed");
  }
  const Extractor ex(cfg);
  const RevocableTemplate probe = ex.enroll(read_pgm(a.image), seed);
  const double score = post_transform_score(enrolled, probe);
  const bool accept = score >= a.threshold;
  std::cout << "score " << std::fixed << std::setprecision(4) << score << ' ' << (accept ? "accept" : "reject")
            << '\n';
  return accept ? kExitOk : kExitReject;
}

struct EvaluateArgs {
  std::string dataset;
  std::string seed;
  std::string report;
  std::string config;
  std::string impostors = "first";
  std::size_t impostor_cap = 0;
  std::size_t revocability_pairs = 10;
  std::size_t timing_images = 10;
  bool no_timing = false;
};

int cmd_evaluate(const EvaluateArgs& a) {
  const Config cfg = config_from(a.config);
  const Extractor ex(cfg);
  EvalOptions opt;
  opt.seed = parse_seed(a.seed);
  opt.protocol.impostor = a.impostors == "all" ? ImpostorProtocol::full_cross : ImpostorProtocol::first_vs_first;
  opt.protocol.impostor_cap = a.impostor_cap;
  opt.protocol.seed = opt.seed;
  opt.revocability_pairs = a.revocability_pairs;
  opt.timing_images = a.timing_images;
  opt.timing = !a.no_timing;

  const Dataset ds = scan_dataset(a.dataset);
  for (const auto& w : ds.warnings) std::cerr << "warning: " << w << '\n';
  const EvalReport rep = evaluate_dataset(ds, ex, opt);

  const fs::path report = a.report;
  if (report.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(report.parent_path(), ec);
    if (ec) throw Error(Errc::io, "cannot create " + report.parent_path().string() + ": " + ec.message());
  }
  const std::string cfg_lines = config_comment(cfg);
  write_text(report, report_csv(rep));
  write_text(stem_sibling(report, "_roc_pre.csv"), cfg_lines + roc_csv(roc_curve(rep.pre)));
  write_text(stem_sibling(report, "_roc_post.csv"), cfg_lines + roc_csv(roc_curve(rep.post)));
  std::string notes = report_summary(rep) + "notes\n";
  for (const auto& n : rep.notes) notes += "  " + n + '\n';
  write_text(stem_sibling(report, "_notes.txt"), notes);

  std::cout << report_summary(rep);
  std::cout << "report written to " << report.string() << '\n';
  return kExitOk;
}

struct RevokeArgs {
  std::string image;
  std::string old_seed;
  std::string new_seed;
  std::string out;
  std::string config;
};

int cmd_revoke(const RevokeArgs& a) {
  const std::uint64_t s_old = parse_seed(a.old_seed);
  const std::uint64_t s_new = parse_seed(a.new_seed);
  if (s_old == s_new) throw UsageError("--old-seed and --new-seed must differ");
  const Config cfg = config_from(a.config);
  const Extractor ex(cfg);
  const FusedFeature c = ex.fused(ex.extract(read_pgm(a.image)));
  const RevocableTemplate t_old = iom_hash_streaming(c, ex.iom_params(s_old));
  const RevocableTemplate t_new = iom_hash_streaming(c, ex.iom_params(s_new));
  write_template(a.out, t_new, cfg);

  const double cross = post_transform_score_unchecked(t_old, t_new);
  const double self = post_transform_score(t_new, iom_hash_streaming(c, ex.iom_params(s_new)));
  std::cout << std::fixed << std::setprecision(4);
  std::cout << "cross-seed collision rate " << cross << " (expected " << 1.0 / t_new.k << ")\n";
  std::cout << "new template self score   " << self << '\n';
  std::cout << "wrote " << a.out << '\n';
  return kExitOk;
}

struct DumpArgs {
  std::string image;
  std::string out;
  std::string overlay;
  std::string config;
};

int cmd_dump_orientation(const DumpArgs& a) {
  const Config cfg = config_from(a.config);
  const Extractor ex(cfg);
  const BlockGrid grid = ex.blocks(read_pgm(a.image));
  const OrientationMap map = orientation_map(grid.padded, ex.bank(), ex.fusion());
  write_file(a.out, save_pgm(render_orientation(map), "palmtpl orientation codes x21\n" + cfg.echo()));
  std::cout << "wrote " << map.width << "x" << map.height << " orientation map to " << a.out << '\n';
  return kExitOk;
}

void mark(GrayImage& img, int x, int y, std::uint8_t v) {
  if (x >= 0 && y >= 0 && x < img.width() && y < img.height()) img(x, y) = v;
}

int cmd_dump_keypoints(const DumpArgs& a) {
  const Config cfg = config_from(a.config);
  const Extractor ex(cfg);
  const BlockGrid grid = ex.blocks(read_pgm(a.image));
  std::vector<Keypoint> kps;
  const PointFeature pf = point_feature(grid, ex.hessian(), &kps);

  std::ostringstream csv;
  csv << config_comment(cfg) << "x,y,scale,response\n";
  for (const auto& k : kps) csv << k.x << ',' << k.y << ',' << k.scale << ',' << format_number(k.response) << '\n';
  write_text(a.out, csv.str());

  if (!a.overlay.empty()) {
    GrayImage img = grid.padded;
    for (const auto& k : kps) mark(img, k.x, k.y, 0);
    for (const auto& r : pf.representatives) {
      for (int t = -3; t <= 3; ++t) {
        mark(img, r.point.x + t, r.point.y, 255);
        mark(img, r.point.x, r.point.y + t, 255);
      }
    }
    write_file(a.overlay, save_pgm(img, "palmtpl keypoints (black) and representatives (white)\n" + cfg.echo()));
  }
  std::cout << kps.size() << " keypoints, " << pf.size() << " representatives\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Revocable palmprint templates"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "generate a synthetic palm dataset");
  c_synth->add_option("--out", synth.out, "output directory")->required();
  c_synth->add_option("--ids", synth.ids, "number of identities")->capture_default_str();
  c_synth->add_option("--samples", synth.samples, "samples per identity")->capture_default_str();
  c_synth->add_option("--seed", synth.seed, "master seed")->capture_default_str();

  EnrollArgs enroll;
  auto* c_enroll = app.add_subcommand("enroll", "issue a revocable template for an image");
  c_enroll->add_option("image", enroll.image, "PGM image")->required();
  c_enroll->add_option("--seed", enroll.seed, "projection seed")->required();
  c_enroll->add_option("--out", enroll.out, "template file")->required();
  c_enroll->add_option("--config", enroll.config, "config file");

  VerifyArgs verify;
  auto* c_verify = app.add_subcommand("verify", "match an image against a template");
  c_verify->add_option("image", verify.image, "PGM image")->required();
  c_verify->add_option("template", verify.tmpl, "template file")->required();
  c_verify->add_option("--seed", verify.seed, "projection seed")->required();
  c_verify->add_option("--threshold", verify.threshold, "accept when score >= threshold")->required();
  c_verify->add_option("--config", verify.config, "config file");

  EvaluateArgs eval;
  auto* c_eval = app.add_subcommand("evaluate", "run the accuracy protocol over a dataset");
  c_eval->add_option("dataset", eval.dataset, "dataset root (<id>/<sample>.pgm)")->required();
  c_eval->add_option("--seed", eval.seed, "projection seed")->required();
  c_eval->add_option("--report", eval.report, "report CSV path")->required();
  c_eval->add_option("--config", eval.config, "config file");
  c_eval->add_option("--impostors", eval.impostors, "impostor protocol")
      ->check(CLI::IsMember({"first", "all"}))
      ->capture_default_str();
  c_eval->add_option("--impostor-cap", eval.impostor_cap, "subsample impostor pairs (all only, 0 = no cap)");
  c_eval->add_option("--revocability-pairs", eval.revocability_pairs, "seed pairs for the revocability check")
      ->capture_default_str();
  c_eval->add_option("--timing-images", eval.timing_images, "images timed")->capture_default_str();
  c_eval->add_flag("--no-timing", eval.no_timing, "skip wall-clock timing");

  RevokeArgs revoke;
  auto* c_revoke = app.add_subcommand("revoke", "reissue a template under a new seed");
  c_revoke->add_option("image", revoke.image, "PGM image")->required();
  c_revoke->add_option("--old-seed", revoke.old_seed, "seed of the compromised template")->required();
  c_revoke->add_option("--new-seed", revoke.new_seed, "replacement seed")->required();
  c_revoke->add_option("--out", revoke.out, "new template file")->required();
  c_revoke->add_option("--config", revoke.config, "config file");

  DumpArgs dump_o;
  auto* c_dump_o = app.add_subcommand("dump-orientation", "write the fused orientation map as PGM");
  c_dump_o->add_option("image", dump_o.image, "PGM image")->required();
  c_dump_o->add_option("--out", dump_o.out, "output PGM")->required();
  c_dump_o->add_option("--config", dump_o.config, "config file");

  DumpArgs dump_k;
  auto* c_dump_k = app.add_subcommand("dump-keypoints", "write detected keypoints as CSV");
  c_dump_k->add_option("image", dump_k.image, "PGM image")->required();
  c_dump_k->add_option("--out", dump_k.out, "output CSV")->required();
  c_dump_k->add_option("--overlay", dump_k.overlay, "optional PGM with representatives drawn");
  c_dump_k->add_option("--config", dump_k.config, "config file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*c_synth) return cmd_synth(synth);
    if (*c_enroll) return cmd_enroll(enroll);
    if (*c_verify) return cmd_verify(verify);
    if (*c_eval) return cmd_evaluate(eval);
    if (*c_revoke) return cmd_revoke(revoke);
    if (*c_dump_o) return cmd_dump_orientation(dump_o);
    if (*c_dump_k) return cmd_dump_keypoints(dump_k);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
