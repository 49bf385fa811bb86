#pragma once

// key = value configuration. One entry per line, '#' starts a comment,
// unknown keys are rejected and missing keys keep their defaults.

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>

#include "palmtpl/error.hpp"
#include "palmtpl/template.hpp"

namespace palmtpl {

struct Config {
  int mfrat_window = 13;
  std::uint64_t fusion_r = 8;
  int block_size = 24;
  int block_count = 36;
  int cell_size = 4;
  std::uint32_t iom_l = 420;
  std::uint32_t iom_k = 50;
  FusionMode mode = FusionMode::raw;
  double w_o = 0.5;
  int shift_radius = 0;
  bool cyclic_wrap = false;
  double hessian_threshold = 1000.0;
  bool scale_segments = true;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(Errc::config, m); };
    if (mfrat_window < 5 || mfrat_window % 2 == 0) fail("mfrat_window must be odd and >= 5");
    if (block_size < 3) fail("block_size must be >= 3");
    if (block_count < 1) fail("block_count must be >= 1");
    if (cell_size < 1) fail("cell_size must be >= 1");
    if (block_size % cell_size != 0) fail("cell_size must divide block_size");
    if (iom_l < 1) fail("iom_l must be >= 1");
    if (iom_k < 1 || iom_k > 65536) fail("iom_k must be in [1, 65536]");
    if (!(w_o >= 0.0 && w_o <= 1.0)) fail("w_o must be in [0, 1]");
    if (shift_radius < 0) fail("shift_radius must be >= 0");
    if (!(hessian_threshold >= 0.0)) fail("hessian_threshold must be >= 0");
  }

  /// Effective configuration, one `key=value` per line in a fixed order.
  std::string echo() const {
    std::ostringstream os;
    os << "mfrat_window=" << mfrat_window << '\n'
       << "fusion_r=" << fusion_r << '\n'
       << "block_size=" << block_size << '\n'
       << "block_count=" << block_count << '\n'
       << "cell_size=" << cell_size << '\n'
       << "iom_l=" << iom_l << '\n'
       << "iom_k=" << iom_k << '\n'
       << "mode=" << to_string(mode) << '\n'
       << "w_o=" << w_o << '\n'
       << "shift_radius=" << shift_radius << '\n'
       << "cyclic_wrap=" << (cyclic_wrap ? "true" : "false") << '\n'
       << "hessian_threshold=" << hessian_threshold << '\n'
       << "scale_segments=" << (scale_segments ? "true" : "false") << '\n';
    return os.str();
  }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(std::string_view key, std::string_view v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw Error(Errc::config, "bad value for " + std::string(key) + ": '" + std::string(v) + "'");
  }
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw Error(Errc::config, "bad boolean for " + std::string(key) + ": '" + std::string(v) + "'");
}

}  // namespace detail

inline Config parse_config(std::string_view text) {
  Config cfg;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = std::min(text.find('\n', start), text.size());
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::config, "line " + std::to_string(line_no) + ": expected key = value");
    }
    const auto key = detail::trim(line.substr(0, eq));
    const auto val = detail::trim(line.substr(eq + 1));
    using detail::parse_bool;
    using detail::parse_number;
    if (key == "mfrat_window") cfg.mfrat_window = parse_number<int>(key, val);
    else if (key == "fusion_r") cfg.fusion_r = parse_number<std::uint64_t>(key, val);
    else if (key == "block_size") cfg.block_size = parse_number<int>(key, val);
    else if (key == "block_count") cfg.block_count = parse_number<int>(key, val);
    else if (key == "cell_size") cfg.cell_size = parse_number<int>(key, val);
    else if (key == "iom_l") cfg.iom_l = parse_number<std::uint32_t>(key, val);
    else if (key == "iom_k") cfg.iom_k = parse_number<std::uint32_t>(key, val);
    else if (key == "w_o") cfg.w_o = parse_number<double>(key, val);
    else if (key == "shift_radius") cfg.shift_radius = parse_number<int>(key, val);
    else if (key == "hessian_threshold") cfg.hessian_threshold = parse_number<double>(key, val);
    else if (key == "cyclic_wrap") cfg.cyclic_wrap = parse_bool(key, val);
    else if (key == "scale_segments") cfg.scale_segments = parse_bool(key, val);
    else if (key == "mode") {
      if (val == "raw") cfg.mode = FusionMode::raw;
      else if (val == "angular") cfg.mode = FusionMode::angular;
      else throw Error(Errc::config, "mode must be raw or angular");
    } else {
      throw Error(Errc::config, "line " + std::to_string(line_no) + ": unknown key '" + std::string(key) + "'");
    }
  }
  cfg.validate();
  return cfg;
}

inline Config load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io, "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace palmtpl
