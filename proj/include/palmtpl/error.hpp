#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace palmtpl {

/// Failure categories. Every distinct failure mode of a decoder or protocol
/// check has its own code so callers (and tests) can tell them apart.
enum class Errc {
  unsupported_magic,
  malformed_header,
  maxval_too_large,
  truncated_payload,
  block_count_mismatch,
  invalid_argument,
  dimension_mismatch,
  bad_magic,
  bad_version,
  index_out_of_range,
  truncated,
  trailing_data,
  seed_mismatch,
  param_mismatch,
  insufficient_data,
  config,
  io,
};

inline std::string_view errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::unsupported_magic: return "unsupported magic";
    case Errc::malformed_header: return "malformed header";
    case Errc::maxval_too_large: return "maxval too large";
    case Errc::truncated_payload: return "truncated pixel payload";
    case Errc::block_count_mismatch: return "block count mismatch";
    case Errc::invalid_argument: return "invalid argument";
    case Errc::dimension_mismatch: return "dimension mismatch";
    case Errc::bad_magic: return "bad magic";
    case Errc::bad_version: return "bad version";
    case Errc::index_out_of_range: return "index out of range";
    case Errc::truncated: return "truncated";
    case Errc::trailing_data: return "trailing data";
    case Errc::seed_mismatch: return "seed mismatch";
    case Errc::param_mismatch: return "parameter mismatch";
    case Errc::insufficient_data: return "insufficient data";
    case Errc::config: return "config error";
    case Errc::io: return "i/o error";
  }
  return "unknown error";
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), detail_(what) {}

  Errc code() const noexcept { return code_; }
  /// Message without the error-name prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  Errc code_;
  std::string detail_;
};

}  // namespace palmtpl
