#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace visyreve {

std::string_view library_version();

/// Reproducibility header attached to every file the tools write.
struct RunInfo {
  std::uint64_t seed = 0;
  /// Hex FNV-1a hash of the canonical configuration string.
  std::string config_hash;

  /// "# visyreve <version> seed=<seed> config=<hash>"
  std::string comment_line() const;
  nlohmann::json to_json() const;
};

/// 64-bit FNV-1a, rendered as 16 hex digits.
std::string config_hash(std::string_view canonical_config);

/// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

}  // namespace visyreve
