#include "visyreve/runinfo.hpp"

#include <cmath>

#include <fmt/format.h>

namespace visyreve {

std::string_view library_version() { return "0.3.0"; }

std::string RunInfo::comment_line() const {
  return fmt::format("# visyreve {} seed={} config={}", library_version(), seed, config_hash);
}

nlohmann::json RunInfo::to_json() const {
  return {{"tool", "visyreve"},
          {"version", std::string(library_version())},
          {"seed", seed},
          {"config_hash", config_hash}};
}

std::string config_hash(std::string_view canonical_config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_config) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  return fmt::format("{}", value);
}

}  // namespace visyreve
