#pragma once

// Run configuration: flat text, one `key = value` per line, dotted keys,
// `#` starts a comment. See docs/config.md for the grammar and key table.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mkv/holder_net.hpp"
#include "mkv/mollify.hpp"
#include "mkv/particle.hpp"
#include "mkv/scenarios.hpp"

namespace mkv {

struct ConfigEntry {
  std::string value;
  std::size_t line = 0;
};

using ConfigMap = std::map<std::string, ConfigEntry>;

/// Throws Error(Config) on malformed lines or duplicate keys.
ConfigMap parse_config(const std::string& text);
ConfigMap load_config(const std::filesystem::path& path);

struct VerifySettings {
  std::vector<double> lags;  // empty = dyadic 2^-7 .. 2^-3
  std::string block = "auto";  // auto | full | degenerate | nondegenerate
  double slope_target = 2.0;
  double slope_tol = 0.15;
  double constant_target = 0.0;  // 0 = not checked
  double constant_tol = 0.15;
  std::string variance_target = "auto";  // auto | none | number
  std::size_t variance_component = 0;
  double variance_tol = 0.05;
  double exp_delta = 0.05;
};

struct UniquenessSettings {
  double shift = 0.5;  // mean shift of the second initial law along x1
  std::size_t picard_iterations = 4;
};

struct RunConfig {
  std::string scenario;
  ScenarioParams params;
  std::string init_kind = "point";  // point | gaussian | uniform
  double init_scale = 1.0;
  std::vector<double> init_center;  // empty = origin
  SimConfig sim;
  std::string mode = "mckean";  // mckean | two_copy
  MollifierSpec mollify{0, 64, 12345};  // n = 0 disables regularization
  PicardOptions picard;
  VerifySettings verify;
  UniquenessSettings uniqueness;
  HolderBallSpec holder{0.4, 0.0, 1.0, 1};  // h = 0: use the suggested h
  double holder_eps = 0.25;
  std::size_t holder_export = 16;  // net elements written to CSV
  NetLimits net_limits;
  std::vector<std::string> formats{"csv", "binary"};
  std::size_t workers = 0;  // 0 = OpenMP default; speed only
  std::filesystem::path output_dir = "out";

  bool wants(const std::string& format) const;
  /// Canonical `key = value` listing of every result-affecting setting.
  std::string canonical() const;
  /// SHA-256 of canonical() in hex.
  std::string hash() const;
};

struct CliOverrides {
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed;
};

/// Validates every key; unknown keys, missing `scenario` and out-of-range
/// values throw Error(Config) naming the key.
RunConfig build_run_config(const ConfigMap& map, const CliOverrides& overrides = {});

std::string sha256_hex(const void* data, std::size_t size);
std::string sha256_hex(const std::string& data);

}  // namespace mkv
