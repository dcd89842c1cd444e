#pragma once

// Artifacts: CSV tables, a binary cache for flows and path ensembles, JSON
// reports and the run manifest. Numbers are printed with %.17g so that
// equal results give byte-identical files.

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mkv/particle.hpp"

namespace mkv {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::uint32_t kCacheVersion = 1;
inline constexpr const char* kLibraryVersion = "0.1.0";

std::string format_real(double v);

/// run_id,path_id,step,t,x0,...: one row per particle and recorded time.
std::string flow_csv(const std::string& run_id, const FlowOfMarginals& flow);
/// run_id,path_id,step,t,x0,...: one row per stored path and grid step.
std::string paths_csv(const std::string& run_id, const PathEnsemble& paths);

enum class CacheKind : std::uint32_t { Flow = 1, Paths = 2 };

std::string encode_flow(const FlowOfMarginals& flow, const std::string& config_hash);
std::string encode_paths(const PathEnsemble& paths, const std::string& config_hash);
/// Both throw Error(Config) on a bad header, truncated payload or hash mismatch.
FlowOfMarginals decode_flow(const std::string& bytes, const std::string& config_hash);
PathEnsemble decode_paths(const std::string& bytes, const std::string& config_hash);

std::string read_file(const std::filesystem::path& path);

/// Writes into one output directory and records every file for the manifest.
/// Files are written to a temporary name and renamed into place.
class OutputSet {
 public:
  explicit OutputSet(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  void write(const std::string& name, const std::string& bytes);
  void write_json(const std::string& name, nlohmann::ordered_json doc);

  struct Record {
    std::string name;
    std::size_t bytes;
    std::string sha256;
  };
  const std::vector<Record>& records() const { return records_; }

 private:
  std::filesystem::path dir_;
  std::vector<Record> records_;
};

struct ManifestInfo {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string started;
  std::string finished;
  int exit_code = 0;
};

/// manifest_<command>.json, written last.
void write_manifest(const OutputSet& out, const ManifestInfo& info);

/// UTC timestamp, ISO 8601.
std::string utc_now();

}  // namespace mkv
