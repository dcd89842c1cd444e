#include "mkv/io.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include "mkv/config.hpp"
#include "mkv/error.hpp"

namespace mkv {

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string csv_header(std::size_t dim) {
  std::string h = "run_id,path_id,step,t";
  for (std::size_t c = 0; c < dim; ++c) h += ",x" + std::to_string(c);
  return h + "\n";
}

void csv_row(std::string& out, const std::string& run_id, std::size_t path, std::size_t step, double t,
             std::span<const double> x) {
  out += run_id;
  out += ',' + std::to_string(path) + ',' + std::to_string(step) + ',' + format_real(t);
  for (double v : x) out += ',' + format_real(v);
  out += '\n';
}

// Header layout (little-endian host order):
//   char[8] magic, u32 version, u32 kind, char[64] config hash,
//   u64 a, u64 b, u64 c, u64 d, f64 dt
constexpr char kMagic[8] = {'M', 'K', 'V', 'C', 'A', 'C', 'H', 'E'};
constexpr std::size_t kHeaderSize = 8 + 4 + 4 + 64 + 4 * 8 + 8;

struct Header {
  CacheKind kind;
  std::uint64_t a = 0, b = 0, c = 0, d = 0;
  double dt = 0.0;
};

template <class T>
void put(std::string& out, const T& v) {
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_header(std::string& out, const Header& h, const std::string& hash) {
  out.append(kMagic, 8);
  put(out, kCacheVersion);
  put(out, static_cast<std::uint32_t>(h.kind));
  std::string padded = hash;
  padded.resize(64, ' ');
  out += padded;
  put(out, h.a);
  put(out, h.b);
  put(out, h.c);
  put(out, h.d);
  put(out, h.dt);
}

class Cursor {
 public:
  explicit Cursor(const std::string& bytes) : bytes_(bytes) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof v);
    pos_ += sizeof v;
    return v;
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void doubles(std::vector<double>& out, std::size_t n) {
    if (n > (bytes_.size() - pos_) / sizeof(double)) fail(ErrorKind::Config, "artifact payload is truncated");
    out.resize(n);
    if (n) std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorKind::Config, "artifact is truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

Header read_header(Cursor& cur, CacheKind expected, const std::string& hash) {
  if (cur.take(8) != std::string(kMagic, 8)) fail(ErrorKind::Config, "artifact header is corrupted (bad magic)");
  const auto version = cur.get<std::uint32_t>();
  if (version != kCacheVersion)
    fail(ErrorKind::Config, "artifact cache version " + std::to_string(version) + " is not supported");
  const auto kind = cur.get<std::uint32_t>();
  if (kind != static_cast<std::uint32_t>(expected)) fail(ErrorKind::Config, "artifact holds the wrong record kind");
  std::string stored = cur.take(64);
  stored.erase(stored.find_last_not_of(' ') + 1);
  if (stored != hash) fail(ErrorKind::Config, "artifact was produced by a different config (hash mismatch)");
  Header h{static_cast<CacheKind>(kind)};
  h.a = cur.get<std::uint64_t>();
  h.b = cur.get<std::uint64_t>();
  h.c = cur.get<std::uint64_t>();
  h.d = cur.get<std::uint64_t>();
  h.dt = cur.get<double>();
  return h;
}

}  // namespace

std::string flow_csv(const std::string& run_id, const FlowOfMarginals& flow) {
  std::string out = csv_header(flow.clouds.empty() ? 1 : flow.clouds.front().dim);
  for (std::size_t k = 0; k < flow.size(); ++k) {
    const auto& c = flow.clouds[k];
    for (std::size_t i = 0; i < c.size(); ++i) csv_row(out, run_id, i, k * flow.stride, c.t, c[i]);
  }
  return out;
}

std::string paths_csv(const std::string& run_id, const PathEnsemble& paths) {
  std::string out = csv_header(paths.dim);
  for (std::size_t p = 0; p < paths.paths; ++p)
    for (std::size_t k = 0; k <= paths.steps; ++k)
      csv_row(out, run_id, p, k, paths.dt * static_cast<double>(k), paths.state(p, k));
  return out;
}

std::string encode_flow(const FlowOfMarginals& flow, const std::string& config_hash) {
  const std::size_t dim = flow.clouds.empty() ? 0 : flow.clouds.front().dim;
  const std::size_t count = flow.clouds.empty() ? 0 : flow.clouds.front().size();
  std::string out;
  put_header(out, {CacheKind::Flow, flow.size(), dim, count, flow.stride, flow.dt}, config_hash);
  for (const auto& c : flow.clouds) {
    require(c.dim == dim && c.size() == count, "flow clouds must share size and dimension");
    put(out, c.t);
    out.append(reinterpret_cast<const char*>(c.states.data()), c.states.size() * sizeof(double));
  }
  return out;
}

std::string encode_paths(const PathEnsemble& paths, const std::string& config_hash) {
  std::string out;
  put_header(out, {CacheKind::Paths, paths.paths, paths.steps, paths.dim, paths.noise_dim, paths.dt}, config_hash);
  out.append(reinterpret_cast<const char*>(paths.trajectories.data()), paths.trajectories.size() * sizeof(double));
  out.append(reinterpret_cast<const char*>(paths.increments.data()), paths.increments.size() * sizeof(double));
  return out;
}

FlowOfMarginals decode_flow(const std::string& bytes, const std::string& config_hash) {
  Cursor cur(bytes);
  const Header h = read_header(cur, CacheKind::Flow, config_hash);
  if (h.a > (1u << 30) || h.b > (1u << 16)) fail(ErrorKind::Config, "artifact header is corrupted (sizes)");
  FlowOfMarginals flow;
  flow.dt = h.dt;
  flow.stride = h.d;
  flow.clouds.resize(h.a);
  for (auto& c : flow.clouds) {
    c.t = cur.get<double>();
    c.dim = h.b;
    cur.doubles(c.states, h.b * h.c);
  }
  if (!cur.at_end()) fail(ErrorKind::Config, "artifact has trailing bytes");
  return flow;
}

PathEnsemble decode_paths(const std::string& bytes, const std::string& config_hash) {
  Cursor cur(bytes);
  const Header h = read_header(cur, CacheKind::Paths, config_hash);
  if (h.c == 0 || h.c > (1u << 16) || h.d > h.c || h.b > (1u << 30)) fail(ErrorKind::Config, "artifact header is corrupted (sizes)");
  PathEnsemble e;
  e.paths = h.a;
  e.steps = h.b;
  e.dim = h.c;
  e.noise_dim = h.d;
  e.dt = h.dt;
  cur.doubles(e.trajectories, h.a * (h.b + 1) * h.c);
  cur.doubles(e.increments, h.a * h.b * h.d);
  if (!cur.at_end()) fail(ErrorKind::Config, "artifact has trailing bytes");
  return e;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Config, "cannot read artifact '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

OutputSet::OutputSet(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) fail(ErrorKind::Io, "cannot create output directory '" + dir_.string() + "': " + ec.message());
}

void OutputSet::write(const std::string& name, const std::string& bytes) {
  const auto target = dir_ / name;
  const auto tmp = dir_ / (name + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) fail(ErrorKind::Io, "cannot rename '" + tmp.string() + "': " + ec.message());
  records_.push_back({name, bytes.size(), sha256_hex(bytes)});
}

void OutputSet::write_json(const std::string& name, nlohmann::ordered_json doc) {
  nlohmann::ordered_json full;
  full["schema_version"] = kSchemaVersion;
  for (auto& [k, v] : doc.items()) full[k] = v;
  write(name, full.dump(2) + "\n");
}

void write_manifest(const OutputSet& out, const ManifestInfo& info) {
  nlohmann::ordered_json m;
  m["schema_version"] = kSchemaVersion;
  m["command"] = info.command;
  m["library_version"] = kLibraryVersion;
  m["config_hash"] = info.config_hash;
  m["seed"] = info.seed;
  m["started"] = info.started;
  m["finished"] = info.finished;
  m["exit_code"] = info.exit_code;
  auto files = nlohmann::ordered_json::array();
  for (const auto& r : out.records())
    files.push_back({{"name", r.name}, {"bytes", r.bytes}, {"sha256", r.sha256}});
  m["outputs"] = files;
  // Written like any other file (temp + rename) but not listed in itself.
  OutputSet self(out.dir());
  self.write("manifest_" + info.command + ".json", m.dump(2) + "\n");
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace mkv
