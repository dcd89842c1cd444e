#include "mkv/config.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "mkv/error.hpp"

namespace mkv {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

bool valid_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (std::size_t i = 0; i < k.size(); ++i) {
    const char c = k[i];
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '.';
    if (!ok || (c == '.' && k[i - 1] == '.')) return false;
  }
  return true;
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  fail(ErrorKind::Config, "config key '" + key + "': " + why);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Reader {
 public:
  explicit Reader(const ConfigMap& map) : map_(map) {}

  const ConfigEntry* find(const std::string& key) {
    used_.insert(key);
    const auto it = map_.find(key);
    return it == map_.end() ? nullptr : &it->second;
  }

  void text(const std::string& key, std::string& out) {
    if (const auto* e = find(key)) out = e->value;
  }

  void real(const std::string& key, double& out) {
    const auto* e = find(key);
    if (!e) return;
    double v = 0.0;
    const auto& s = e->value;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) bad(key, "expected a real number, got '" + s + "'");
    out = v;
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    const auto* e = find(key);
    if (!e) return;
    Int v{};
    const auto& s = e->value;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) bad(key, "expected a non-negative integer, got '" + s + "'");
    out = v;
  }

  void flag(const std::string& key, bool& out) {
    const auto* e = find(key);
    if (!e) return;
    if (e->value == "true") out = true;
    else if (e->value == "false") out = false;
    else bad(key, "expected true or false, got '" + e->value + "'");
  }

  void reals(const std::string& key, std::vector<double>& out) {
    const auto* e = find(key);
    if (!e) return;
    out.clear();
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      double v = 0.0;
      const auto [p, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (item.empty() || ec != std::errc() || p != item.data() + item.size())
        bad(key, "expected a comma-separated list of reals");
      out.push_back(v);
    }
  }

  void words(const std::string& key, std::vector<std::string>& out) {
    const auto* e = find(key);
    if (!e) return;
    out.clear();
    std::stringstream ss(e->value);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(trim(item));
  }

  void reject_unknown() const {
    for (const auto& [k, e] : map_)
      if (!used_.count(k)) fail(ErrorKind::Config, "unknown config key '" + k + "' (line " + std::to_string(e.line) + ")");
  }

 private:
  const ConfigMap& map_;
  std::set<std::string> used_;
};

void check(bool cond, const std::string& key, const std::string& why) {
  if (!cond) bad(key, why);
}

}  // namespace

ConfigMap parse_config(const std::string& text) {
  ConfigMap map;
  std::stringstream ss(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(ss, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, "config line " + std::to_string(line) + ": expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (!valid_key(key)) fail(ErrorKind::Config, "config line " + std::to_string(line) + ": invalid key '" + key + "'");
    if (map.count(key)) fail(ErrorKind::Config, "config line " + std::to_string(line) + ": duplicate key '" + key + "'");
    map[key] = {value, line};
  }
  return map;
}

ConfigMap load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Config, "cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

RunConfig build_run_config(const ConfigMap& map, const CliOverrides& overrides) {
  RunConfig rc;
  Reader r(map);

  if (!r.find("scenario")) fail(ErrorKind::Config, "missing required config key 'scenario'");
  r.text("scenario", rc.scenario);
  if (!has_scenario(rc.scenario)) bad("scenario", "unknown scenario id '" + rc.scenario + "'");
  r.integer("scenario.noise_dim", rc.params.noise_dim);
  r.real("scenario.coupling", rc.params.coupling);
  r.real("scenario.rate", rc.params.rate);
  check(rc.params.noise_dim >= 1 && rc.params.noise_dim <= 64, "scenario.noise_dim", "must lie in [1, 64]");

  r.text("init.kind", rc.init_kind);
  r.real("init.scale", rc.init_scale);
  r.reals("init.center", rc.init_center);
  check(rc.init_kind == "point" || rc.init_kind == "gaussian" || rc.init_kind == "uniform", "init.kind",
        "expected point, gaussian or uniform");
  check(rc.init_scale >= 0.0, "init.scale", "must be non-negative");

  r.integer("sim.particles", rc.sim.particles);
  r.real("sim.horizon", rc.sim.horizon);
  r.integer("sim.steps", rc.sim.steps);
  r.integer("sim.seed", rc.sim.seed);
  r.integer("sim.stored_paths", rc.sim.stored_paths);
  r.integer("sim.record_stride", rc.sim.record_stride);
  r.integer("sim.interaction_samples", rc.sim.interaction_samples);
  r.text("sim.mode", rc.mode);
  if (overrides.seed) rc.sim.seed = *overrides.seed;
  check(rc.sim.particles >= 1, "sim.particles", "must be at least 1");
  check(rc.sim.horizon > 0.0, "sim.horizon", "must be positive");
  check(rc.sim.steps >= 1, "sim.steps", "must be at least 1");
  check(rc.sim.record_stride >= 1, "sim.record_stride", "must be at least 1");
  check(rc.sim.stored_paths <= rc.sim.particles, "sim.stored_paths", "cannot exceed sim.particles");
  check(rc.mode == "mckean" || rc.mode == "two_copy", "sim.mode", "expected mckean or two_copy");
  rc.sim.store_paths = rc.sim.stored_paths > 0;

  r.integer("mollify.n", rc.mollify.n);
  r.integer("mollify.samples", rc.mollify.samples);
  r.integer("mollify.seed", rc.mollify.seed);
  check(rc.mollify.n >= 0, "mollify.n", "must be non-negative (0 disables)");
  check(rc.mollify.samples >= 1, "mollify.samples", "must be at least 1");

  r.real("picard.tol", rc.picard.tol);
  r.integer("picard.max_iter", rc.picard.max_iter);
  r.integer("picard.projections", rc.picard.projections);
  r.flag("picard.run_all", rc.picard.run_all);
  check(rc.picard.tol >= 0.0, "picard.tol", "must be non-negative");
  check(rc.picard.max_iter >= 1, "picard.max_iter", "must be at least 1");
  check(rc.picard.projections >= 1, "picard.projections", "must be at least 1");

  auto& v = rc.verify;
  r.reals("verify.lags", v.lags);
  r.text("verify.block", v.block);
  r.real("verify.slope_target", v.slope_target);
  r.real("verify.slope_tol", v.slope_tol);
  r.real("verify.constant_target", v.constant_target);
  r.real("verify.constant_tol", v.constant_tol);
  r.text("verify.variance_target", v.variance_target);
  r.integer("verify.variance_component", v.variance_component);
  r.real("verify.variance_tol", v.variance_tol);
  r.real("verify.exp_delta", v.exp_delta);
  check(v.block == "auto" || v.block == "full" || v.block == "degenerate" || v.block == "nondegenerate",
        "verify.block", "expected auto, full, degenerate or nondegenerate");
  if (v.variance_target != "auto" && v.variance_target != "none") {
    double t = 0.0;
    const auto& s = v.variance_target;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
    check(ec == std::errc() && p == s.data() + s.size() && t > 0.0, "verify.variance_target",
          "expected auto, none or a positive number");
  }
  check(v.slope_tol > 0.0 && v.constant_tol > 0.0 && v.variance_tol > 0.0, "verify",
        "tolerances must be positive");
  check(v.exp_delta > 0.0, "verify.exp_delta", "must be positive");

  r.real("uniqueness.shift", rc.uniqueness.shift);
  r.integer("uniqueness.picard_iterations", rc.uniqueness.picard_iterations);
  check(rc.uniqueness.picard_iterations == 0 || rc.uniqueness.picard_iterations >= 3,
        "uniqueness.picard_iterations", "must be 0 or at least 3");

  r.real("holder.alpha", rc.holder.alpha);
  r.real("holder.h", rc.holder.h);
  r.real("holder.eps", rc.holder_eps);
  r.integer("holder.export", rc.holder_export);
  r.real("holder.max_log10_kappa", rc.net_limits.max_log10_kappa);
  r.integer("holder.max_table_entries", rc.net_limits.max_table_entries);
  check(rc.holder.alpha > 0.0 && rc.holder.alpha < 0.5, "holder.alpha", "must lie in (0, 1/2)");
  check(rc.holder.h >= 0.0, "holder.h", "must be non-negative (0 = suggested)");
  check(rc.holder_eps > 0.0, "holder.eps", "must be positive");
  rc.holder.horizon = rc.sim.horizon;

  r.words("output.formats", rc.formats);
  for (const auto& f : rc.formats) check(f == "csv" || f == "binary" || f == "json", "output.formats", "unknown format '" + f + "'");
  std::string dir;
  r.text("output.dir", dir);
  if (!dir.empty()) rc.output_dir = dir;
  r.integer("run.workers", rc.workers);

  r.reject_unknown();
  if (overrides.output_dir) rc.output_dir = *overrides.output_dir;
  if (overrides.workers) rc.workers = *overrides.workers;
  return rc;
}

bool RunConfig::wants(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

std::string RunConfig::canonical() const {
  std::ostringstream o;
  auto kv = [&](const std::string& k, const std::string& val) { o << k << " = " << val << '\n'; };
  auto list = [](const auto& xs, auto&& f) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + f(xs[i]);
    return s;
  };
  kv("scenario", scenario);
  kv("scenario.noise_dim", std::to_string(params.noise_dim));
  kv("scenario.coupling", fmt(params.coupling));
  kv("scenario.rate", fmt(params.rate));
  kv("init.kind", init_kind);
  kv("init.scale", fmt(init_scale));
  kv("init.center", list(init_center, fmt));
  kv("sim.particles", std::to_string(sim.particles));
  kv("sim.horizon", fmt(sim.horizon));
  kv("sim.steps", std::to_string(sim.steps));
  kv("sim.seed", std::to_string(sim.seed));
  kv("sim.stored_paths", std::to_string(sim.stored_paths));
  kv("sim.record_stride", std::to_string(sim.record_stride));
  kv("sim.interaction_samples", std::to_string(sim.interaction_samples));
  kv("sim.mode", mode);
  kv("mollify.n", std::to_string(mollify.n));
  kv("mollify.samples", std::to_string(mollify.samples));
  kv("mollify.seed", std::to_string(mollify.seed));
  kv("picard.tol", fmt(picard.tol));
  kv("picard.max_iter", std::to_string(picard.max_iter));
  kv("picard.projections", std::to_string(picard.projections));
  kv("picard.run_all", picard.run_all ? "true" : "false");
  kv("verify.lags", list(verify.lags, fmt));
  kv("verify.block", verify.block);
  kv("verify.slope_target", fmt(verify.slope_target));
  kv("verify.slope_tol", fmt(verify.slope_tol));
  kv("verify.constant_target", fmt(verify.constant_target));
  kv("verify.constant_tol", fmt(verify.constant_tol));
  kv("verify.variance_target", verify.variance_target);
  kv("verify.variance_component", std::to_string(verify.variance_component));
  kv("verify.variance_tol", fmt(verify.variance_tol));
  kv("verify.exp_delta", fmt(verify.exp_delta));
  kv("uniqueness.shift", fmt(uniqueness.shift));
  kv("uniqueness.picard_iterations", std::to_string(uniqueness.picard_iterations));
  kv("holder.alpha", fmt(holder.alpha));
  kv("holder.h", fmt(holder.h));
  kv("holder.eps", fmt(holder_eps));
  kv("holder.export", std::to_string(holder_export));
  kv("holder.max_log10_kappa", fmt(net_limits.max_log10_kappa));
  kv("holder.max_table_entries", std::to_string(net_limits.max_table_entries));
  kv("output.formats", list(formats, [](const std::string& s) { return s; }));
  return o.str();
}

std::string RunConfig::hash() const { return sha256_hex(canonical()); }

std::string sha256_hex(const void* data, std::size_t size) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data, size, md, &len, EVP_sha256(), nullptr) != 1) fail(ErrorKind::Io, "SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string sha256_hex(const std::string& data) { return sha256_hex(data.data(), data.size()); }

}  // namespace mkv
