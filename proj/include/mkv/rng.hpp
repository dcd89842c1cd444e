#pragma once

// Counter-based random numbers (Philox4x32-10). Every draw is a pure
// function of (seed, counter), so parallel loops produce the same stream
// regardless of how particles are distributed over threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace mkv {

/// Stream tags keep the independent uses of one seed apart.
enum class Stream : std::uint32_t {
  Init = 1,
  Noise = 2,
  Subsample = 3,
  Projection = 4,
  Offsets = 5,
  Bootstrap = 6,
  Test = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent sub-experiment (e.g. the Y copy of a two-copy run).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag + 0x632be59bd9b4e019ULL));
}

class Philox {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox(std::uint64_t seed)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  Block operator()(Block ctr) const {
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
};

/// Random source addressed by (stream, a, b). `a` is usually a particle
/// index and `b` a time step; successive blocks extend the draw.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : philox_(seed) {}

  /// Two uniforms in (0,1) with 53-bit resolution.
  std::array<double, 2> uniform2(Stream s, std::uint64_t a, std::uint32_t b, std::uint32_t block) const {
    const auto tag = (static_cast<std::uint32_t>(s) << 24) ^ block ^ static_cast<std::uint32_t>(a >> 32);
    const auto r = philox_({static_cast<std::uint32_t>(a), b, tag, block});
    const std::uint64_t u0 = (std::uint64_t{r[0]} << 32) | r[1];
    const std::uint64_t u1 = (std::uint64_t{r[2]} << 32) | r[3];
    return {to_open_unit(u0), to_open_unit(u1)};
  }

  /// Fills `out` with i.i.d. standard normals (Box-Muller on successive blocks).
  void normals(Stream s, std::uint64_t a, std::uint32_t b, std::span<double> out) const {
    for (std::size_t k = 0; k < out.size(); k += 2) {
      const auto u = uniform2(s, a, b, static_cast<std::uint32_t>(k / 2));
      const double r = std::sqrt(-2.0 * std::log(u[0]));
      const double th = 2.0 * std::numbers::pi * u[1];
      out[k] = r * std::cos(th);
      if (k + 1 < out.size()) out[k + 1] = r * std::sin(th);
    }
  }

  void uniforms(Stream s, std::uint64_t a, std::uint32_t b, std::span<double> out) const {
    for (std::size_t k = 0; k < out.size(); k += 2) {
      const auto u = uniform2(s, a, b, static_cast<std::uint32_t>(k / 2));
      out[k] = u[0];
      if (k + 1 < out.size()) out[k + 1] = u[1];
    }
  }

 private:
  static double to_open_unit(std::uint64_t u) { return (static_cast<double>(u >> 11) + 0.5) * 0x1.0p-53; }
  Philox philox_;
};

}  // namespace mkv
