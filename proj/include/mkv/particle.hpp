#pragma once

// Euler-Maruyama interacting particle systems:
//   x0 <- x0 + B0(t, x, mu) dt
//   x1 <- x1 + B1(t, x, mu) dt + Sigma_1(t, x, mu) dW
// where mu is the empirical measure of an interaction cloud. The cloud is
// the system itself (McKean-Vlasov), a frozen flow (linearised equation) or
// an independent copy (two-copy scheme).

#include <cstdint>
#include <optional>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/rng.hpp"

namespace mkv {

struct SimConfig {
  std::size_t particles = 1000;
  double horizon = 1.0;
  std::size_t steps = 100;
  std::uint64_t seed = 1;
  bool store_paths = true;
  std::size_t stored_paths = 100;
  /// Keep every k-th cloud in the flow (1 = every grid time).
  std::size_t record_stride = 1;
  /// 0 = exact mean field; m > 0 = m uniformly drawn interaction partners per particle.
  std::size_t interaction_samples = 0;

  double dt() const { return horizon / static_cast<double>(steps); }
  void validate() const;
};

struct ParticleCloud {
  double t = 0.0;
  std::size_t dim = 1;
  std::vector<double> states;

  std::size_t size() const { return states.size() / dim; }
  CloudView view() const { return {states, dim}; }
  std::span<const double> operator[](std::size_t i) const { return {states.data() + i * dim, dim}; }
  std::span<double> operator[](std::size_t i) { return {states.data() + i * dim, dim}; }
};

struct FlowOfMarginals {
  double dt = 0.0;  // grid spacing of the underlying time grid
  std::size_t stride = 1;
  std::vector<ParticleCloud> clouds;

  std::size_t size() const { return clouds.size(); }
  double time(std::size_t k) const { return clouds[k].t; }
};

/// Stored trajectories and their Brownian increments.
struct PathEnsemble {
  std::size_t paths = 0;
  std::size_t steps = 0;
  std::size_t dim = 1;
  std::size_t noise_dim = 0;
  double dt = 0.0;
  std::vector<double> trajectories;  // [path][step 0..steps][dim]
  std::vector<double> increments;    // [path][step 0..steps-1][noise_dim]

  void resize(std::size_t p, std::size_t s, std::size_t n, std::size_t d, double h);
  std::span<const double> state(std::size_t path, std::size_t step) const {
    return {trajectories.data() + (path * (steps + 1) + step) * dim, dim};
  }
  std::span<double> state(std::size_t path, std::size_t step) {
    return {trajectories.data() + (path * (steps + 1) + step) * dim, dim};
  }
  std::span<const double> increment(std::size_t path, std::size_t step) const {
    return {increments.data() + (path * steps + step) * noise_dim, noise_dim};
  }
  std::span<double> increment(std::size_t path, std::size_t step) {
    return {increments.data() + (path * steps + step) * noise_dim, noise_dim};
  }
  /// All stored states at one grid step.
  std::vector<double> slice(std::size_t step) const;
};

/// Initial law. Point mass and Gaussian/uniform boxes all have finite
/// fourth moment; point and uniform are bounded, Gaussian is sub-Gaussian.
struct InitialSampler {
  enum class Kind { Point, Gaussian, Uniform };
  Kind kind = Kind::Point;
  std::vector<double> center;
  double scale = 1.0;

  static InitialSampler point(std::vector<double> z);
  static InitialSampler gaussian(std::vector<double> mean, double sd);
  static InitialSampler uniform(std::vector<double> center, double half_width);

  std::size_t dim() const { return center.size(); }
  bool sub_gaussian() const { return true; }
  void sample(const CounterRng& rng, std::size_t index, std::span<double> out) const;
  ParticleCloud cloud(std::uint64_t seed, std::size_t count) const;
};

// --- kernels ------------------------------------------------------------------

/// Per-particle interaction partners for the subsampled mean field.
struct InteractionPlan {
  std::size_t samples = 0;  // 0 = exact
  const CounterRng* rng = nullptr;
  std::uint32_t step = 0;
};

/// One Euler step for the whole cloud (OpenMP over particles). `noise`
/// holds N_p rows of d already-scaled N(0, dt I) increments.
ParticleCloud step_euler(const ParticleCloud& cloud, const ParticleCloud& interaction, const CoefficientField& field,
                         double dt, std::span<const double> noise, InteractionPlan plan = {});

/// Serial reference for step_euler; results are bit-identical.
ParticleCloud step_euler_serial(const ParticleCloud& cloud, const ParticleCloud& interaction,
                                const CoefficientField& field, double dt, std::span<const double> noise,
                                InteractionPlan plan = {});

// --- simulators -----------------------------------------------------------------

struct SimResult {
  FlowOfMarginals flow;
  PathEnsemble paths;
};

struct TwoCopyResult {
  SimResult x;
  SimResult y;
};

SimResult simulate_mckean(const CoefficientField& field, const InitialSampler& init, const SimConfig& cfg);

/// Mean field read from frozen.clouds[k] at step k (frozen must be recorded at every grid time).
SimResult simulate_linearized(const CoefficientField& field, const InitialSampler& init,
                              const FlowOfMarginals& frozen, const SimConfig& cfg);

/// X interacts with Y and Y with X; independent drivers and initial data.
TwoCopyResult simulate_two_copy(const CoefficientField& field, const InitialSampler& init, const SimConfig& cfg);

/// The flow whose every cloud is the initial cloud.
FlowOfMarginals constant_flow(const ParticleCloud& initial, const SimConfig& cfg);

struct PicardOptions {
  double tol = 1e-3;
  std::size_t max_iter = 20;
  std::size_t projections = 32;
  /// Run all max_iter iterations even after the tolerance is met.
  bool run_all = false;
};

struct PicardResult {
  FlowOfMarginals flow;
  PathEnsemble paths;
  std::vector<double> history;  // sup_t W1 between consecutive iterates
  std::vector<FlowOfMarginals> iterates;  // filled when keep_iterates is requested
  bool converged = false;
};

PicardResult picard_fixed_point(const CoefficientField& field, const InitialSampler& init, const SimConfig& cfg,
                                const PicardOptions& opts, bool keep_iterates = false);

}  // namespace mkv
