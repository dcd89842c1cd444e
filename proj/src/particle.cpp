#include "mkv/particle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mkv/error.hpp"
#include "mkv/measure.hpp"

namespace mkv {

void SimConfig::validate() const {
  require(particles >= 1, "particles must be positive");
  require(steps >= 1, "steps must be positive");
  require(horizon > 0.0 && std::isfinite(horizon), "horizon must be positive");
  require(!store_paths || stored_paths <= particles, "stored path count exceeds particle count");
  require(record_stride >= 1 && steps % record_stride == 0, "record stride must divide the step count");
  require(interaction_samples <= particles, "interaction samples exceed particle count");
}

void PathEnsemble::resize(std::size_t p, std::size_t s, std::size_t n, std::size_t d, double h) {
  paths = p;
  steps = s;
  dim = n;
  noise_dim = d;
  dt = h;
  trajectories.assign(p * (s + 1) * n, 0.0);
  increments.assign(p * s * d, 0.0);
}

std::vector<double> PathEnsemble::slice(std::size_t step) const {
  std::vector<double> out;
  out.reserve(paths * dim);
  for (std::size_t p = 0; p < paths; ++p) {
    const auto x = state(p, step);
    out.insert(out.end(), x.begin(), x.end());
  }
  return out;
}

InitialSampler InitialSampler::point(std::vector<double> z) { return {Kind::Point, std::move(z), 0.0}; }

InitialSampler InitialSampler::gaussian(std::vector<double> mean, double sd) {
  require(sd >= 0.0, "gaussian scale must be nonnegative");
  return {Kind::Gaussian, std::move(mean), sd};
}

InitialSampler InitialSampler::uniform(std::vector<double> center, double half_width) {
  require(half_width >= 0.0, "uniform half-width must be nonnegative");
  return {Kind::Uniform, std::move(center), half_width};
}

void InitialSampler::sample(const CounterRng& rng, std::size_t index, std::span<double> out) const {
  switch (kind) {
    case Kind::Point:
      std::copy(center.begin(), center.end(), out.begin());
      return;
    case Kind::Gaussian:
      rng.normals(Stream::Init, index, 0, out);
      break;
    case Kind::Uniform:
      rng.uniforms(Stream::Init, index, 0, out);
      for (double& u : out) u = 2.0 * u - 1.0;
      break;
  }
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = center[k] + scale * out[k];
}

ParticleCloud InitialSampler::cloud(std::uint64_t seed, std::size_t count) const {
  const CounterRng rng(seed);
  ParticleCloud c;
  c.t = 0.0;
  c.dim = dim();
  c.states.resize(count * c.dim);
  for (std::size_t i = 0; i < count; ++i) sample(rng, i, c[i]);
  return c;
}

// --- kernels ------------------------------------------------------------------

namespace {

struct StepScratch {
  MeanFieldWorkspace ws;
  std::vector<double> b0, b1, sigma;
  std::vector<std::size_t> subset;
  std::vector<double> u;

  explicit StepScratch(const Dims& dims, std::size_t samples)
      : b0(dims.degenerate()), b1(dims.noise), sigma(dims.sigma_size()), subset(samples), u(samples) {}
};

/// Advances particle i; returns false if the new state is not finite.
bool advance_particle(const CoefficientField& field, double t, double dt, std::span<const double> x,
                      CloudView interaction, std::span<const double> dw, const InteractionPlan& plan, std::size_t i,
                      StepScratch& s, std::span<double> out) {
  const std::size_t n0 = field.dims.degenerate();
  const std::size_t d = field.dims.noise;
  std::span<const std::size_t> subset;
  if (plan.samples > 0) {
    plan.rng->uniforms(Stream::Subsample, i, plan.step, s.u);
    const double n = static_cast<double>(interaction.size());
    for (std::size_t r = 0; r < plan.samples; ++r)
      s.subset[r] = std::min(interaction.size() - 1, static_cast<std::size_t>(s.u[r] * n));
    subset = s.subset;
  }
  eval_mean_field_into(field, t, x, interaction, s.ws, s.b0, s.b1, s.sigma, subset);
  bool finite = true;
  for (std::size_t k = 0; k < n0; ++k) {
    out[k] = x[k] + s.b0[k] * dt;
    finite = finite && std::isfinite(out[k]);
  }
  for (std::size_t r = 0; r < d; ++r) {
    double v = x[n0 + r] + s.b1[r] * dt;
    for (std::size_t c = 0; c < d; ++c) v += s.sigma[r * d + c] * dw[c];
    out[n0 + r] = v;
    finite = finite && std::isfinite(v);
  }
  return finite;
}

void check_step_inputs(const ParticleCloud& cloud, const ParticleCloud& interaction, const CoefficientField& field,
                       std::span<const double> noise, const InteractionPlan& plan) {
  if (cloud.dim != field.dims.state || interaction.dim != field.dims.state)
    fail(ErrorKind::InvalidArgument, "step_euler: cloud dimension does not match the field");
  if (noise.size() != cloud.size() * field.dims.noise)
    fail(ErrorKind::InvalidArgument, "step_euler: noise array has the wrong size");
  if (interaction.size() == 0) fail(ErrorKind::InvalidArgument, "step_euler: empty interaction cloud");
  if (plan.samples > 0 && plan.rng == nullptr)
    fail(ErrorKind::InvalidArgument, "step_euler: subsampling requires a random source");
}

[[noreturn]] void throw_blow_up(std::size_t step, std::size_t particle) {
  throw BlowUpError(step, particle,
                    "non-finite state at step " + std::to_string(step) + " (particle " + std::to_string(particle) +
                        ")");
}

}  // namespace

ParticleCloud step_euler_serial(const ParticleCloud& cloud, const ParticleCloud& interaction,
                                const CoefficientField& field, double dt, std::span<const double> noise,
                                InteractionPlan plan) {
  check_step_inputs(cloud, interaction, field, noise, plan);
  const std::size_t d = field.dims.noise;
  ParticleCloud next{cloud.t + dt, cloud.dim, std::vector<double>(cloud.states.size())};
  StepScratch s(field.dims, plan.samples);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (!advance_particle(field, cloud.t, dt, cloud[i], interaction.view(), noise.subspan(i * d, d), plan, i, s,
                          next[i]))
      throw_blow_up(plan.step + 1, i);
  }
  return next;
}

ParticleCloud step_euler(const ParticleCloud& cloud, const ParticleCloud& interaction, const CoefficientField& field,
                         double dt, std::span<const double> noise, InteractionPlan plan) {
  check_step_inputs(cloud, interaction, field, noise, plan);
  const std::size_t d = field.dims.noise;
  const auto n = static_cast<std::ptrdiff_t>(cloud.size());
  ParticleCloud next{cloud.t + dt, cloud.dim, std::vector<double>(cloud.states.size())};
  std::ptrdiff_t first_bad = n;
  std::ptrdiff_t first_err = n;
  std::string err_msg;

#pragma omp parallel
  {
    StepScratch s(field.dims, plan.samples);
#pragma omp for schedule(static) reduction(min : first_bad)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      const auto iu = static_cast<std::size_t>(i);
      try {
        if (!advance_particle(field, cloud.t, dt, cloud[iu], interaction.view(), noise.subspan(iu * d, d), plan, iu,
                              s, next[iu]))
          first_bad = std::min(first_bad, i);
      } catch (const std::exception& e) {
#pragma omp critical(mkv_step_error)
        if (i < first_err) {
          first_err = i;
          err_msg = e.what();
        }
      }
    }
  }
  if (first_err < n) fail(ErrorKind::Numerical, "step_euler: evaluator failed: " + err_msg);
  if (first_bad < n) throw_blow_up(plan.step + 1, static_cast<std::size_t>(first_bad));
  return next;
}

// --- simulators -----------------------------------------------------------------

namespace {

/// Fills N_p x d increments sqrt(dt) Z for one step.
void fill_noise(const CounterRng& rng, std::size_t count, std::size_t d, double dt, std::uint32_t step,
                std::vector<double>& noise) {
  noise.resize(count * d);
  if (d == 0) return;
  const double sq = std::sqrt(dt);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    std::span<double> row(noise.data() + static_cast<std::size_t>(i) * d, d);
    rng.normals(Stream::Noise, static_cast<std::size_t>(i), step, row);
    for (double& v : row) v *= sq;
  }
}

/// One particle system driven by `seed`; the interaction cloud for step k is
/// produced by `interaction(k, current)`.
class System {
 public:
  System(const CoefficientField& field, const InitialSampler& init, const SimConfig& cfg, std::uint64_t seed)
      : field_(field), cfg_(cfg), rng_(seed), sub_rng_(derive_seed(seed, 0x5ab5)) {
    cfg.validate();
    field.validate();
    if (init.dim() != field.dims.state) fail(ErrorKind::InvalidArgument, "initial sampler dimension mismatch");
    current_ = init.cloud(seed, cfg.particles);
    result_.flow.dt = cfg.dt();
    result_.flow.stride = cfg.record_stride;
    result_.flow.clouds.push_back(current_);
    if (cfg.store_paths)
      result_.paths.resize(cfg.stored_paths, cfg.steps, field.dims.state, field.dims.noise, cfg.dt());
    store(0);
  }

  const ParticleCloud& current() const { return current_; }
  std::size_t step_index() const { return k_; }

  void step(const ParticleCloud& interaction) {
    const double dt = cfg_.dt();
    const auto k32 = static_cast<std::uint32_t>(k_);
    fill_noise(rng_, cfg_.particles, field_.dims.noise, dt, k32, noise_);
    InteractionPlan plan{cfg_.interaction_samples, &sub_rng_, k32};
    ParticleCloud next = step_euler(current_, interaction, field_, dt, noise_, plan);
    // Exact grid time, free of accumulated rounding.
    next.t = cfg_.horizon * static_cast<double>(k_ + 1) / static_cast<double>(cfg_.steps);
    if (cfg_.store_paths) {
      const std::size_t d = field_.dims.noise;
      for (std::size_t p = 0; p < cfg_.stored_paths; ++p)
        std::copy_n(noise_.begin() + static_cast<std::ptrdiff_t>(p * d), d, result_.paths.increment(p, k_).begin());
    }
    current_ = std::move(next);
    ++k_;
    store(k_);
    if (k_ % cfg_.record_stride == 0) result_.flow.clouds.push_back(current_);
  }

  SimResult take() { return std::move(result_); }

 private:
  void store(std::size_t k) {
    if (!cfg_.store_paths) return;
    for (std::size_t p = 0; p < cfg_.stored_paths; ++p) {
      const auto x = current_[p];
      std::copy(x.begin(), x.end(), result_.paths.state(p, k).begin());
    }
  }

  const CoefficientField& field_;
  SimConfig cfg_;
  CounterRng rng_;
  CounterRng sub_rng_;
  ParticleCloud current_;
  std::vector<double> noise_;
  std::size_t k_ = 0;
  SimResult result_;
};

}  // namespace

SimResult simulate_mckean(const CoefficientField& field, const InitialSampler& init, const SimConfig& cfg) {
  System sys(field, init, cfg, cfg.seed);
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const ParticleCloud snapshot = sys.current();
    sys.step(snapshot);
  }
  return sys.take();
}

SimResult simulate_linearized(const CoefficientField& field, const InitialSampler& init,
                              const FlowOfMarginals& frozen, const SimConfig& cfg) {
  if (frozen.stride != 1 || frozen.size() != cfg.steps + 1 ||
      std::abs(frozen.dt - cfg.dt()) > 1e-12 * std::max(1.0, cfg.dt()))
    fail(ErrorKind::InvalidArgument, "simulate_linearized: frozen flow grid does not match the simulation grid");
  for (const auto& c : frozen.clouds)
    if (c.dim != field.dims.state || c.size() == 0)
      fail(ErrorKind::InvalidArgument, "simulate_linearized: frozen cloud has the wrong dimension or is empty");
  System sys(field, init, cfg, cfg.seed);
  for (std::size_t k = 0; k < cfg.steps; ++k) sys.step(frozen.clouds[k]);
  return sys.take();
}

TwoCopyResult simulate_two_copy(const CoefficientField& field, const InitialSampler& init, const SimConfig& cfg) {
  System sx(field, init, cfg, derive_seed(cfg.seed, 1));
  System sy(field, init, cfg, derive_seed(cfg.seed, 2));
  for (std::size_t k = 0; k < cfg.steps; ++k) {
    const ParticleCloud x = sx.current();
    const ParticleCloud y = sy.current();
    sx.step(y);
    sy.step(x);
  }
  return {sx.take(), sy.take()};
}

FlowOfMarginals constant_flow(const ParticleCloud& initial, const SimConfig& cfg) {
  FlowOfMarginals f;
  f.dt = cfg.dt();
  f.stride = 1;
  f.clouds.reserve(cfg.steps + 1);
  for (std::size_t k = 0; k <= cfg.steps; ++k) {
    f.clouds.push_back(initial);
    f.clouds.back().t = cfg.horizon * static_cast<double>(k) / static_cast<double>(cfg.steps);
  }
  return f;
}

namespace {

double flow_distance(const FlowOfMarginals& a, const FlowOfMarginals& b, std::size_t projections,
                     std::uint64_t seed) {
  double sup = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k)
    sup = std::max(sup, w1_distance(a.clouds[k].view(), b.clouds[k].view(), projections, seed));
  return sup;
}

}  // namespace

PicardResult picard_fixed_point(const CoefficientField& field, const InitialSampler& init, const SimConfig& cfg,
                                const PicardOptions& opts, bool keep_iterates) {
  require(opts.tol > 0.0, "picard tolerance must be positive");
  require(opts.max_iter >= 1, "picard max_iter must be at least 1");
  SimConfig run = cfg;
  run.record_stride = 1;
  run.validate();

  const std::uint64_t proj_seed = derive_seed(cfg.seed, 0x9ca2d);
  PicardResult res;
  FlowOfMarginals prev = constant_flow(init.cloud(cfg.seed, cfg.particles), run);
  if (keep_iterates) res.iterates.push_back(prev);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t it = 0; it < opts.max_iter; ++it) {
    SimResult next = simulate_linearized(field, init, prev, run);
    const double dist = flow_distance(prev, next.flow, opts.projections, proj_seed);
    res.history.push_back(dist);
    if (keep_iterates) res.iterates.push_back(next.flow);
    if (dist <= best) {
      best = dist;
      res.flow = next.flow;
      res.paths = next.paths;
    }
    prev = std::move(next.flow);
    if (dist < opts.tol) {
      res.converged = true;
      if (!opts.run_all) break;
    }
  }
  return res;
}

}  // namespace mkv
