#include "mkv/verify.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mkv/error.hpp"
#include "mkv/measure.hpp"
#include "mkv/rng.hpp"

namespace mkv {

namespace {

double mean_of(std::span<const double> v) { return pairwise_sum(v) / static_cast<double>(v.size()); }

double sq_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

/// n indices drawn uniformly with replacement for bootstrap resample r.
void resample_indices(const CounterRng& rng, std::size_t r, std::size_t n, std::vector<std::size_t>& idx,
                      std::vector<double>& u) {
  idx.resize(n);
  u.resize(n);
  rng.uniforms(Stream::Bootstrap, r, 0, u);
  for (std::size_t i = 0; i < n; ++i) idx[i] = std::min(n - 1, static_cast<std::size_t>(u[i] * static_cast<double>(n)));
}

double sample_sd(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  std::vector<double> dev(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - m) * (v[i] - m);
  return std::sqrt(pairwise_sum(dev) / static_cast<double>(v.size() - 1));
}

}  // namespace

double bootstrap_se(std::size_t n, const std::function<double(std::span<const std::size_t>)>& stat,
                    std::uint64_t seed, std::size_t resamples) {
  require(n >= 1, "bootstrap needs at least one observation");
  const CounterRng rng(seed);
  std::vector<std::size_t> idx;
  std::vector<double> u;
  std::vector<double> stats(resamples);
  for (std::size_t r = 0; r < resamples; ++r) {
    resample_indices(rng, r, n, idx, u);
    stats[r] = stat(idx);
  }
  return sample_sd(stats);
}

Estimate mean_with_bootstrap(std::span<const double> values, std::uint64_t seed, std::size_t resamples) {
  require(!values.empty(), "mean of an empty sample");
  Estimate e;
  e.value = mean_of(values);
  std::vector<double> buf(values.size());
  e.se = bootstrap_se(
      values.size(),
      [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) buf[i] = values[idx[i]];
        return mean_of(buf);
      },
      seed, resamples);
  return e;
}

// --- moments ------------------------------------------------------------------

MomentReport verify_fourth_moment(const PathEnsemble& ensemble, CloudView init, std::uint64_t seed) {
  if (ensemble.paths == 0) fail(ErrorKind::InvalidArgument, "fourth-moment check: empty ensemble");
  std::vector<double> sup4(ensemble.paths);
  for (std::size_t p = 0; p < ensemble.paths; ++p) {
    double m = 0.0;
    for (std::size_t k = 0; k <= ensemble.steps; ++k) m = std::max(m, sq_norm(ensemble.state(p, k)));
    sup4[p] = m * m;
  }
  MomentReport rep;
  rep.sup_moment_estimate = mean_of(sup4);
  rep.initial_moment = moment(init, 4.0);
  rep.ratio = rep.sup_moment_estimate / (1.0 + rep.initial_moment);
  std::vector<double> buf(sup4.size());
  const double denom = 1.0 + rep.initial_moment;
  rep.standard_error = bootstrap_se(
      sup4.size(),
      [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) buf[i] = sup4[idx[i]];
        return mean_of(buf) / denom;
      },
      seed);
  return rep;
}

IncrementScalingReport verify_increment_scaling(const PathEnsemble& ensemble, std::span<const double> lags,
                                                Block block) {
  if (ensemble.paths == 0) fail(ErrorKind::InvalidArgument, "increment scaling: empty ensemble");
  std::vector<std::size_t> steps;
  for (double h : lags) {
    const double m = std::round(h / ensemble.dt);
    if (!(h > 0.0) || m < 1.0 || std::abs(m * ensemble.dt - h) > 1e-9 * h)
      fail(ErrorKind::InvalidArgument, "increment scaling: lag " + std::to_string(h) + " is not a multiple of dt");
    if (m > static_cast<double>(ensemble.steps))
      fail(ErrorKind::InvalidArgument, "increment scaling: lag exceeds the horizon");
    steps.push_back(static_cast<std::size_t>(m));
  }
  std::vector<std::size_t> distinct = steps;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3) fail(ErrorKind::InvalidArgument, "increment scaling needs at least 3 distinct lags");

  std::size_t first = 0;
  std::size_t count = ensemble.dim;
  const std::size_t n0 = ensemble.dim - ensemble.noise_dim;
  if (block == Block::Degenerate) count = n0;
  if (block == Block::NonDegenerate) {
    first = n0;
    count = ensemble.noise_dim;
  }
  require(count >= 1, "increment scaling: selected block is empty");

  IncrementScalingReport rep;
  rep.block = block;
  std::vector<double> per_path(ensemble.paths);
  for (std::size_t li = 0; li < steps.size(); ++li) {
    const std::size_t m = steps[li];
    double best = 0.0;
    for (std::size_t s = 0; s + m <= ensemble.steps; ++s) {
      for (std::size_t p = 0; p < ensemble.paths; ++p) {
        const auto a = ensemble.state(p, s);
        const auto b = ensemble.state(p, s + m);
        double r2 = 0.0;
        for (std::size_t k = first; k < first + count; ++k) r2 += (b[k] - a[k]) * (b[k] - a[k]);
        per_path[p] = r2 * r2;
      }
      best = std::max(best, mean_of(per_path));
    }
    if (!(best > 0.0)) fail(ErrorKind::Numerical, "increment scaling: zero fourth moment at a lag");
    rep.lags.push_back(static_cast<double>(m) * ensemble.dt);
    rep.fourth_moments.push_back(best);
  }
  // Least squares on (log h, log m4).
  const std::size_t n = rep.lags.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(rep.lags[i]);
    const double y = std::log(rep.fourth_moments[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double nn = static_cast<double>(n);
  rep.slope = (nn * sxy - sx * sy) / (nn * sxx - sx * sx);
  rep.constant = std::exp((sy - rep.slope * sx) / nn);
  return rep;
}

ExpMomentReport exp_moment(std::span<const double> sup_sq, double delta, std::uint64_t seed) {
  require(delta > 0.0, "exponential moment needs delta > 0");
  require(!sup_sq.empty(), "exponential moment of an empty sample");
  ExpMomentReport rep;
  std::vector<double> e(sup_sq.size());
  double max_exponent = 0.0;
  for (std::size_t i = 0; i < sup_sq.size(); ++i) max_exponent = std::max(max_exponent, delta * sup_sq[i]);
  if (max_exponent > 700.0) {
    rep.value = std::numeric_limits<double>::infinity();
    rep.se = std::numeric_limits<double>::infinity();
    rep.top_share = 1.0;
    rep.unstable = true;
    return rep;
  }
  for (std::size_t i = 0; i < sup_sq.size(); ++i) e[i] = std::exp(delta * sup_sq[i]);
  const Estimate est = mean_with_bootstrap(e, seed);
  rep.value = est.value;
  rep.se = est.se;
  std::vector<double> sorted = e;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const std::size_t top = std::max<std::size_t>(1, (sorted.size() + 99) / 100);
  rep.top_share = std::accumulate(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(top), 0.0) /
                  pairwise_sum(sorted);
  rep.unstable = rep.top_share > 0.5 || !std::isfinite(rep.value);
  return rep;
}

ExpMomentReport exp_moment_check(const PathEnsemble& ensemble, double delta, std::uint64_t seed) {
  if (ensemble.paths == 0) fail(ErrorKind::InvalidArgument, "exponential moment: empty ensemble");
  std::vector<double> sup_sq(ensemble.paths, 0.0);
  for (std::size_t p = 0; p < ensemble.paths; ++p)
    for (std::size_t k = 0; k <= ensemble.steps; ++k) sup_sq[p] = std::max(sup_sq[p], sq_norm(ensemble.state(p, k)));
  return exp_moment(sup_sq, delta, seed);
}

// --- Girsanov -------------------------------------------------------------------

namespace {

struct PathIntegrals {
  std::vector<double> stoch;  // sum lambda . dW
  std::vector<double> quad;   // sum |lambda|^2 dt
  double lambda_sup = 0.0;
};

PathIntegrals integrate_lambda(const PathEnsemble& ens, const LambdaFn& lambda) {
  PathIntegrals out;
  out.stoch.assign(ens.paths, 0.0);
  out.quad.assign(ens.paths, 0.0);
  const std::size_t d = ens.noise_dim;
  const auto n = static_cast<std::ptrdiff_t>(ens.paths);
  double sup = 0.0;
  std::ptrdiff_t first_err = n;
  std::string err_msg;
#pragma omp parallel reduction(max : sup)
  {
    std::vector<double> lam(d);
#pragma omp for schedule(static)
    for (std::ptrdiff_t pi = 0; pi < n; ++pi) {
      const auto p = static_cast<std::size_t>(pi);
      try {
        double s = 0.0, q = 0.0;
        for (std::size_t k = 0; k < ens.steps; ++k) {
          lambda(p, k, lam);
          const auto dw = ens.increment(p, k);
          double l2 = 0.0;
          for (std::size_t c = 0; c < d; ++c) {
            s += lam[c] * dw[c];
            l2 += lam[c] * lam[c];
          }
          q += l2 * ens.dt;
          sup = std::max(sup, std::sqrt(l2));
        }
        out.stoch[p] = s;
        out.quad[p] = q;
      } catch (const std::exception& e) {
#pragma omp critical(mkv_girsanov_error)
        if (pi < first_err) {
          first_err = pi;
          err_msg = e.what();
        }
      }
    }
  }
  if (first_err < n) fail(ErrorKind::Numerical, err_msg);
  out.lambda_sup = sup;
  return out;
}

}  // namespace

GirsanovReport girsanov_from_lambda(const PathEnsemble& reference, const LambdaFn& lambda_ref,
                                    const PathEnsemble* target, const LambdaFn& lambda_target, std::uint64_t seed) {
  if (reference.paths == 0) fail(ErrorKind::InvalidArgument, "girsanov: empty ensemble");
  GirsanovReport rep;
  const PathIntegrals ref = integrate_lambda(reference, lambda_ref);
  rep.lambda_sup = ref.lambda_sup;
  rep.log_gamma.resize(reference.paths);
  std::vector<double> gamma(reference.paths), gamma_sq(reference.paths);
  for (std::size_t p = 0; p < reference.paths; ++p) {
    rep.log_gamma[p] = -ref.stoch[p] - 0.5 * ref.quad[p];
    gamma[p] = std::exp(rep.log_gamma[p]);
    gamma_sq[p] = gamma[p] * gamma[p];
  }
  rep.mean_gamma = mean_with_bootstrap(gamma, seed);
  rep.mean_gamma_sq_direct = mean_with_bootstrap(gamma_sq, derive_seed(seed, 1));
  rep.mean_gamma_sq = rep.mean_gamma_sq_direct;

  if (target != nullptr) {
    require(static_cast<bool>(lambda_target), "girsanov: target ensemble needs its lambda function");
    // Under the measure with density gamma, the reference solves the target
    // equation driven by W~ = W + int lambda; hence E[gamma^2] = E~[gamma]
    // with gamma = exp(-int lambda dW~ + 1/2 int |lambda|^2).
    const PathIntegrals tgt = integrate_lambda(*target, lambda_target);
    const std::size_t n = target->paths;
    std::vector<double> g(n), m(n);
    for (std::size_t p = 0; p < n; ++p) {
      g[p] = std::exp(-tgt.stoch[p] + 0.5 * tgt.quad[p]);
      m[p] = tgt.stoch[p];
    }
    std::vector<double> bg(n), bm(n);
    auto cv_estimate = [](std::span<const double> gv, std::span<const double> mv) {
      const double mg = mean_of(gv);
      const double mm = mean_of(mv);
      double cov = 0.0, var = 0.0;
      for (std::size_t i = 0; i < gv.size(); ++i) {
        cov += (gv[i] - mg) * (mv[i] - mm);
        var += (mv[i] - mm) * (mv[i] - mm);
      }
      const double beta = var > 0.0 ? cov / var : 0.0;
      return mg - beta * mm;
    };
    rep.mean_gamma_sq.value = cv_estimate(g, m);
    rep.mean_gamma_sq.se = bootstrap_se(
        n,
        [&](std::span<const std::size_t> idx) {
          for (std::size_t i = 0; i < idx.size(); ++i) {
            bg[i] = g[idx[i]];
            bm[i] = m[idx[i]];
          }
          return cv_estimate(bg, bm);
        },
        derive_seed(seed, 2));
    rep.change_of_measure = true;
  }
  return rep;
}

GirsanovReport girsanov_constant_lambda(std::span<const double> ell, double horizon, std::size_t steps,
                                        std::size_t paths, std::uint64_t seed) {
  require(!ell.empty() && steps >= 1 && paths >= 1 && horizon > 0.0, "girsanov hook: invalid arguments");
  const std::size_t d = ell.size();
  const double dt = horizon / static_cast<double>(steps);
  auto brownian = [&](std::uint64_t s) {
    PathEnsemble e;
    e.resize(paths, steps, d, d, dt);
    const CounterRng rng(s);
    const double sq = std::sqrt(dt);
    for (std::size_t p = 0; p < paths; ++p) {
      for (std::size_t k = 0; k < steps; ++k) {
        auto dw = e.increment(p, k);
        rng.normals(Stream::Noise, p, static_cast<std::uint32_t>(k), dw);
        for (std::size_t c = 0; c < d; ++c) {
          dw[c] *= sq;
          e.state(p, k + 1)[c] = e.state(p, k)[c] + dw[c];
        }
      }
    }
    return e;
  };
  const PathEnsemble ref = brownian(derive_seed(seed, 11));
  const PathEnsemble tgt = brownian(derive_seed(seed, 12));
  std::vector<double> lam(ell.begin(), ell.end());
  LambdaFn constant = [lam](std::size_t, std::size_t, std::span<double> out) {
    std::copy(lam.begin(), lam.end(), out.begin());
  };
  return girsanov_from_lambda(ref, constant, &tgt, constant, seed);
}

void require_uniqueness_structure(const CoefficientField& field) {
  if (!field.measure_free_b0 || !field.measure_free_sigma)
    fail(ErrorKind::Config,
         "field '" + field.name + "' violates the uniqueness structure: b0 and sigma_1 must not depend on the measure");
  if (field.dims.noise == 0) fail(ErrorKind::Config, "uniqueness structure needs d >= 1");
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Solves sigma z = rhs, rejecting ill-conditioned sigma.
void solve_sigma(std::span<const double> sigma, std::size_t d, std::span<const double> rhs, std::span<double> z,
                 std::size_t path, std::size_t step) {
  Eigen::Map<const RowMat> s(sigma.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || smax / smin > 1e12)
    fail(ErrorKind::Numerical, "singular sigma_1 at particle " + std::to_string(path) + ", step " +
                                   std::to_string(step));
  Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(d));
  Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(d)) = svd.solve(b);
}

void check_flow_grid(const FlowOfMarginals& flow, const PathEnsemble& ens, const char* what) {
  if (flow.stride != 1 || flow.size() != ens.steps + 1 || std::abs(flow.dt - ens.dt) > 1e-12 * std::max(1.0, ens.dt))
    fail(ErrorKind::InvalidArgument, std::string("girsanov: ") + what + " grid does not match the ensemble");
}

LambdaFn lambda_along(const PathEnsemble& ens, const CoefficientField& field, const FlowOfMarginals& flow1,
                      const FlowOfMarginals& flow2) {
  return [&ens, &field, &flow1, &flow2](std::size_t p, std::size_t k, std::span<double> out) {
    const std::size_t d = field.dims.noise;
    const std::size_t n0 = field.dims.degenerate();
    thread_local MeanFieldWorkspace ws;
    thread_local std::vector<double> b0, b1a, b1b, sig, diff;
    b0.resize(n0);
    b1a.resize(d);
    b1b.resize(d);
    sig.resize(d * d);
    diff.resize(d);
    const double t = static_cast<double>(k) * ens.dt;
    const auto x = ens.state(p, k);
    // b0 and sigma_1 are measure-free; only B1 is averaged.
    eval_mean_field_into(field, t, x, flow1.clouds[k].view(), ws, b0, b1a, sig);
    eval_mean_field_into(field, t, x, flow2.clouds[k].view(), ws, b0, b1b, sig);
    field.sigma1(t, x, x, sig);
    for (std::size_t c = 0; c < d; ++c) diff[c] = b1a[c] - b1b[c];
    solve_sigma(sig, d, diff, out, p, k);
  };
}

}  // namespace

GirsanovReport girsanov_density(const PathEnsemble& reference, const CoefficientField& field,
                                const FlowOfMarginals& flow1, const FlowOfMarginals& flow2,
                                const PathEnsemble* target, std::uint64_t seed) {
  require_uniqueness_structure(field);
  check_flow_grid(flow1, reference, "flow1");
  check_flow_grid(flow2, reference, "flow2");
  const LambdaFn ref = lambda_along(reference, field, flow1, flow2);
  if (target == nullptr) return girsanov_from_lambda(reference, ref, nullptr, {}, seed);
  check_flow_grid(flow1, *target, "flow1");
  const LambdaFn tgt = lambda_along(*target, field, flow1, flow2);
  return girsanov_from_lambda(reference, ref, target, tgt, seed);
}

double sup_sigma_inv_b1(const CoefficientField& field, const FlowOfMarginals& states, const FlowOfMarginals& measure,
                        std::size_t max_points) {
  require(states.size() == measure.size(), "sup_sigma_inv_b1: flows have different grids");
  const std::size_t d = field.dims.noise;
  require(d >= 1, "sup_sigma_inv_b1 needs d >= 1");
  double sup = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto& xs = states.clouds[k];
    const auto& ys = measure.clouds[k];
    const double t = xs.t;
    const std::size_t nx = max_points ? std::min(max_points, xs.size()) : xs.size();
    const std::size_t ny = max_points ? std::min(max_points, ys.size()) : ys.size();
    const auto n = static_cast<std::ptrdiff_t>(nx);
#pragma omp parallel reduction(max : sup)
    {
      std::vector<double> sig(d * d), b1(d), z(d);
#pragma omp for schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto x = xs[static_cast<std::size_t>(i)];
        field.sigma1(t, x, x, sig);
        Eigen::Map<const RowMat> s(sig.data(), static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        const Eigen::PartialPivLU<Eigen::MatrixXd> lu(s);
        for (std::size_t j = 0; j < ny; ++j) {
          field.b1(t, x, ys[j], b1);
          Eigen::Map<const Eigen::VectorXd> bv(b1.data(), static_cast<Eigen::Index>(d));
          sup = std::max(sup, lu.solve(Eigen::VectorXd(bv)).norm());
        }
      }
    }
  }
  return sup;
}

double contraction_constant(double s) { return 3.0 * s * s; }

double contraction_threshold(double c) {
  return c > 0.0 ? 1.0 / (8.0 * c) : std::numeric_limits<double>::infinity();
}

namespace {

double sup_tv(const FlowOfMarginals& a, const FlowOfMarginals& b, std::vector<double>* running = nullptr) {
  double v = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    v = std::max(v, tv_distance(a.clouds[k].view(), b.clouds[k].view()));
    if (running) running->push_back(v);
  }
  return v;
}

}  // namespace

ContractionReport contraction_experiment(const CoefficientField& field, const InitialSampler& init,
                                         const FlowOfMarginals& flow1, const FlowOfMarginals& flow2,
                                         const SimConfig& cfg) {
  require_uniqueness_structure(field);
  SimConfig run = cfg;
  run.record_stride = 1;
  run.store_paths = false;
  const SimResult r1 = simulate_linearized(field, init, flow1, run);
  const SimResult r2 = simulate_linearized(field, init, flow2, run);

  ContractionReport rep;
  for (const auto& c : r1.flow.clouds) rep.times.push_back(c.t);
  sup_tv(flow1, flow2, &rep.v_in);
  sup_tv(r1.flow, r2.flow, &rep.v_curve);
  rep.sup_sigma_inv_b1 = std::max(sup_sigma_inv_b1(field, r1.flow, flow1, 256), sup_sigma_inv_b1(field, r2.flow, flow2, 256));
  rep.c_estimate = contraction_constant(rep.sup_sigma_inv_b1);
  rep.threshold_T = contraction_threshold(rep.c_estimate);
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    const double b = 2.0 * std::sqrt(std::expm1(rep.c_estimate * rep.times[k] * rep.v_in[k] * rep.v_in[k]));
    rep.bound_curve.push_back(b);
    const bool ok = rep.v_curve[k] <= b;
    rep.satisfied.push_back(ok);
    rep.all_satisfied = rep.all_satisfied && ok;
  }
  return rep;
}

PicardContractionReport picard_contraction(const CoefficientField& field, const InitialSampler& init,
                                           const SimConfig& cfg, std::size_t iterations) {
  require(iterations >= 3, "picard contraction needs at least 3 iterations");
  PicardOptions opts;
  opts.max_iter = iterations;
  opts.tol = std::numeric_limits<double>::min();
  opts.run_all = true;
  SimConfig run = cfg;
  run.store_paths = false;
  run.record_stride = 1;
  const PicardResult pr = picard_fixed_point(field, init, run, opts, true);

  PicardContractionReport rep;
  for (std::size_t j = 0; j + 1 < pr.iterates.size(); ++j) rep.v.push_back(sup_tv(pr.iterates[j], pr.iterates[j + 1]));

  SimConfig a = run, b = run;
  a.seed = derive_seed(cfg.seed, 101);
  b.seed = derive_seed(cfg.seed, 102);
  const SimResult ra = simulate_linearized(field, init, pr.iterates.back(), a);
  const SimResult rb = simulate_linearized(field, init, pr.iterates.back(), b);
  rep.noise_floor = sup_tv(ra.flow, rb.flow);

  const double floor2 = 2.0 * rep.noise_floor;
  std::size_t reach = rep.v.size();
  for (std::size_t j = 0; j < rep.v.size(); ++j)
    if (rep.v[j] <= floor2) {
      reach = j;
      break;
    }
  bool ok = reach < rep.v.size() && rep.v.size() >= 3;
  for (std::size_t j = 1; ok && j <= reach; ++j) ok = rep.v[j] < rep.v[j - 1];
  for (std::size_t j = reach; ok && j < rep.v.size(); ++j) ok = rep.v[j] <= floor2;
  rep.monotone_to_floor = ok;
  return rep;
}

ScheffeReport scheffe_check(const GirsanovReport& g, const PathEnsemble& reference, const PathEnsemble& target,
                            std::uint64_t seed) {
  require(g.log_gamma.size() == reference.paths, "scheffe: density does not match the reference ensemble");
  const std::vector<double> xa = reference.slice(reference.steps);
  const std::vector<double> xb = target.slice(target.steps);
  const CloudView a{xa, reference.dim};
  const CloudView b{xb, target.dim};
  std::vector<double> w(g.log_gamma.size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = std::exp(g.log_gamma[i]);
  const HistogramGrid grid = make_grid(a, b);

  ScheffeReport rep;
  rep.tv = tv_distance_weighted(a, w, b, grid);
  // Resample both ensembles; each bootstrap draw reuses the fixed grid.
  const CounterRng rng_b(derive_seed(seed, 3));
  std::vector<double> ra(xa.size()), rw(w.size()), rb(xb.size()), u(b.size());
  std::size_t draw = 0;
  rep.se = bootstrap_se(
      a.size(),
      [&](std::span<const std::size_t> idx) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
          std::copy_n(xa.begin() + static_cast<std::ptrdiff_t>(idx[i] * a.dim), a.dim,
                      ra.begin() + static_cast<std::ptrdiff_t>(i * a.dim));
          rw[i] = w[idx[i]];
        }
        rng_b.uniforms(Stream::Bootstrap, draw++, 1, u);
        for (std::size_t i = 0; i < b.size(); ++i) {
          const auto j = std::min(b.size() - 1, static_cast<std::size_t>(u[i] * static_cast<double>(b.size())));
          std::copy_n(xb.begin() + static_cast<std::ptrdiff_t>(j * b.dim), b.dim,
                      rb.begin() + static_cast<std::ptrdiff_t>(i * b.dim));
        }
        return tv_distance_weighted({ra, a.dim}, rw, {rb, b.dim}, grid);
      },
      seed);
  rep.bound = 2.0 * std::sqrt(std::max(0.0, g.mean_gamma_sq.value - 1.0));
  rep.satisfied = rep.tv <= rep.bound + 3.0 * rep.se;
  return rep;
}

double gamma_sq_bound(std::span<const double> times, std::span<const double> v_in, double s) {
  require(times.size() == v_in.size() && !times.empty(), "gamma_sq_bound: size mismatch");
  double integral = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) integral += v_in[k + 1] * v_in[k + 1] * (times[k + 1] - times[k]);
  return std::sqrt(std::exp(6.0 * s * s * integral));
}

}  // namespace mkv
