#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/particle.hpp"

namespace mkv {

struct Estimate {
  double value = 0.0;
  double se = 0.0;
};

/// Bootstrap standard error of the mean (fixed seed, `resamples` draws).
Estimate mean_with_bootstrap(std::span<const double> values, std::uint64_t seed, std::size_t resamples = 200);

/// Generic bootstrap: `stat` receives resampled indices into [0, n).
double bootstrap_se(std::size_t n, const std::function<double(std::span<const std::size_t>)>& stat,
                    std::uint64_t seed, std::size_t resamples = 200);

// --- moments ------------------------------------------------------------------

struct MomentReport {
  double sup_moment_estimate = 0.0;  // E[max_t |X_t|^4]
  double initial_moment = 0.0;       // E|X_0|^4
  double ratio = 0.0;                // sup / (1 + initial)
  double standard_error = 0.0;       // of the ratio
};

MomentReport verify_fourth_moment(const PathEnsemble& ensemble, CloudView init, std::uint64_t seed = 17);

enum class Block { Full, Degenerate, NonDegenerate };

struct IncrementScalingReport {
  Block block = Block::Full;
  std::vector<double> lags;
  std::vector<double> fourth_moments;  // max over start times of E|X_{s+h} - X_s|^4
  double slope = 0.0;
  double constant = 0.0;
};

IncrementScalingReport verify_increment_scaling(const PathEnsemble& ensemble, std::span<const double> lags,
                                                Block block = Block::Full);

struct ExpMomentReport {
  double value = 0.0;  // E exp(delta max_t |X_t|^2)
  double se = 0.0;
  double top_share = 0.0;  // share of the mean carried by the top 1% of paths
  bool unstable = false;
};

/// From per-path values of max_t |X_t|^2.
ExpMomentReport exp_moment(std::span<const double> sup_sq, double delta, std::uint64_t seed = 19);
ExpMomentReport exp_moment_check(const PathEnsemble& ensemble, double delta, std::uint64_t seed = 19);

// --- Girsanov -------------------------------------------------------------------

/// lambda for (path, step), written into `out` (length d).
using LambdaFn = std::function<void(std::size_t path, std::size_t step, std::span<double> out)>;

struct GirsanovReport {
  std::vector<double> log_gamma;  // per path of the reference ensemble, at T
  Estimate mean_gamma;            // martingale check, target 1
  /// E[gamma_T^2] via the change-of-measure estimator when the target
  /// ensemble is available, otherwise equal to mean_gamma_sq_direct.
  Estimate mean_gamma_sq;
  Estimate mean_gamma_sq_direct;
  double lambda_sup = 0.0;
  bool change_of_measure = false;
};

/// `reference` is driven by W and carries lambda along its paths. When
/// `target` is given (paths of the other equation, driven by W~), E[gamma^2]
/// is also estimated as E~[gamma] with the martingale int lambda dW~ as a
/// control variate.
GirsanovReport girsanov_from_lambda(const PathEnsemble& reference, const LambdaFn& lambda_ref,
                                    const PathEnsemble* target = nullptr, const LambdaFn& lambda_target = {},
                                    std::uint64_t seed = 23);

/// Test hook: lambda constant equal to `ell` on [0, T].
GirsanovReport girsanov_constant_lambda(std::span<const double> ell, double horizon, std::size_t steps,
                                        std::size_t paths, std::uint64_t seed);

/// lambda = Sigma_1^{-1}(t, X)(B1(t, X, mu1_t) - B1(t, X, mu2_t)) along `reference` paths
/// (solutions under flow1). `target` holds solutions under flow2 with their drivers.
GirsanovReport girsanov_density(const PathEnsemble& reference, const CoefficientField& field,
                                const FlowOfMarginals& flow1, const FlowOfMarginals& flow2,
                                const PathEnsemble* target = nullptr, std::uint64_t seed = 23);

/// Throws unless b0 and sigma_1 ignore the measure.
void require_uniqueness_structure(const CoefficientField& field);

/// Empirical sup of |sigma_1^{-1}(t,x) b1(t,x,y)| with x from `states` and y from
/// `measure` at matching grid times, using the first `max_points` of each
/// cloud (0 = all).
double sup_sigma_inv_b1(const CoefficientField& field, const FlowOfMarginals& states,
                        const FlowOfMarginals& measure, std::size_t max_points = 0);

struct ContractionReport {
  std::vector<double> times;
  std::vector<double> v_in;   // sup_{s<=t} TV(mu1_s, mu2_s)
  std::vector<double> v_curve;  // sup_{s<=t} TV of the two linearised solutions
  std::vector<double> bound_curve;  // 2 sqrt(exp(C t v_in^2) - 1)
  std::vector<bool> satisfied;
  double sup_sigma_inv_b1 = 0.0;
  double c_estimate = 0.0;   // 3 sup^2
  double threshold_T = 0.0;  // 1 / (8 C)
  bool all_satisfied = true;
};

double contraction_constant(double sup_sigma_inv_b1);
double contraction_threshold(double c);

ContractionReport contraction_experiment(const CoefficientField& field, const InitialSampler& init,
                                         const FlowOfMarginals& flow1, const FlowOfMarginals& flow2,
                                         const SimConfig& cfg);

struct PicardContractionReport {
  std::vector<double> v;  // v(T) between iterates j and j+1
  double noise_floor = 0.0;
  bool monotone_to_floor = false;
};

/// Runs `iterations` Picard steps and tracks sup_{s<=T} TV between consecutive
/// iterate flows; the noise floor is the same statistic between two
/// independent clouds of the last iterate's law.
PicardContractionReport picard_contraction(const CoefficientField& field, const InitialSampler& init,
                                           const SimConfig& cfg, std::size_t iterations);

struct ScheffeReport {
  double tv = 0.0;  // TV(gamma-weighted reference at T, target at T)
  double se = 0.0;
  double bound = 0.0;  // 2 sqrt(E gamma^2 - 1)
  bool satisfied = false;
};

ScheffeReport scheffe_check(const GirsanovReport& g, const PathEnsemble& reference, const PathEnsemble& target,
                            std::uint64_t seed = 29);

/// sqrt(exp(6 s^2 int_0^T v_in(t)^2 dt)); right-endpoint sum, an upper sum for non-decreasing v_in.
double gamma_sq_bound(std::span<const double> times, std::span<const double> v_in, double sup_sigma_inv_b1);

}  // namespace mkv
