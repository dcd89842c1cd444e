#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "mkv/coefficients.hpp"

namespace mkv {

/// Equal-weight empirical measure on R^dim (owning).
struct EmpiricalMeasure {
  std::size_t dim = 1;
  std::vector<double> samples;  // row-major

  EmpiricalMeasure() = default;
  EmpiricalMeasure(std::size_t dim, std::vector<double> samples);
  explicit EmpiricalMeasure(CloudView v) : EmpiricalMeasure(v.dim, {v.states.begin(), v.states.end()}) {}

  std::size_t size() const { return samples.size() / dim; }
  CloudView view() const { return {samples, dim}; }
};

/// Coordinates [first, first+count) of every sample.
EmpiricalMeasure project_components(CloudView v, std::size_t first, std::size_t count);

struct HistogramGrid {
  std::vector<std::vector<double>> edges;  // per dimension, strictly increasing

  std::size_t dim() const { return edges.size(); }
  /// Flat bin index, or nullopt-like npos when outside the grid.
  std::size_t locate(std::span<const double> x) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

/// ceil(count^{1/(dim+2)}).
std::size_t default_bin_count(std::size_t count, std::size_t dim);

/// Uniform bins spanning the pooled range of both sample sets.
HistogramGrid make_grid(CloudView a, CloudView b, std::size_t bins_per_dim = 0);

using Histogram = std::map<std::size_t, double>;

/// Normalised (weighted) bin frequencies. Empty weights mean equal weights.
Histogram bin_frequencies(CloudView a, const HistogramGrid& grid, std::span<const double> weights = {});

/// sum over bins of |p - q| (the factor-2 TV convention).
double tv_from_frequencies(const Histogram& p, const Histogram& q);

/// Binned total variation in [0, 2]; throws if a sample falls outside the grid.
double tv_distance(CloudView a, CloudView b, const HistogramGrid& grid);
double tv_distance(CloudView a, CloudView b);  // default grid
double tv_distance_weighted(CloudView a, std::span<const double> wa, CloudView b, const HistogramGrid& grid);

/// Exact 1-D Wasserstein-1. Equal sizes use the sorted coupling; otherwise
/// the integral of |F - G| between the two empirical CDFs.
double w1_exact_1d(std::span<const double> a, std::span<const double> b);

/// dim 1: exact; dim > 1: sliced W1 averaged over `projections` random directions.
double w1_distance(CloudView a, CloudView b, std::size_t projections = 32, std::uint64_t seed = 7);

/// Mean of |x|^p.
double moment(CloudView a, double p);

}  // namespace mkv
