#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "mkv/coefficients.hpp"
#include "mkv/particle.hpp"
#include "mkv/rng.hpp"

namespace testing {

using mkv::CoefficientField;
using mkv::Dims;
using mkv::Evaluator;

inline Evaluator constant(std::vector<double> v) {
  return [v](double, std::span<const double>, std::span<const double>, std::span<double> out) {
    std::copy(v.begin(), v.end(), out.begin());
  };
}

inline Evaluator zeros() {
  return [](double, std::span<const double>, std::span<const double>, std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
  };
}

inline CoefficientField field(Dims dims, Evaluator b0, Evaluator b1, Evaluator s) {
  CoefficientField f;
  f.dims = dims;
  f.b0 = std::move(b0);
  f.b1 = std::move(b1);
  f.sigma1 = std::move(s);
  f.name = "test";
  f.growth_c = 100.0;
  return f;
}

inline std::vector<double> random_cloud(std::uint64_t seed, std::size_t n, std::size_t dim, double scale = 1.0) {
  std::vector<double> v(n * dim);
  mkv::CounterRng(seed).normals(mkv::Stream::Test, 0, 0, v);
  for (double& x : v) x *= scale;
  return v;
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(std::span<const double> v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

/// Component k of every state in a cloud.
inline std::vector<double> column(const mkv::ParticleCloud& c, std::size_t k) {
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i][k];
  return out;
}

}  // namespace testing
