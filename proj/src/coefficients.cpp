#include "mkv/coefficients.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "mkv/error.hpp"

namespace mkv {

Dims::Dims(std::size_t n, std::size_t d) : state(n), noise(d) {
  require(n >= 1, "state dimension must be positive");
  require(d <= n, "noise dimension exceeds state dimension");
}

void CoefficientField::validate() const {
  require(dims.state >= 1 && dims.noise <= dims.state, "invalid dimensions");
  require(static_cast<bool>(b0) && static_cast<bool>(b1) && static_cast<bool>(sigma1),
          "coefficient field '" + name + "' has an unset evaluator");
  require(growth_c >= 0.0, "growth constant must be nonnegative");
  require(ellipticity_lambda > 0.0, "ellipticity constant must be positive");
}

void pairwise_rows_inplace(std::span<double> rows, std::size_t count, std::size_t width) {
  for (std::size_t stride = 1; stride < count; stride *= 2) {
    for (std::size_t i = 0; i + stride < count; i += 2 * stride) {
      double* dst = rows.data() + i * width;
      const double* src = rows.data() + (i + stride) * width;
      for (std::size_t k = 0; k < width; ++k) dst[k] += src[k];
    }
  }
}

double pairwise_sum(std::span<const double> values) {
  if (values.empty()) return 0.0;
  std::vector<double> tmp(values.begin(), values.end());
  pairwise_rows_inplace(tmp, tmp.size(), 1);
  return tmp[0];
}

void eval_mean_field_into(const CoefficientField& field, double t, std::span<const double> x, CloudView cloud,
                          MeanFieldWorkspace& ws, std::span<double> b0, std::span<double> b1,
                          std::span<double> sigma1, std::span<const std::size_t> subset) {
  const Dims& dims = field.dims;
  const std::size_t count = subset.empty() ? cloud.size() : subset.size();
  if (count == 0) fail(ErrorKind::InvalidArgument, "mean-field evaluation against an empty cloud");
  if (cloud.dim != dims.state || x.size() != dims.state)
    fail(ErrorKind::InvalidArgument, "mean-field evaluation: dimension mismatch");

  const std::size_t n0 = dims.degenerate();
  const std::size_t n1 = dims.noise;
  const std::size_t ns = dims.sigma_size();

  // Measure-free parts need a single evaluation at any y.
  const auto y_first = cloud[subset.empty() ? 0 : subset[0]];
  if (field.measure_free_b0) field.b0(t, x, y_first, b0);
  if (field.measure_free_b1) field.b1(t, x, y_first, b1);
  if (field.measure_free_sigma) field.sigma1(t, x, y_first, sigma1);

  const std::size_t w0 = field.measure_free_b0 ? 0 : n0;
  const std::size_t w1 = field.measure_free_b1 ? 0 : n1;
  const std::size_t ws_ = field.measure_free_sigma ? 0 : ns;
  const std::size_t width = w0 + w1 + ws_;
  if (width == 0) return;

  auto& rows = ws.rows();
  if (rows.size() < count * width) rows.resize(count * width);
  for (std::size_t j = 0; j < count; ++j) {
    const auto y = cloud[subset.empty() ? j : subset[j]];
    double* row = rows.data() + j * width;
    if (w0) field.b0(t, x, y, {row, w0});
    if (w1) field.b1(t, x, y, {row + w0, w1});
    if (ws_) field.sigma1(t, x, y, {row + w0 + w1, ws_});
  }
  pairwise_rows_inplace(rows, count, width);
  const double inv = 1.0 / static_cast<double>(count);
  for (std::size_t k = 0; k < w0; ++k) b0[k] = rows[k] * inv;
  for (std::size_t k = 0; k < w1; ++k) b1[k] = rows[w0 + k] * inv;
  for (std::size_t k = 0; k < ws_; ++k) sigma1[k] = rows[w0 + w1 + k] * inv;
}

MeanFieldValue eval_mean_field(const CoefficientField& field, double t, std::span<const double> x, CloudView cloud) {
  MeanFieldValue out;
  out.b0.resize(field.dims.degenerate());
  out.b1.resize(field.dims.noise);
  out.sigma1.resize(field.dims.sigma_size());
  MeanFieldWorkspace ws;
  eval_mean_field_into(field, t, x, cloud, ws, out.b0, out.b1, out.sigma1);
  return out;
}

double halton(std::size_t index, std::size_t base) {
  double f = 1.0;
  double r = 0.0;
  for (std::size_t i = index; i > 0; i /= base) {
    f /= static_cast<double>(base);
    r += f * static_cast<double>(i % base);
  }
  return r;
}

double min_symmetric_eigenvalue(std::span<const double> m, std::size_t d) {
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> a(m.data(), d, d);
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {

std::vector<std::size_t> first_primes(std::size_t count) {
  std::vector<std::size_t> primes;
  for (std::size_t p = 2; primes.size() < count; ++p) {
    if (std::none_of(primes.begin(), primes.end(), [p](std::size_t q) { return p % q == 0; })) primes.push_back(p);
  }
  return primes;
}

/// Point i of the (1+2N)-dimensional Halton sequence mapped into the sample box.
SamplePoint sample_point(const SampleSpec& spec, std::size_t n, const std::vector<std::size_t>& primes,
                         std::size_t i) {
  SamplePoint p;
  const std::size_t index = i + 1;  // skip the origin
  p.t = spec.t_max * halton(index, primes[0]);
  p.x.resize(n);
  p.y.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    p.x[k] = spec.radius * (2.0 * halton(index, primes[1 + k]) - 1.0);
    p.y[k] = spec.radius * (2.0 * halton(index, primes[1 + n + k]) - 1.0);
  }
  return p;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double a : v) s += a * a;
  return std::sqrt(s);
}

}  // namespace

StructuralReport check_ellipticity(const CoefficientField& field, const SampleSpec& sampler, double tol) {
  require(sampler.count >= 1, "sampler count must be at least 1");
  const std::size_t d = field.dims.noise;
  if (d == 0) fail(ErrorKind::InvalidArgument, "no diffusion block to check (d = 0)");
  const std::size_t n = field.dims.state;
  const auto primes = first_primes(1 + 2 * n);

  std::vector<SamplePoint> pts;
  pts.reserve(sampler.count);
  for (std::size_t i = 0; i < sampler.count; ++i) pts.push_back(sample_point(sampler, n, primes, i));

  StructuralReport rep;
  rep.tolerance = tol;
  rep.min_sym_eigenvalue = std::numeric_limits<double>::infinity();
  rep.min_gram_eigenvalue = std::numeric_limits<double>::infinity();
  std::vector<double> s(d * d);
  std::vector<double> avg(d * d);

  auto record = [&](double t, const std::vector<double>& x, const std::vector<double>& y) {
    field.sigma1(t, x, y, s);
    const double ev = min_symmetric_eigenvalue(s, d);
    ++rep.samples_checked;
    rep.min_sym_eigenvalue = std::min(rep.min_sym_eigenvalue, ev);
    if (ev < field.ellipticity_lambda - tol) rep.violations.push_back({t, x, y, ev});
  };

  const std::size_t m = std::max<std::size_t>(1, std::min(sampler.mean_field_points, pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& p = pts[i];
    record(p.t, p.x, p.y);
    // Mean-field point: average sigma_1(t_i, x_i, .) over m sampled y's.
    std::fill(avg.begin(), avg.end(), 0.0);
    for (std::size_t j = 0; j < m; ++j) {
      const auto& yj = pts[(i + j) % pts.size()].y;
      if (j > 0) record(p.t, p.x, yj);
      field.sigma1(p.t, p.x, yj, s);
      for (std::size_t k = 0; k < d * d; ++k) avg[k] += s[k];
    }
    for (double& a : avg) a /= static_cast<double>(m);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> sig(avg.data(), d, d);
    const Eigen::MatrixXd gram = sig * sig.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram, Eigen::EigenvaluesOnly);
    rep.min_gram_eigenvalue = std::min(rep.min_gram_eigenvalue, es.eigenvalues().minCoeff());
  }
  return rep;
}

StructuralReport check_linear_growth(const CoefficientField& field, const SampleSpec& sampler, double tol) {
  require(sampler.count >= 1, "sampler count must be at least 1");
  const std::size_t n = field.dims.state;
  const auto primes = first_primes(1 + 2 * n);
  std::vector<double> b(n);
  std::vector<double> s(field.dims.sigma_size());

  StructuralReport rep;
  rep.tolerance = tol;
  for (std::size_t i = 0; i < sampler.count; ++i) {
    auto p = sample_point(sampler, n, primes, i);
    field.b0(p.t, p.x, p.y, std::span<double>(b).first(field.dims.degenerate()));
    field.b1(p.t, p.x, p.y, std::span<double>(b).last(field.dims.noise));
    field.sigma1(p.t, p.x, p.y, s);
    const double ratio = (norm2(b) + norm2(s)) / (1.0 + norm2(p.x) + norm2(p.y));
    ++rep.samples_checked;
    rep.max_growth_ratio = std::max(rep.max_growth_ratio, ratio);
    if (ratio > field.growth_c + tol) {
      p.value = ratio;
      rep.violations.push_back(std::move(p));
    }
  }
  return rep;
}

}  // namespace mkv
