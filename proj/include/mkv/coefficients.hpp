#pragma once

// Coefficient fields of mean-field form
//
//   B(t,x,mu)       = int b(t,x,y) mu(dy)        b = (b0, b1) in R^{N-d} x R^d
//   Sigma_1(t,x,mu) = int sigma_1(t,x,y) mu(dy)  sigma_1 in R^{d x d}
//
// with noise acting on the last d coordinates only. Evaluators write into
// caller-provided buffers so the O(N_p^2) mean-field loop never allocates.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mkv {

struct Dims {
  std::size_t state = 1;  // N
  std::size_t noise = 0;  // d, 0 <= d <= N

  Dims() = default;
  Dims(std::size_t n, std::size_t d);

  std::size_t degenerate() const { return state - noise; }
  std::size_t sigma_size() const { return noise * noise; }
  bool operator==(const Dims&) const = default;
};

/// (t, x, y, out). x and y have length N.
using Evaluator =
    std::function<void(double t, std::span<const double> x, std::span<const double> y, std::span<double> out)>;

struct CoefficientField {
  Dims dims;
  Evaluator b0;      // out: N-d
  Evaluator b1;      // out: d
  Evaluator sigma1;  // out: d*d, row-major
  double growth_c = 1.0;
  double ellipticity_lambda = 1.0;
  bool measure_free_b0 = false;
  bool measure_free_b1 = false;
  bool measure_free_sigma = false;
  std::string name;

  /// Throws unless every evaluator is set and the constants are admissible.
  void validate() const;
};

/// Mean-field coefficient values at one point.
struct MeanFieldValue {
  std::vector<double> b0;
  std::vector<double> b1;
  std::vector<double> sigma1;  // row-major d x d
};

/// Row-major view of N_p states in R^N.
struct CloudView {
  std::span<const double> states;
  std::size_t dim = 0;

  std::size_t size() const { return dim == 0 ? 0 : states.size() / dim; }
  std::span<const double> operator[](std::size_t i) const { return states.subspan(i * dim, dim); }
};

/// Reusable scratch for eval_mean_field; one per worker.
class MeanFieldWorkspace {
 public:
  std::vector<double>& rows() { return rows_; }

 private:
  std::vector<double> rows_;
};

/// Sums `count` rows of width `width` (row-major, in place) by a pairwise
/// tree in fixed index order; the total ends up in row 0.
void pairwise_rows_inplace(std::span<double> rows, std::size_t count, std::size_t width);

/// Pairwise (tree) sum of a sequence, fixed order.
double pairwise_sum(std::span<const double> values);

/// Equal-weight average of the coefficients over the interaction cloud.
/// Measure-free coefficients are evaluated once at the first particle.
/// `subset` (optional) restricts the average to the given particle indices.
void eval_mean_field_into(const CoefficientField& field, double t, std::span<const double> x, CloudView cloud,
                          MeanFieldWorkspace& ws, std::span<double> b0, std::span<double> b1,
                          std::span<double> sigma1, std::span<const std::size_t> subset = {});

MeanFieldValue eval_mean_field(const CoefficientField& field, double t, std::span<const double> x, CloudView cloud);

// --- structural checks ------------------------------------------------------

/// Quasi-random (Halton) points (t, x, y) in [0, t_max] x [-radius, radius]^{2N}.
struct SampleSpec {
  std::size_t count = 256;
  double t_max = 1.0;
  double radius = 3.0;
  /// y-points per x used for the mean-field Gram check.
  std::size_t mean_field_points = 16;
};

struct SamplePoint {
  double t = 0.0;
  std::vector<double> x;
  std::vector<double> y;
  double value = 0.0;
};

struct StructuralReport {
  double min_sym_eigenvalue = 0.0;
  /// Smallest eigenvalue of Sigma_1 Sigma_1^T at mean-field points.
  double min_gram_eigenvalue = 0.0;
  double max_growth_ratio = 0.0;
  std::size_t samples_checked = 0;
  double tolerance = 0.0;
  std::vector<SamplePoint> violations;

  bool ok() const { return violations.empty(); }
};

/// Radical-inverse Halton coordinate; `base` must be prime.
double halton(std::size_t index, std::size_t base);

StructuralReport check_ellipticity(const CoefficientField& field, const SampleSpec& sampler, double tol = 0.0);
StructuralReport check_linear_growth(const CoefficientField& field, const SampleSpec& sampler, double tol = 0.0);

/// Smallest eigenvalue of the symmetric part of a d x d row-major matrix.
double min_symmetric_eigenvalue(std::span<const double> m, std::size_t d);

}  // namespace mkv
