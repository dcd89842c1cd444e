#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "mkv/coefficients.hpp"

namespace mkv {

/// Radial truncation: xi if |xi| <= n, otherwise n xi / |xi|. In place.
void radial_truncate(std::span<double> xi, double n);

/// Field (t, x0, x1, y0, y1) -> f(t, chi_n(x0), chi_n(x1), chi_n(y0), chi_n(y1)).
CoefficientField truncate(const CoefficientField& field, int n);

/// Field equal to the input for t >= 0, with b = 0 and sigma_1 = I for t < 0.
CoefficientField extend_time(const CoefficientField& field);

/// Normalised bump kernel C_D exp(-1/(1-|u|^2)) on the unit ball of R^D.
class BumpKernel {
 public:
  explicit BumpKernel(std::size_t dim);

  std::size_t dim() const { return dim_; }
  /// Density at u (unit-radius kernel); zero outside the open ball.
  double density(std::span<const double> u) const;
  double normalization() const { return norm_; }
  /// Integral of the normalised density, by a quadrature rule independent
  /// of the one used for the normalisation constant.
  double total_mass() const { return mass_; }

 private:
  std::size_t dim_;
  double norm_;
  double mass_;
};

struct MollifierSpec {
  int n = 1;                   // kernel radius 1/n, truncation radius n
  std::size_t samples = 64;    // M
  std::uint64_t seed = 12345;  // smoothing_seed
};

/// Common offsets (s, u, v) in R^{1+2N}, already scaled to radius 1/n,
/// stored in +/- pairs (a trailing zero offset when M is odd).
struct OffsetTable {
  std::size_t dim = 0;  // 1 + 2N
  std::size_t count = 0;
  std::vector<double> data;

  std::span<const double> operator[](std::size_t i) const { return {data.data() + i * dim, dim}; }
};

OffsetTable make_offsets(std::size_t state_dim, const MollifierSpec& spec);

struct RegularizedField {
  CoefficientField base;
  MollifierSpec spec;
  std::shared_ptr<const OffsetTable> offsets;
  CoefficientField field;  // b0^n, b1^n, sigma_1^n
};

/// f^n = (truncate(f, n) extended to t < 0) convolved with psi_n, by averaging
/// over the fixed offset table.
RegularizedField mollify(const CoefficientField& field, const MollifierSpec& spec);

}  // namespace mkv
