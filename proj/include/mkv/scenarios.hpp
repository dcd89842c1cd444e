#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mkv/coefficients.hpp"

namespace mkv {

struct ScenarioParams {
  std::size_t noise_dim = 1;
  /// Velocity-alignment strength for the Langevin family.
  double coupling = 0.0;
  /// Linear decay rate for the stiff scenario.
  double rate = 1.0;
};

/// b = 0, sigma_1 = 0.
CoefficientField zero_field(Dims dims);

/// Pure diffusion dX = dW in R^d (N = d).
CoefficientField brownian_field(std::size_t d);

/// Kinetic Langevin in R^{2d}: b0 = x1, b1 = -coupling (x1 - y1), sigma_1 = I.
/// With coupling = 0 this is the integrated-Brownian oracle.
CoefficientField langevin_field(std::size_t d, double coupling);

/// Kinetic field with measurable, discontinuous non-degenerate dependence:
/// b0 = x1, b1 = -0.5 sign(x1 - y1), sigma_1 = (1 + 0.5 [x1_0 > y1_0]) I.
CoefficientField rough_field(std::size_t d);

/// Uniqueness structure: b0 = x1 and sigma_1 = I ignore the measure,
/// b1 = (y1 - x1)/|y1 - x1| (zero on the diagonal), so |sigma_1^{-1} b1| = 1.
CoefficientField uniqueness_field(std::size_t d);

/// dX = -rate X dt + dW in R^1; explicit Euler blows up once rate*dt > 2.
CoefficientField stiff_field(double rate);

/// alpha f + beta g evaluated coefficient-wise; flags and constants combined conservatively.
CoefficientField combine(double alpha, const CoefficientField& f, double beta, const CoefficientField& g);

using ScenarioFactory = std::function<CoefficientField(const ScenarioParams&)>;

/// Registers (or replaces) a named scenario for config-driven runs.
void register_scenario(const std::string& id, ScenarioFactory factory);
bool has_scenario(const std::string& id);
std::vector<std::string> scenario_ids();
CoefficientField make_scenario(const std::string& id, const ScenarioParams& params);

}  // namespace mkv
