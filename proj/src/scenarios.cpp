#include "mkv/scenarios.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "mkv/error.hpp"

namespace mkv {

namespace {

void zero(std::span<double> out) {
  for (double& v : out) v = 0.0;
}

void identity(std::span<double> out, std::size_t d, double scale = 1.0) {
  zero(out);
  for (std::size_t k = 0; k < d; ++k) out[k * d + k] = scale;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

/// b0 = x1 for the kinetic family (requires N = 2d).
void copy_velocity(std::span<const double> x, std::span<double> out) {
  const std::size_t d = out.size();
  for (std::size_t k = 0; k < d; ++k) out[k] = x[d + k];
}

}  // namespace

CoefficientField zero_field(Dims dims) {
  CoefficientField f;
  f.dims = dims;
  f.name = "zero";
  f.b0 = [](double, auto, auto, std::span<double> out) { zero(out); };
  f.b1 = f.b0;
  f.sigma1 = f.b0;
  f.growth_c = 0.0;
  f.measure_free_b0 = f.measure_free_b1 = f.measure_free_sigma = true;
  return f;
}

CoefficientField brownian_field(std::size_t d) {
  require(d >= 1, "brownian field needs d >= 1");
  CoefficientField f;
  f.dims = Dims(d, d);
  f.name = "brownian";
  f.b0 = [](double, auto, auto, std::span<double> out) { zero(out); };
  f.b1 = f.b0;
  f.sigma1 = [d](double, auto, auto, std::span<double> out) { identity(out, d); };
  f.growth_c = std::sqrt(static_cast<double>(d));
  f.ellipticity_lambda = 1.0;
  f.measure_free_b0 = f.measure_free_b1 = f.measure_free_sigma = true;
  return f;
}

CoefficientField langevin_field(std::size_t d, double coupling) {
  require(d >= 1, "langevin field needs d >= 1");
  CoefficientField f;
  f.dims = Dims(2 * d, d);
  f.name = coupling == 0.0 ? "kinetic_oracle" : "langevin";
  f.b0 = [](double, std::span<const double> x, auto, std::span<double> out) { copy_velocity(x, out); };
  if (coupling == 0.0) {
    f.b1 = [](double, auto, auto, std::span<double> out) { zero(out); };
  } else {
    f.b1 = [d, coupling](double, std::span<const double> x, std::span<const double> y, std::span<double> out) {
      for (std::size_t k = 0; k < d; ++k) out[k] = -coupling * (x[d + k] - y[d + k]);
    };
  }
  f.sigma1 = [d](double, auto, auto, std::span<double> out) { identity(out, d); };
  f.growth_c = 1.0 + 2.0 * std::abs(coupling) + std::sqrt(static_cast<double>(d));
  f.ellipticity_lambda = 1.0;
  f.measure_free_b0 = true;
  f.measure_free_b1 = coupling == 0.0;
  f.measure_free_sigma = true;
  return f;
}

CoefficientField rough_field(std::size_t d) {
  require(d >= 1, "rough field needs d >= 1");
  CoefficientField f;
  f.dims = Dims(2 * d, d);
  f.name = "rough";
  f.b0 = [](double, std::span<const double> x, auto, std::span<double> out) { copy_velocity(x, out); };
  f.b1 = [d](double, std::span<const double> x, std::span<const double> y, std::span<double> out) {
    for (std::size_t k = 0; k < d; ++k) out[k] = -0.5 * sign(x[d + k] - y[d + k]);
  };
  f.sigma1 = [d](double, std::span<const double> x, std::span<const double> y, std::span<double> out) {
    identity(out, d, x[d] > y[d] ? 1.5 : 1.0);
  };
  const double rd = std::sqrt(static_cast<double>(d));
  f.growth_c = 1.0 + 0.5 * rd + 1.5 * rd;
  f.ellipticity_lambda = 1.0;
  f.measure_free_b0 = true;
  return f;
}

CoefficientField uniqueness_field(std::size_t d) {
  require(d >= 1, "uniqueness field needs d >= 1");
  CoefficientField f;
  f.dims = Dims(2 * d, d);
  f.name = "uniqueness";
  f.b0 = [](double, std::span<const double> x, auto, std::span<double> out) { copy_velocity(x, out); };
  f.b1 = [d](double, std::span<const double> x, std::span<const double> y, std::span<double> out) {
    if (d == 1) {
      out[0] = sign(y[1] - x[1]);
      return;
    }
    double r2 = 0.0;
    for (std::size_t k = 0; k < d; ++k) r2 += (y[d + k] - x[d + k]) * (y[d + k] - x[d + k]);
    if (r2 == 0.0) return zero(out);
    const double inv = 1.0 / std::sqrt(r2);
    for (std::size_t k = 0; k < d; ++k) out[k] = (y[d + k] - x[d + k]) * inv;
  };
  f.sigma1 = [d](double, auto, auto, std::span<double> out) { identity(out, d); };
  f.growth_c = 2.0 + std::sqrt(static_cast<double>(d));
  f.ellipticity_lambda = 1.0;
  f.measure_free_b0 = true;
  f.measure_free_sigma = true;
  return f;
}

CoefficientField stiff_field(double rate) {
  CoefficientField f;
  f.dims = Dims(1, 1);
  f.name = "stiff";
  f.b0 = [](double, auto, auto, std::span<double> out) { zero(out); };
  f.b1 = [rate](double, std::span<const double> x, auto, std::span<double> out) { out[0] = -rate * x[0]; };
  f.sigma1 = [](double, auto, auto, std::span<double> out) { out[0] = 1.0; };
  f.growth_c = std::abs(rate) + 1.0;
  f.ellipticity_lambda = 1.0;
  f.measure_free_b0 = f.measure_free_b1 = f.measure_free_sigma = true;
  return f;
}

CoefficientField combine(double alpha, const CoefficientField& f, double beta, const CoefficientField& g) {
  require(f.dims == g.dims, "combine: dimension mismatch");
  auto lin = [alpha, beta](Evaluator ef, Evaluator eg) -> Evaluator {
    return [alpha, beta, ef = std::move(ef), eg = std::move(eg)](double t, std::span<const double> x,
                                                                  std::span<const double> y, std::span<double> out) {
      std::vector<double> tmp(out.size());
      ef(t, x, y, out);
      eg(t, x, y, tmp);
      for (std::size_t k = 0; k < out.size(); ++k) out[k] = alpha * out[k] + beta * tmp[k];
    };
  };
  CoefficientField h;
  h.dims = f.dims;
  h.name = f.name + "+" + g.name;
  h.b0 = lin(f.b0, g.b0);
  h.b1 = lin(f.b1, g.b1);
  h.sigma1 = lin(f.sigma1, g.sigma1);
  h.growth_c = std::abs(alpha) * f.growth_c + std::abs(beta) * g.growth_c;
  h.ellipticity_lambda = std::min(f.ellipticity_lambda, g.ellipticity_lambda);
  h.measure_free_b0 = f.measure_free_b0 && g.measure_free_b0;
  h.measure_free_b1 = f.measure_free_b1 && g.measure_free_b1;
  h.measure_free_sigma = f.measure_free_sigma && g.measure_free_sigma;
  return h;
}

namespace {

struct Registry {
  std::mutex mu;
  std::map<std::string, ScenarioFactory> factories;

  Registry() {
    factories["brownian"] = [](const ScenarioParams& p) { return brownian_field(p.noise_dim); };
    factories["kinetic_oracle"] = [](const ScenarioParams& p) { return langevin_field(p.noise_dim, 0.0); };
    factories["langevin"] = [](const ScenarioParams& p) { return langevin_field(p.noise_dim, p.coupling); };
    factories["rough"] = [](const ScenarioParams& p) { return rough_field(p.noise_dim); };
    factories["uniqueness"] = [](const ScenarioParams& p) { return uniqueness_field(p.noise_dim); };
    factories["stiff"] = [](const ScenarioParams& p) { return stiff_field(p.rate); };
    factories["zero"] = [](const ScenarioParams& p) { return zero_field(Dims(2 * p.noise_dim, p.noise_dim)); };
  }
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

void register_scenario(const std::string& id, ScenarioFactory factory) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.factories[id] = std::move(factory);
}

bool has_scenario(const std::string& id) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  return r.factories.contains(id);
}

std::vector<std::string> scenario_ids() {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  std::vector<std::string> ids;
  for (const auto& [id, _] : r.factories) ids.push_back(id);
  return ids;
}

CoefficientField make_scenario(const std::string& id, const ScenarioParams& params) {
  ScenarioFactory factory;
  {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    auto it = r.factories.find(id);
    if (it == r.factories.end()) fail(ErrorKind::Config, "unknown scenario '" + id + "'");
    factory = it->second;
  }
  auto f = factory(params);
  f.validate();
  return f;
}

}  // namespace mkv
