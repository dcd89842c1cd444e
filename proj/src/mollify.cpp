#include "mkv/mollify.hpp"

#include <cmath>
#include <deque>
#include <numbers>

#include "mkv/error.hpp"
#include "mkv/rng.hpp"

namespace mkv {

void radial_truncate(std::span<double> xi, double n) {
  double r2 = 0.0;
  for (double v : xi) r2 += v * v;
  if (r2 <= n * n) return;
  const double scale = n / std::sqrt(r2);
  for (double& v : xi) v *= scale;
}

namespace {

/// Per-thread scratch that stays valid when wrapped evaluators nest.
class ScratchFrame {
 public:
  ScratchFrame() {
    if (pool().size() <= depth()) pool().emplace_back();
    index_ = depth()++;
  }
  ~ScratchFrame() { --depth(); }
  ScratchFrame(const ScratchFrame&) = delete;
  ScratchFrame& operator=(const ScratchFrame&) = delete;

  std::vector<double>& buf() { return pool()[index_]; }

 private:
  static std::deque<std::vector<double>>& pool() {
    thread_local std::deque<std::vector<double>> p;
    return p;
  }
  static std::size_t& depth() {
    thread_local std::size_t d = 0;
    return d;
  }
  std::size_t index_;
};

/// Truncates the x0, x1 blocks of a state vector.
void truncate_state(std::span<double> z, std::size_t n0, double n) {
  radial_truncate(z.first(n0), n);
  radial_truncate(z.subspan(n0), n);
}

Evaluator truncated(Evaluator f, std::size_t dim, std::size_t n0, double n) {
  return [f = std::move(f), dim, n0, n](double t, std::span<const double> x, std::span<const double> y,
                                        std::span<double> out) {
    ScratchFrame frame;
    auto& buf = frame.buf();
    buf.assign(x.begin(), x.end());
    buf.insert(buf.end(), y.begin(), y.end());
    std::span<double> xs(buf.data(), dim);
    std::span<double> ys(buf.data() + dim, dim);
    truncate_state(xs, n0, n);
    truncate_state(ys, n0, n);
    f(t, xs, ys, out);
  };
}

}  // namespace

CoefficientField truncate(const CoefficientField& field, int n) {
  require(n >= 1, "truncation level must be >= 1");
  CoefficientField g = field;
  const std::size_t dim = field.dims.state;
  const std::size_t n0 = field.dims.degenerate();
  const double r = static_cast<double>(n);
  g.b0 = truncated(field.b0, dim, n0, r);
  g.b1 = truncated(field.b1, dim, n0, r);
  g.sigma1 = truncated(field.sigma1, dim, n0, r);
  g.name = field.name + "|trunc" + std::to_string(n);
  return g;
}

CoefficientField extend_time(const CoefficientField& field) {
  CoefficientField g = field;
  auto zero_before = [](Evaluator f) -> Evaluator {
    return [f = std::move(f)](double t, std::span<const double> x, std::span<const double> y, std::span<double> out) {
      if (t < 0.0) {
        for (double& v : out) v = 0.0;
      } else {
        f(t, x, y, out);
      }
    };
  };
  g.b0 = zero_before(field.b0);
  g.b1 = zero_before(field.b1);
  const std::size_t d = field.dims.noise;
  g.sigma1 = [f = field.sigma1, d](double t, std::span<const double> x, std::span<const double> y,
                                   std::span<double> out) {
    if (t < 0.0) {
      for (double& v : out) v = 0.0;
      for (std::size_t k = 0; k < d; ++k) out[k * d + k] = 1.0;
    } else {
      f(t, x, y, out);
    }
  };
  return g;
}

// --- kernel -----------------------------------------------------------------

namespace {

double bump_profile(double r2) { return r2 < 1.0 ? std::exp(-1.0 / (1.0 - r2)) : 0.0; }

double sphere_area(std::size_t dim) {
  const double h = 0.5 * static_cast<double>(dim);
  return 2.0 * std::pow(std::numbers::pi, h) / std::tgamma(h);
}

/// int_0^1 r^{D-1} exp(-1/(1-r^2)) dr, composite Simpson.
double radial_integral_simpson(std::size_t dim, std::size_t panels) {
  const double hstep = 1.0 / static_cast<double>(panels);
  auto g = [dim](double r) { return std::pow(r, static_cast<double>(dim) - 1.0) * bump_profile(r * r); };
  double s = g(0.0) + g(1.0);
  for (std::size_t i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * g(static_cast<double>(i) * hstep);
  return s * hstep / 3.0;
}

/// Same integral, composite 5-point Gauss-Legendre.
double radial_integral_gauss(std::size_t dim, std::size_t panels) {
  static constexpr double kNodes[5] = {0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                       0.9061798459386640};
  static constexpr double kWeights[5] = {0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                         0.2369268850561891, 0.2369268850561891};
  const double w = 1.0 / static_cast<double>(panels);
  double s = 0.0;
  for (std::size_t p = 0; p < panels; ++p) {
    const double mid = (static_cast<double>(p) + 0.5) * w;
    for (int k = 0; k < 5; ++k) {
      const double r = mid + 0.5 * w * kNodes[k];
      s += kWeights[k] * std::pow(r, static_cast<double>(dim) - 1.0) * bump_profile(r * r);
    }
  }
  return 0.5 * w * s;
}

}  // namespace

BumpKernel::BumpKernel(std::size_t dim) : dim_(dim) {
  require(dim >= 1, "kernel dimension must be positive");
  const double area = sphere_area(dim);
  norm_ = 1.0 / (area * radial_integral_simpson(dim, 20000));
  mass_ = norm_ * area * radial_integral_gauss(dim, 400);
  if (std::abs(mass_ - 1.0) > 1e-6)
    fail(ErrorKind::Numerical, "mollifier normalisation check failed: mass " + std::to_string(mass_));
}

double BumpKernel::density(std::span<const double> u) const {
  double r2 = 0.0;
  for (double v : u) r2 += v * v;
  return norm_ * bump_profile(r2);
}

OffsetTable make_offsets(std::size_t state_dim, const MollifierSpec& spec) {
  if (spec.samples == 0) fail(ErrorKind::InvalidArgument, "mollifier needs at least one offset sample (M = 0)");
  require(spec.n >= 1, "mollifier level n must be >= 1");
  OffsetTable tab;
  tab.dim = 1 + 2 * state_dim;
  tab.count = spec.samples;
  tab.data.assign(tab.count * tab.dim, 0.0);

  const CounterRng rng(spec.seed);
  const double radius = 1.0 / static_cast<double>(spec.n);
  const std::size_t pairs = spec.samples / 2;
  std::vector<double> dir(tab.dim);
  std::vector<double> u(2);
  for (std::size_t p = 0; p < pairs; ++p) {
    // Uniform point in the ball, accepted with probability exp(1 - 1/(1-r^2)).
    for (std::uint32_t attempt = 0;; ++attempt) {
      rng.normals(Stream::Offsets, p, 2 * attempt, dir);
      rng.uniforms(Stream::Offsets, p, 2 * attempt + 1, u);
      double norm = 0.0;
      for (double v : dir) norm += v * v;
      norm = std::sqrt(norm);
      if (norm == 0.0) continue;
      const double r = std::pow(u[0], 1.0 / static_cast<double>(tab.dim));
      if (r >= 1.0 || u[1] > std::exp(1.0 - 1.0 / (1.0 - r * r))) continue;
      for (std::size_t k = 0; k < tab.dim; ++k) {
        const double off = radius * r * dir[k] / norm;
        tab.data[(2 * p) * tab.dim + k] = off;
        tab.data[(2 * p + 1) * tab.dim + k] = -off;
      }
      break;
    }
  }
  return tab;
}

namespace {

Evaluator smoothed(Evaluator f, std::shared_ptr<const OffsetTable> offsets, std::size_t dim) {
  return [f = std::move(f), offsets = std::move(offsets), dim](double t, std::span<const double> x,
                                                               std::span<const double> y, std::span<double> out) {
    ScratchFrame frame;
    auto& buf = frame.buf();
    buf.assign(2 * dim + out.size() * offsets->count, 0.0);
    std::span<double> xs(buf.data(), dim);
    std::span<double> ys(buf.data() + dim, dim);
    std::span<double> acc(buf.data() + 2 * dim, out.size() * offsets->count);
    for (std::size_t m = 0; m < offsets->count; ++m) {
      const auto off = (*offsets)[m];
      for (std::size_t k = 0; k < dim; ++k) {
        xs[k] = x[k] - off[1 + k];
        ys[k] = y[k] - off[1 + dim + k];
      }
      f(t - off[0], xs, ys, acc.subspan(m * out.size(), out.size()));
    }
    pairwise_rows_inplace(acc, offsets->count, out.size());
    const double inv = 1.0 / static_cast<double>(offsets->count);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = acc[k] * inv;
  };
}

}  // namespace

RegularizedField mollify(const CoefficientField& field, const MollifierSpec& spec) {
  auto offsets = std::make_shared<const OffsetTable>(make_offsets(field.dims.state, spec));
  // Checks the kernel normalisation for this dimension.
  [[maybe_unused]] const BumpKernel kernel(offsets->dim);

  const CoefficientField inner = extend_time(truncate(field, spec.n));
  RegularizedField reg;
  reg.base = field;
  reg.spec = spec;
  reg.offsets = offsets;
  reg.field = field;
  reg.field.name = field.name + "|mollified" + std::to_string(spec.n);
  const std::size_t dim = field.dims.state;
  reg.field.b0 = smoothed(inner.b0, offsets, dim);
  reg.field.b1 = smoothed(inner.b1, offsets, dim);
  reg.field.sigma1 = smoothed(inner.sigma1, offsets, dim);
  return reg;
}

}  // namespace mkv
