#include "mkv/measure.hpp"

#include <algorithm>
#include <cmath>

#include "mkv/error.hpp"
#include "mkv/rng.hpp"

namespace mkv {

EmpiricalMeasure::EmpiricalMeasure(std::size_t d, std::vector<double> s) : dim(d), samples(std::move(s)) {
  require(dim >= 1, "empirical measure dimension must be positive");
  require(!samples.empty() && samples.size() % dim == 0, "empirical measure must be non-empty");
}

EmpiricalMeasure project_components(CloudView v, std::size_t first, std::size_t count) {
  require(first + count <= v.dim && count >= 1, "component range out of bounds");
  std::vector<double> out;
  out.reserve(v.size() * count);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto x = v[i];
    out.insert(out.end(), x.begin() + first, x.begin() + first + count);
  }
  return EmpiricalMeasure(count, std::move(out));
}

std::size_t HistogramGrid::locate(std::span<const double> x) const {
  std::size_t flat = 0;
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const auto& e = edges[k];
    if (!(x[k] >= e.front() && x[k] <= e.back())) return npos;
    auto it = std::upper_bound(e.begin(), e.end(), x[k]);
    std::size_t bin = static_cast<std::size_t>(it - e.begin());
    bin = bin == 0 ? 0 : bin - 1;
    bin = std::min(bin, e.size() - 2);  // right edge is closed
    flat = flat * (e.size() - 1) + bin;
  }
  return flat;
}

std::size_t default_bin_count(std::size_t count, std::size_t dim) {
  const double b = std::ceil(std::pow(static_cast<double>(count), 1.0 / static_cast<double>(dim + 2)));
  return std::max<std::size_t>(1, static_cast<std::size_t>(b));
}

HistogramGrid make_grid(CloudView a, CloudView b, std::size_t bins_per_dim) {
  require(a.dim == b.dim && a.dim >= 1, "histogram grid: dimension mismatch");
  require(a.size() > 0 && b.size() > 0, "histogram grid: empty sample set");
  if (bins_per_dim == 0) bins_per_dim = default_bin_count(std::max(a.size(), b.size()), a.dim);
  HistogramGrid g;
  g.edges.resize(a.dim);
  for (std::size_t k = 0; k < a.dim; ++k) {
    double lo = a[0][k];
    double hi = lo;
    for (CloudView v : {a, b}) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        lo = std::min(lo, v[i][k]);
        hi = std::max(hi, v[i][k]);
      }
    }
    if (!(hi > lo)) {
      lo -= 0.5;
      hi += 0.5;
    }
    auto& e = g.edges[k];
    e.resize(bins_per_dim + 1);
    for (std::size_t j = 0; j <= bins_per_dim; ++j)
      e[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(bins_per_dim);
    e.back() = hi;
  }
  return g;
}

Histogram bin_frequencies(CloudView a, const HistogramGrid& grid, std::span<const double> weights) {
  require(a.dim == grid.dim(), "histogram: dimension mismatch");
  require(weights.empty() || weights.size() == a.size(), "histogram: weight count mismatch");
  Histogram h;
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t bin = grid.locate(a[i]);
    if (bin == HistogramGrid::npos) fail(ErrorKind::InvalidArgument, "sample outside histogram grid");
    const double w = weights.empty() ? 1.0 : weights[i];
    h[bin] += w;
    total += w;
  }
  require(total > 0.0, "histogram: total weight must be positive");
  for (auto& [_, v] : h) v /= total;
  return h;
}

double tv_from_frequencies(const Histogram& p, const Histogram& q) {
  double s = 0.0;
  auto ip = p.begin();
  auto iq = q.begin();
  while (ip != p.end() || iq != q.end()) {
    if (iq == q.end() || (ip != p.end() && ip->first < iq->first)) {
      s += std::abs(ip->second);
      ++ip;
    } else if (ip == p.end() || iq->first < ip->first) {
      s += std::abs(iq->second);
      ++iq;
    } else {
      s += std::abs(ip->second - iq->second);
      ++ip;
      ++iq;
    }
  }
  return std::min(s, 2.0);
}

double tv_distance(CloudView a, CloudView b, const HistogramGrid& grid) {
  require(a.dim == b.dim, "tv_distance: dimension mismatch");
  return tv_from_frequencies(bin_frequencies(a, grid), bin_frequencies(b, grid));
}

double tv_distance(CloudView a, CloudView b) { return tv_distance(a, b, make_grid(a, b)); }

double tv_distance_weighted(CloudView a, std::span<const double> wa, CloudView b, const HistogramGrid& grid) {
  require(a.dim == b.dim, "tv_distance: dimension mismatch");
  return tv_from_frequencies(bin_frequencies(a, grid, wa), bin_frequencies(b, grid));
}

double w1_exact_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::InvalidArgument, "w1_distance: empty input");
  std::vector<double> sa(a.begin(), a.end());
  std::vector<double> sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  if (sa.size() == sb.size()) {
    std::vector<double> diff(sa.size());
    for (std::size_t i = 0; i < sa.size(); ++i) diff[i] = std::abs(sa[i] - sb[i]);
    return pairwise_sum(diff) / static_cast<double>(sa.size());
  }
  // Integrate |F_a - F_b| over the merged breakpoints.
  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0, j = 0;
  double prev = std::min(sa[0], sb[0]);
  double total = 0.0;
  while (i < sa.size() || j < sb.size()) {
    const double next = (j == sb.size() || (i < sa.size() && sa[i] <= sb[j])) ? sa[i] : sb[j];
    total += std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb) * (next - prev);
    prev = next;
    while (i < sa.size() && sa[i] == next) ++i;
    while (j < sb.size() && sb[j] == next) ++j;
  }
  return total;
}

double w1_distance(CloudView a, CloudView b, std::size_t projections, std::uint64_t seed) {
  if (a.size() == 0 || b.size() == 0) fail(ErrorKind::InvalidArgument, "w1_distance: empty input");
  require(a.dim == b.dim, "w1_distance: dimension mismatch");
  if (a.dim == 1) return w1_exact_1d(a.states, b.states);
  require(projections >= 1, "sliced W1 needs at least one projection");

  const CounterRng rng(seed);
  std::vector<double> dir(a.dim);
  std::vector<double> pa(a.size()), pb(b.size());
  std::vector<double> per(projections);
  for (std::size_t p = 0; p < projections; ++p) {
    rng.normals(Stream::Projection, p, 0, dir);
    double norm = 0.0;
    for (double v : dir) norm += v * v;
    norm = std::sqrt(norm);
    for (double& v : dir) v /= norm;
    auto proj = [&dir](std::span<const double> x) {
      double s = 0.0;
      for (std::size_t k = 0; k < x.size(); ++k) s += dir[k] * x[k];
      return s;
    };
    for (std::size_t i = 0; i < a.size(); ++i) pa[i] = proj(a[i]);
    for (std::size_t i = 0; i < b.size(); ++i) pb[i] = proj(b[i]);
    per[p] = w1_exact_1d(pa, pb);
  }
  return pairwise_sum(per) / static_cast<double>(projections);
}

double moment(CloudView a, double p) {
  require(p > 0.0, "moment order must be positive");
  require(a.size() > 0, "moment of an empty measure");
  std::vector<double> v(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    double r2 = 0.0;
    for (double c : a[i]) r2 += c * c;
    v[i] = p == 2.0 ? r2 : (p == 4.0 ? r2 * r2 : std::pow(std::sqrt(r2), p));
  }
  return pairwise_sum(v) / static_cast<double>(a.size());
}

}  // namespace mkv
