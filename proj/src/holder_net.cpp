#include "mkv/holder_net.hpp"

#include <algorithm>
#include <cmath>

#include "mkv/error.hpp"

namespace mkv {

void HolderBallSpec::validate() const {
  require(alpha > 0.0 && alpha <= 1.0, "Hoelder exponent must lie in (0, 1]");
  require(h > 0.0, "Hoelder ball radius must be positive");
  require(horizon > 0.0, "Hoelder ball horizon must be positive");
  require(dim >= 1, "Hoelder ball dimension must be positive");
}

namespace {

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

}  // namespace

HolderSeminorm holder_seminorm(const GridPath& path, double alpha) {
  const std::size_t n = path.points();
  require(n >= 1, "Hoelder seminorm of an empty path");
  HolderSeminorm out;
  for (std::size_t i = 0; i < n; ++i) out.sup_norm = std::max(out.sup_norm, norm(path.at(i)));
  const double diam = 2.0 * out.sup_norm;
  for (std::size_t m = 1; m < n; ++m) {
    const double scale = std::pow(static_cast<double>(m) * path.dt, alpha);
    // No pair at this or any longer lag can beat the current maximum.
    if (diam / scale <= out.holder_const) break;
    double best = 0.0;
    for (std::size_t i = 0; i + m < n; ++i) best = std::max(best, dist(path.at(i + m), path.at(i)));
    out.holder_const = std::max(out.holder_const, best / scale);
  }
  return out;
}

// --- net ----------------------------------------------------------------------

EpsNet::EpsNet(const HolderBallSpec& spec, double eps, const NetLimits& limits) : spec_(spec), eps_(eps) {
  spec.validate();
  require(eps > 0.0, "net radius eps must be positive");
  if (eps > spec.h) {
    // sup |phi| <= h < eps: the zero function covers the ball.
    trivial_ = true;
    intervals_ = 1;
    delta_ = spec.horizon;
    eta_ = eps / 4.0;
    kappa_ = 1;
    return;
  }
  const double nominal_delta = std::min(spec.horizon, std::pow(eps / (4.0 * spec.h), 1.0 / spec.alpha));
  const double k_real = std::ceil(spec.horizon / nominal_delta - 1e-9);
  if (k_real > 1e8) fail(ErrorKind::Numerical, "eps-net grid too fine; use a larger eps");
  intervals_ = std::max<std::size_t>(1, static_cast<std::size_t>(k_real));
  delta_ = spec.horizon / static_cast<double>(intervals_);
  eta_ = eps / 4.0;
  half_levels_ = static_cast<int>(std::floor(spec.h / eta_ + 1e-12));
  max_jump_ = static_cast<int>(std::floor((spec.h * std::pow(delta_, spec.alpha) + 2.0 * eta_) / eta_ + 1e-12));

  const auto per_coord = static_cast<std::size_t>(2 * half_levels_ + 1);
  const double log10_states = static_cast<double>(spec.dim) * std::log10(static_cast<double>(per_coord));
  const double log10_branch =
      static_cast<double>(spec.dim) *
      std::log10(static_cast<double>(std::min<std::size_t>(per_coord, 2 * static_cast<std::size_t>(max_jump_) + 1)));
  const double log10_upper = log10_states + static_cast<double>(intervals_) * log10_branch;
  if (log10_states > 9.0 || log10_upper > limits.max_log10_kappa)
    fail(ErrorKind::Numerical, "eps-net has about 10^" + std::to_string(static_cast<long long>(log10_upper)) +
                                   " elements, above the configured cap; use a larger eps");
  states_ = 1;
  for (std::size_t c = 0; c < spec.dim; ++c) states_ *= per_coord;
  if ((intervals_ + 1) * states_ > limits.max_table_entries)
    fail(ErrorKind::Numerical, "eps-net count table exceeds the configured cap; use a larger eps");

  suffix_.assign((intervals_ + 1) * states_, BigInt(0));
  for (std::size_t s = 0; s < states_; ++s) suffix_[intervals_ * states_ + s] = 1;
  for (std::size_t j = intervals_; j-- > 0;) {
    for (std::size_t a = 0; a < states_; ++a) {
      BigInt acc = 0;
      for (std::size_t b = 0; b < states_; ++b)
        if (adjacent(a, b)) acc += suffix_[(j + 1) * states_ + b];
      suffix_[j * states_ + a] = std::move(acc);
    }
  }
  kappa_ = 0;
  for (std::size_t s = 0; s < states_; ++s) kappa_ += suffix_[s];
}

double EpsNet::log10_kappa() const {
  const std::string digits = kappa_.str();
  const double lead = std::stod("0." + digits.substr(0, std::min<std::size_t>(15, digits.size())));
  return static_cast<double>(digits.size()) + std::log10(lead);
}

double EpsNet::node_time(std::size_t j) const {
  return spec_.horizon * static_cast<double>(j) / static_cast<double>(intervals_);
}

double EpsNet::level_value(std::size_t state, std::size_t coord) const {
  const auto per = static_cast<std::size_t>(2 * half_levels_ + 1);
  std::size_t s = state;
  for (std::size_t c = spec_.dim; c-- > coord + 1;) s /= per;
  const auto level = static_cast<int>(s % per) - half_levels_;
  return static_cast<double>(level) * eta_;
}

bool EpsNet::adjacent(std::size_t a, std::size_t b) const {
  const auto per = static_cast<std::size_t>(2 * half_levels_ + 1);
  for (std::size_t c = 0; c < spec_.dim; ++c) {
    const auto la = static_cast<long long>(a % per);
    const auto lb = static_cast<long long>(b % per);
    if (std::llabs(la - lb) > max_jump_) return false;
    a /= per;
    b /= per;
  }
  return true;
}

std::vector<double> EpsNet::element(const BigInt& index) const {
  require(index >= 0 && index < kappa_, "net element index out of range");
  std::vector<double> nodes(node_count() * spec_.dim, 0.0);
  if (trivial_) return nodes;
  BigInt rest = index;
  std::size_t prev = 0;
  for (std::size_t j = 0; j <= intervals_; ++j) {
    for (std::size_t s = 0; s < states_; ++s) {
      if (j > 0 && !adjacent(prev, s)) continue;
      const BigInt& c = suffix_[j * states_ + s];
      if (rest < c) {
        prev = s;
        break;
      }
      rest -= c;
    }
    for (std::size_t c = 0; c < spec_.dim; ++c) nodes[j * spec_.dim + c] = level_value(prev, c);
  }
  return nodes;
}

BigInt EpsNet::rank(std::span<const std::size_t> states) const {
  if (trivial_) return 0;
  require(states.size() == node_count(), "rank: wrong sequence length");
  BigInt r = 0;
  for (std::size_t j = 0; j <= intervals_; ++j) {
    for (std::size_t s = 0; s < states[j]; ++s)
      if (j == 0 || adjacent(states[j - 1], s)) r += suffix_[j * states_ + s];
  }
  return r;
}

std::vector<double> EpsNet::evaluate(std::span<const double> nodes, double t) const {
  const std::size_t k = spec_.dim;
  std::vector<double> out(k);
  const auto j = std::min(intervals_ - 1, static_cast<std::size_t>(std::max(0.0, std::floor(t / delta_))));
  const double theta = std::clamp((t - node_time(j)) / delta_, 0.0, 1.0);
  for (std::size_t c = 0; c < k; ++c) out[c] = (1.0 - theta) * nodes[j * k + c] + theta * nodes[(j + 1) * k + c];
  return out;
}

void EpsNet::check_grid(const GridPath& path) const {
  require(path.dim == spec_.dim, "classify: path dimension differs from the net dimension");
  require(path.points() >= 2, "classify: path needs at least two grid points");
  const double span = static_cast<double>(path.points() - 1) * path.dt;
  if (std::abs(span - spec_.horizon) > 1e-9 * spec_.horizon)
    fail(ErrorKind::InvalidArgument, "classify: path grid does not cover the net horizon");
}

double EpsNet::distance(const GridPath& path, std::span<const double> nodes) const {
  check_grid(path);
  double d = 0.0;
  for (std::size_t i = 0; i < path.points(); ++i) {
    const auto e = evaluate(nodes, static_cast<double>(i) * path.dt);
    d = std::max(d, dist(path.at(i), e));
  }
  return d;
}

std::optional<BigInt> EpsNet::classify(const GridPath& path) const {
  check_grid(path);
  const std::size_t k = spec_.dim;
  if (trivial_) {
    for (std::size_t i = 0; i < path.points(); ++i)
      if (norm(path.at(i)) >= eps_) return std::nullopt;
    return BigInt(0);
  }

  // Grid points falling in each node interval (a point on a node belongs to both neighbours).
  std::vector<std::vector<std::size_t>> members(intervals_);
  std::vector<char> node_ok(node_count() * states_, 1);
  for (std::size_t i = 0; i < path.points(); ++i) {
    const double pos = static_cast<double>(i) * path.dt / delta_;
    const double fl = std::floor(pos + 1e-9);
    const bool on_node = std::abs(pos - fl) <= 1e-9;
    const auto j = static_cast<std::size_t>(fl);
    if (j < intervals_) members[j].push_back(i);
    if (on_node && j >= 1 && j - 1 < intervals_) members[j - 1].push_back(i);
    if (on_node && j < node_count()) {
      // Only node states within eps of this point can be used at node j.
      std::vector<double> q(k);
      for (std::size_t s = 0; s < states_; ++s) {
        for (std::size_t c = 0; c < k; ++c) q[c] = level_value(s, c);
        if (!(dist(path.at(i), q) < eps_)) node_ok[j * states_ + s] = 0;
      }
    }
  }

  std::vector<double> qa(k), qb(k);
  auto pair_ok = [&](std::size_t j, std::size_t a, std::size_t b) {
    for (std::size_t c = 0; c < k; ++c) {
      qa[c] = level_value(a, c);
      qb[c] = level_value(b, c);
    }
    const double tj = node_time(j);
    for (std::size_t i : members[j]) {
      const double theta = std::clamp((static_cast<double>(i) * path.dt - tj) / delta_, 0.0, 1.0);
      const auto x = path.at(i);
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) {
        const double e = (1.0 - theta) * qa[c] + theta * qb[c];
        s += (x[c] - e) * (x[c] - e);
      }
      if (!(std::sqrt(s) < eps_)) return false;
    }
    return true;
  };

  // feasible[j][a]: some admissible continuation from state a at node j stays within eps.
  std::vector<char> feasible((intervals_ + 1) * states_, 0);
  for (std::size_t s = 0; s < states_; ++s) feasible[intervals_ * states_ + s] = node_ok[intervals_ * states_ + s];
  for (std::size_t j = intervals_; j-- > 0;) {
    bool any = false;
    for (std::size_t a = 0; a < states_; ++a) {
      if (!node_ok[j * states_ + a]) continue;
      for (std::size_t b = 0; b < states_; ++b) {
        if (feasible[(j + 1) * states_ + b] && adjacent(a, b) && pair_ok(j, a, b)) {
          feasible[j * states_ + a] = 1;
          any = true;
          break;
        }
      }
    }
    if (!any) return std::nullopt;
  }

  std::vector<std::size_t> seq(intervals_ + 1);
  bool found = false;
  for (std::size_t a = 0; a < states_; ++a)
    if (feasible[a]) {
      seq[0] = a;
      found = true;
      break;
    }
  if (!found) return std::nullopt;
  for (std::size_t j = 0; j < intervals_; ++j) {
    for (std::size_t b = 0; b < states_; ++b) {
      if (feasible[(j + 1) * states_ + b] && adjacent(seq[j], b) && pair_ok(j, seq[j], b)) {
        seq[j + 1] = b;
        break;
      }
    }
  }
  return rank(seq);
}

// --- coverage -------------------------------------------------------------------

double quantile(std::vector<double> values, double q) {
  require(!values.empty(), "quantile of an empty sample");
  require(q >= 0.0 && q <= 1.0, "quantile level must lie in [0, 1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(values.size() - 1, lo + 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

std::vector<double> degenerate_block(const PathEnsemble& ens, std::size_t p) {
  const std::size_t n0 = ens.dim - ens.noise_dim;
  std::vector<double> out;
  out.reserve((ens.steps + 1) * n0);
  for (std::size_t k = 0; k <= ens.steps; ++k) {
    const auto x = ens.state(p, k);
    out.insert(out.end(), x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n0));
  }
  return out;
}

struct PathOutcome {
  HolderSeminorm norms;
  std::optional<BigInt> cell;
};

PathOutcome examine(const PathEnsemble& ens, std::size_t p, double alpha, const EpsNet& net) {
  const auto values = degenerate_block(ens, p);
  const GridPath path{values, ens.dim - ens.noise_dim, ens.dt};
  return {holder_seminorm(path, alpha), net.classify(path)};
}

CoverageReport summarize(const std::vector<PathOutcome>& outcomes, const EpsNet& net) {
  CoverageReport rep;
  rep.paths_tested = outcomes.size();
  rep.kappa = net.kappa().str();
  std::vector<double> sups, combined;
  for (const auto& o : outcomes) {
    sups.push_back(o.norms.sup_norm);
    combined.push_back(std::max(o.norms.sup_norm, o.norms.holder_const));
    if (o.cell) {
      ++rep.covered;
      ++rep.cell_histogram[o.cell->str()];
    }
  }
  rep.covered_fraction = static_cast<double>(rep.covered) / static_cast<double>(rep.paths_tested);
  rep.sup_norm_radius = quantile(sups, std::clamp(1.0 - net.eps() / 2.0, 0.0, 1.0));
  rep.suggested_h = quantile(combined, 0.995);
  return rep;
}

void check_coverage_inputs(const PathEnsemble& ens, const HolderBallSpec& spec) {
  if (!(spec.alpha < 0.5)) fail(ErrorKind::InvalidArgument, "coverage test requires alpha < 1/2");
  require(ens.paths >= 1, "coverage test: empty ensemble");
  require(ens.dim > ens.noise_dim, "coverage test: the ensemble has no degenerate components");
  require(spec.dim == ens.dim - ens.noise_dim, "coverage test: ball dimension differs from the degenerate block");
}

}  // namespace

std::vector<double> degenerate_holder_profile(const PathEnsemble& ensemble, double alpha) {
  require(ensemble.dim > ensemble.noise_dim, "no degenerate components");
  std::vector<double> out(ensemble.paths);
  const auto n = static_cast<std::ptrdiff_t>(ensemble.paths);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t pi = 0; pi < n; ++pi) {
    const auto p = static_cast<std::size_t>(pi);
    const auto values = degenerate_block(ensemble, p);
    const auto s = holder_seminorm({values, ensemble.dim - ensemble.noise_dim, ensemble.dt}, alpha);
    out[p] = std::max(s.sup_norm, s.holder_const);
  }
  return out;
}

CoverageReport coverage_test(const PathEnsemble& ensemble, const HolderBallSpec& spec, double eps,
                             const NetLimits& limits) {
  check_coverage_inputs(ensemble, spec);
  const EpsNet net(spec, eps, limits);
  std::vector<PathOutcome> outcomes(ensemble.paths);
  const auto n = static_cast<std::ptrdiff_t>(ensemble.paths);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t pi = 0; pi < n; ++pi)
    outcomes[static_cast<std::size_t>(pi)] = examine(ensemble, static_cast<std::size_t>(pi), spec.alpha, net);
  return summarize(outcomes, net);
}

CoverageReport coverage_test_serial(const PathEnsemble& ensemble, const HolderBallSpec& spec, double eps,
                                    const NetLimits& limits) {
  check_coverage_inputs(ensemble, spec);
  const EpsNet net(spec, eps, limits);
  std::vector<PathOutcome> outcomes;
  for (std::size_t p = 0; p < ensemble.paths; ++p) outcomes.push_back(examine(ensemble, p, spec.alpha, net));
  return summarize(outcomes, net);
}

}  // namespace mkv
