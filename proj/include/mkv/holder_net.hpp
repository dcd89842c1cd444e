#pragma once

// Finite eps-nets of Hoelder balls
//   C^alpha_h = { phi : [0,T] -> R^k, |phi| <= h, |phi(t) - phi(s)| <= h |t-s|^alpha }.
//
// Elements are piecewise-linear interpolants on K equal intervals with node
// values on the lattice eta Z^k inside [-h, h]^k, adjacent nodes differing by
// at most `max_jump` quanta per coordinate. The element set is far too large
// to list (about 33 * 7^1024 elements at eps = 1/4), so it is represented by
// its admissibility rule; elements are ranked lexicographically by node
// value and indexed by exact integers.

#include <boost/multiprecision/cpp_int.hpp>

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mkv/particle.hpp"

namespace mkv {

using BigInt = boost::multiprecision::cpp_int;

struct HolderBallSpec {
  double alpha = 0.4;
  double h = 1.0;
  double horizon = 1.0;
  std::size_t dim = 1;

  void validate() const;
};

/// Path sampled on the uniform grid t_i = i * dt, i = 0..points-1.
struct GridPath {
  std::span<const double> values;  // points x dim, row-major
  std::size_t dim = 1;
  double dt = 1.0;

  std::size_t points() const { return values.size() / dim; }
  std::span<const double> at(std::size_t i) const { return values.subspan(i * dim, dim); }
};

struct HolderSeminorm {
  double sup_norm = 0.0;
  double holder_const = 0.0;
};

/// Sup norm and max over grid pairs of |phi(t) - phi(s)| / |t - s|^alpha.
HolderSeminorm holder_seminorm(const GridPath& path, double alpha);

struct NetLimits {
  /// Reject nets with more than 10^max_log10_kappa elements.
  double max_log10_kappa = 4096.0;
  /// Reject nets whose suffix-count table would exceed this many entries.
  std::size_t max_table_entries = 4'000'000;
};

class EpsNet {
 public:
  EpsNet(const HolderBallSpec& spec, double eps, const NetLimits& limits = {});

  const HolderBallSpec& spec() const { return spec_; }
  double eps() const { return eps_; }
  double delta() const { return delta_; }  // node spacing actually used (T / K)
  double eta() const { return eta_; }
  std::size_t intervals() const { return intervals_; }
  int half_levels() const { return half_levels_; }  // levels -L..L per coordinate
  int max_jump() const { return max_jump_; }
  bool trivial() const { return trivial_; }  // the zero function alone
  const BigInt& kappa() const { return kappa_; }
  double log10_kappa() const;

  std::size_t node_count() const { return intervals_ + 1; }
  double node_time(std::size_t j) const;

  /// Node values (node_count x dim) of element `index` (0 <= index < kappa).
  std::vector<double> element(const BigInt& index) const;

  /// Element value at time t from its node values.
  std::vector<double> evaluate(std::span<const double> nodes, double t) const;

  /// Exact lexicographic rank of an admissible node-level sequence.
  BigInt rank(std::span<const std::size_t> states) const;

  /// Index of the first element within eps of `path` in sup norm over the
  /// path's grid points, or nullopt.
  std::optional<BigInt> classify(const GridPath& path) const;

  /// sup over path grid points of |path - element|.
  double distance(const GridPath& path, std::span<const double> nodes) const;

 private:
  std::size_t state_count() const { return states_; }
  double level_value(std::size_t state, std::size_t coord) const;
  bool adjacent(std::size_t a, std::size_t b) const;
  void check_grid(const GridPath& path) const;

  HolderBallSpec spec_;
  double eps_;
  double delta_ = 0.0;
  double eta_ = 0.0;
  std::size_t intervals_ = 0;
  int half_levels_ = 0;
  int max_jump_ = 0;
  bool trivial_ = false;
  std::size_t states_ = 1;  // (2L+1)^dim joint node states
  BigInt kappa_;
  std::vector<BigInt> suffix_;  // [node][state]: admissible continuations
};

struct CoverageReport {
  std::size_t paths_tested = 0;
  std::size_t covered = 0;
  double covered_fraction = 0.0;
  double sup_norm_radius = 0.0;  // (1 - eps/2)-quantile of path sup norms
  double suggested_h = 0.0;      // 99.5% quantile of max(sup norm, Hoelder constant)
  std::string kappa;             // decimal
  std::map<std::string, std::size_t> cell_histogram;
};

/// Per-path max(sup norm, Hoelder constant) of the degenerate block x0.
std::vector<double> degenerate_holder_profile(const PathEnsemble& ensemble, double alpha);

/// Empirical quantile (type-7 interpolation), q in [0, 1].
double quantile(std::vector<double> values, double q);

/// Classifies every degenerate-component path into the net of C^alpha_h.
CoverageReport coverage_test(const PathEnsemble& ensemble, const HolderBallSpec& spec, double eps,
                             const NetLimits& limits = {});

/// The same classification, serial (reference for the parallel loop).
CoverageReport coverage_test_serial(const PathEnsemble& ensemble, const HolderBallSpec& spec, double eps,
                                    const NetLimits& limits = {});

}  // namespace mkv
