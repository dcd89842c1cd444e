// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <omp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "mkv/commands.hpp"
#include "mkv/error.hpp"
#include "mkv/holder_net.hpp"
#include "mkv/io.hpp"
#include "mkv/measure.hpp"
#include "mkv/mollify.hpp"
#include "mkv/particle.hpp"
#include "mkv/scenarios.hpp"
#include "mkv/verify.hpp"

using namespace mkv;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 4) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

double column_mean(const ParticleCloud& c, std::size_t k, double p) {
  double s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += std::pow(c[i][k], p);
  return s / static_cast<double>(c.size());
}

SimConfig sim(std::size_t particles, std::size_t steps, double horizon, std::uint64_t seed, std::size_t stored) {
  SimConfig c;
  c.particles = particles;
  c.steps = steps;
  c.horizon = horizon;
  c.seed = seed;
  c.store_paths = stored > 0;
  c.stored_paths = stored;
  return c;
}

// 1. Integrated Brownian motion: Var x0(T) = T^3/3, E x0(T)^4 = 3 (T^3/3)^2.
Outcome integrated_brownian() {
  const int threads = omp_get_max_threads();
  omp_set_num_threads(1);
  const auto start = std::chrono::steady_clock::now();
  SimConfig cfg = sim(10000, 1000, 1.0, 101, 0);
  cfg.record_stride = 1000;
  const auto r = simulate_mckean(langevin_field(1, 0.0), InitialSampler::point({0.0, 0.0}), cfg);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  omp_set_num_threads(threads);
  const ParticleCloud& last = r.flow.clouds.back();
  const double m1 = column_mean(last, 0, 1.0);
  const double var = column_mean(last, 0, 2.0) - m1 * m1;
  const double m4 = column_mean(last, 0, 4.0);
  const bool ok = std::abs(var - 1.0 / 3.0) <= 0.05 / 3.0 && std::abs(m4 - 1.0 / 3.0) <= 0.1 / 3.0 && secs < 120.0;
  return {ok, "var " + fmt(var) + " (1/3), m4 " + fmt(m4) + " (1/3), " + fmt(secs, 3) + " s single-threaded"};
}

// 2. Increment fourth moments: 3 h^2 for Brownian, slope >= 1.85 for the full Langevin state.
Outcome increment_modulus() {
  std::vector<double> lags;
  for (int e = 7; e >= 3; --e) lags.push_back(std::ldexp(1.0, -e));
  const auto bm = simulate_mckean(brownian_field(1), InitialSampler::point({0.0}), sim(20000, 128, 1.0, 202, 20000));
  const auto b = verify_increment_scaling(bm.paths, lags, Block::Full);
  const auto lv = simulate_mckean(langevin_field(1, 0.5), InitialSampler::gaussian({0.0, 0.0}, 1.0),
                                  sim(2000, 128, 1.0, 203, 2000));
  const auto l = verify_increment_scaling(lv.paths, lags, Block::Full);
  const bool ok = std::abs(b.slope - 2.0) <= 0.15 && std::abs(b.constant - 3.0) <= 0.45 && l.slope >= 1.85;
  return {ok, "brownian slope " + fmt(b.slope) + ", constant " + fmt(b.constant) + "; langevin slope " + fmt(l.slope)};
}

// 3. Moment ratio under doubling of (particles, steps).
Outcome moment_ratio() {
  std::string detail;
  bool ok = true;
  const std::vector<std::pair<std::string, CoefficientField>> fields{{"langevin", langevin_field(1, 0.5)},
                                                                    {"rough", rough_field(1)}};
  for (const auto& [name, f] : fields) {
    const auto init = InitialSampler::gaussian({0.0, 0.0}, 1.0);
    double ratio[2];
    for (int k = 0; k < 2; ++k) {
      const std::size_t np = 1000u << k, steps = 50u << k;
      SimConfig cfg = sim(np, steps, 1.0, 303, np);
      const auto r = simulate_mckean(f, init, cfg);
      ratio[k] = verify_fourth_moment(r.paths, r.flow.clouds.front().view(), 17).ratio;
    }
    const double change = std::abs(ratio[1] - ratio[0]) / ratio[0];
    ok = ok && change < 0.2;
    detail += name + " " + fmt(ratio[0]) + " -> " + fmt(ratio[1]) + " (" + fmt(100 * change, 3) + "%); ";
  }
  return {ok, detail};
}

// 4. Regularized rough field across n: structural constants and W1 refinement.
Outcome mollification() {
  const auto base = rough_field(1);
  SampleSpec spec;
  spec.count = 256;
  spec.mean_field_points = 16;
  SimConfig cfg = sim(1000, 50, 1.0, 404, 0);
  cfg.record_stride = 50;
  cfg.interaction_samples = 64;
  const auto init = InitialSampler::gaussian({0.0, 0.0}, 1.0);
  bool ok = true;
  std::vector<ParticleCloud> finals;
  std::string detail;
  for (int n : {4, 8, 16, 32}) {
    const auto reg = mollify(base, {n, 64, 12345});
    const double c = check_linear_growth(reg.field, spec).max_growth_ratio;
    const double lam = check_ellipticity(reg.field, spec).min_sym_eigenvalue;
    ok = ok && c <= base.growth_c + 1.0 && lam >= base.ellipticity_lambda - 1e-10;
    finals.push_back(simulate_mckean(reg.field, init, cfg).flow.clouds.back());
  }
  std::vector<double> w;
  for (std::size_t i = 0; i + 1 < finals.size(); ++i) w.push_back(w1_distance(finals[i].view(), finals[i + 1].view()));
  ok = ok && w[2] <= w[1];
  detail = "W1(4,8) " + fmt(w[0]) + ", W1(8,16) " + fmt(w[1]) + ", W1(16,32) " + fmt(w[2]);
  return {ok, detail};
}

// 5. Constant lambda: E gamma = 1, E gamma^2 = e^{|l|^2 T}.
Outcome girsanov_constant() {
  const std::vector<double> ell{1.0};
  const auto g = girsanov_constant_lambda(ell, 1.0, 100, 10000, 505);
  const double rel = std::abs(g.mean_gamma_sq.value - M_E) / M_E;
  const bool ok = std::abs(g.mean_gamma.value - 1.0) <= 3.0 * g.mean_gamma.se && rel <= 0.02;
  return {ok, "mean gamma " + fmt(g.mean_gamma.value) + " (se " + fmt(g.mean_gamma.se, 2) + "), mean gamma^2 " +
                  fmt(g.mean_gamma_sq.value) + " (" + fmt(100 * rel, 2) + "% from e)"};
}

struct UniquenessRun {
  CoefficientField field = uniqueness_field(1);
  InitialSampler init = InitialSampler::gaussian({0.0, 0.0}, 1.0);
  SimConfig cfg = sim(2000, 30, 0.03, 606, 2000);
  FlowOfMarginals flow1, flow2;
  UniquenessRun() {
    flow1 = simulate_mckean(field, init, cfg).flow;
    flow2 = simulate_mckean(field, InitialSampler::gaussian({0.0, 0.5}, 1.0), cfg).flow;
  }
};

// 6. Contraction constants and Picard iterates below the threshold time.
Outcome contraction(const UniquenessRun& u) {
  const auto rep = contraction_experiment(u.field, u.init, u.flow1, u.flow2, u.cfg);
  const bool exact = rep.sup_sigma_inv_b1 == 1.0 && rep.c_estimate == 3.0 && rep.threshold_T == 1.0 / 24.0;
  const auto pc = picard_contraction(u.field, u.init, u.cfg, 4);
  std::string vs;
  for (double v : pc.v) vs += fmt(v, 3) + " ";
  const bool ok = exact && u.cfg.horizon < rep.threshold_T && pc.v.size() >= 3 && pc.monotone_to_floor;
  return {ok, "C " + fmt(rep.c_estimate, 17) + ", T* " + fmt(rep.threshold_T, 17) + "; v(T): " + vs + "floor " +
                  fmt(pc.noise_floor, 3)};
}

// 7. TV between reweighted reference and target against 2 sqrt(E gamma^2 - 1).
Outcome scheffe(const UniquenessRun& u) {
  const auto ref = simulate_linearized(u.field, u.init, u.flow1, u.cfg);
  SimConfig tcfg = u.cfg;
  tcfg.seed = derive_seed(u.cfg.seed, 2);
  const auto tgt = simulate_linearized(u.field, u.init, u.flow2, tcfg);
  const auto g = girsanov_density(ref.paths, u.field, u.flow1, u.flow2, &tgt.paths, u.cfg.seed);
  const auto s = scheffe_check(g, ref.paths, tgt.paths, u.cfg.seed);
  const bool ok = s.tv <= s.bound + 3.0 * s.se;
  return {ok, "tv " + fmt(s.tv) + " (se " + fmt(s.se, 2) + "), bound " + fmt(s.bound)};
}

// Random member of the alpha-Hoelder ball of radius h on a uniform grid.
std::vector<double> ball_member(std::uint64_t seed, std::size_t points, double dt, double alpha, double h) {
  CounterRng rng(seed);
  std::vector<double> u(4), z(points);
  rng.uniforms(Stream::Test, 0, 0, u);
  rng.normals(Stream::Test, 1, 0, z);
  std::vector<double> v(points);
  const int kind = static_cast<int>(seed % 4);
  for (std::size_t i = 0; i < points; ++i) {
    const double t = static_cast<double>(i) * dt;
    switch (kind) {
      case 0:
        v[i] = (i == 0 ? 2.0 * u[0] - 1.0 : v[i - 1] + z[i] * std::sqrt(dt));
        break;
      case 1:
        v[i] = (t < u[0] ? -1.0 : 1.0) * std::pow(std::abs(t - u[0]), alpha) + u[1] - 0.5;
        break;
      case 2:
        v[i] = std::sin(40.0 * u[0] * t + 6.0 * u[1]) + 0.5 * std::sin(300.0 * u[2] * t);
        break;
      default:
        v[i] = 2.0 * u[0] - 1.0;
    }
  }
  const auto s = holder_seminorm({v, 1, dt}, alpha);
  const double scale = h * (0.9 + 0.1 * u[3]) / std::max({s.sup_norm, s.holder_const, 1e-300});
  for (double& x : v) x *= scale;
  return v;
}

// 8. Net property on 10^3 ball members and monotone kappa.
Outcome eps_net() {
  const HolderBallSpec spec{0.4, 1.0, 1.0, 1};
  const EpsNet net(spec, 0.25);
  const std::size_t points = net.intervals() + 1;
  const double dt = 1.0 / static_cast<double>(net.intervals());
  int failures = 0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const auto v = ball_member(seed, points, dt, spec.alpha, spec.h);
    const GridPath path{v, 1, dt};
    const auto idx = net.classify(path);
    if (!idx || net.distance(path, net.element(*idx)) >= net.eps()) ++failures;
  }
  const EpsNet half(spec, 0.5), one(spec, 1.0);
  const bool mono = half.kappa() <= net.kappa() && one.kappa() <= half.kappa();
  return {failures == 0 && mono, std::to_string(failures) + " failures in 1000; log10 kappa " +
                                     fmt(net.log10_kappa()) + ", " + fmt(half.log10_kappa()) + ", " +
                                     fmt(one.log10_kappa()) + " for eps 0.25, 0.5, 1"};
}

// 9. Coverage of Langevin x0-paths with h at the 99.5% Hoelder quantile.
Outcome coverage() {
  const auto r = simulate_mckean(langevin_field(1, 0.5), InitialSampler::gaussian({0.0, 0.0}, 1.0),
                                 sim(1000, 200, 1.0, 909, 1000));
  const double h = quantile(degenerate_holder_profile(r.paths, 0.4), 0.995);
  const auto rep = coverage_test(r.paths, {0.4, h, 1.0, 1}, 1.0);
  return {rep.covered_fraction >= 0.99, "h " + fmt(h) + ", covered " + std::to_string(rep.covered) + "/" +
                                            std::to_string(rep.paths_tested) + ", " +
                                            std::to_string(rep.cell_histogram.size()) + " distinct cells"};
}

// 10. Byte-identical command outputs with 1 and 8 workers.
Outcome determinism(const fs::path& out) {
  const std::string cfg =
      "scenario = langevin\nscenario.coupling = 0.5\ninit.kind = gaussian\nsim.particles = 2000\n"
      "sim.steps = 100\nsim.seed = 1010\nsim.stored_paths = 500\npicard.max_iter = 3\nholder.eps = 1\n";
  const fs::path file = out / "determinism.cfg";
  std::ofstream(file) << cfg;
  std::size_t compared = 0, differing = 0;
  std::ostringstream sink;
  for (const std::string cmd : {"simulate", "picard", "net"}) {
    std::vector<fs::path> dirs;
    for (std::size_t w : {1u, 8u}) {
      CommandOptions o;
      o.config = file;
      o.overrides.workers = w;
      o.overrides.output_dir = out / ("det_" + cmd + "_w" + std::to_string(w));
      o.out = &sink;
      o.err = &sink;
      fs::remove_all(*o.overrides.output_dir);
      if (run_command(cmd, o) != kExitOk) return {false, cmd + " failed: " + sink.str()};
      dirs.push_back(*o.overrides.output_dir);
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      const auto name = e.path().filename().string();
      if (name.rfind("manifest_", 0) == 0) continue;
      ++compared;
      if (!fs::exists(dirs[1] / name) || read_file(e.path()) != read_file(dirs[1] / name)) ++differing;
    }
  }
  return {compared > 0 && differing == 0,
          std::to_string(compared) + " files compared across simulate, picard, net; " + std::to_string(differing) +
              " differ"};
}

double w1_brute(std::vector<double> a, const std::vector<double>& b) {
  std::sort(a.begin(), a.end());
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    best = std::min(best, s / static_cast<double>(a.size()));
  } while (std::next_permutation(a.begin(), a.end()));
  return best;
}

// 11. Exact 1-D W1 against the assignment brute force; the two-atom TV instance.
Outcome measure_oracles() {
  int mismatches = 0;
  for (std::uint64_t trial = 0; trial < 1000; ++trial) {
    std::vector<double> u(16);
    CounterRng(trial + 1111).uniforms(Stream::Test, 0, 0, u);
    // Dyadic values keep every partial sum exact.
    std::vector<double> a(8), b(8);
    for (int i = 0; i < 8; ++i) {
      a[i] = std::floor(u[i] * 2048.0) / 256.0 - 4.0;
      b[i] = std::floor(u[8 + i] * 2048.0) / 256.0 - 4.0;
    }
    if (w1_exact_1d(a, b) != w1_brute(a, b)) ++mismatches;
  }
  const std::vector<double> pa{0.0}, pb{0.0, 1.0};
  const HistogramGrid grid{{{-0.5, 0.5, 1.5}}};
  const double tv = tv_distance({pa, 1}, {pb, 1}, grid);
  return {mismatches == 0 && tv == 1.0, std::to_string(mismatches) + " W1 mismatches in 1000; TV " + fmt(tv, 17)};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance checks"};
  fs::path out = "acceptance_out";
  app.add_option("--out", out, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  fs::create_directories(out);

  std::optional<UniquenessRun> uniq;
  auto uniqueness = [&]() -> const UniquenessRun& {
    if (!uniq) uniq.emplace();
    return *uniq;
  };
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"integrated Brownian oracle", integrated_brownian},
      {"increment modulus", increment_modulus},
      {"moment-ratio stability", moment_ratio},
      {"mollification uniformity", mollification},
      {"Girsanov constant lambda", girsanov_constant},
      {"contraction", [&] { return contraction(uniqueness()); }},
      {"Scheffe chain", [&] { return scheffe(uniqueness()); }},
      {"eps-net oracle", eps_net},
      {"coverage event", coverage},
      {"determinism", [&] { return determinism(out); }},
      {"measure oracles", measure_oracles},
  };

  nlohmann::ordered_json report = nlohmann::ordered_json::array();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << criteria[i].first << ": " << o.detail << " ("
              << fmt(secs, 3) << " s)" << std::endl;
    report.push_back({{"criterion", i + 1}, {"name", criteria[i].first}, {"pass", o.pass}, {"detail", o.detail}});
  }
  std::ofstream(out / "acceptance.json") << report.dump(2) << "\n";
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
