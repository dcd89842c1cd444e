// Parallel kernels against their serial references: wall time and equality.
//   mkv_bench [particles] [repeats]

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "mkv/holder_net.hpp"
#include "mkv/particle.hpp"
#include "mkv/scenarios.hpp"

namespace {

double seconds(const std::function<void()>& f, int repeats) {
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < repeats; ++r) f();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / repeats;
}

}  // namespace

int main(int argc, char** argv) {
  const std::size_t n = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 2000;
  const int repeats = argc > 2 ? std::atoi(argv[2]) : 3;
  std::printf("threads: %d\n", omp_get_max_threads());

  // O(N^2) mean-field step on the coupled Langevin field.
  const auto field = mkv::langevin_field(1, 0.5);
  const auto init = mkv::InitialSampler::gaussian({0.0, 0.0}, 1.0);
  const auto cloud = init.cloud(7, n);
  mkv::CounterRng rng(11);
  std::vector<double> noise(n);
  rng.normals(mkv::Stream::Noise, 0, 0, noise);
  for (double& z : noise) z *= 0.1;

  mkv::ParticleCloud par, ser;
  const double tp = seconds([&] { par = mkv::step_euler(cloud, cloud, field, 0.01, noise); }, repeats);
  const double ts = seconds([&] { ser = mkv::step_euler_serial(cloud, cloud, field, 0.01, noise); }, repeats);
  std::printf("step_euler         N=%zu  parallel %.4f s  serial %.4f s  speedup %.2f  identical %s\n", n, tp, ts,
              ts / tp, par.states == ser.states ? "yes" : "no");

  // Net classification of kinetic x0-paths.
  mkv::SimConfig cfg;
  cfg.particles = 400;
  cfg.steps = 256;
  cfg.stored_paths = 400;
  const auto sim = mkv::simulate_mckean(mkv::langevin_field(1, 0.0), mkv::InitialSampler::point({0.0, 0.0}), cfg);
  const mkv::HolderBallSpec spec{0.4, 2.0, 1.0, 1};
  mkv::CoverageReport cp, cs;
  const double cpt = seconds([&] { cp = mkv::coverage_test(sim.paths, spec, 0.5); }, 1);
  const double cst = seconds([&] { cs = mkv::coverage_test_serial(sim.paths, spec, 0.5); }, 1);
  std::printf("coverage_test      paths=%zu  parallel %.4f s  serial %.4f s  speedup %.2f  identical %s\n",
              sim.paths.paths, cpt, cst, cst / cpt,
              cp.cell_histogram == cs.cell_histogram && cp.covered == cs.covered ? "yes" : "no");
  return 0;
}
