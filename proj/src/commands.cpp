#include "mkv/commands.hpp"

#include <omp.h>

#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "mkv/error.hpp"
#include "mkv/holder_net.hpp"
#include "mkv/io.hpp"
#include "mkv/measure.hpp"
#include "mkv/verify.hpp"

namespace mkv {

namespace {

using Json = nlohmann::ordered_json;

Json real_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

struct Context {
  RunConfig rc;
  CoefficientField field;
  InitialSampler init;
  std::ostream& out;
  std::ostream& err;
  std::string run_id;
};

CoefficientField build_field(const RunConfig& rc) {
  CoefficientField f = make_scenario(rc.scenario, rc.params);
  if (rc.mollify.n > 0) f = mollify(f, rc.mollify).field;
  return f;
}

InitialSampler build_init(const RunConfig& rc, std::size_t dim) {
  std::vector<double> c = rc.init_center;
  if (c.empty()) c.assign(dim, 0.0);
  if (c.size() != dim)
    fail(ErrorKind::Config, "config key 'init.center': expected " + std::to_string(dim) + " components");
  if (rc.init_kind == "gaussian") return InitialSampler::gaussian(c, rc.init_scale);
  if (rc.init_kind == "uniform") return InitialSampler::uniform(c, rc.init_scale);
  return InitialSampler::point(c);
}

/// Shared command wrapper: config loading, error mapping and the manifest.
int guarded(const std::string& name, const CommandOptions& opts, const std::function<void(Context&, OutputSet&)>& body) {
  std::ostream& out = opts.out ? *opts.out : std::cout;
  std::ostream& err = opts.err ? *opts.err : std::cerr;
  try {
    const std::string started = utc_now();
    const RunConfig rc = build_run_config(load_config(opts.config), opts.overrides);
    if (rc.workers > 0) omp_set_num_threads(static_cast<int>(rc.workers));
    CoefficientField field = build_field(rc);
    Context ctx{rc, field, build_init(rc, field.dims.state), out, err, rc.hash().substr(0, 12)};
    OutputSet files(rc.output_dir);
    body(ctx, files);
    write_manifest(files, {name, rc.hash(), rc.sim.seed, started, utc_now(), kExitOk});
    return kExitOk;
  } catch (const BlowUpError& e) {
    err << "error: " << e.what() << " (step " << e.step() << ", particle " << e.particle() << ")\n";
    return kExitNumerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    if (e.kind() == ErrorKind::Config || e.kind() == ErrorKind::InvalidArgument) {
      if (e.kind() == ErrorKind::InvalidArgument) err << "(rejected input; check the config)\n";
      return kExitConfig;
    }
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
}

void write_flow(Context& ctx, OutputSet& files, const std::string& stem, const SimResult& r) {
  if (ctx.rc.wants("csv")) {
    files.write("flow" + stem + ".csv", flow_csv(ctx.run_id, r.flow));
    if (r.paths.paths > 0) files.write("paths" + stem + ".csv", paths_csv(ctx.run_id, r.paths));
  }
  if (ctx.rc.wants("binary")) {
    files.write("flow" + stem + ".bin", encode_flow(r.flow, ctx.rc.hash()));
    if (r.paths.paths > 0) files.write("paths" + stem + ".bin", encode_paths(r.paths, ctx.rc.hash()));
  }
}

Json cloud_summary(const ParticleCloud& c) {
  Json j;
  j["t"] = c.t;
  Json mean = Json::array(), var = Json::array();
  for (std::size_t k = 0; k < c.dim; ++k) {
    std::vector<double> v(c.size());
    for (std::size_t i = 0; i < c.size(); ++i) v[i] = c[i][k];
    const double m = pairwise_sum(v) / static_cast<double>(v.size());
    for (double& x : v) x = (x - m) * (x - m);
    mean.push_back(m);
    var.push_back(pairwise_sum(v) / static_cast<double>(v.size()));
  }
  j["mean"] = mean;
  j["variance"] = var;
  return j;
}

struct Check {
  std::string name;
  double value;
  double target;
  double tolerance;
  bool relative;
  bool pass;
};

Check make_check(std::string name, double value, double target, double tol, bool relative) {
  const double dev = relative ? std::abs(value - target) / std::abs(target) : std::abs(value - target);
  return {std::move(name), value, target, tol, relative, std::isfinite(value) && dev <= tol};
}

void print_table(std::ostream& out, const std::vector<Check>& checks) {
  out << std::left << std::setw(28) << "check" << std::setw(16) << "value" << std::setw(16) << "target"
      << std::setw(14) << "tolerance" << "result\n";
  for (const auto& c : checks) {
    std::ostringstream tol;
    tol << c.tolerance << (c.relative ? " rel" : " abs");
    out << std::left << std::setw(28) << c.name << std::setw(16) << c.value << std::setw(16) << c.target
        << std::setw(14) << tol.str() << (c.pass ? "PASS" : "FAIL") << "\n";
  }
}

std::string checks_csv(const std::vector<Check>& checks) {
  std::string s = "check,value,target,tolerance,relative,pass\n";
  for (const auto& c : checks)
    s += c.name + "," + format_real(c.value) + "," + format_real(c.target) + "," + format_real(c.tolerance) + "," +
         (c.relative ? "1" : "0") + "," + (c.pass ? "1" : "0") + "\n";
  return s;
}

/// Variance of the oracle scenarios started from a point: Brownian coordinates
/// have variance T, integrated-Brownian coordinates T^3/3.
std::optional<double> oracle_variance(const RunConfig& rc, const CoefficientField& f, std::size_t comp) {
  if (rc.init_kind != "point" || rc.mollify.n > 0) return std::nullopt;
  const double T = rc.sim.horizon;
  const std::size_t n0 = f.dims.state - f.dims.noise;
  const bool kinetic = rc.scenario == "kinetic_oracle" || (rc.scenario == "langevin" && rc.params.coupling == 0.0);
  if (rc.scenario == "brownian") return T;
  if (kinetic) return comp < n0 ? T * T * T / 3.0 : T;
  return std::nullopt;
}

Block parse_block(const std::string& s) {
  if (s == "full") return Block::Full;
  if (s == "degenerate") return Block::Degenerate;
  return Block::NonDegenerate;
}

}  // namespace

int cmd_simulate(const CommandOptions& opts) {
  return guarded("simulate", opts, [](Context& ctx, OutputSet& files) {
    Json doc;
    doc["scenario"] = ctx.rc.scenario;
    doc["mode"] = ctx.rc.mode;
    doc["config_hash"] = ctx.rc.hash();
    doc["particles"] = ctx.rc.sim.particles;
    doc["steps"] = ctx.rc.sim.steps;
    doc["horizon"] = ctx.rc.sim.horizon;
    if (ctx.rc.mode == "two_copy") {
      const TwoCopyResult r = simulate_two_copy(ctx.field, ctx.init, ctx.rc.sim);
      write_flow(ctx, files, "", r.x);
      write_flow(ctx, files, "_y", r.y);
      doc["final_x"] = cloud_summary(r.x.flow.clouds.back());
      doc["final_y"] = cloud_summary(r.y.flow.clouds.back());
    } else {
      const SimResult r = simulate_mckean(ctx.field, ctx.init, ctx.rc.sim);
      write_flow(ctx, files, "", r);
      doc["final"] = cloud_summary(r.flow.clouds.back());
    }
    files.write_json("simulate.json", doc);
    ctx.out << "simulate: " << ctx.rc.scenario << ", " << ctx.rc.sim.particles << " particles, " << ctx.rc.sim.steps
            << " steps, outputs in " << files.dir().string() << "\n";
  });
}

int cmd_picard(const CommandOptions& opts) {
  return guarded("picard", opts, [](Context& ctx, OutputSet& files) {
    const PicardResult r = picard_fixed_point(ctx.field, ctx.init, ctx.rc.sim, ctx.rc.picard);
    write_flow(ctx, files, "", {r.flow, r.paths});
    std::string hist = "iteration,distance\n";
    for (std::size_t j = 0; j < r.history.size(); ++j) hist += std::to_string(j + 1) + "," + format_real(r.history[j]) + "\n";
    files.write("history.csv", hist);
    Json doc;
    doc["scenario"] = ctx.rc.scenario;
    doc["config_hash"] = ctx.rc.hash();
    doc["converged"] = r.converged;
    doc["iterations"] = r.history.size();
    doc["tolerance"] = ctx.rc.picard.tol;
    Json h = Json::array();
    for (double d : r.history) h.push_back(real_or_null(d));
    doc["history"] = h;
    files.write_json("picard.json", doc);
    if (!r.converged) ctx.err << "warning: Picard iteration did not reach tolerance " << ctx.rc.picard.tol << "\n";
    ctx.out << "picard: " << r.history.size() << " iterations, converged = " << (r.converged ? "true" : "false") << "\n";
  });
}

int cmd_verify(const CommandOptions& opts) {
  return guarded("verify", opts, [](Context& ctx, OutputSet& files) {
    const auto& rc = ctx.rc;
    const auto& v = rc.verify;
    const std::string hash = rc.hash();
    const PathEnsemble paths = decode_paths(read_file(files.dir() / "paths.bin"), hash);
    const FlowOfMarginals flow = decode_flow(read_file(files.dir() / "flow.bin"), hash);
    if (flow.clouds.empty()) fail(ErrorKind::Config, "flow artifact is empty");

    std::vector<Check> checks;
    Json doc;
    doc["scenario"] = rc.scenario;
    doc["config_hash"] = hash;

    std::vector<double> lags = v.lags;
    if (lags.empty()) {
      // Dyadic lags 2^-7 .. 2^-3 that the time grid resolves.
      const double dt = rc.sim.dt();
      for (int e = 7; e >= 3; --e) {
        const double lag = std::ldexp(1.0, -e);
        const double m = std::round(lag / dt);
        if (m >= 1.0 && std::abs(m * dt - lag) <= 1e-9 * lag) lags.push_back(lag);
      }
      if (lags.size() < 2) fail(ErrorKind::Config, "sim.steps resolves fewer than two default lags; set verify.lags");
    }
    const Block block = v.block == "auto" ? Block::NonDegenerate : parse_block(v.block);
    const auto inc = verify_increment_scaling(paths, lags, block);
    checks.push_back(make_check("increment_slope", inc.slope, v.slope_target, v.slope_tol, false));
    if (v.constant_target > 0.0)
      checks.push_back(make_check("increment_constant", inc.constant, v.constant_target, v.constant_tol, true));
    std::string inc_csv = "lag,fourth_moment\n";
    for (std::size_t i = 0; i < inc.lags.size(); ++i)
      inc_csv += format_real(inc.lags[i]) + "," + format_real(inc.fourth_moments[i]) + "\n";
    files.write("increments.csv", inc_csv);

    const ParticleCloud& last = flow.clouds.back();
    if (v.variance_component >= last.dim) fail(ErrorKind::Config, "config key 'verify.variance_component' is out of range");
    std::optional<double> target;
    if (v.variance_target == "auto") target = oracle_variance(rc, ctx.field, v.variance_component);
    else if (v.variance_target != "none") target = std::stod(v.variance_target);
    if (target) {
      if (std::abs(last.t - rc.sim.horizon) > 1e-12 * rc.sim.horizon)
        fail(ErrorKind::Config, "flow artifact does not record the final time; set sim.record_stride to divide sim.steps");
      const Json s = cloud_summary(last);
      const double var = s["variance"][v.variance_component].get<double>();
      checks.push_back(make_check("variance_x" + std::to_string(v.variance_component), var, *target, v.variance_tol, true));
    }

    const MomentReport m = verify_fourth_moment(paths, flow.clouds.front().view(), rc.sim.seed);
    const ExpMomentReport em = exp_moment_check(paths, v.exp_delta, rc.sim.seed);

    Json jc = Json::array();
    for (const auto& c : checks)
      jc.push_back({{"name", c.name}, {"value", real_or_null(c.value)}, {"target", c.target}, {"tolerance", c.tolerance},
                    {"relative", c.relative}, {"pass", c.pass}});
    doc["checks"] = jc;
    doc["increment_scaling"] = {{"slope", inc.slope}, {"constant", inc.constant}, {"lags", inc.lags},
                                {"fourth_moments", inc.fourth_moments}};
    doc["fourth_moment"] = {{"sup_moment_estimate", m.sup_moment_estimate}, {"initial_moment", m.initial_moment},
                            {"ratio", m.ratio}, {"standard_error", m.standard_error}};
    doc["exp_moment"] = {{"delta", v.exp_delta}, {"value", real_or_null(em.value)}, {"se", real_or_null(em.se)},
                         {"top_share", em.top_share}, {"unstable", em.unstable}};
    bool all = true;
    for (const auto& c : checks) all = all && c.pass;
    doc["all_passed"] = all;
    files.write_json("verify.json", doc);
    files.write("verify.csv", checks_csv(checks));
    print_table(ctx.out, checks);
  });
}

int cmd_uniqueness(const CommandOptions& opts) {
  return guarded("uniqueness", opts, [](Context& ctx, OutputSet& files) {
    const auto& rc = ctx.rc;
    require_uniqueness_structure(ctx.field);
    SimConfig cfg = rc.sim;
    cfg.record_stride = 1;
    cfg.store_paths = false;

    InitialSampler shifted = ctx.init;
    const std::size_t n0 = ctx.field.dims.state - ctx.field.dims.noise;
    for (std::size_t c = n0; c < shifted.center.size(); ++c) shifted.center[c] += rc.uniqueness.shift;
    const FlowOfMarginals flow1 = simulate_mckean(ctx.field, ctx.init, cfg).flow;
    const FlowOfMarginals flow2 = simulate_mckean(ctx.field, shifted, cfg).flow;

    const ContractionReport cr = contraction_experiment(ctx.field, ctx.init, flow1, flow2, cfg);

    SimConfig ref_cfg = cfg;
    ref_cfg.store_paths = rc.sim.stored_paths > 0;
    ref_cfg.stored_paths = rc.sim.stored_paths;
    SimConfig tgt_cfg = ref_cfg;
    tgt_cfg.seed = derive_seed(rc.sim.seed, 2);
    const SimResult ref = simulate_linearized(ctx.field, ctx.init, flow1, ref_cfg);
    const SimResult tgt = simulate_linearized(ctx.field, ctx.init, flow2, tgt_cfg);

    Json doc;
    doc["scenario"] = rc.scenario;
    doc["config_hash"] = rc.hash();
    doc["contraction"] = {{"sup_sigma_inv_b1", cr.sup_sigma_inv_b1},
                          {"c_estimate", cr.c_estimate},
                          {"threshold_T", cr.threshold_T},
                          {"horizon", rc.sim.horizon},
                          {"all_satisfied", cr.all_satisfied},
                          {"v_final", cr.v_curve.empty() ? 0.0 : cr.v_curve.back()}};
    if (ref.paths.paths > 0) {
      const GirsanovReport g = girsanov_density(ref.paths, ctx.field, flow1, flow2, &tgt.paths, rc.sim.seed);
      const ScheffeReport s = scheffe_check(g, ref.paths, tgt.paths, rc.sim.seed);
      doc["girsanov"] = {{"paths", ref.paths.paths},
                         {"mean_gamma", g.mean_gamma.value},
                         {"mean_gamma_se", g.mean_gamma.se},
                         {"mean_gamma_sq", g.mean_gamma_sq.value},
                         {"mean_gamma_sq_se", g.mean_gamma_sq.se},
                         {"mean_gamma_sq_direct", g.mean_gamma_sq_direct.value},
                         {"mean_gamma_sq_direct_se", g.mean_gamma_sq_direct.se},
                         {"lambda_sup", g.lambda_sup}};
      doc["scheffe"] = {{"tv", s.tv}, {"se", s.se}, {"bound", s.bound}, {"satisfied", s.satisfied}};
    }
    if (rc.uniqueness.picard_iterations > 0) {
      const PicardContractionReport pc = picard_contraction(ctx.field, ctx.init, cfg, rc.uniqueness.picard_iterations);
      doc["picard"] = {{"v", pc.v}, {"noise_floor", pc.noise_floor}, {"monotone_to_floor", pc.monotone_to_floor}};
    }
    files.write_json("uniqueness.json", doc);

    std::string csv = "t,v_in,v,bound,satisfied\n";
    for (std::size_t k = 0; k < cr.times.size(); ++k)
      csv += format_real(cr.times[k]) + "," + format_real(cr.v_in[k]) + "," + format_real(cr.v_curve[k]) + "," +
             format_real(cr.bound_curve[k]) + "," + (cr.satisfied[k] ? "1" : "0") + "\n";
    files.write("contraction.csv", csv);

    ctx.out << "uniqueness: C = " << cr.c_estimate << ", T* = " << cr.threshold_T << ", T = " << rc.sim.horizon
            << ", bound " << (cr.all_satisfied ? "satisfied" : "violated") << " on the grid\n";
  });
}

int cmd_net(const CommandOptions& opts) {
  return guarded("net", opts, [](Context& ctx, OutputSet& files) {
    const auto& rc = ctx.rc;
    const std::size_t n0 = ctx.field.dims.state - ctx.field.dims.noise;
    if (n0 == 0) fail(ErrorKind::Config, "scenario '" + rc.scenario + "' has no degenerate components to cover");
    if (rc.sim.stored_paths == 0) fail(ErrorKind::Config, "config key 'sim.stored_paths': the coverage test needs stored paths");

    HolderBallSpec spec = rc.holder;
    spec.dim = n0;
    spec.horizon = rc.sim.horizon;
    // Fail fast on the cap before simulating, when h is fixed.
    if (spec.h > 0.0) EpsNet(spec, rc.holder_eps, rc.net_limits);

    const SimResult sim = simulate_mckean(ctx.field, ctx.init, rc.sim);
    if (spec.h == 0.0) spec.h = quantile(degenerate_holder_profile(sim.paths, spec.alpha), 0.995);
    const EpsNet net(spec, rc.holder_eps, rc.net_limits);
    const CoverageReport cov = coverage_test(sim.paths, spec, rc.holder_eps, rc.net_limits);

    Json nd;
    nd["alpha"] = spec.alpha;
    nd["h"] = spec.h;
    nd["horizon"] = spec.horizon;
    nd["dim"] = spec.dim;
    nd["eps"] = net.eps();
    nd["delta"] = net.delta();
    nd["eta"] = net.eta();
    nd["intervals"] = net.intervals();
    nd["half_levels"] = net.half_levels();
    nd["max_jump"] = net.max_jump();
    nd["trivial"] = net.trivial();
    nd["kappa"] = net.kappa().str();
    nd["log10_kappa"] = net.log10_kappa();
    files.write_json("net.json", nd);

    Json cd;
    cd["paths_tested"] = cov.paths_tested;
    cd["covered"] = cov.covered;
    cd["covered_fraction"] = cov.covered_fraction;
    cd["sup_norm_radius"] = cov.sup_norm_radius;
    cd["suggested_h"] = cov.suggested_h;
    cd["kappa"] = cov.kappa;
    Json hist = Json::object();
    for (const auto& [cell, n] : cov.cell_histogram) hist[cell] = n;
    cd["cell_histogram"] = hist;
    files.write_json("coverage.json", cd);

    if (rc.wants("csv")) {
      std::string csv = "index,node,t";
      for (std::size_t c = 0; c < spec.dim; ++c) csv += ",v" + std::to_string(c);
      csv += "\n";
      BigInt count = net.kappa() < BigInt(rc.holder_export) ? net.kappa() : BigInt(rc.holder_export);
      for (BigInt i = 0; i < count; ++i) {
        const auto nodes = net.element(i);
        for (std::size_t j = 0; j < net.node_count(); ++j) {
          csv += i.str() + "," + std::to_string(j) + "," + format_real(net.node_time(j));
          for (std::size_t c = 0; c < spec.dim; ++c) csv += "," + format_real(nodes[j * spec.dim + c]);
          csv += "\n";
        }
      }
      files.write("net.csv", csv);
    }
    ctx.out << "net: kappa ~ 10^" << std::fixed << std::setprecision(2) << net.log10_kappa() << std::defaultfloat
            << ", covered_fraction = " << cov.covered_fraction << " (" << cov.covered << "/" << cov.paths_tested << ")\n";
  });
}

int run_command(const std::string& name, const CommandOptions& opts) {
  if (name == "simulate") return cmd_simulate(opts);
  if (name == "picard") return cmd_picard(opts);
  if (name == "verify") return cmd_verify(opts);
  if (name == "uniqueness") return cmd_uniqueness(opts);
  if (name == "net") return cmd_net(opts);
  (opts.err ? *opts.err : std::cerr) << "error: unknown subcommand '" << name << "'\n";
  return kExitConfig;
}

}  // namespace mkv
