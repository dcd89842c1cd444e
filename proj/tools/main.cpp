#include <CLI11.hpp>

#include <iostream>

#include "mkv/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"McKean-Vlasov particle simulator and verification toolkit"};
  app.require_subcommand(1);

  std::string config;
  std::string out;
  std::size_t workers = 0;
  std::uint64_t seed = 0;

  for (const char* name : {"simulate", "picard", "verify", "uniqueness", "net"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "run configuration file")->required();
    sub->add_option("--out", out, "output directory (overrides output.dir)");
    sub->add_option("--workers", workers, "OpenMP threads (overrides run.workers)");
    sub->add_option("--seed", seed, "random seed (overrides sim.seed)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : mkv::kExitConfig;
  }

  const auto* sub = app.get_subcommands().front();
  mkv::CommandOptions opts;
  opts.config = config;
  if (sub->count("--out")) opts.overrides.output_dir = out;
  if (sub->count("--workers")) opts.overrides.workers = workers;
  if (sub->count("--seed")) opts.overrides.seed = seed;
  return mkv::run_command(sub->get_name(), opts);
}
