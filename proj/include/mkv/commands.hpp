#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "mkv/config.hpp"

namespace mkv {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3 };

struct CommandOptions {
  std::filesystem::path config;
  CliOverrides overrides;
  std::ostream* out = nullptr;  // pass/fail tables and summaries (default std::cout)
  std::ostream* err = nullptr;  // diagnostics (default std::cerr)
};

/// Each command loads the config, runs, writes artifacts plus a manifest into
/// the output directory and returns an exit code. Errors never escape.
int cmd_simulate(const CommandOptions& opts);
int cmd_picard(const CommandOptions& opts);
int cmd_verify(const CommandOptions& opts);
int cmd_uniqueness(const CommandOptions& opts);
int cmd_net(const CommandOptions& opts);

/// Dispatch by subcommand name; unknown names give kExitConfig.
int run_command(const std::string& name, const CommandOptions& opts);

}  // namespace mkv
