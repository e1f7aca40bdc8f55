#pragma once

#include "wentzell/cli/config.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>

namespace wentzell::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNonConverged = 3,
  kExitCheckFailed = 4,
};

struct RunResult {
  int exit_code = kExitOk;
  /// ok | check_failed | nonconverged | config_error
  std::string status = "ok";
  std::string reason{};
  nlohmann::json manifest{};
};

/// Executes the configured mode and writes manifest.json, metrics.jsonl and
/// the CSV tables into cfg.out_dir. Progress goes to `log` when verbose.
RunResult run(const RunConfig& cfg, bool verbose, std::ostream& log);

/// Exit code for a library error: configuration problems map to 2, solver
/// failures to 3.
int exit_code_for(ErrorCode code);

/// Doubles in CSV files: 17 significant digits, '.' decimal separator.
std::string format_double(double v);

}  // namespace wentzell::cli
