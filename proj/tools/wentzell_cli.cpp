// Scenario runner: wentzell run <config.json> [--override key=value]... [--out DIR] [--verbose]

#include "wentzell/cli/config.hpp"
#include "wentzell/cli/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

int fail(wentzell::ErrorCode code, const std::string& reason) {
  const int exit = wentzell::cli::exit_code_for(code);
  nlohmann::json j = {{"status", exit == wentzell::cli::kExitNonConverged ? "nonconverged" : "config_error"},
                      {"error_code", wentzell::to_string(code)},
                      {"reason", reason},
                      {"exit_code", exit}};
  std::cerr << j.dump() << '\n';
  return exit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Implicit-Euler solver for nonlinear flows with dynamic boundary conditions"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Execute a run configuration");
  std::string path, out;
  std::vector<std::string> overrides;
  bool verbose = false;
  run->add_option("config", path, "JSON run configuration")->required();
  run->add_option("--override", overrides, "Set a config key, e.g. step.tol=1e-10 (repeatable)");
  run->add_option("--out", out, "Output directory (replaces output.dir)");
  run->add_flag("--verbose", verbose, "Report progress and checks on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : wentzell::cli::kExitConfig;
  }

  wentzell::cli::RunConfig cfg;
  try {
    std::ifstream in(path);
    if (!in) throw wentzell::Error(wentzell::ErrorCode::Parse, "cannot read config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    nlohmann::json doc = wentzell::cli::parse_json(ss.str());
    for (const auto& o : overrides) wentzell::cli::apply_override(doc, o);
    if (!out.empty()) wentzell::cli::apply_override(doc, "output.dir=" + nlohmann::json(out).dump());
    cfg = wentzell::cli::parse_config(doc);
  } catch (const wentzell::Error& e) {
    return fail(e.code(), e.what());
  }

  try {
    const auto res = wentzell::cli::run(cfg, verbose, std::cerr);
    if (res.exit_code != 0) {
      nlohmann::json j = {{"status", res.status}, {"reason", res.reason}, {"exit_code", res.exit_code}};
      std::cerr << j.dump() << '\n';
    } else if (verbose) {
      std::cerr << "PASS, outputs in " << cfg.out_dir << '\n';
    }
    return res.exit_code;
  } catch (const wentzell::Error& e) {
    return fail(e.code(), e.what());
  }
}
