#pragma once

#include "wentzell/cli/expression.hpp"
#include "wentzell/flow.hpp"
#include "wentzell/step_solver.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wentzell::cli {

struct GridSpec {
  int dim = 1;
  int nx = 32;
  int ny = 32;
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  bool operator==(const GridSpec&) const = default;
};

struct ModelSpec {
  /// quadratic | plaplacian | fractured | loggrowth | tv
  std::string id = "quadratic";
  double p = 2.0;
  std::vector<double> alpha{1.0};
  std::vector<double> kappa{};
  std::vector<double> delta{};
  std::vector<double> thresholds{};
  /// Log-growth coefficient.
  double a = 1.0;
  /// Total-variation weight.
  double rho = 1.0;
  bool operator==(const ModelSpec&) const = default;
};

struct SourceSpec {
  std::string y0 = "0";
  std::string f = "0";
  std::string g = "0";
  bool operator==(const SourceSpec&) const = default;
};

struct ConvergenceSpec {
  /// Number of halvings after the base step; the study uses refinements + 1 runs.
  int refinements = 3;
  /// Smallest acceptable observed order; unset means only monotone decrease is checked.
  std::optional<double> min_order{};
  bool operator==(const ConvergenceSpec&) const = default;
};

struct ContractionSpec {
  /// Added to y0 for the second run; "random" draws nodal noise from the seed.
  std::string perturbation = "0.1*sin(3*pi*x)";
  double amplitude = 0.1;
  double tol = 1e-8;
  bool operator==(const ContractionSpec&) const = default;
};

struct AsymptoticsSpec {
  /// Defaults to 50 relaxation times.
  std::optional<double> t_long{};
  double tol = 1e-6;
  bool operator==(const AsymptoticsSpec&) const = default;
};

struct RunConfig {
  /// flow | convergence | contraction | asymptotics | obstacle | tv
  std::string mode = "flow";
  std::string preset{};
  GridSpec grid{};
  ModelSpec model{};
  SourceSpec sources{};
  double T = 1.0;
  std::optional<int> n{};
  std::optional<double> h{};
  StepConfig step{};
  std::string out_dir = "out";
  int save_every = 1;
  ConvergenceSpec convergence{};
  ContractionSpec contraction{};
  AsymptoticsSpec asymptotics{};
  std::uint64_t seed = 1;

  bool operator==(const RunConfig&) const = default;
  /// Step count implied by n or h.
  int steps() const;
};

const std::vector<std::string>& preset_names();
/// JSON fragment a preset contributes (grid, model, sources, T, n).
nlohmann::json preset_json(const std::string& name);

/// Parses JSON text. Errors: ErrorCode::Parse (syntax, with line and column;
/// wrong value types, with the key path) and ErrorCode::Validation (unknown
/// keys with their path, or a list of violated constraints).
RunConfig parse_config(const std::string& text);
/// JSON syntax check only; ErrorCode::Parse carries line and column.
nlohmann::json parse_json(const std::string& text);
RunConfig load_config(const std::string& path);
/// Applies "a.b.c=value" overrides to a JSON document; value is read as JSON
/// when it parses, as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);
RunConfig parse_config(const nlohmann::json& doc);
inline RunConfig parse_config(const char* text) { return parse_config(std::string(text)); }

nlohmann::json to_json(const RunConfig& cfg);
/// Throws ErrorCode::Validation listing every violated constraint.
void validate(const RunConfig& cfg);

/// Objects built from a validated config.
Grid build_grid(const RunConfig& cfg);
FluxModel build_model(const RunConfig& cfg);
ProblemData build_problem(const RunConfig& cfg);

}  // namespace wentzell::cli
