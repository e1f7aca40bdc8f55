#pragma once

#include "wentzell/flux_model.hpp"
#include "wentzell/grid.hpp"
#include "wentzell/step_solver.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace wentzell {

struct ProblemData {
  Grid grid;
  FluxModel model;
  Field y0{};
  /// Domain source f(t, x); empty means zero.
  SpaceTimeFunction f{};
  /// Boundary source g(t, sigma); empty means zero.
  SpaceTimeFunction g{};
  double T = 1.0;
};

/// The six quantities bounded by the stability estimate, taken at the final
/// index m = n (partial sums are nondecreasing in m and the maxima are
/// running maxima, so the final values dominate every m).
struct StabilityQuantities {
  double max_norm_domain = 0.0;    // max_i ||y_i||_Omega
  double max_norm_boundary = 0.0;  // max_i ||y_i||_Gamma
  double gradient_sum = 0.0;       // h sum ||grad y_i||_p^p
  double rate_domain = 0.0;        // h sum ||(y_i - y_{i-1}) / h||^2_Omega
  double rate_boundary = 0.0;      // h sum ||(y_i - y_{i-1}) / h||^2_Gamma
  double energy_sum = 0.0;         // h sum int j(t_i, x, grad y_i)

  std::vector<double> as_vector() const;
  static const std::vector<const char*>& names();
};

struct DiagnosticsRecord {
  StabilityQuantities totals;
  /// ||y_m||^2_Omega + ||y_m||^2_Gamma for m = 0..n.
  std::vector<double> norm_sq;
  /// Energy Phi(y_i) = int j(t_i, x, grad y_i) (plus the zero-section term).
  std::vector<double> energy;
  /// C0 = h sum ||f_i||^2 + h sum ||g_i||^2 + ||y0||^2 + ||y0||^2_Gamma + 2 T |C1_0| |Omega|.
  double c0 = 0.0;
  /// 2 e^T (||y0||^2 + ||y0||^2_Gamma + C0).
  double gronwall_bound = 0.0;
  /// max_m norm_sq[m] / gronwall_bound.
  double worst_ratio = 0.0;
  bool pass = false;
};

struct StepRecord {
  double certificate = 0.0;
  double min_cell_gap = 0.0;
  double residual = 0.0;
  double weak_form_residual = 0.0;
  double complementarity = 0.0;
  int iterations = 0;
};

struct Trajectory {
  Grid grid;
  FluxModel model;
  double h = 0.0;
  double T = 0.0;
  std::vector<double> t{};
  std::vector<Field> y{};
  std::vector<GradientField> eta{};
  std::vector<StepRecord> steps{};
  /// Time-averaged sources f_i^h, g_i^h for i = 1..n; index 0 holds zeros.
  std::vector<Field> f_avg{};
  std::vector<BoundaryField> g_avg{};
  /// True when no source was given or every time average vanished.
  bool sources_zero = true;
  bool obstacle = false;
  DiagnosticsRecord diagnostics{};

  int steps_count() const { return static_cast<int>(y.size()) - 1; }
};

struct FlowOptions {
  /// Minimize over {u >= 0} in every step.
  bool obstacle = false;
  /// Called after every accepted step with (index, time, field).
  std::function<void(int, double, const Field&)> on_step{};
};

/// Marches y_{i+1} = argmin phi with w1 = y_i + h f_{i+1}, w2 = y_i + h g_{i+1}.
/// Errors from a step are rethrown with the failing step index.
Trajectory run_flow(const ProblemData& problem, int n, const StepConfig& cfg = {}, const FlowOptions& opt = {});

DiagnosticsRecord stability_report(const Trajectory& traj);

struct ConvergenceTable {
  std::vector<double> h;
  /// ||y^{h_k} - y^{h_{k+1}}||_{L^r(Q)} for consecutive entries.
  std::vector<double> difference;
  /// log2(difference[k-1] / difference[k]).
  std::vector<double> order;
  double r = 2.0;
  bool decreasing = false;
};

/// Exponent r of the space-time norm for a model: 2 for p >= 2, p for
/// p in (1, 2), 1 for weakly coercive and total-variation models.
double space_time_exponent(const FluxModel& model);
/// Discrete L^r(Q) distance between piecewise-constant interpolants; the
/// finer trajectory's step must divide the coarser one.
double space_time_distance(const Trajectory& coarse, const Trajectory& fine, double r);
/// Runs the flow for every h in h_list (each h_{k+1} = h_k / 2, T / h integer).
ConvergenceTable convergence_study(const ProblemData& problem, const std::vector<double>& h_list,
                                   const StepConfig& cfg = {});

struct ContractionReport {
  std::vector<double> t;
  /// ||y_m - ybar_m||^2_Omega + ||y_m - ybar_m||^2_Gamma.
  std::vector<double> distance_sq;
  /// ||dy0||^2 + ||dy0||^2_Gamma + h sum_{i<=m} (||df_i||^2 + ||dg_i||^2).
  std::vector<double> data_sq;
  double empirical_c = 0.0;
  bool sources_perturbed = false;
  bool pass = false;
};

ContractionReport contraction_check(const ProblemData& problem, const ProblemData& perturbed, int n,
                                    const StepConfig& cfg = {}, double tol = 1e-8);
ContractionReport contraction_report(const Trajectory& a, const Trajectory& b, double tol = 1e-8);

struct EnergyReport {
  std::vector<double> energy;
  /// Phi(y_{i+1}) + (1/h)(|dy|^2_Omega + |dy|^2_Gamma) - Phi(y_i), i = 0..n-1.
  std::vector<double> dissipation_excess;
  double worst_increase = 0.0;
  double worst_dissipation = 0.0;
  bool monotone = false;
  bool dissipation_ok = false;
};

/// Energy Phi(y) = int j(x, grad y) + int xi0 . grad y at time t.
double energy(const Grid& grid, const FluxModel& model, double t, const Field& y);
/// Throws ErrorCode::Inapplicable for time-dependent models or nonzero sources.
EnergyReport energy_trace(const Trajectory& traj, double tol = 1e-10);

struct SteadyState {
  Field u;
  /// Scaled stationarity of the last proximal iteration.
  double residual = 0.0;
  int iterations = 0;
};

/// Minimizer of Phi(u) - int f u - int_Gamma g u with zero weighted mean over
/// Omega and Gamma. Requires int f + int_Gamma g = 0 (ErrorCode::Incompatible).
SteadyState steady_state(const Grid& grid, const FluxModel& model, const Field& f, const BoundaryField& g,
                         const StepConfig& cfg = {}, double tol = 1e-10);

/// Conserved-quantity projection: the limit y_inf = steady + kernel part of y0.
Field equilibrium_limit(const Grid& grid, const Field& steady, const Field& y0);

/// 1 / (smallest nonzero eigenvalue) of the linear Wentzell generator.
double relaxation_time(const Grid& grid);

struct AsymptoticsReport {
  std::vector<double> t;
  std::vector<double> distance;
  Field y_inf;
  double final_distance = 0.0;
  /// First index with distance <= tol, or -1.
  int reached_at = -1;
  bool eventually_decreasing = false;
  bool pass = false;
};

/// Runs the flow with time-independent sources to T_long (default 50 times
/// relaxation_time) and measures ||y(t_m) - y_inf||_Omega.
AsymptoticsReport asymptotics_check(const ProblemData& problem, int n, const StepConfig& cfg = {},
                                    std::optional<double> t_long = std::nullopt, double tol = 1e-6);

}  // namespace wentzell
