#pragma once

#include "wentzell/flux_model.hpp"
#include "wentzell/grid.hpp"

#include <string>
#include <vector>

namespace wentzell {

enum class Optimizer {
  Auto,         // primal-dual for total variation, Newton otherwise
  Newton,       // damped Newton on the (regularized) objective
  QuasiNewton,  // limited-memory BFGS on the (regularized) objective
  PrimalDual,   // exact discrete TV by a preconditioned primal-dual method
};

enum class Regularization {
  Auto,    // Moreau-Yosida continuation iff the model is not smooth()
  Always,
  Never,
};

const char* to_string(Optimizer o);
const char* to_string(Regularization r);
Optimizer optimizer_from_string(const std::string& s);
Regularization regularization_from_string(const std::string& s);

struct StepConfig {
  /// Stationarity tolerance, max_i |grad_i| / (mass_i + boundary weight_i).
  double tol = 1e-9;
  double lambda0 = 1.0;
  double decay = 0.25;
  double lambda_min = 1e-6;
  /// Iteration cap per continuation stage.
  int max_iterations = 200;
  Optimizer optimizer = Optimizer::Auto;
  Regularization regularization = Regularization::Auto;
  /// Include lambda * int |grad u|^2 while regularizing.
  bool viscosity = true;
  /// Upper bound on the Fenchel certificate of an accepted step.
  double certificate_tol = 1e-6;
  /// Primal-dual (TV) settings: iteration cap and duality gap relative to
  /// a bound on the TV term of the data.
  int primal_dual_max_iterations = 500000;
  double primal_dual_tol = 1e-13;

  /// Throws ErrorCode::BadConfig on an invalid schedule or tolerance.
  void validate() const;
  bool operator==(const StepConfig&) const = default;
};

struct StageLog {
  double lambda = 0.0;  // 0 for the unregularized problem
  int iterations = 0;
  double objective = 0.0;
  double residual = 0.0;
  bool converged = false;
};

struct StepSolution {
  Field u;
  /// Flux section per cell, normalized so that eta lies in the catalog's
  /// (normalized) subdifferential.
  GradientField eta;
  /// Zero section removed by normalization, per cell; the raw flux of the
  /// step is eta + zero_section.
  GradientField zero_section;
  /// Unregularized objective at u.
  double objective = 0.0;
  double residual = 0.0;
  /// Obstacle steps: max_i min(u_i, |unconstrained stationarity_i|) together
  /// with negative multipliers; zero otherwise.
  double complementarity = 0.0;
  std::vector<StageLog> log;
  /// sum_c vol [j(grad u) + j*(eta) - eta . grad u].
  double certificate = 0.0;
  double min_cell_gap = 0.0;
  /// Last regularization parameter used, 0 for an exact solve.
  double final_lambda = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// phi(u) = 1/2 int u^2 + h int j(t, x, grad u) + h int xi0 . grad u
///          + 1/2 int_Gamma u^2 - int w1 u - int_Gamma w2 u.
/// The xi0 term restores the zero section removed by normalization and
/// vanishes for every catalog model without lower-order terms.
double step_objective(const Grid& grid, const FluxModel& model, double t, double h, const Field& w1,
                      const BoundaryField& w2, const Field& u);

/// phi with j replaced by the Moreau envelope j_lambda, plus lambda int |grad u|^2
/// when `viscosity` is set.
double regularized_objective(const Grid& grid, const FluxModel& model, double t, double h, double lambda,
                             const Field& w1, const BoundaryField& w2, const Field& u, bool viscosity = true);
/// Analytic gradient of regularized_objective with respect to the nodal values.
Field regularized_gradient(const Grid& grid, const FluxModel& model, double t, double h, double lambda,
                           const Field& w1, const BoundaryField& w2, const Field& u, bool viscosity = true);

/// One implicit step: minimizes phi, through a Moreau-Yosida continuation
/// when the model is nonsmooth. Throws ErrorCode::NonConverged on failure.
StepSolution solve_step(const Grid& grid, const FluxModel& model, double t, double h, const Field& w1,
                        const BoundaryField& w2, const StepConfig& cfg = {}, const Field* start = nullptr);

/// Same objective minimized over {u >= 0}.
StepSolution solve_step_obstacle(const Grid& grid, const FluxModel& model, double t, double h, const Field& w1,
                                 const BoundaryField& w2, const StepConfig& cfg = {}, const Field* start = nullptr);

/// argmin rho h TV(u) + 1/2 int (u - w1)^2 + 1/2 int_Gamma (u - w2)^2 with the
/// exact (nonsmooth) discrete total variation.
StepSolution tv_step(const Grid& grid, double rho, double h, const Field& w1, const BoundaryField& w2,
                     const StepConfig& cfg = {});
StepSolution tv_step(const Grid& grid, double rho, double h, const Field& prev, const StepConfig& cfg = {});

/// Fenchel certificate and smallest per-cell gap of (grad u, eta).
double fenchel_certificate(const Grid& grid, const FluxModel& model, double t, const Field& u,
                           const GradientField& eta, double* min_cell_gap = nullptr);

/// Largest residual of the discrete weak form over the nodal test functions,
/// scaled by mass + boundary weight:
/// int (u psi + h (eta + xi0) . grad psi) + int_Gamma u psi - int w1 psi - int_Gamma w2 psi.
double weak_form_residual(const Grid& grid, double h, const Field& w1, const BoundaryField& w2,
                          const StepSolution& sol);

}  // namespace wentzell
