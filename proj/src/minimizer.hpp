#pragma once

// Unconstrained and bound-constrained minimization of smooth strongly convex
// objectives on R^n.

#include <Eigen/Core>
#include <Eigen/Sparse>

#include <functional>

namespace wentzell::detail {

struct SmoothObjective {
  /// Value and gradient at x.
  std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)> eval;
  /// Value only (cheaper line searches).
  std::function<double(const Eigen::VectorXd& x)> value;
  /// Generalized Hessian at x; sparsity pattern must not change between calls.
  std::function<void(const Eigen::VectorXd& x, Eigen::SparseMatrix<double>& H)> hessian;
  /// Positive per-coordinate scale; stationarity is measured as
  /// max_i |grad_i| / scale_i.
  Eigen::VectorXd scale;
};

struct MinimizeOptions {
  double tol = 1e-9;
  int max_iterations = 200;
  /// Enforce x >= 0 componentwise.
  bool nonnegative = false;
  int lbfgs_memory = 12;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Stopped because steps no longer changed x at machine precision.
  bool stagnated = false;
};

/// Scaled stationarity residual; for bound constraints the projected version
/// |x - max(0, x - g/s)|.
double stationarity(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& scale, bool nonnegative);

MinimizeResult minimize_newton(const SmoothObjective& f, Eigen::VectorXd x0, const MinimizeOptions& opt);
MinimizeResult minimize_lbfgs(const SmoothObjective& f, Eigen::VectorXd x0, const MinimizeOptions& opt);

}  // namespace wentzell::detail
