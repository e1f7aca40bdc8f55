#pragma once

#include "wentzell/flux_model.hpp"
#include "wentzell/grid.hpp"

#include <Eigen/Sparse>

#include <vector>

namespace wentzell::detail {

/// Discrete step objective
///   1/2 u' T u - load' u + sum_c vol [h J(grad u_c) + h xi0_c . grad u_c + nu |grad u_c|^2]
/// with T = lumped mass + boundary weights and J = j (lambda = 0) or j_lambda.
struct StepContext {
  StepContext(const Grid& g, const FluxModel& m, double t, double h, const Field& w1, const BoundaryField& w2);

  double fidelity(const Field& u) const;
  double value(const Field& u, double lambda, double nu) const;
  double eval(const Field& u, double lambda, double nu, Field& grad) const;
  void hessian(const Field& u, double lambda, double nu, Eigen::SparseMatrix<double>& H) const;
  /// Yosida flux (lambda > 0) or minimal section (lambda = 0) per cell.
  GradientField flux(const Field& u, double lambda) const;

  const Grid& grid;
  FluxModel model;
  double t;
  double h;
  Field load;
  Eigen::VectorXd metric;
  std::vector<Vec> centers;
  GradientField xi0;
  bool has_xi0 = false;
  double scale_hint = 1.0;
};

}  // namespace wentzell::detail
