#pragma once

// Brute-force references for the test suites. They share the grid and its
// quadrature with the library but none of the solver code.

#include "wentzell/flux_model.hpp"
#include "wentzell/grid.hpp"

#include <functional>
#include <string>
#include <vector>

namespace wentzell::oracles {

struct OracleReport {
  std::string oracle;
  std::string inputs;
  double reference = 0.0;
  double observed = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Compares observed with reference at absolute tolerance `tol`.
OracleReport compare(std::string oracle, std::string inputs, double reference, double observed, double tol);

/// Quadratic-model step (T + h K) u = M w1 + B w2, assembled densely and
/// solved by Cholesky.
Field dense_linear_step(const Grid& grid, double h, const Field& w1, const BoundaryField& w2);

/// Implicit Euler recursion of the Quadratic model, returning y_0..y_n.
std::vector<Field> dense_linear_flow(const Grid& grid, const Field& y0, const SpaceTimeFunction& f,
                                     const SpaceTimeFunction& g, double T, int n);

/// Quadratic steady state K u = M f + B g under the gauge of zero weighted mean
/// over Omega and Gamma (and no checkerboard component in 2D), by a dense
/// bordered solve.
Field dense_linear_steady(const Grid& grid, const Field& f, const BoundaryField& g);

/// argmin_s |r - s|^2 / (2 lambda) + j(s) by golden-section search, for a
/// normalized convex j (j >= 0, j(0) = 0) so the minimizer lies between 0 and r.
double prox_1d(const std::function<double(double)>& j, double lambda, double r, double tol = 1e-12);

/// sup_s (w s - j(s)) over a grid of `samples` points on [-radius, radius],
/// refined around the best sample.
double conjugate_1d(const std::function<double(double)>& j, double w, double radius, int samples = 20001);

/// Exact solution of min 1/2 sum_i T_i (u_i - z_i)^2 + sum_c a_c |u_{c+1} - u_c|
/// the weighted taut-string construction, verified against the dual
/// certificate. Throws when the certificate fails.
Eigen::VectorXd tv_prox_1d(const Eigen::VectorXd& z, const Eigen::VectorXd& T, const Eigen::VectorXd& a);

/// TV step on a 1D grid: argmin weight TV(u) + 1/2 int (u - w1)^2 + 1/2 int_Gamma (u - w2)^2.
Field tv_prox_1d(const Grid& grid, const Field& w1, const BoundaryField& w2, double weight);

/// Largest violation of the 1D TV optimality conditions at u.
double tv_kkt_violation(const Eigen::VectorXd& z, const Eigen::VectorXd& T, const Eigen::VectorXd& a,
                        const Eigen::VectorXd& u);

/// Central differences of f at x with step `step`.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double step = 1e-6);

/// Obstacle step for a smooth model by projected gradient descent with
/// backtracking, run to a projected-gradient residual of `tol`.
Field projected_gradient_obstacle(const Grid& grid, const FluxModel& model, double t, double h, const Field& w1,
                                  const BoundaryField& w2, double tol = 1e-13, int max_iterations = 2000000);

}  // namespace wentzell::oracles
