#pragma once

#include "wentzell/types.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <vector>

namespace wentzell {

/// Uniform grid on an interval (N = 1) or an axis-aligned rectangle (N = 2).
///
/// Nodes carry the solution. Cells carry gradients: the difference quotient in
/// 1D, the bilinear gradient at the cell center in 2D. Domain integrals of
/// nodal fields use the lumped (trapezoidal) mass, boundary integrals use
/// trapezoidal weights on the boundary nodes.
///
/// The 2D bilinear center gradient annihilates the checkerboard pattern, so the
/// gradient has a one-dimensional kernel beyond the constants. Every step
/// objective keeps the L2 fidelity terms, so minimizers stay unique.
class Grid {
 public:
  static Grid interval(int n, double a = 0.0, double b = 1.0);
  static Grid rectangle(int nx, int ny, double x0 = 0.0, double x1 = 1.0, double y0 = 0.0, double y1 = 1.0);

  int dim() const { return dim_; }
  int node_count() const { return static_cast<int>(mass_.size()); }
  int cell_count() const { return static_cast<int>(cells_.size()); }
  int boundary_count() const { return static_cast<int>(boundary_.size()); }
  /// Cells per axis (nx, ny); ny = 1 in 1D.
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double spacing(int axis) const { return spacing_[axis]; }

  Vec node(int i) const;
  Vec cell_center(int c) const;
  Vec boundary_point(int k) const { return node(boundary_[k]); }

  const std::vector<int>& cell_nodes(int c) const { return cells_[c]; }
  /// dim x nodes-per-cell matrix: gradient on any cell is stencil() * u[cell_nodes].
  const Eigen::MatrixXd& stencil() const { return stencil_; }

  double cell_volume() const { return cell_volume_; }
  const Eigen::VectorXd& node_mass() const { return mass_; }
  const std::vector<int>& boundary_nodes() const { return boundary_; }
  const Eigen::VectorXd& boundary_weights() const { return boundary_weights_; }
  /// Position of node i in boundary_nodes(), or -1 for interior nodes.
  int boundary_index(int i) const { return boundary_index_[i]; }
  /// Lumped mass plus boundary weight per node: the metric of the product
  /// space L2(Omega) x L2(Gamma) restricted to traces.
  const Eigen::VectorXd& total_mass() const { return total_mass_; }

  double domain_measure() const;
  double boundary_measure() const;

  GradientField gradient(const Field& u) const;
  /// Adjoint of gradient() for the cell-volume pairing:
  /// sum_c vol q_c . grad(u)_c = gradient_adjoint(q) . u.
  Field gradient_adjoint(const GradientField& q) const;
  /// Sparse matrix of the gradient along one axis (cells x nodes).
  Eigen::SparseMatrix<double> gradient_matrix(int axis) const;

  BoundaryField trace(const Field& u) const;
  /// Scatter of boundary values into a nodal field (zeros inside).
  Field trace_adjoint(const BoundaryField& b) const;

  double integrate_nodes(const Field& u) const { return mass_.dot(u); }
  double integrate_cells(const Eigen::VectorXd& v) const { return cell_volume_ * v.sum(); }
  double integrate_boundary(const BoundaryField& b) const { return boundary_weights_.dot(b); }

  double norm_domain(const Field& u) const;
  double norm_boundary(const BoundaryField& b) const;
  /// Discrete L^p norm to the p-th power of a gradient field, sum_c vol |q_c|^p.
  double gradient_power(const GradientField& q, double p) const;

  Field sample_nodes(const std::function<double(const Vec&)>& f) const;
  BoundaryField sample_boundary(const std::function<double(const Vec&)>& f) const;

 private:
  Grid() = default;
  void finish();

  int dim_ = 1;
  int nx_ = 1;
  int ny_ = 1;
  double origin_[2] = {0.0, 0.0};
  double spacing_[2] = {1.0, 1.0};
  double cell_volume_ = 1.0;
  std::vector<std::vector<int>> cells_;
  Eigen::MatrixXd stencil_;
  Eigen::VectorXd mass_;
  std::vector<int> boundary_;
  std::vector<int> boundary_index_;
  Eigen::VectorXd boundary_weights_;
  Eigen::VectorXd total_mass_;
};

using SpaceTimeFunction = std::function<double(double t, const Vec& x)>;

/// (1/h) * integral over ((i-1)h, ih) of f(s, x), sampled at every node by
/// 5-point Gauss-Legendre quadrature in time.
Field time_average(const SpaceTimeFunction& f, int i, double h, const Grid& grid);
/// Same average sampled on the boundary nodes.
BoundaryField time_average_boundary(const SpaceTimeFunction& g, int i, double h, const Grid& grid);
/// Average of a scalar function of time over ((i-1)h, ih).
double time_average_scalar(const std::function<double(double)>& f, int i, double h);

}  // namespace wentzell
