#include "wentzell/grid.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace wentzell {

namespace {

void check_extent(double a, double b, const char* axis) {
  if (!std::isfinite(a) || !std::isfinite(b) || !(b > a)) {
    std::ostringstream os;
    os << "degenerate extent on axis " << axis << ": [" << a << ", " << b << "]";
    throw Error(ErrorCode::InvalidInput, os.str());
  }
}

// Gauss-Legendre nodes and weights on [-1, 1].
constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                               0.5384693101056831, 0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                 0.4786286704993665, 0.2369268850561891};

}  // namespace

Grid Grid::interval(int n, double a, double b) {
  if (n < 2) throw Error(ErrorCode::InvalidInput, "interval needs at least 2 cells");
  check_extent(a, b, "x");
  Grid g;
  g.dim_ = 1;
  g.nx_ = n;
  g.ny_ = 1;
  g.origin_[0] = a;
  g.spacing_[0] = (b - a) / n;
  g.cell_volume_ = g.spacing_[0];
  for (int c = 0; c < n; ++c) g.cells_.push_back({c, c + 1});
  g.stencil_.resize(1, 2);
  g.stencil_ << -1.0 / g.spacing_[0], 1.0 / g.spacing_[0];
  g.mass_ = Eigen::VectorXd::Constant(n + 1, g.spacing_[0]);
  g.mass_[0] = g.mass_[n] = 0.5 * g.spacing_[0];
  g.boundary_ = {0, n};
  g.boundary_weights_ = Eigen::VectorXd::Ones(2);
  g.finish();
  return g;
}

Grid Grid::rectangle(int nx, int ny, double x0, double x1, double y0, double y1) {
  if (nx < 2 || ny < 2) throw Error(ErrorCode::InvalidInput, "rectangle needs at least 2 cells per axis");
  check_extent(x0, x1, "x");
  check_extent(y0, y1, "y");
  Grid g;
  g.dim_ = 2;
  g.nx_ = nx;
  g.ny_ = ny;
  g.origin_[0] = x0;
  g.origin_[1] = y0;
  const double hx = (x1 - x0) / nx, hy = (y1 - y0) / ny;
  g.spacing_[0] = hx;
  g.spacing_[1] = hy;
  g.cell_volume_ = hx * hy;
  auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) g.cells_.push_back({id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1)});
  // Bilinear gradient at the cell center, nodes ordered (00, 10, 01, 11).
  g.stencil_.resize(2, 4);
  g.stencil_ << -0.5 / hx, 0.5 / hx, -0.5 / hx, 0.5 / hx,  //
      -0.5 / hy, -0.5 / hy, 0.5 / hy, 0.5 / hy;
  const int nn = (nx + 1) * (ny + 1);
  g.mass_ = Eigen::VectorXd::Zero(nn);
  for (const auto& cell : g.cells_)
    for (int k : cell) g.mass_[k] += 0.25 * g.cell_volume_;
  std::vector<double> w;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const bool bx = i == 0 || i == nx, by = j == 0 || j == ny;
      if (!bx && !by) continue;
      double weight = 0.0;
      if (by) weight += (i == 0 || i == nx) ? 0.5 * hx : hx;
      if (bx) weight += (j == 0 || j == ny) ? 0.5 * hy : hy;
      g.boundary_.push_back(id(i, j));
      w.push_back(weight);
    }
  }
  g.boundary_weights_ = Eigen::Map<Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size()));
  g.finish();
  return g;
}

void Grid::finish() {
  boundary_index_.assign(mass_.size(), -1);
  for (int k = 0; k < boundary_count(); ++k) boundary_index_[boundary_[k]] = k;
  total_mass_ = mass_ + trace_adjoint(boundary_weights_);
}

Vec Grid::node(int i) const {
  Vec x(dim_);
  if (dim_ == 1) {
    x[0] = origin_[0] + spacing_[0] * i;
  } else {
    x[0] = origin_[0] + spacing_[0] * (i % (nx_ + 1));
    x[1] = origin_[1] + spacing_[1] * (i / (nx_ + 1));
  }
  return x;
}

Vec Grid::cell_center(int c) const {
  Vec x(dim_);
  if (dim_ == 1) {
    x[0] = origin_[0] + spacing_[0] * (c + 0.5);
  } else {
    x[0] = origin_[0] + spacing_[0] * (c % nx_ + 0.5);
    x[1] = origin_[1] + spacing_[1] * (c / nx_ + 0.5);
  }
  return x;
}

double Grid::domain_measure() const { return cell_volume_ * cell_count(); }
double Grid::boundary_measure() const { return boundary_weights_.sum(); }

GradientField Grid::gradient(const Field& u) const {
  if (u.size() != node_count()) throw Error(ErrorCode::InvalidInput, "field does not match grid");
  GradientField q(cell_count(), dim_);
  const int nc = static_cast<int>(stencil_.cols());
  for (int c = 0; c < cell_count(); ++c) {
    const auto& nodes = cells_[c];
    for (int a = 0; a < dim_; ++a) {
      double s = 0.0;
      for (int k = 0; k < nc; ++k) s += stencil_(a, k) * u[nodes[k]];
      q(c, a) = s;
    }
  }
  return q;
}

Field Grid::gradient_adjoint(const GradientField& q) const {
  if (q.rows() != cell_count() || q.cols() != dim_) throw Error(ErrorCode::InvalidInput, "gradient field does not match grid");
  Field out = Field::Zero(node_count());
  const int nc = static_cast<int>(stencil_.cols());
  for (int c = 0; c < cell_count(); ++c) {
    const auto& nodes = cells_[c];
    for (int k = 0; k < nc; ++k) {
      double s = 0.0;
      for (int a = 0; a < dim_; ++a) s += stencil_(a, k) * q(c, a);
      out[nodes[k]] += cell_volume_ * s;
    }
  }
  return out;
}

Eigen::SparseMatrix<double> Grid::gradient_matrix(int axis) const {
  std::vector<Eigen::Triplet<double>> trip;
  const int nc = static_cast<int>(stencil_.cols());
  for (int c = 0; c < cell_count(); ++c)
    for (int k = 0; k < nc; ++k) trip.emplace_back(c, cells_[c][k], stencil_(axis, k));
  Eigen::SparseMatrix<double> D(cell_count(), node_count());
  D.setFromTriplets(trip.begin(), trip.end());
  return D;
}

BoundaryField Grid::trace(const Field& u) const {
  if (u.size() != node_count()) throw Error(ErrorCode::InvalidInput, "field does not match grid");
  BoundaryField b(boundary_count());
  for (int k = 0; k < boundary_count(); ++k) b[k] = u[boundary_[k]];
  return b;
}

Field Grid::trace_adjoint(const BoundaryField& b) const {
  if (b.size() != boundary_count()) throw Error(ErrorCode::InvalidInput, "boundary field does not match grid");
  Field u = Field::Zero(mass_.size());
  for (int k = 0; k < boundary_count(); ++k) u[boundary_[k]] += b[k];
  return u;
}

double Grid::norm_domain(const Field& u) const { return std::sqrt(mass_.dot(u.cwiseAbs2())); }

double Grid::norm_boundary(const BoundaryField& b) const {
  return std::sqrt(boundary_weights_.dot(b.cwiseAbs2()));
}

double Grid::gradient_power(const GradientField& q, double p) const {
  double s = 0.0;
  for (int c = 0; c < q.rows(); ++c) s += std::pow(q.row(c).norm(), p);
  return cell_volume_ * s;
}

Field Grid::sample_nodes(const std::function<double(const Vec&)>& f) const {
  Field u(node_count());
  for (int i = 0; i < node_count(); ++i) u[i] = f(node(i));
  return u;
}

BoundaryField Grid::sample_boundary(const std::function<double(const Vec&)>& f) const {
  BoundaryField b(boundary_count());
  for (int k = 0; k < boundary_count(); ++k) b[k] = f(boundary_point(k));
  return b;
}

double time_average_scalar(const std::function<double(double)>& f, int i, double h) {
  if (i < 1 || !(h > 0.0)) throw Error(ErrorCode::InvalidInput, "time_average needs i >= 1 and h > 0");
  const double mid = (i - 0.5) * h;
  double s = 0.0;
  for (int q = 0; q < 5; ++q) s += kGaussWeights[q] * f(mid + 0.5 * h * kGaussNodes[q]);
  return 0.5 * s;
}

Field time_average(const SpaceTimeFunction& f, int i, double h, const Grid& grid) {
  Field u(grid.node_count());
  for (int k = 0; k < grid.node_count(); ++k) {
    const Vec x = grid.node(k);
    u[k] = time_average_scalar([&](double t) { return f(t, x); }, i, h);
  }
  return u;
}

BoundaryField time_average_boundary(const SpaceTimeFunction& g, int i, double h, const Grid& grid) {
  BoundaryField b(grid.boundary_count());
  for (int k = 0; k < grid.boundary_count(); ++k) {
    const Vec x = grid.boundary_point(k);
    b[k] = time_average_scalar([&](double t) { return g(t, x); }, i, h);
  }
  return b;
}

}  // namespace wentzell
