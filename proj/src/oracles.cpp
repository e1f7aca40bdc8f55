#include "wentzell/oracles.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace wentzell::oracles {

namespace {

std::string fmt_sci(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

Eigen::MatrixXd stiffness(const Grid& grid) {
  const int n = grid.node_count();
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < grid.dim(); ++a) {
    const Eigen::SparseMatrix<double> D = grid.gradient_matrix(a);
    K += grid.cell_volume() * Eigen::MatrixXd(D.transpose() * D);
  }
  return K;
}

Eigen::VectorXd load_vector(const Grid& grid, const Field& w1, const BoundaryField& w2) {
  return grid.node_mass().cwiseProduct(w1) + grid.trace_adjoint(grid.boundary_weights().cwiseProduct(w2));
}

int sgn(double v) { return (v > 0.0) - (v < 0.0); }

}  // namespace

OracleReport compare(std::string oracle, std::string inputs, double reference, double observed, double tol) {
  OracleReport r{std::move(oracle), std::move(inputs), reference, observed, tol, false};
  r.pass = std::abs(reference - observed) <= tol;
  return r;
}

Field dense_linear_step(const Grid& grid, double h, const Field& w1, const BoundaryField& w2) {
  if (grid.node_count() > 5000) throw Error(ErrorCode::InvalidInput, "dense oracle limited to small grids");
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidInput, "h must be positive");
  Eigen::MatrixXd A = h * stiffness(grid);
  A.diagonal() += grid.total_mass();
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::InvalidInput, "step matrix is not positive definite");
  return llt.solve(load_vector(grid, w1, w2));
}

std::vector<Field> dense_linear_flow(const Grid& grid, const Field& y0, const SpaceTimeFunction& f,
                                     const SpaceTimeFunction& g, double T, int n) {
  const double h = T / n;
  Eigen::MatrixXd A = h * stiffness(grid);
  A.diagonal() += grid.total_mass();
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  std::vector<Field> ys{y0};
  for (int i = 1; i <= n; ++i) {
    Field fi = f ? time_average(f, i, h, grid) : Field(Field::Zero(grid.node_count()));
    BoundaryField gi = g ? time_average_boundary(g, i, h, grid) : BoundaryField(BoundaryField::Zero(grid.boundary_count()));
    const Field& y = ys.back();
    ys.push_back(llt.solve(load_vector(grid, y + h * fi, grid.trace(y) + h * gi)));
  }
  return ys;
}

Field dense_linear_steady(const Grid& grid, const Field& f, const BoundaryField& g) {
  const int n = grid.node_count();
  std::vector<Eigen::VectorXd> gauge{grid.total_mass()};
  if (grid.dim() == 2) {
    Eigen::VectorXd cb(n);
    for (int i = 0; i < n; ++i) cb[i] = ((i % (grid.nx() + 1) + i / (grid.nx() + 1)) % 2 == 0) ? 1.0 : -1.0;
    gauge.push_back(grid.total_mass().cwiseProduct(cb));
  }
  const int k = static_cast<int>(gauge.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n + k, n + k);
  A.topLeftCorner(n, n) = stiffness(grid);
  for (int j = 0; j < k; ++j) {
    A.block(0, n + j, n, 1) = gauge[j];
    A.block(n + j, 0, 1, n) = gauge[j].transpose();
  }
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + k);
  rhs.head(n) = load_vector(grid, f, g);
  // The multipliers absorb any load component along the kernel.
  const Eigen::VectorXd sol = A.fullPivLu().solve(rhs);
  return sol.head(n);
}

double prox_1d(const std::function<double(double)>& j, double lambda, double r, double tol) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidInput, "lambda must be positive");
  auto F = [&](double s) { return (r - s) * (r - s) / (2.0 * lambda) + j(s); };
  double a = std::min(0.0, r), b = std::max(0.0, r);
  const double pad = 1e-9 * (1.0 + std::abs(r));
  a -= pad;
  b += pad;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - phi * (b - a), d = a + phi * (b - a);
  double fc = F(c), fd = F(d);
  while (b - a > tol * (1.0 + std::abs(r))) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - phi * (b - a);
      fc = F(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + phi * (b - a);
      fd = F(d);
    }
  }
  return 0.5 * (a + b);
}

double conjugate_1d(const std::function<double(double)>& j, double w, double radius, int samples) {
  auto G = [&](double s) { return w * s - j(s); };
  const double step = 2.0 * radius / (samples - 1);
  int best = 0;
  double gbest = -HUGE_VAL;
  for (int k = 0; k < samples; ++k) {
    const double gk = G(-radius + k * step);
    if (gk > gbest) {
      gbest = gk;
      best = k;
    }
  }
  // Concave objective: refine on the bracketing cells.
  double a = -radius + std::max(0, best - 1) * step, b = -radius + std::min(samples - 1, best + 1) * step;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(a)); ++it) {
    const double c = b - phi * (b - a), d = a + phi * (b - a);
    if (G(c) >= G(d)) b = d; else a = c;
  }
  return std::max(gbest, G(0.5 * (a + b)));
}

Eigen::VectorXd tv_prox_1d(const Eigen::VectorXd& z, const Eigen::VectorXd& T, const Eigen::VectorXd& a) {
  const int n = static_cast<int>(z.size());
  if (T.size() != n || a.size() != n - 1) throw Error(ErrorCode::InvalidInput, "tv_prox_1d: size mismatch");
  // Taut string. The optimality conditions say the partial sums S_i = sum T_j u_j
  // stay within a_i of Z_i = sum T_j z_j; u is the slope of the shortest path
  // through that tube over abscissas X_i = sum T_j.
  std::vector<double> X(n + 1, 0.0), lo(n + 1, 0.0), hi(n + 1, 0.0);
  double zs = 0.0;
  for (int i = 1; i <= n; ++i) {
    X[i] = X[i - 1] + T[i - 1];
    zs += T[i - 1] * z[i - 1];
    const double w = i < n ? a[i - 1] : 0.0;
    lo[i] = zs - w;
    hi[i] = zs + w;
  }
  Eigen::VectorXd u(n);
  int c = 0;
  double yc = 0.0;
  while (c < n) {
    double umin = HUGE_VAL, lmax = -HUGE_VAL;
    int iu = c, il = c;
    int next = -1;
    double slope = 0.0, ynext = 0.0;
    for (int j = c + 1; j <= n; ++j) {
      const double dx = X[j] - X[c];
      const double su = (hi[j] - yc) / dx, sl = (lo[j] - yc) / dx;
      if (sl > umin) {
        next = iu, slope = umin, ynext = hi[iu];
        break;
      }
      if (su < lmax) {
        next = il, slope = lmax, ynext = lo[il];
        break;
      }
      if (su <= umin) umin = su, iu = j;
      if (sl >= lmax) lmax = sl, il = j;
      if (j == n) next = n, slope = su, ynext = hi[n];
    }
    for (int i = c; i < next; ++i) u[i] = slope;
    c = next;
    yc = ynext;
  }

  const double viol = tv_kkt_violation(z, T, a, u);
  const double scale = a.size() ? a.maxCoeff() : 1.0;
  if (viol > 1e-9 * (scale + T.cwiseProduct(z).cwiseAbs().maxCoeff())) {
    std::ostringstream os;
    os << "tv_prox_1d: optimality certificate failed (violation " << viol << ")";
    throw Error(ErrorCode::NonConverged, os.str());
  }
  return u;
}

double tv_kkt_violation(const Eigen::VectorXd& z, const Eigen::VectorXd& T, const Eigen::VectorXd& a,
                        const Eigen::VectorXd& u) {
  const int n = static_cast<int>(z.size());
  double zeta = 0.0, viol = 0.0;
  for (int i = 0; i < n; ++i) {
    zeta += T[i] * (u[i] - z[i]);
    if (i == n - 1) {
      viol = std::max(viol, std::abs(zeta));
      break;
    }
    const double du = u[i + 1] - u[i];
    if (du == 0.0) viol = std::max(viol, std::abs(zeta) - a[i]);
    else viol = std::max(viol, std::abs(zeta - a[i] * sgn(du)));
  }
  return viol;
}

Field tv_prox_1d(const Grid& grid, const Field& w1, const BoundaryField& w2, double weight) {
  if (grid.dim() != 1) throw Error(ErrorCode::InvalidInput, "tv_prox_1d needs a 1D grid");
  const Eigen::VectorXd T = grid.total_mass();
  const Eigen::VectorXd z = load_vector(grid, w1, w2).cwiseQuotient(T);
  // weight * sum_c vol |(u_{c+1} - u_c) / dx| = weight * sum_c |u_{c+1} - u_c|.
  const Eigen::VectorXd a = Eigen::VectorXd::Constant(grid.cell_count(), weight * grid.cell_volume() / grid.spacing(0));
  return tv_prox_1d(z, T, a);
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                            double step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    xp[i] = xi + step;
    const double fp = f(xp);
    xp[i] = xi - step;
    const double fm = f(xp);
    xp[i] = xi;
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

Field projected_gradient_obstacle(const Grid& grid, const FluxModel& model, double t, double h, const Field& w1,
                                  const BoundaryField& w2, double tol, int max_iterations) {
  if (!model.smooth()) throw Error(ErrorCode::InvalidInput, "projected-gradient oracle needs a smooth model");
  const Eigen::VectorXd T = grid.total_mass();
  const Eigen::VectorXd load = load_vector(grid, w1, w2);
  const double vol = grid.cell_volume();
  auto eval = [&](const Field& u, Field* grad) {
    const GradientField q = grid.gradient(u);
    GradientField flux(q.rows(), q.cols());
    double s = 0.0;
    for (int c = 0; c < q.rows(); ++c) {
      const Vec x = grid.cell_center(c);
      const Vec r = q.row(c).transpose();
      const Vec xi0 = model.zero_section(t, x);
      s += model.potential(t, x, r) + xi0.dot(r);
      if (grad) flux.row(c) = (h * (model.flux_select(t, x, r) + xi0)).transpose();
    }
    if (grad) *grad = T.cwiseProduct(u) - load + grid.gradient_adjoint(flux);
    return 0.5 * T.dot(u.cwiseAbs2()) - load.dot(u) + h * vol * s;
  };
  Field u = load.cwiseQuotient(T).cwiseMax(0.0);
  Field g;
  eval(u, &g);
  double alpha = 1.0;
  for (int it = 0; it < max_iterations; ++it) {
    const Field pg = u - (u - g.cwiseQuotient(T)).cwiseMax(0.0);
    if (pg.lpNorm<Eigen::Infinity>() <= tol) return u;
    alpha = std::min(1.0, 2.0 * alpha);
    bool moved = false;
    for (int ls = 0; ls < 80; ++ls) {
      const Field un = (u - alpha * g.cwiseQuotient(T)).cwiseMax(0.0);
      const Field d = un - u;
      Field gn;
      eval(un, &gn);
      // Local Lipschitz test on gradients; function values lose accuracy near
      // the minimizer long before the gradient does.
      if ((gn - g).dot(d) <= T.dot(d.cwiseAbs2()) / alpha) {
        u = un;
        g = std::move(gn);
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) break;
  }
  const double res = (u - (u - g.cwiseQuotient(T)).cwiseMax(0.0)).lpNorm<Eigen::Infinity>();
  throw Error(ErrorCode::NonConverged,
              "projected-gradient oracle stopped at residual " + fmt_sci(res) + " > " + fmt_sci(tol));
}

}  // namespace wentzell::oracles
