#include "wentzell/flow.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <sstream>

namespace wentzell {

namespace {

// Null space of the discrete Dirichlet form: constants, plus the
// checkerboard mode that the bilinear center gradient cannot see in 2D.
std::vector<Field> kernel_basis(const Grid& grid) {
  std::vector<Field> out{Field::Ones(grid.node_count())};
  if (grid.dim() == 2) {
    Field cb(grid.node_count());
    for (int i = 0; i < grid.node_count(); ++i) {
      const int ix = i % (grid.nx() + 1), iy = i / (grid.nx() + 1);
      cb[i] = ((ix + iy) % 2 == 0) ? 1.0 : -1.0;
    }
    out.push_back(cb);
  }
  return out;
}

// Coefficients c with sum_j c_j (v_i' T v_j) = rhs_i.
Eigen::VectorXd kernel_coefficients(const Grid& grid, const std::vector<Field>& basis, const Eigen::VectorXd& rhs) {
  const int k = static_cast<int>(basis.size());
  Eigen::MatrixXd G(k, k);
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) G(i, j) = basis[i].dot(grid.total_mass().cwiseProduct(basis[j]));
  return G.ldlt().solve(rhs);
}

}  // namespace

double energy(const Grid& grid, const FluxModel& model, double t, const Field& y) {
  const GradientField q = grid.gradient(y);
  double s = 0.0;
  for (int c = 0; c < q.rows(); ++c) {
    const Vec x = grid.cell_center(c);
    const Vec r = q.row(c).transpose();
    s += model.potential(t, x, r) + model.zero_section(t, x).dot(r);
  }
  return grid.cell_volume() * s;
}

EnergyReport energy_trace(const Trajectory& tr, double tol) {
  if (tr.model.time_dependent())
    throw Error(ErrorCode::Inapplicable, "energy decay requires an autonomous model");
  if (!tr.sources_zero) throw Error(ErrorCode::Inapplicable, "energy decay requires f = g = 0");
  EnergyReport rep;
  const Grid& grid = tr.grid;
  for (int i = 0; i <= tr.steps_count(); ++i) rep.energy.push_back(energy(grid, tr.model, tr.t[i], tr.y[i]));
  rep.monotone = rep.dissipation_ok = true;
  rep.worst_increase = rep.worst_dissipation = -HUGE_VAL;
  for (int i = 0; i < tr.steps_count(); ++i) {
    const Field dy = tr.y[i + 1] - tr.y[i];
    const BoundaryField db = grid.trace(dy);
    const double kinetic = (grid.node_mass().dot(dy.cwiseAbs2()) + grid.boundary_weights().dot(db.cwiseAbs2())) / tr.h;
    const double inc = rep.energy[i + 1] - rep.energy[i];
    const double excess = inc + kinetic;
    rep.dissipation_excess.push_back(excess);
    rep.worst_increase = std::max(rep.worst_increase, inc);
    rep.worst_dissipation = std::max(rep.worst_dissipation, excess);
    if (inc > tol) rep.monotone = false;
    if (excess > tol) rep.dissipation_ok = false;
  }
  if (tr.steps_count() == 0) rep.worst_increase = rep.worst_dissipation = 0.0;
  return rep;
}

double relaxation_time(const Grid& grid) {
  const int n = grid.node_count();
  if (n > 4000) throw Error(ErrorCode::InvalidInput, "relaxation_time uses a dense eigensolver; grid too large");
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n, n);
  for (int a = 0; a < grid.dim(); ++a) {
    const Eigen::SparseMatrix<double> D = grid.gradient_matrix(a);
    K += grid.cell_volume() * Eigen::MatrixXd(D.transpose() * D);
  }
  const Eigen::VectorXd s = grid.total_mass().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd A = s.asDiagonal() * K * s.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A, Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double cut = 1e-10 * ev.maxCoeff();
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] > cut) return 1.0 / ev[i];
  throw Error(ErrorCode::InvalidInput, "generator has no positive eigenvalue");
}

Field equilibrium_limit(const Grid& grid, const Field& steady, const Field& y0) {
  const auto basis = kernel_basis(grid);
  Eigen::VectorXd rhs(basis.size());
  const Field d = y0 - steady;
  for (std::size_t i = 0; i < basis.size(); ++i) rhs[i] = basis[i].dot(grid.total_mass().cwiseProduct(d));
  const Eigen::VectorXd c = kernel_coefficients(grid, basis, rhs);
  Field out = steady;
  for (std::size_t i = 0; i < basis.size(); ++i) out += c[i] * basis[i];
  return out;
}

SteadyState steady_state(const Grid& grid, const FluxModel& model, const Field& f, const BoundaryField& g,
                         const StepConfig& cfg, double tol) {
  if (model.time_dependent()) throw Error(ErrorCode::Inapplicable, "steady states need an autonomous model");
  if (f.size() != grid.node_count() || g.size() != grid.boundary_count())
    throw Error(ErrorCode::InvalidInput, "sources do not match the grid");
  const double compat = grid.integrate_nodes(f) + grid.integrate_boundary(g);
  const double scale = grid.integrate_nodes(f.cwiseAbs()) + grid.integrate_boundary(g.cwiseAbs());
  if (std::abs(compat) > tol * std::max(1.0, scale)) {
    std::ostringstream os;
    os << "incompatible sources: int f + int_Gamma g = " << compat;
    throw Error(ErrorCode::Incompatible, os.str());
  }
  // Remove the (rounding-level) constant part and, in 2D, the part of the load
  // that only the invisible checkerboard mode could balance.
  const auto basis = kernel_basis(grid);
  const Field load = grid.node_mass().cwiseProduct(f) + grid.trace_adjoint(grid.boundary_weights().cwiseProduct(g));
  Eigen::VectorXd rhs(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) rhs[i] = basis[i].dot(load);
  const Eigen::VectorXd c = kernel_coefficients(grid, basis, rhs);
  Field fs = f;
  BoundaryField gs = g;
  for (std::size_t i = 0; i < basis.size(); ++i) {
    fs -= c[i] * basis[i];
    gs -= c[i] * grid.trace(basis[i]);
  }

  // Proximal point iteration u <- argmin 1/2 |u - u_k|_T^2 + H (Phi(u) - <load, u>),
  // i.e. implicit steps of length H; every iterate keeps the gauge.
  const double H = 1e3 * relaxation_time(grid);
  SteadyState out;
  out.u = Field::Zero(grid.node_count());
  for (int k = 0; k < 200; ++k) {
    const Field w1 = out.u + H * fs;
    const BoundaryField w2 = grid.trace(out.u) + H * gs;
    StepSolution sol = solve_step(grid, model, 0.0, H, w1, w2, cfg, &out.u);
    const double du = (sol.u - out.u).lpNorm<Eigen::Infinity>();
    out.u = std::move(sol.u);
    out.iterations = k + 1;
    // Stationarity of Phi - <load, .>: T (u_k - u_{k+1}) / H.
    out.residual = du / H;
    if (du <= tol * (1.0 + out.u.lpNorm<Eigen::Infinity>())) break;
  }
  if (out.residual * H > tol * (1.0 + out.u.lpNorm<Eigen::Infinity>()) * 10.0) {
    std::ostringstream os;
    os << "steady state did not settle: last update " << out.residual * H;
    throw Error(ErrorCode::NonConverged, os.str());
  }
  // Clean rounding drift of the gauge.
  Eigen::VectorXd m(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) m[i] = basis[i].dot(grid.total_mass().cwiseProduct(out.u));
  const Eigen::VectorXd cu = kernel_coefficients(grid, basis, m);
  for (std::size_t i = 0; i < basis.size(); ++i) out.u -= cu[i] * basis[i];
  return out;
}

AsymptoticsReport asymptotics_check(const ProblemData& problem, int n, const StepConfig& cfg,
                                    std::optional<double> t_long, double tol) {
  const Grid& grid = problem.grid;
  ProblemData run = problem;
  run.T = t_long ? *t_long : 50.0 * relaxation_time(grid);
  // Sources must not depend on time.
  Field f = Field::Zero(grid.node_count());
  BoundaryField g = BoundaryField::Zero(grid.boundary_count());
  for (double s : {0.0, 0.37 * run.T, run.T}) {
    const Field fs = problem.f ? grid.sample_nodes([&](const Vec& x) { return problem.f(s, x); }) : f;
    const BoundaryField gs = problem.g ? grid.sample_boundary([&](const Vec& x) { return problem.g(s, x); }) : g;
    if (s == 0.0) {
      f = fs;
      g = gs;
    } else if ((fs - f).lpNorm<Eigen::Infinity>() > 0.0 || (gs.size() && (gs - g).lpNorm<Eigen::Infinity>() > 0.0)) {
      throw Error(ErrorCode::Inapplicable, "asymptotics need time-independent sources");
    }
  }
  AsymptoticsReport rep;
  const SteadyState ss = steady_state(grid, problem.model, f, g, cfg);
  rep.y_inf = equilibrium_limit(grid, ss.u, problem.y0);
  const Trajectory tr = run_flow(run, n, cfg);
  for (int m = 0; m <= tr.steps_count(); ++m) {
    const double d = grid.norm_domain(tr.y[m] - rep.y_inf);
    rep.t.push_back(tr.t[m]);
    rep.distance.push_back(d);
    if (rep.reached_at < 0 && d <= tol) rep.reached_at = m;
  }
  rep.final_distance = rep.distance.back();
  rep.eventually_decreasing = true;
  for (int m = tr.steps_count() / 2; m < tr.steps_count(); ++m)
    if (rep.distance[m + 1] > rep.distance[m] * (1.0 + 1e-9) + 1e-14) rep.eventually_decreasing = false;
  rep.pass = rep.eventually_decreasing && rep.final_distance <= tol;
  return rep;
}

}  // namespace wentzell
