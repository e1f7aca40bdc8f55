// Exact discrete TV step by a diagonally preconditioned primal-dual iteration
// (Chambolle-Pock with Pock-Chambolle step sizes). The returned field is the
// primal point generated by the dual iterate, u(p) = z - T^{-1} K' p, whose
// duality gap reduces to sum_c (a_c |K u(p)|_c - p_c . (K u(p))_c) and is
// computed without cancellation.

#include "wentzell/step_solver.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace wentzell {

namespace {

struct TvData {
  const Grid& grid;
  Eigen::VectorXd T;  // metric
  Eigen::VectorXd z;  // weighted data
  double a;           // rho h vol
};

// K' p with K the unweighted cell gradient.
Field apply_kt(const Grid& grid, const GradientField& p) { return grid.gradient_adjoint(p) / grid.cell_volume(); }

double gap_of(const TvData& d, const GradientField& p, const Field& u) {
  const GradientField q = d.grid.gradient(u);
  double gap = 0.0;
  for (int c = 0; c < q.rows(); ++c) gap += d.a * q.row(c).norm() - p.row(c).dot(q.row(c));
  return gap;
}

void project_ball(GradientField& p, double a) {
  for (int c = 0; c < p.rows(); ++c) {
    const double n = p.row(c).norm();
    if (n > a) p.row(c) *= a / n;
  }
}

}  // namespace

StepSolution tv_step(const Grid& grid, double rho, double h, const Field& w1, const BoundaryField& w2,
                     const StepConfig& cfg) {
  cfg.validate();
  if (!(rho > 0.0) || !(h > 0.0)) throw Error(ErrorCode::InvalidInput, "TV step needs rho > 0 and h > 0");
  if (w1.size() != grid.node_count() || w2.size() != grid.boundary_count())
    throw Error(ErrorCode::InvalidInput, "step data do not match the grid");
  const Eigen::VectorXd load =
      grid.node_mass().cwiseProduct(w1) + grid.trace_adjoint(grid.boundary_weights().cwiseProduct(w2));
  TvData d{grid, grid.total_mass(), Eigen::VectorXd(), rho * h * grid.cell_volume()};
  d.z = load.cwiseQuotient(d.T);
  const int dim = grid.dim();
  const int nc = grid.cell_count();
  const Eigen::MatrixXd& S = grid.stencil();

  // Step sizes: tau_i = 1 / sum_j |K_ji|, sigma_c = 1 / max_axis sum_i |K_(c,axis),i|.
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(grid.node_count());
  for (int c = 0; c < nc; ++c)
    for (int k = 0; k < S.cols(); ++k) tau[grid.cell_nodes(c)[k]] += S.col(k).cwiseAbs().sum();
  tau = tau.cwiseInverse();
  double row_sum = 0.0;
  for (int a = 0; a < dim; ++a) row_sum = std::max(row_sum, S.row(a).cwiseAbs().sum());
  const double sigma = 1.0 / row_sum;

  const double tmin = d.T.minCoeff();
  Field u = d.z;
  GradientField p = GradientField::Zero(nc, dim);
  Field up = d.z;
  double gap = gap_of(d, p, up);
  int it = 0;
  // Relative gap target, scaled by a bound on the TV term of the data.
  double hmin = grid.spacing(0);
  if (dim == 2) hmin = std::min(hmin, grid.spacing(1));
  const double tv_scale = d.a * nc * (d.z.maxCoeff() - d.z.minCoeff()) / hmin;
  // Floor at rounding level so near-constant data does not ask for a zero gap.
  const double noise =
      256.0 * std::numeric_limits<double>::epsilon() * d.a * nc * (1.0 + d.z.cwiseAbs().maxCoeff()) / hmin;
  const double target = std::max(cfg.primal_dual_tol * tv_scale, noise);
  while (gap > target && it < cfg.primal_dual_max_iterations) {
    for (int inner = 0; inner < 50; ++inner, ++it) {
      const Field kt = apply_kt(grid, p);
      Field un = (u - tau.cwiseProduct(kt) + tau.cwiseProduct(d.T.cwiseProduct(d.z)))
                     .cwiseQuotient((Eigen::VectorXd::Ones(u.size()) + tau.cwiseProduct(d.T)));
      const Field ubar = 2.0 * un - u;
      p += sigma * grid.gradient(ubar);
      project_ball(p, d.a);
      u = std::move(un);
    }
    up = d.z - apply_kt(grid, p).cwiseQuotient(d.T);
    gap = gap_of(d, p, up);
  }

  StepSolution sol;
  sol.u = up;
  sol.eta = p / (h * grid.cell_volume());
  sol.zero_section = GradientField::Zero(nc, dim);
  sol.iterations = it;
  sol.final_lambda = 0.0;
  // The gap bounds 1/2 |u - u*|_T^2, so this is an accuracy bound on u.
  sol.residual = std::sqrt(2.0 * std::max(gap, 0.0) / tmin);
  sol.converged = gap <= target;
  const FluxModel tv = FluxModel::total_variation(dim, rho);
  sol.objective = step_objective(grid, tv, 0.0, h, w1, w2, sol.u);
  sol.certificate = fenchel_certificate(grid, tv, 0.0, sol.u, sol.eta, &sol.min_cell_gap);
  sol.log.push_back({0.0, it, sol.objective, sol.residual, sol.converged});
  if (!sol.converged) {
    std::ostringstream os;
    os << "TV step did not converge: duality gap " << gap << " > " << target << " after " << it << " iterations";
    throw Error(ErrorCode::NonConverged, os.str());
  }
  return sol;
}

StepSolution tv_step(const Grid& grid, double rho, double h, const Field& prev, const StepConfig& cfg) {
  return tv_step(grid, rho, h, prev, grid.trace(prev), cfg);
}

}  // namespace wentzell
