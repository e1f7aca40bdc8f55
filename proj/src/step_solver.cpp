#include "wentzell/step_solver.hpp"

#include "minimizer.hpp"
#include "step_context.hpp"

#include <cmath>
#include <sstream>

namespace wentzell {

const char* to_string(Optimizer o) {
  switch (o) {
    case Optimizer::Auto: return "auto";
    case Optimizer::Newton: return "newton";
    case Optimizer::QuasiNewton: return "quasi_newton";
    case Optimizer::PrimalDual: return "primal_dual";
  }
  return "auto";
}

const char* to_string(Regularization r) {
  switch (r) {
    case Regularization::Auto: return "auto";
    case Regularization::Always: return "always";
    case Regularization::Never: return "never";
  }
  return "auto";
}

Optimizer optimizer_from_string(const std::string& s) {
  for (auto o : {Optimizer::Auto, Optimizer::Newton, Optimizer::QuasiNewton, Optimizer::PrimalDual})
    if (s == to_string(o)) return o;
  throw Error(ErrorCode::BadConfig, "unknown optimizer '" + s + "'");
}

Regularization regularization_from_string(const std::string& s) {
  for (auto r : {Regularization::Auto, Regularization::Always, Regularization::Never})
    if (s == to_string(r)) return r;
  throw Error(ErrorCode::BadConfig, "unknown regularization '" + s + "'");
}

void StepConfig::validate() const {
  std::ostringstream os;
  if (!(tol > 0.0)) os << "tol must be positive; ";
  if (!(lambda_min > 0.0)) os << "lambda_min must be positive; ";
  if (!(lambda0 > lambda_min)) os << "lambda0 must exceed lambda_min; ";
  if (!(decay > 0.0 && decay < 1.0)) os << "decay must lie in (0, 1); ";
  if (max_iterations < 1) os << "max_iterations must be positive; ";
  if (!(certificate_tol > 0.0)) os << "certificate_tol must be positive; ";
  if (primal_dual_max_iterations < 1) os << "primal_dual_max_iterations must be positive; ";
  if (!(primal_dual_tol > 0.0)) os << "primal_dual_tol must be positive; ";
  const std::string msg = os.str();
  if (!msg.empty()) throw Error(ErrorCode::BadConfig, "invalid step configuration: " + msg.substr(0, msg.size() - 2));
}

namespace detail {

StepContext::StepContext(const Grid& g, const FluxModel& m, double t_, double h_, const Field& w1,
                         const BoundaryField& w2)
    : grid(g), model(m), t(t_), h(h_) {
  if (!(h > 0.0)) throw Error(ErrorCode::InvalidInput, "step size must be positive");
  if (m.dim() != g.dim()) throw Error(ErrorCode::InvalidInput, "model and grid dimensions differ");
  if (w1.size() != g.node_count() || w2.size() != g.boundary_count())
    throw Error(ErrorCode::InvalidInput, "step data do not match the grid");
  if (!w1.allFinite() || !w2.allFinite()) throw Error(ErrorCode::InvalidInput, "step data are not finite");
  load = g.node_mass().cwiseProduct(w1) + g.trace_adjoint(g.boundary_weights().cwiseProduct(w2));
  metric = g.total_mass();
  const int nc = g.cell_count();
  centers.reserve(nc);
  xi0 = GradientField::Zero(nc, g.dim());
  for (int c = 0; c < nc; ++c) {
    centers.push_back(g.cell_center(c));
    xi0.row(c) = m.zero_section(t, centers.back()).transpose();
  }
  has_xi0 = xi0.cwiseAbs().maxCoeff() > 0.0;
  const double wmax = std::max(w1.lpNorm<Eigen::Infinity>(), w2.size() ? w2.lpNorm<Eigen::Infinity>() : 0.0);
  scale_hint = 1.0 + wmax;
}

double StepContext::fidelity(const Field& u) const { return 0.5 * metric.dot(u.cwiseAbs2()) - load.dot(u); }

double StepContext::value(const Field& u, double lambda, double nu) const {
  const GradientField q = grid.gradient(u);
  const double vol = grid.cell_volume();
  double s = 0.0;
  for (int c = 0; c < q.rows(); ++c) {
    const Vec r = q.row(c).transpose();
    const double jv = lambda > 0.0 ? model.moreau(t, centers[c], lambda, r) : model.potential(t, centers[c], r);
    s += h * jv + nu * r.squaredNorm();
    if (has_xi0) s += h * xi0.row(c).dot(q.row(c));
  }
  return fidelity(u) + vol * s;
}

double StepContext::eval(const Field& u, double lambda, double nu, Field& grad) const {
  const GradientField q = grid.gradient(u);
  const double vol = grid.cell_volume();
  GradientField flux(q.rows(), q.cols());
  double s = 0.0;
  for (int c = 0; c < q.rows(); ++c) {
    const Vec r = q.row(c).transpose();
    const auto loc = model.local(t, centers[c], r, lambda, false);
    s += h * loc.value + nu * r.squaredNorm();
    Vec f = h * loc.gradient + 2.0 * nu * r;
    if (has_xi0) {
      s += h * xi0.row(c).dot(q.row(c));
      f += h * xi0.row(c).transpose();
    }
    flux.row(c) = f.transpose();
  }
  grad = metric.cwiseProduct(u) - load + grid.gradient_adjoint(flux);
  return fidelity(u) + vol * s;
}

void StepContext::hessian(const Field& u, double lambda, double nu, Eigen::SparseMatrix<double>& H) const {
  const GradientField q = grid.gradient(u);
  const double vol = grid.cell_volume();
  const Eigen::MatrixXd& S = grid.stencil();
  const int nk = static_cast<int>(S.cols());
  const int dim = grid.dim();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(grid.node_count() + static_cast<std::size_t>(q.rows()) * nk * nk);
  for (int i = 0; i < grid.node_count(); ++i) trip.emplace_back(i, i, metric[i]);
  for (int c = 0; c < q.rows(); ++c) {
    const Vec r = q.row(c).transpose();
    Mat A = h * model.local(t, centers[c], r, lambda, true).hessian;
    A += 2.0 * nu * Mat::Identity(dim, dim);
    const Eigen::MatrixXd B = vol * S.transpose() * A * S;
    const auto& nodes = grid.cell_nodes(c);
    for (int a = 0; a < nk; ++a)
      for (int b = 0; b < nk; ++b) trip.emplace_back(nodes[a], nodes[b], B(a, b));
  }
  H.resize(grid.node_count(), grid.node_count());
  H.setFromTriplets(trip.begin(), trip.end());
}

GradientField StepContext::flux(const Field& u, double lambda) const {
  const GradientField q = grid.gradient(u);
  GradientField eta(q.rows(), q.cols());
  for (int c = 0; c < q.rows(); ++c) {
    const Vec r = q.row(c).transpose();
    eta.row(c) = (lambda > 0.0 ? model.yosida_flux(t, centers[c], lambda, r) : model.flux_select(t, centers[c], r))
                     .transpose();
  }
  return eta;
}

}  // namespace detail

namespace {

using detail::StepContext;

bool regularize(const FluxModel& model, const StepConfig& cfg) {
  switch (cfg.regularization) {
    case Regularization::Always: return true;
    case Regularization::Never: return false;
    case Regularization::Auto: break;
  }
  return !model.smooth();
}

std::vector<double> schedule(const StepConfig& cfg, bool reg) {
  if (!reg) return {0.0};
  std::vector<double> out;
  for (double l = cfg.lambda0; l > cfg.lambda_min; l *= cfg.decay) out.push_back(l);
  out.push_back(cfg.lambda_min);
  return out;
}

std::string describe(const std::vector<StageLog>& log) {
  std::ostringstream os;
  for (const auto& s : log)
    os << "\n  lambda=" << s.lambda << " iterations=" << s.iterations << " objective=" << s.objective
       << " residual=" << s.residual << (s.converged ? "" : " (not converged)");
  return os.str();
}

StepSolution solve_impl(const StepContext& ctx, const StepConfig& cfg, const Field* start, bool nonnegative) {
  cfg.validate();
  const bool reg = regularize(ctx.model, cfg);
  Optimizer opt = cfg.optimizer;
  if (opt == Optimizer::Auto) opt = Optimizer::Newton;
  if (opt == Optimizer::PrimalDual)
    throw Error(ErrorCode::BadConfig, "the primal-dual optimizer applies to total-variation steps only");
  if (opt == Optimizer::QuasiNewton && nonnegative)
    throw Error(ErrorCode::BadConfig, "obstacle steps need the Newton optimizer");

  Field u = start ? *start : Field(ctx.load.cwiseQuotient(ctx.metric));
  if (u.size() != ctx.grid.node_count()) throw Error(ErrorCode::InvalidInput, "start field does not match the grid");
  if (nonnegative) u = u.cwiseMax(0.0);

  StepSolution sol;
  detail::MinimizeOptions mo;
  mo.tol = cfg.tol * ctx.scale_hint;
  mo.max_iterations = cfg.max_iterations;
  mo.nonnegative = nonnegative;
  const auto lambdas = schedule(cfg, reg);
  detail::MinimizeResult res;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const double lambda = lambdas[k];
    const double nu = (reg && cfg.viscosity) ? lambda : 0.0;
    detail::SmoothObjective f;
    f.eval = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return ctx.eval(x, lambda, nu, g); };
    f.value = [&](const Eigen::VectorXd& x) { return ctx.value(x, lambda, nu); };
    f.hessian = [&](const Eigen::VectorXd& x, Eigen::SparseMatrix<double>& H) { ctx.hessian(x, lambda, nu, H); };
    f.scale = ctx.metric;
    res = opt == Optimizer::QuasiNewton ? detail::minimize_lbfgs(f, u, mo) : detail::minimize_newton(f, u, mo);
    u = res.x;
    sol.log.push_back({lambda, res.iterations, res.value, res.residual, res.converged});
    sol.iterations += res.iterations;
  }
  sol.u = u;
  sol.final_lambda = lambdas.back();
  sol.residual = res.residual;
  sol.converged = res.converged;
  if (!sol.converged) {
    std::ostringstream os;
    os << "step did not converge: residual " << res.residual << " > " << mo.tol << describe(sol.log);
    throw Error(ErrorCode::NonConverged, os.str());
  }
  sol.eta = ctx.flux(u, sol.final_lambda);
  sol.zero_section = ctx.xi0;
  sol.objective = ctx.value(u, 0.0, 0.0);
  sol.certificate = fenchel_certificate(ctx.grid, ctx.model, ctx.t, u, sol.eta, &sol.min_cell_gap);
  if (nonnegative) {
    // Complementarity of the unconstrained stationarity at the exact lambda.
    Field g;
    ctx.eval(u, sol.final_lambda, (reg && cfg.viscosity) ? sol.final_lambda : 0.0, g);
    double comp = 0.0;
    for (int i = 0; i < u.size(); ++i) {
      const double gi = g[i] / ctx.metric[i];
      comp = std::max(comp, std::min(std::abs(u[i]), std::abs(gi)));
      if (u[i] <= 0.0) comp = std::max(comp, -gi);
    }
    sol.complementarity = comp;
  }
  if (sol.certificate > cfg.certificate_tol) {
    std::ostringstream os;
    os << "Fenchel certificate " << sol.certificate << " exceeds " << cfg.certificate_tol;
    throw Error(ErrorCode::NonConverged, os.str());
  }
  return sol;
}

}  // namespace

double step_objective(const Grid& grid, const FluxModel& model, double t, double h, const Field& w1,
                      const BoundaryField& w2, const Field& u) {
  return StepContext(grid, model, t, h, w1, w2).value(u, 0.0, 0.0);
}

double regularized_objective(const Grid& grid, const FluxModel& model, double t, double h, double lambda,
                             const Field& w1, const BoundaryField& w2, const Field& u, bool viscosity) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidInput, "lambda must be positive");
  return StepContext(grid, model, t, h, w1, w2).value(u, lambda, viscosity ? lambda : 0.0);
}

Field regularized_gradient(const Grid& grid, const FluxModel& model, double t, double h, double lambda,
                           const Field& w1, const BoundaryField& w2, const Field& u, bool viscosity) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidInput, "lambda must be positive");
  Field g;
  StepContext(grid, model, t, h, w1, w2).eval(u, lambda, viscosity ? lambda : 0.0, g);
  return g;
}

StepSolution solve_step(const Grid& grid, const FluxModel& model, double t, double h, const Field& w1,
                        const BoundaryField& w2, const StepConfig& cfg, const Field* start) {
  const bool primal_dual = cfg.optimizer == Optimizer::PrimalDual ||
                           (cfg.optimizer == Optimizer::Auto && model.kind() == FluxKind::TotalVariation &&
                            cfg.regularization != Regularization::Always);
  if (primal_dual) {
    if (model.kind() != FluxKind::TotalVariation)
      throw Error(ErrorCode::BadConfig, "the primal-dual optimizer applies to total-variation steps only");
    if (model.dim() != grid.dim()) throw Error(ErrorCode::InvalidInput, "model and grid dimensions differ");
    return tv_step(grid, model.tv_weight(), h, w1, w2, cfg);
  }
  return solve_impl(StepContext(grid, model, t, h, w1, w2), cfg, start, false);
}

StepSolution solve_step_obstacle(const Grid& grid, const FluxModel& model, double t, double h, const Field& w1,
                                 const BoundaryField& w2, const StepConfig& cfg, const Field* start) {
  return solve_impl(StepContext(grid, model, t, h, w1, w2), cfg, start, true);
}

double fenchel_certificate(const Grid& grid, const FluxModel& model, double t, const Field& u,
                           const GradientField& eta, double* min_cell_gap) {
  const GradientField q = grid.gradient(u);
  if (eta.rows() != q.rows() || eta.cols() != q.cols()) throw Error(ErrorCode::InvalidInput, "flux does not match grid");
  double total = 0.0, lo = std::numeric_limits<double>::infinity();
  for (int c = 0; c < q.rows(); ++c) {
    const double gap =
        model.fenchel_gap(t, grid.cell_center(c), q.row(c).transpose(), eta.row(c).transpose());
    total += gap;
    lo = std::min(lo, gap);
  }
  if (min_cell_gap) *min_cell_gap = q.rows() ? lo : 0.0;
  return grid.cell_volume() * total;
}

double weak_form_residual(const Grid& grid, double h, const Field& w1, const BoundaryField& w2,
                          const StepSolution& sol) {
  GradientField flux = sol.eta;
  if (sol.zero_section.size() == flux.size()) flux += sol.zero_section;
  const Field load = grid.node_mass().cwiseProduct(w1) + grid.trace_adjoint(grid.boundary_weights().cwiseProduct(w2));
  const Field r = grid.total_mass().cwiseProduct(sol.u) + h * grid.gradient_adjoint(flux) - load;
  return r.cwiseQuotient(grid.total_mass()).lpNorm<Eigen::Infinity>();
}

}  // namespace wentzell
