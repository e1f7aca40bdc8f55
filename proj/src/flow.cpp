#include "wentzell/flow.hpp"

#include <cmath>
#include <sstream>

namespace wentzell {

std::vector<double> StabilityQuantities::as_vector() const {
  return {max_norm_domain, max_norm_boundary, gradient_sum, rate_domain, rate_boundary, energy_sum};
}

const std::vector<const char*>& StabilityQuantities::names() {
  static const std::vector<const char*> n = {"max_norm_domain", "max_norm_boundary", "gradient_sum",
                                             "rate_domain",     "rate_boundary",     "energy_sum"};
  return n;
}

namespace {

void check_problem(const ProblemData& p) {
  if (p.y0.size() != p.grid.node_count()) throw Error(ErrorCode::InvalidInput, "y0 does not match the grid");
  if (!p.y0.allFinite()) throw Error(ErrorCode::InvalidInput, "y0 is not finite");
  if (!(p.T > 0.0) || !std::isfinite(p.T)) throw Error(ErrorCode::InvalidInput, "horizon T must be positive");
  if (p.model.dim() != p.grid.dim()) throw Error(ErrorCode::InvalidInput, "model and grid dimensions differ");
}

double norm_sq(const Grid& g, const Field& y) {
  const BoundaryField b = g.trace(y);
  return g.node_mass().dot(y.cwiseAbs2()) + g.boundary_weights().dot(b.cwiseAbs2());
}

double potential_integral(const Grid& grid, const FluxModel& model, double t, const Field& y) {
  const GradientField q = grid.gradient(y);
  double s = 0.0;
  for (int c = 0; c < q.rows(); ++c) s += model.potential(t, grid.cell_center(c), q.row(c).transpose());
  return grid.cell_volume() * s;
}

}  // namespace

Trajectory run_flow(const ProblemData& problem, int n, const StepConfig& cfg, const FlowOptions& opt) {
  check_problem(problem);
  if (n < 1) throw Error(ErrorCode::InvalidInput, "step count must be at least 1");
  cfg.validate();
  const Grid& grid = problem.grid;
  Trajectory tr{.grid = grid, .model = problem.model};
  tr.h = problem.T / n;
  tr.T = problem.T;
  tr.obstacle = opt.obstacle;
  tr.t.reserve(n + 1);
  tr.y.reserve(n + 1);
  tr.t.push_back(0.0);
  tr.y.push_back(problem.y0);
  tr.eta.push_back(GradientField::Zero(grid.cell_count(), grid.dim()));
  tr.steps.emplace_back();
  tr.f_avg.push_back(Field::Zero(grid.node_count()));
  tr.g_avg.push_back(BoundaryField::Zero(grid.boundary_count()));
  const double h = tr.h;

  for (int i = 0; i < n; ++i) {
    const double t1 = (i + 1) * h;
    Field fi = problem.f ? time_average(problem.f, i + 1, h, grid) : Field(Field::Zero(grid.node_count()));
    BoundaryField gi = problem.g ? time_average_boundary(problem.g, i + 1, h, grid)
                                 : BoundaryField(BoundaryField::Zero(grid.boundary_count()));
    if (fi.cwiseAbs().maxCoeff() > 0.0 || (gi.size() && gi.cwiseAbs().maxCoeff() > 0.0)) tr.sources_zero = false;
    const Field& y = tr.y.back();
    const Field w1 = y + h * fi;
    const BoundaryField w2 = grid.trace(y) + h * gi;
    StepSolution sol;
    try {
      sol = opt.obstacle ? solve_step_obstacle(grid, problem.model, t1, h, w1, w2, cfg, &y)
                         : solve_step(grid, problem.model, t1, h, w1, w2, cfg, &y);
    } catch (const Error& e) {
      std::ostringstream os;
      os << "step " << i + 1 << " (t = " << t1 << "): " << e.what();
      throw Error(e.code(), os.str());
    }
    StepRecord rec;
    rec.certificate = sol.certificate;
    rec.min_cell_gap = sol.min_cell_gap;
    rec.residual = sol.residual;
    rec.weak_form_residual = opt.obstacle ? 0.0 : weak_form_residual(grid, h, w1, w2, sol);
    rec.complementarity = sol.complementarity;
    rec.iterations = sol.iterations;
    tr.t.push_back(t1);
    tr.y.push_back(std::move(sol.u));
    tr.eta.push_back(std::move(sol.eta));
    tr.steps.push_back(rec);
    tr.f_avg.push_back(std::move(fi));
    tr.g_avg.push_back(std::move(gi));
    if (opt.on_step) opt.on_step(i + 1, t1, tr.y.back());
  }
  tr.diagnostics = stability_report(tr);
  return tr;
}

DiagnosticsRecord stability_report(const Trajectory& tr) {
  const Grid& grid = tr.grid;
  const FluxModel& model = tr.model;
  const int n = tr.steps_count();
  const double h = tr.h;
  const double p = model.norm_exponent();
  DiagnosticsRecord d;
  StabilityQuantities& q = d.totals;
  double src = 0.0;
  for (int i = 0; i <= n; ++i) {
    const Field& y = tr.y[i];
    const BoundaryField b = grid.trace(y);
    d.norm_sq.push_back(norm_sq(grid, y));
    d.energy.push_back(energy(grid, model, tr.t[i], y));
    if (i == 0) continue;
    q.max_norm_domain = std::max(q.max_norm_domain, grid.norm_domain(y));
    q.max_norm_boundary = std::max(q.max_norm_boundary, grid.norm_boundary(b));
    q.gradient_sum += h * grid.gradient_power(grid.gradient(y), p);
    const Field dy = (y - tr.y[i - 1]) / h;
    q.rate_domain += h * grid.norm_domain(dy) * grid.norm_domain(dy);
    const double rb = grid.norm_boundary(grid.trace(dy));
    q.rate_boundary += h * rb * rb;
    q.energy_sum += h * potential_integral(grid, model, tr.t[i], y);
    const double fn = grid.norm_domain(tr.f_avg[i]);
    const double gn = grid.norm_boundary(tr.g_avg[i]);
    src += h * (fn * fn + gn * gn);
  }
  const double c10 = model.growth().coercivity == Coercivity::Strong ? std::abs(model.growth().c1_0) : 0.0;
  d.c0 = src + d.norm_sq[0] + 2.0 * tr.T * c10 * grid.domain_measure();
  d.gronwall_bound = 2.0 * std::exp(tr.T) * (d.norm_sq[0] + d.c0);
  d.pass = true;
  for (double v : d.norm_sq) {
    const double ratio = d.gronwall_bound > 0.0 ? v / d.gronwall_bound : (v > 0.0 ? HUGE_VAL : 0.0);
    d.worst_ratio = std::max(d.worst_ratio, ratio);
    if (v > d.gronwall_bound * (1.0 + 1e-12)) d.pass = false;
  }
  return d;
}

double space_time_exponent(const FluxModel& model) {
  const auto& g = model.growth();
  if (g.coercivity != Coercivity::Strong) return 1.0;
  return g.p >= 2.0 ? 2.0 : g.p;
}

double space_time_distance(const Trajectory& coarse, const Trajectory& fine, double r) {
  if (coarse.grid.node_count() != fine.grid.node_count())
    throw Error(ErrorCode::InvalidInput, "trajectories live on different grids");
  const double ratio = coarse.h / fine.h;
  const int k = static_cast<int>(std::lround(ratio));
  if (k < 1 || std::abs(ratio - k) > 1e-9 * ratio)
    throw Error(ErrorCode::InvalidInput, "fine step must divide the coarse step");
  if (std::abs(coarse.T - fine.T) > 1e-12 * coarse.T) throw Error(ErrorCode::InvalidInput, "horizons differ");
  const Eigen::VectorXd& mass = fine.grid.node_mass();
  double s = 0.0;
  for (int m = 1; m <= fine.steps_count(); ++m) {
    const int mc = (m + k - 1) / k;
    const Eigen::VectorXd diff = (coarse.y[mc] - fine.y[m]).cwiseAbs();
    s += fine.h * mass.dot(diff.array().pow(r).matrix());
  }
  return std::pow(s, 1.0 / r);
}

ConvergenceTable convergence_study(const ProblemData& problem, const std::vector<double>& h_list,
                                   const StepConfig& cfg) {
  if (h_list.size() < 2) throw Error(ErrorCode::InvalidInput, "convergence study needs at least two step sizes");
  ConvergenceTable table;
  table.h = h_list;
  table.r = space_time_exponent(problem.model);
  std::vector<Trajectory> runs;
  for (std::size_t k = 0; k < h_list.size(); ++k) {
    const double h = h_list[k];
    const double nn = problem.T / h;
    const int n = static_cast<int>(std::lround(nn));
    if (!(h > 0.0) || n < 1 || std::abs(nn - n) > 1e-9 * nn)
      throw Error(ErrorCode::InvalidInput, "T / h must be a positive integer for every h");
    if (k > 0 && std::abs(h_list[k - 1] / h - 2.0) > 1e-9)
      throw Error(ErrorCode::InvalidInput, "consecutive step sizes must halve");
    runs.push_back(run_flow(problem, n, cfg));
  }
  for (std::size_t k = 0; k + 1 < runs.size(); ++k)
    table.difference.push_back(space_time_distance(runs[k], runs[k + 1], table.r));
  table.decreasing = true;
  for (std::size_t k = 1; k < table.difference.size(); ++k) {
    table.order.push_back(std::log2(table.difference[k - 1] / table.difference[k]));
    if (!(table.difference[k] < table.difference[k - 1])) table.decreasing = false;
  }
  return table;
}

ContractionReport contraction_report(const Trajectory& a, const Trajectory& b, double tol) {
  if (a.steps_count() != b.steps_count() || a.grid.node_count() != b.grid.node_count())
    throw Error(ErrorCode::InvalidInput, "trajectories are not comparable");
  const Grid& grid = a.grid;
  ContractionReport rep;
  double data = norm_sq(grid, a.y[0] - b.y[0]);
  for (int m = 0; m <= a.steps_count(); ++m) {
    if (m > 0) {
      const double df = grid.norm_domain(a.f_avg[m] - b.f_avg[m]);
      const double dg = grid.norm_boundary(a.g_avg[m] - b.g_avg[m]);
      if (df > 0.0 || dg > 0.0) rep.sources_perturbed = true;
      data += a.h * (df * df + dg * dg);
    }
    const double dist = norm_sq(grid, a.y[m] - b.y[m]);
    rep.t.push_back(a.t[m]);
    rep.distance_sq.push_back(dist);
    rep.data_sq.push_back(data);
    double ratio = 0.0;
    if (data > 0.0) ratio = dist / data;
    else if (dist > 0.0) ratio = HUGE_VAL;
    rep.empirical_c = std::max(rep.empirical_c, ratio);
  }
  rep.pass = rep.sources_perturbed ? std::isfinite(rep.empirical_c) : rep.empirical_c <= 1.0 + tol;
  return rep;
}

ContractionReport contraction_check(const ProblemData& problem, const ProblemData& perturbed, int n,
                                    const StepConfig& cfg, double tol) {
  if (problem.grid.node_count() != perturbed.grid.node_count() || problem.T != perturbed.T)
    throw Error(ErrorCode::InvalidInput, "perturbed problem must share grid and horizon");
  return contraction_report(run_flow(problem, n, cfg), run_flow(perturbed, n, cfg), tol);
}

}  // namespace wentzell
