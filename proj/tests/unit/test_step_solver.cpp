#include "support/catalog.hpp"
#include "wentzell/oracles.hpp"
#include "wentzell/step_solver.hpp"

#include <doctest.h>

#include <cmath>

using namespace wentzell;
using wentzell::testing::catalog;
using wentzell::testing::Sampler;

namespace {

Field random_field(Sampler& s, int n, double amp = 1.0) {
  Field f(n);
  for (auto& v : f) v = s.uniform(-amp, amp);
  return f;
}

double product_norm_sq(const Grid& g, const Field& u) {
  const BoundaryField b = g.trace(u);
  return g.node_mass().dot(u.cwiseAbs2()) + g.boundary_weights().dot(b.cwiseAbs2());
}

}  // namespace

TEST_CASE("step objective examples") {
  const Grid g = Grid::interval(2);
  const auto q = FluxModel::quadratic(1);
  CHECK(step_objective(g, q, 0, 0.1, Field::Zero(3), BoundaryField::Zero(2), Field::Zero(3)) == 0.0);
  const double c = 1.7;
  const double phi = step_objective(g, q, 0, 0.1, Field::Constant(3, c), BoundaryField::Constant(2, c),
                                    Field::Constant(3, c));
  CHECK(phi == doctest::Approx(-0.5 * c * c * (g.domain_measure() + g.boundary_measure())));
}

TEST_CASE("step objective coercivity floor") {
  Sampler s(3);
  for (int dim : {1, 2}) {
    const Grid g = dim == 1 ? Grid::interval(12) : Grid::rectangle(5, 4);
    for (const auto& [name, m] : catalog(dim)) {
      const auto& gr = m.growth();
      if (gr.coercivity != Coercivity::Strong) continue;
      INFO(name);
      for (int k = 0; k < 20; ++k) {
        const double h = s.uniform(0.01, 1.0);
        const Field u = random_field(s, g.node_count(), 3.0), w1 = random_field(s, g.node_count(), 2.0);
        const BoundaryField w2 = random_field(s, g.boundary_count(), 2.0);
        const double phi = step_objective(g, m, 0.3, h, w1, w2, u);
        const double floor = 0.25 * g.norm_domain(u) * g.norm_domain(u) +
                             h * gr.c1 * g.gradient_power(g.gradient(u), gr.p) +
                             0.25 * std::pow(g.norm_boundary(g.trace(u)), 2) + h * gr.c1_0 * g.domain_measure() -
                             4.0 * std::pow(g.norm_domain(w1), 2) - 4.0 * std::pow(g.norm_boundary(w2), 2);
        CHECK(phi >= floor - 1e-12 * (1 + std::abs(phi)));
      }
    }
  }
}

TEST_CASE("regularized objective") {
  const Grid g = Grid::interval(10);
  Sampler s(4);
  const Field w1 = random_field(s, g.node_count()), u = random_field(s, g.node_count(), 2.0);
  const BoundaryField w2 = random_field(s, 2);
  for (const auto& [name, m] : catalog(1)) {
    INFO(name);
    CHECK(regularized_objective(g, m, 0, 0.1, 0.3, Field::Zero(11), BoundaryField::Zero(2), Field::Zero(11)) == 0.0);
    const double phi = step_objective(g, m, 0.2, 0.1, w1, w2, u);
    double prev = -HUGE_VAL;
    for (double lam : {1e-1, 1e-2, 1e-3}) {
      const double pl = regularized_objective(g, m, 0.2, 0.1, lam, w1, w2, u, false);
      CHECK(pl <= phi + 1e-12);
      CHECK(pl >= prev - 1e-12);
      prev = pl;
    }
  }
  // Quadratic: the Moreau envelope of |r|^2/2 is |r|^2 / (2 (1 + lambda)).
  const auto q = FluxModel::quadratic(1);
  const double lam = 0.4, h = 0.3;
  const double grad2 = g.gradient_power(g.gradient(u), 2.0);
  const double fid = step_objective(g, q, 0, h, w1, w2, u) - h * 0.5 * grad2;
  CHECK(regularized_objective(g, q, 0, h, lam, w1, w2, u, false) ==
        doctest::Approx(fid + h * 0.5 * grad2 / (1 + lam)));
  CHECK(regularized_objective(g, q, 0, h, lam, w1, w2, u, true) ==
        doctest::Approx(fid + h * 0.5 * grad2 / (1 + lam) + lam * grad2));
}

TEST_CASE("analytic gradient of the regularized objective") {
  Sampler s(5);
  for (int dim : {1, 2}) {
    const Grid g = dim == 1 ? Grid::interval(8) : Grid::rectangle(4, 3);
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name << " dim " << dim);
      for (int k = 0; k < 10; ++k) {
        const double lam = std::exp(s.uniform(std::log(1e-3), 0.0)), h = s.uniform(0.05, 0.5);
        const Field w1 = random_field(s, g.node_count()), u = random_field(s, g.node_count(), 2.0);
        const BoundaryField w2 = random_field(s, g.boundary_count());
        const Field an = regularized_gradient(g, m, 0.4, h, lam, w1, w2, u);
        const Eigen::VectorXd fd = oracles::fd_gradient(
            [&](const Eigen::VectorXd& v) { return regularized_objective(g, m, 0.4, h, lam, w1, w2, v); }, u, 1e-6);
        CHECK((an - fd).lpNorm<Eigen::Infinity>() <= 1e-5 * (1.0 + an.lpNorm<Eigen::Infinity>()));
      }
    }
  }
}

TEST_CASE("constants are fixed points of every model") {
  for (int dim : {1, 2}) {
    const Grid g = dim == 1 ? Grid::interval(8) : Grid::rectangle(4, 4);
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name << " dim " << dim);
      const double c = -0.75;
      const auto sol = solve_step(g, m, 0.5, 0.2, Field::Constant(g.node_count(), c),
                                  BoundaryField::Constant(g.boundary_count(), c));
      CHECK((sol.u.array() - c).abs().maxCoeff() <= 1e-10);
      CHECK(sol.eta.cwiseAbs().maxCoeff() <= 1e-8);
    }
  }
}

TEST_CASE("quadratic step equals the dense linear solve") {
  Sampler s(6);
  for (int n : {4, 16, 64}) {
    const Grid g = Grid::interval(n);
    const Field w1 = random_field(s, g.node_count());
    const BoundaryField w2 = random_field(s, 2);
    const auto sol = solve_step(g, FluxModel::quadratic(1), 0, 0.05, w1, w2);
    CHECK((sol.u - oracles::dense_linear_step(g, 0.05, w1, w2)).lpNorm<Eigen::Infinity>() <= 1e-10);
    CHECK(sol.final_lambda == 0.0);
  }
  const Grid g = Grid::rectangle(8, 8);
  const Field w1 = random_field(s, g.node_count());
  const BoundaryField w2 = random_field(s, g.boundary_count());
  const auto sol = solve_step(g, FluxModel::quadratic(2), 0, 0.05, w1, w2);
  CHECK((sol.u - oracles::dense_linear_step(g, 0.05, w1, w2)).lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("solutions satisfy the weak form and the Fenchel certificate") {
  Sampler s(7);
  for (int dim : {1, 2}) {
    const Grid g = dim == 1 ? Grid::interval(16) : Grid::rectangle(6, 5);
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name << " dim " << dim);
      const Field w1 = random_field(s, g.node_count());
      const BoundaryField w2 = random_field(s, g.boundary_count());
      const double h = 0.1;
      const StepConfig cfg;
      const auto sol = solve_step(g, m, 0.3, h, w1, w2, cfg);
      CHECK(sol.converged);
      CHECK(sol.min_cell_gap >= -1e-10);
      CHECK(sol.certificate <= cfg.certificate_tol);
      // Regularized solves satisfy the weak form once the viscosity term
      // 2 nu K'grad u (nu = final lambda) is put back.
      if (sol.final_lambda == 0.0) {
        CHECK(weak_form_residual(g, h, w1, w2, sol) <= 1e-8);
      } else {
        const Field load = g.node_mass().cwiseProduct(w1) + g.trace_adjoint(g.boundary_weights().cwiseProduct(w2));
        const Field r = g.total_mass().cwiseProduct(sol.u) +
                        g.gradient_adjoint(h * (sol.eta + sol.zero_section) + 2.0 * sol.final_lambda * g.gradient(sol.u)) -
                        load;
        CHECK(r.cwiseQuotient(g.total_mass()).lpNorm<Eigen::Infinity>() <= 1e-8);
        // Without it the defect is bounded by the viscous flux.
        const double visc = 2.0 * sol.final_lambda * g.gradient(sol.u).cwiseAbs().maxCoeff() * 4.0 * dim /
                            std::min(g.spacing(0), g.spacing(dim - 1));
        CHECK(weak_form_residual(g, h, w1, w2, sol) <= visc + 1e-8);
      }
      // Uniqueness: a different start reaches the same minimizer.
      const Field start = random_field(s, g.node_count(), 3.0);
      const auto again = solve_step(g, m, 0.3, h, w1, w2, cfg, &start);
      CHECK((again.u - sol.u).lpNorm<Eigen::Infinity>() <= 1e-7);
    }
  }
}

TEST_CASE("continuation decreases the true objective") {
  const Grid g = Grid::interval(16);
  Sampler s(8);
  const Field w1 = random_field(s, g.node_count());
  const BoundaryField w2 = random_field(s, 2);
  for (const auto& [name, m] : catalog(1)) {
    if (m.smooth()) continue;
    INFO(name);
    StepConfig cfg;
    cfg.optimizer = Optimizer::Newton;
    cfg.regularization = Regularization::Always;
    cfg.certificate_tol = 1.0;
    double prev = HUGE_VAL;
    // Truncating the default schedule after k stages.
    for (int k = 1; k <= 10; ++k) {
      cfg.lambda_min = std::pow(0.25, k);
      const auto sol = solve_step(g, m, 0, 0.1, w1, w2, cfg);
      const double phi = step_objective(g, m, 0, 0.1, w1, w2, sol.u);
      CHECK(phi <= prev + 1e-9 * (1 + std::abs(phi)));
      prev = phi;
    }
  }
}

TEST_CASE("step map is a contraction in the product norm") {
  Sampler s(9);
  for (int dim : {1, 2}) {
    const Grid g = dim == 1 ? Grid::interval(12) : Grid::rectangle(4, 4);
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name);
      const Field a = random_field(s, g.node_count()), b = random_field(s, g.node_count());
      const BoundaryField ga = g.trace(a), gb = g.trace(b);
      const auto ua = solve_step(g, m, 0.1, 0.2, a, ga), ub = solve_step(g, m, 0.1, 0.2, b, gb);
      CHECK(product_norm_sq(g, ua.u - ub.u) <= product_norm_sq(g, a - b) + 1e-10);
    }
  }
}

TEST_CASE("quasi-Newton and forced regularization agree with Newton") {
  const Grid g = Grid::interval(16);
  Sampler s(10);
  const Field w1 = random_field(s, g.node_count());
  const BoundaryField w2 = random_field(s, 2);
  const auto m = FluxModel::p_laplacian(1, 3.0, {1.0});
  const auto ref = solve_step(g, m, 0, 0.1, w1, w2);
  StepConfig q;
  q.optimizer = Optimizer::QuasiNewton;
  q.max_iterations = 5000;
  CHECK((solve_step(g, m, 0, 0.1, w1, w2, q).u - ref.u).lpNorm<Eigen::Infinity>() <= 1e-7);
  StepConfig r;
  r.regularization = Regularization::Always;
  CHECK((solve_step(g, m, 0, 0.1, w1, w2, r).u - ref.u).lpNorm<Eigen::Infinity>() <= 1e-4);
  // The TV route can also run through the regularized Newton path.
  const auto tv = FluxModel::total_variation(1, 0.5);
  StepConfig nt;
  nt.optimizer = Optimizer::Newton;
  const auto a = solve_step(g, tv, 0, 0.1, w1, w2);
  const auto b = solve_step(g, tv, 0, 0.1, w1, w2, nt);
  CHECK((a.u - b.u).lpNorm<Eigen::Infinity>() <= 1e-4);
}

TEST_CASE("configuration and convergence errors") {
  const Grid g = Grid::interval(8);
  const Field w1 = Field::LinSpaced(9, -5, 5);
  const BoundaryField w2 = g.trace(w1);
  StepConfig bad;
  bad.lambda0 = 1e-8;
  CHECK_THROWS_AS(solve_step(g, FluxModel::total_variation(1, 1), 0, 0.1, w1, w2, bad), Error);
  try {
    bad.validate();
    FAIL("expected BadConfig");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadConfig);
  }
  StepConfig decay;
  decay.decay = 1.0;
  CHECK_THROWS_AS(decay.validate(), Error);
  StepConfig pd;
  pd.optimizer = Optimizer::PrimalDual;
  CHECK_THROWS_AS(solve_step(g, FluxModel::quadratic(1), 0, 0.1, w1, w2, pd), Error);
  StepConfig starve;
  starve.max_iterations = 1;
  try {
    solve_step(g, FluxModel::p_laplacian(1, 4.0, {1.0}), 0, 10.0, w1, w2, starve);
    FAIL("expected NonConverged");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonConverged);
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
  CHECK(optimizer_from_string("quasi_newton") == Optimizer::QuasiNewton);
  CHECK(regularization_from_string("never") == Regularization::Never);
  CHECK_THROWS_AS(optimizer_from_string("simplex"), Error);
}

TEST_CASE("obstacle steps") {
  const Grid g = Grid::interval(8);
  const auto q = FluxModel::quadratic(1);
  // Inactive constraint.
  const auto a = solve_step_obstacle(g, q, 0, 0.1, Field::Constant(9, 0.4), BoundaryField::Constant(2, 0.4));
  CHECK((a.u.array() - 0.4).abs().maxCoeff() <= 1e-12);
  // Fully active constraint.
  const auto b = solve_step_obstacle(g, q, 0, 0.1, Field::Constant(9, -1), BoundaryField::Constant(2, -1));
  CHECK(b.u.cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(b.complementarity <= 1e-9);
  // Mixed signs against projected gradient.
  Sampler s(12);
  for (const auto& m : {q, FluxModel::p_laplacian(1, 4.0, {1.0}), FluxModel::fractured(1, 3.0, {1.0}, {0.0})}) {
    for (int k = 0; k < 5; ++k) {
      const Field w1 = random_field(s, 9);
      const BoundaryField w2 = random_field(s, 2);
      const auto sol = solve_step_obstacle(g, m, 0, 0.1, w1, w2);
      const Field ref = oracles::projected_gradient_obstacle(g, m, 0, 0.1, w1, w2);
      CHECK(sol.u.minCoeff() >= -1e-12);
      CHECK(sol.complementarity <= 1e-6);
      CHECK((sol.u - ref).lpNorm<Eigen::Infinity>() <= 1e-8);
    }
  }
  // A nonsmooth obstacle step still respects the constraint.
  const auto tv = solve_step_obstacle(g, FluxModel::total_variation(1, 0.5), 0, 0.1, Field::LinSpaced(9, -1, 1),
                                      BoundaryField::Zero(2));
  CHECK(tv.u.minCoeff() >= -1e-12);
  CHECK(tv.complementarity <= 1e-6);
}

TEST_CASE("TV steps") {
  const Grid g = Grid::interval(20);
  const Field c = Field::Constant(21, 0.3);
  CHECK((tv_step(g, 1.0, 0.1, c).u - c).cwiseAbs().maxCoeff() <= 1e-12);
  // A large weight collapses to the weighted mean of the data.
  const Field step = g.sample_nodes([](const Vec& x) { return x[0] < 0.5 ? 0.0 : 1.0; });
  const auto big = tv_step(g, 100.0, 1.0, step);
  const double mean = g.total_mass().dot(step) / g.total_mass().sum();
  CHECK((big.u.array() - mean).abs().maxCoeff() <= 1e-9);
  // Small weight: against the plateau oracle, with decreasing objective and TV.
  const auto small = tv_step(g, 0.5, 0.1, step);
  const Field ref = oracles::tv_prox_1d(g, step, g.trace(step), 0.05);
  CHECK((small.u - ref).lpNorm<Eigen::Infinity>() <= 1e-8);
  auto tv = [&](const Field& u) { return g.cell_volume() * g.gradient(u).cwiseAbs().sum(); };
  CHECK(tv(small.u) <= tv(step) + 1e-12);
  const auto m = FluxModel::total_variation(1, 0.5);
  CHECK(step_objective(g, m, 0, 0.1, step, g.trace(step), small.u) <=
        step_objective(g, m, 0, 0.1, step, g.trace(step), step));
  // Two plateaus approach each other by an amount fixed by the weight.
  const double jump = small.u[20] - small.u[0];
  CHECK(jump < 1.0);
  CHECK(jump > 0.0);
  // Boundary fidelity differing from the interior data.
  BoundaryField w2(2);
  w2 << 0.8, -0.4;
  const auto bd = tv_step(g, 0.3, 0.2, step, w2);
  CHECK((bd.u - oracles::tv_prox_1d(g, step, w2, 0.06)).lpNorm<Eigen::Infinity>() <= 1e-8);
  CHECK(bd.certificate <= 1e-6);
  CHECK(bd.min_cell_gap >= -1e-10);
}

TEST_CASE("TV steps in 2D") {
  const Grid g = Grid::rectangle(6, 6);
  const Field disk = g.sample_nodes([](const Vec& x) { return std::hypot(x[0] - 0.5, x[1] - 0.5) < 0.3 ? 1.0 : 0.0; });
  const auto sol = tv_step(g, 0.5, 0.1, disk);
  CHECK(sol.certificate <= 1e-6);
  CHECK(sol.min_cell_gap >= -1e-10);
  // Total weighted mass is preserved by the step.
  CHECK(g.total_mass().dot(sol.u) == doctest::Approx(g.total_mass().dot(disk)).epsilon(1e-10));
}
