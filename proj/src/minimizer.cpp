#include "minimizer.hpp"

#include "wentzell/types.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <deque>
#include <limits>

namespace wentzell::detail {

namespace {

constexpr double kArmijo = 1e-4;

Eigen::VectorXd project(Eigen::VectorXd x, bool nonnegative) {
  if (nonnegative) x = x.cwiseMax(0.0);
  return x;
}

// Accept a trial value; the slack absorbs rounding once the decrease is below
// the resolution of the objective.
bool sufficient_decrease(double f_new, double f, double slope) {
  const double slack = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f));
  return f_new <= f + kArmijo * slope + slack;
}

}  // namespace

double stationarity(const Eigen::VectorXd& x, const Eigen::VectorXd& g, const Eigen::VectorXd& scale,
                    bool nonnegative) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double ri = g[i] / scale[i];
    if (nonnegative) ri = x[i] - std::max(0.0, x[i] - ri);
    r = std::max(r, std::abs(ri));
  }
  return r;
}

MinimizeResult minimize_newton(const SmoothObjective& f, Eigen::VectorXd x0, const MinimizeOptions& opt) {
  const Eigen::Index n = x0.size();
  MinimizeResult out;
  out.x = project(std::move(x0), opt.nonnegative);
  Eigen::VectorXd g(n);
  double fx = f.eval(out.x, g);
  Eigen::SparseMatrix<double> H;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;
  std::vector<char> active(n, 0);

  for (int it = 0;; ++it) {
    out.residual = stationarity(out.x, g, f.scale, opt.nonnegative);
    out.iterations = it;
    if (out.residual <= opt.tol) {
      out.converged = true;
      break;
    }
    if (it >= opt.max_iterations) break;

    f.hessian(out.x, H);
    Eigen::VectorXd rhs = -g;
    if (opt.nonnegative) {
      // Bertsekas' projected Newton: coordinates at the bound whose gradient
      // pushes outward are moved by a diagonally scaled gradient step.
      const double eps = std::min(1e-3, out.residual);
      for (Eigen::Index i = 0; i < n; ++i) active[i] = out.x[i] <= eps && g[i] > 0.0;
      for (int k = 0; k < H.outerSize(); ++k)
        for (Eigen::SparseMatrix<double>::InnerIterator itr(H, k); itr; ++itr)
          if (itr.row() != itr.col() && (active[itr.row()] || active[itr.col()])) itr.valueRef() = 0.0;
    }
    if (!analyzed) {
      ldlt.analyzePattern(H);
      analyzed = true;
    }
    ldlt.factorize(H);
    Eigen::VectorXd d;
    if (ldlt.info() == Eigen::Success) d = ldlt.solve(rhs);
    if (d.size() != n || !d.allFinite() || g.dot(d) >= 0.0) d = -g.cwiseQuotient(f.scale);

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = fx;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = project(out.x + alpha * d, opt.nonnegative);
      f_new = f.value(x_new);
      if (std::isfinite(f_new) && sufficient_decrease(f_new, fx, g.dot(x_new - out.x))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    const double moved = (x_new - out.x).lpNorm<Eigen::Infinity>();
    if (!accepted || moved <= 4.0 * std::numeric_limits<double>::epsilon() * (1.0 + out.x.lpNorm<Eigen::Infinity>())) {
      if (accepted) {
        out.x = x_new;
        fx = f.eval(out.x, g);
        out.residual = stationarity(out.x, g, f.scale, opt.nonnegative);
        out.converged = out.residual <= opt.tol;
      }
      out.stagnated = true;
      out.iterations = it + 1;
      break;
    }
    out.x = std::move(x_new);
    fx = f.eval(out.x, g);
  }
  out.value = fx;
  return out;
}

MinimizeResult minimize_lbfgs(const SmoothObjective& f, Eigen::VectorXd x0, const MinimizeOptions& opt) {
  if (opt.nonnegative) throw Error(ErrorCode::BadConfig, "the quasi-Newton optimizer does not support bound constraints");
  const Eigen::Index n = x0.size();
  MinimizeResult out;
  out.x = std::move(x0);
  Eigen::VectorXd g(n), g_new(n);
  double fx = f.eval(out.x, g);
  std::deque<Eigen::VectorXd> S, Y;
  std::deque<double> rho;
  const Eigen::VectorXd inv_scale = f.scale.cwiseInverse();

  for (int it = 0;; ++it) {
    out.residual = stationarity(out.x, g, f.scale, false);
    out.iterations = it;
    if (out.residual <= opt.tol) {
      out.converged = true;
      break;
    }
    if (it >= opt.max_iterations) break;

    // Two-loop recursion with the diagonal metric as initial inverse Hessian.
    Eigen::VectorXd q = g;
    std::vector<double> a(S.size());
    for (int k = static_cast<int>(S.size()) - 1; k >= 0; --k) {
      a[k] = rho[k] * S[k].dot(q);
      q -= a[k] * Y[k];
    }
    double gamma = 1.0;
    if (!S.empty()) {
      const Eigen::VectorXd& s = S.back();
      const Eigen::VectorXd& y = Y.back();
      gamma = s.dot(y) / y.cwiseProduct(inv_scale).dot(y);
    }
    Eigen::VectorXd d = gamma * q.cwiseProduct(inv_scale);
    for (std::size_t k = 0; k < S.size(); ++k) {
      const double b = rho[k] * Y[k].dot(d);
      d += S[k] * (a[k] - b);
    }
    d = -d;
    if (g.dot(d) >= 0.0) {
      d = -g.cwiseProduct(inv_scale);
      S.clear();
      Y.clear();
      rho.clear();
    }

    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = fx;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = out.x + alpha * d;
      f_new = f.eval(x_new, g_new);
      if (std::isfinite(f_new) && sufficient_decrease(f_new, fx, alpha * g.dot(d))) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted || (x_new - out.x).lpNorm<Eigen::Infinity>() <=
                         4.0 * std::numeric_limits<double>::epsilon() * (1.0 + out.x.lpNorm<Eigen::Infinity>())) {
      out.stagnated = true;
      break;
    }
    Eigen::VectorXd s = x_new - out.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-16 * s.norm() * y.norm()) {
      S.push_back(std::move(s));
      Y.push_back(std::move(y));
      rho.push_back(1.0 / sy);
      if (static_cast<int>(S.size()) > opt.lbfgs_memory) {
        S.pop_front();
        Y.pop_front();
        rho.pop_front();
      }
    }
    out.x = std::move(x_new);
    g = g_new;
    fx = f_new;
  }
  out.value = fx;
  return out;
}

}  // namespace wentzell::detail
