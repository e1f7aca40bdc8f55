#pragma once

// Convex scalar profiles phi: R -> [0, inf) with phi(0) = 0 and 0 in the
// subdifferential at 0. Every catalog potential is a sum of these per axis or
// a single one applied to |r|.

#include "wentzell/flux_model.hpp"

#include <algorithm>
#include <vector>

namespace wentzell::detail {

struct Slopes {
  double left;
  double right;
};

struct ProxResult {
  double z;
  /// z sits on a kink and r is strictly inside the flat response interval,
  /// so dz/dr = 0.
  bool pinned;
};

class ScalarLaw {
 public:
  virtual ~ScalarLaw() = default;

  virtual double value(double t, const Vec& x, double s) const = 0;
  virtual Slopes slopes(double t, const Vec& x, double s) const = 0;
  /// phi''(s); +infinity at kinks and where the second derivative blows up.
  virtual double curvature(double t, const Vec& x, double s) const = 0;
  /// Points where phi is not differentiable.
  virtual std::vector<double> kinks(double, const Vec&) const { return {}; }
  /// sup of the slopes over R (+infinity for superlinear growth).
  virtual double slope_bound(double t, const Vec& x) const;

  virtual ProxResult prox(double t, const Vec& x, double lambda, double r) const;
  /// (r - prox(r)) / lambda.
  virtual double yosida(double t, const Vec& x, double lambda, double r) const {
    return (r - prox(t, x, lambda, r).z) / lambda;
  }
  virtual double conjugate(double t, const Vec& x, double w) const;

  /// Minimal-norm element of [left, right] at s.
  double select(double t, const Vec& x, double s) const;
};

/// Solution of z + lambda dphi(z) containing r by kink detection and
/// safeguarded Newton on the smooth pieces.
ProxResult generic_prox(const ScalarLaw& law, double t, const Vec& x, double lambda, double r);
/// sup_s (w s - phi(s)) by inverting the monotone subdifferential.
double generic_conjugate(const ScalarLaw& law, double t, const Vec& x, double w);

class QuadraticLaw final : public ScalarLaw {
 public:
  double value(double, const Vec&, double s) const override { return 0.5 * s * s; }
  Slopes slopes(double, const Vec&, double s) const override { return {s, s}; }
  double curvature(double, const Vec&, double) const override { return 1.0; }
  ProxResult prox(double, const Vec&, double lambda, double r) const override {
    return {r / (1.0 + lambda), false};
  }
  double conjugate(double, const Vec&, double w) const override { return 0.5 * w * w; }
};

/// alpha |s|^p / p + kappa log(1 + |s|).
class PowerLaw final : public ScalarLaw {
 public:
  PowerLaw(Coefficient alpha, double p, double kappa)
      : alpha_(std::move(alpha)), p_(p), kappa_(kappa) {}

  double value(double t, const Vec& x, double s) const override;
  Slopes slopes(double t, const Vec& x, double s) const override;
  double curvature(double t, const Vec& x, double s) const override;
  std::vector<double> kinks(double, const Vec&) const override;
  ProxResult prox(double t, const Vec& x, double lambda, double r) const override;
  double conjugate(double t, const Vec& x, double w) const override;

 private:
  Coefficient alpha_;
  double p_;
  double kappa_;
};

/// alpha |s|^p / p + [s > theta] (s^p - theta^p) / p, theta >= 0.
class FracturedLaw final : public ScalarLaw {
 public:
  FracturedLaw(Coefficient alpha, double p, double threshold)
      : alpha_(std::move(alpha)), p_(p), threshold_(threshold) {}

  double value(double t, const Vec& x, double s) const override;
  Slopes slopes(double t, const Vec& x, double s) const override;
  double curvature(double t, const Vec& x, double s) const override;
  std::vector<double> kinks(double, const Vec&) const override;

 private:
  Coefficient alpha_;
  double p_;
  double threshold_;
};

/// a |s| log(1 + |s|).
class LogGrowthLaw final : public ScalarLaw {
 public:
  explicit LogGrowthLaw(Coefficient a) : a_(std::move(a)) {}

  double value(double t, const Vec& x, double s) const override;
  Slopes slopes(double t, const Vec& x, double s) const override;
  double curvature(double t, const Vec& x, double s) const override;

 private:
  double coefficient(double t, const Vec& x) const;
  Coefficient a_;
};

/// rho |s|.
class AbsLaw final : public ScalarLaw {
 public:
  explicit AbsLaw(double rho) : rho_(rho) {}

  double value(double, const Vec&, double s) const override;
  Slopes slopes(double, const Vec&, double s) const override;
  double curvature(double, const Vec&, double s) const override;
  std::vector<double> kinks(double, const Vec&) const override { return {0.0}; }
  double slope_bound(double, const Vec&) const override { return rho_; }
  ProxResult prox(double, const Vec&, double lambda, double r) const override;
  // Clamped directly: r - prox(r) cancels badly for |r| >> lambda rho.
  double yosida(double, const Vec&, double lambda, double r) const override {
    return std::clamp(r / lambda, -rho_, rho_);
  }
  double conjugate(double, const Vec&, double w) const override;

 private:
  double rho_;
};

/// User profile with phi(0) and phi'(0) subtracted.
class CustomScalarLaw final : public ScalarLaw {
 public:
  CustomScalarLaw(CustomLaw law, int axis) : law_(std::move(law)), axis_(axis) {}

  double value(double t, const Vec& x, double s) const override;
  Slopes slopes(double t, const Vec& x, double s) const override;
  double curvature(double t, const Vec& x, double s) const override;
  double zero_slope(double t, const Vec& x) const;

 private:
  CustomLaw law_;
  int axis_;
};

}  // namespace wentzell::detail
