#pragma once

// Catalog instances and random sampling shared by the test suites.

#include "wentzell/flux_model.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace wentzell::testing {

struct NamedModel {
  std::string name;
  FluxModel model;
};

inline CustomLaw logcosh_law() {
  CustomLaw law;
  law.value = [](double, const Vec&, int, double s) { return std::abs(s) + std::log1p(std::exp(-2.0 * std::abs(s))); };
  law.slope = [](double, const Vec&, int, double s) { return std::tanh(s); };
  law.curvature = [](double, const Vec&, int, double s) {
    const double c = std::cosh(s);
    return 1.0 / (c * c);
  };
  law.growth.coercivity = Coercivity::Weak;
  law.growth.p = 1.0;
  return law;
}

/// Every catalog kind, with nonsmooth and lower-order variants.
inline std::vector<NamedModel> catalog(int dim) {
  const Coefficient varying([](double t, const Vec& x) { return 1.5 + 0.5 * std::sin(t + x[0]); }, 1.0, 2.0, 0.5);
  const std::vector<Coefficient> anisotropic =
      dim == 1 ? std::vector<Coefficient>{1.0} : std::vector<Coefficient>{1.0, 2.0};
  return {
      {"quadratic", FluxModel::quadratic(dim)},
      {"plaplacian p=4", FluxModel::p_laplacian(dim, 4.0, anisotropic)},
      {"plaplacian p=3 varying", FluxModel::p_laplacian(dim, 3.0, {varying})},
      {"plaplacian p=1.5", FluxModel::p_laplacian(dim, 1.5, {1.0})},
      {"plaplacian p=2 kappa", FluxModel::p_laplacian(dim, 2.0, {1.0}, {0.5})},
      {"fractured p=2", FluxModel::fractured(dim, 2.0, {1.0}, {0.5})},
      {"fractured p=3", FluxModel::fractured(dim, 3.0, {1.0}, {0.0})},
      {"loggrowth", FluxModel::log_growth(dim, 1.0)},
      {"tv", FluxModel::total_variation(dim, 0.7)},
      {"custom logcosh", FluxModel::custom(dim, logcosh_law())},
  };
}

class Sampler {
 public:
  explicit Sampler(std::uint64_t seed) : rng_(seed) {}
  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  /// Log-uniform radius in [lo, hi] times a random sign per axis.
  Vec vector(int dim, double lo = 1e-2, double hi = 10.0) {
    Vec r(dim);
    for (int i = 0; i < dim; ++i) {
      const double mag = std::exp(uniform(std::log(lo), std::log(hi)));
      r[i] = uniform(0.0, 1.0) < 0.5 ? -mag : mag;
    }
    return r;
  }
  Vec point(int dim) {
    Vec x(dim);
    for (int i = 0; i < dim; ++i) x[i] = uniform(0.0, 1.0);
    return x;
  }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace wentzell::testing
