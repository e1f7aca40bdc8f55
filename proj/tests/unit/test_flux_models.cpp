#include "support/catalog.hpp"
#include "wentzell/oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace wentzell;
using wentzell::testing::catalog;
using wentzell::testing::Sampler;

namespace {

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
const Vec x1 = Vec::Constant(1, 0.5);

}  // namespace

TEST_CASE("potential examples") {
  CHECK(FluxModel::quadratic(1).potential(0, x1, v1(3)) == doctest::Approx(4.5));
  // Pinned normalization alpha |r|^p / p.
  CHECK(FluxModel::p_laplacian(1, 4, {1.0}).potential(0, x1, v1(2)) == doctest::Approx(4.0));
  for (int dim : {1, 2})
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name);
      CHECK(m.potential(0.3, Vec::Constant(dim, 0.4), Vec::Zero(dim)) == 0.0);
    }
  CHECK(FluxModel::log_growth(1, 2.0).potential(0, x1, v1(-1)) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(FluxModel::total_variation(2, 2.0).potential(0, Vec::Zero(2), v2(3.0, 4.0)) == doctest::Approx(10.0));
}

TEST_CASE("potential rejects bad input") {
  const auto m = FluxModel::quadratic(1);
  CHECK_THROWS_AS(m.potential(0, x1, v1(NAN)), Error);
  CHECK_THROWS_AS(FluxModel::log_growth(1, 0.0), Error);
  CHECK_THROWS_AS(FluxModel::log_growth(1, -1.0), Error);
  CHECK_THROWS_AS(FluxModel::p_laplacian(1, 1.0, {1.0}), Error);
  CHECK_THROWS_AS(FluxModel::fractured(1, 2.0, {1.0}, {-0.1}), Error);
  CHECK_THROWS_AS(FluxModel::total_variation(1, 0.0), Error);
  // kappa log(1 + |r|) must not overpower the power term.
  CHECK_THROWS_AS(FluxModel::p_laplacian(1, 2.0, {1.0}, {1.5}), Error);
  CHECK_NOTHROW(FluxModel::p_laplacian(1, 2.0, {1.0}, {1.0}));
  CHECK_THROWS_AS(FluxModel::p_laplacian(1, 4.0, {1.0}, {0.1}), Error);
}

TEST_CASE("flux selection examples") {
  CHECK(FluxModel::quadratic(1).flux_select(0, x1, v1(3))[0] == doctest::Approx(3));
  const auto tv = FluxModel::total_variation(1, 1.0);
  CHECK(tv.flux_select(0, x1, v1(0))[0] == 0.0);
  CHECK(tv.flux_select(0, x1, v1(0.5))[0] == doctest::Approx(1.0));
  // Minimal-norm element of the filled fracture jump at r = threshold.
  const auto fr = FluxModel::fractured(1, 2.0, {1.0}, {0.5});
  CHECK(fr.flux_select(0, x1, v1(0.5))[0] == doctest::Approx(0.5));
  CHECK(fr.flux_select(0, x1, v1(0.6))[0] == doctest::Approx(1.2));
  CHECK(fr.flux_select(0, x1, v1(-0.6))[0] == doctest::Approx(-0.6));
}

TEST_CASE("subgradient inequality on samples") {
  Sampler s(11);
  for (int dim : {1, 2})
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name << " dim " << dim);
      double worst = 0.0;
      for (int k = 0; k < 300; ++k) {
        const double t = s.uniform(0, 1);
        const Vec x = s.point(dim), r = s.vector(dim), rb = s.vector(dim);
        const Vec eta = m.flux_select(t, x, r);
        const double j = m.potential(t, x, r), jb = m.potential(t, x, rb);
        worst = std::max(worst, j + eta.dot(rb - r) - jb - 1e-10 * (1.0 + std::abs(jb)));
      }
      CHECK(worst <= 0.0);
    }
}

TEST_CASE("normalization, convexity and monotonicity on samples") {
  Sampler s(12);
  for (int dim : {1, 2})
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name << " dim " << dim);
      for (int k = 0; k < 200; ++k) {
        const double t = s.uniform(0, 1), th = s.uniform(0, 1);
        const Vec x = s.point(dim), r = s.vector(dim), rb = s.vector(dim);
        const double j = m.potential(t, x, r), jb = m.potential(t, x, rb);
        REQUIRE(j >= 0.0);
        const double mid = m.potential(t, x, th * r + (1 - th) * rb);
        REQUIRE(mid <= th * j + (1 - th) * jb + 1e-10 * (1 + j + jb));
        const double mono = (m.flux_select(t, x, r) - m.flux_select(t, x, rb)).dot(r - rb);
        REQUIRE(mono >= -1e-10 * (1 + j + jb));
      }
    }
}

TEST_CASE("conjugate examples and grid-sup oracle") {
  const auto q = FluxModel::quadratic(1);
  CHECK(q.conjugate(0, x1, v1(3)) == doctest::Approx(4.5));
  CHECK(oracles::conjugate_1d([](double s) { return 0.5 * s * s; }, 3.0, 20.0) == doctest::Approx(4.5).epsilon(1e-9));
  for (const auto& [name, m] : catalog(1)) {
    INFO(name);
    CHECK(m.conjugate(0.2, x1, v1(0)) == doctest::Approx(0.0).scale(1.0));
  }
  const auto tv = FluxModel::total_variation(1, 1.0);
  CHECK(std::isinf(tv.conjugate(0, x1, v1(2))));
  CHECK(tv.conjugate(0, x1, v1(0.9)) == 0.0);
  CHECK_THROWS_AS(tv.fenchel_gap(0, x1, v1(1), v1(2)), Error);
  try {
    tv.fenchel_gap(0, x1, v1(1), v1(2));
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Unbounded);
  }

  // Superlinear 1D models against the grid sup of w s - j(s).
  Sampler s(5);
  for (const auto& [name, m] : catalog(1)) {
    if (name == "tv" || name == "custom logcosh" || name == "plaplacian p=2 kappa") continue;
    INFO(name);
    for (int k = 0; k < 10; ++k) {
      const double t = s.uniform(0, 1), w = s.uniform(-4, 4);
      const Vec x = s.point(1);
      auto j = [&](double r) { return m.potential(t, x, v1(r)); };
      const double ref = oracles::conjugate_1d(j, w, 40.0);
      CHECK(m.conjugate(t, x, v1(w)) == doctest::Approx(ref).epsilon(1e-7).scale(1.0));
    }
  }
  // Linear growth: finite only below the slope bound.
  const auto lc = FluxModel::custom(1, wentzell::testing::logcosh_law());
  CHECK(std::isfinite(lc.conjugate(0, x1, v1(0.5))));
  CHECK(std::isinf(lc.conjugate(0, x1, v1(1.5))));
  const double ref = 0.5 * std::atanh(0.5) - std::log(std::cosh(std::atanh(0.5)));
  CHECK(lc.conjugate(0, x1, v1(0.5)) == doctest::Approx(ref).epsilon(1e-9));
}

TEST_CASE("resolvent, Yosida flux and Moreau envelope examples") {
  const auto q = FluxModel::quadratic(1);
  CHECK(q.resolvent(0, x1, 1.0, v1(2))[0] == doctest::Approx(1.0));
  CHECK(q.yosida_flux(0, x1, 1.0, v1(2))[0] == doctest::Approx(1.0));
  const auto tv = FluxModel::total_variation(1, 1.0);
  CHECK(tv.resolvent(0, x1, 0.5, v1(2))[0] == doctest::Approx(1.5));
  CHECK(tv.yosida_flux(0, x1, 0.5, v1(0.2))[0] == doctest::Approx(0.4));
  CHECK(tv.yosida_flux(0, x1, 0.5, v1(2))[0] == doctest::Approx(1.0));
  CHECK(tv.moreau(0, x1, 0.5, v1(2)) == doctest::Approx(1.75));
  CHECK(tv.moreau(0, x1, 0.5, v1(0.2)) == doctest::Approx(0.04));
  CHECK(oracles::prox_1d([](double s) { return std::abs(s); }, 0.5, 2.0) == doctest::Approx(1.5).epsilon(1e-7));
  CHECK(oracles::prox_1d([](double s) { return std::abs(s); }, 0.5, 0.2) == doctest::Approx(0.0).scale(1.0));
  CHECK(oracles::prox_1d([](double s) { return 0.5 * s * s; }, 1.0, 2.0) == doctest::Approx(1.0).epsilon(1e-7));
  for (int dim : {1, 2})
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name);
      CHECK(m.resolvent(0.1, Vec::Constant(dim, 0.3), 0.7, Vec::Zero(dim)).norm() == 0.0);
      CHECK(m.moreau(0.1, Vec::Constant(dim, 0.3), 0.7, Vec::Zero(dim)) == 0.0);
    }
  CHECK_THROWS_AS(q.resolvent(0, x1, 0.0, v1(1)), Error);
}

TEST_CASE("resolvent matches the golden-section prox in 1D") {
  Sampler s(21);
  for (const auto& [name, m] : catalog(1)) {
    INFO(name);
    for (int k = 0; k < 40; ++k) {
      const double t = s.uniform(0, 1), lam = std::exp(s.uniform(std::log(1e-3), std::log(10.0)));
      const Vec x = s.point(1);
      const double r = s.vector(1)[0];
      auto j = [&](double z) { return m.potential(t, x, v1(z)); };
      const double ref = oracles::prox_1d(j, lam, r, 1e-13);
      CHECK(m.resolvent(t, x, lam, v1(r))[0] == doctest::Approx(ref).epsilon(1e-7).scale(1.0));
    }
  }
}

TEST_CASE("Moreau envelope properties on samples") {
  Sampler s(31);
  for (int dim : {1, 2})
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name << " dim " << dim);
      for (int k = 0; k < 100; ++k) {
        const double t = s.uniform(0, 1);
        const Vec x = s.point(dim), r = s.vector(dim, 1e-2, 5.0), rb = s.vector(dim, 1e-2, 5.0);
        const double j = m.potential(t, x, r);
        double prev = -1.0;
        for (double lam : {1.0, 1e-1, 1e-2, 1e-3}) {
          const double jl = m.moreau(t, x, lam, r);
          REQUIRE(jl <= j + 1e-12 * (1 + j));
          REQUIRE(jl >= prev - 1e-12 * (1 + j));
          prev = jl;
        }
        // Three decades of lambda close the gap to j.
        REQUIRE(std::abs(m.moreau(t, x, 1e-6, r) - j) <= 1e-4 * (1 + j));
        const double lam = 0.3;
        const Vec z = m.resolvent(t, x, lam, r), zb = m.resolvent(t, x, lam, rb);
        REQUIRE((z - zb).norm() <= (r - rb).norm() * (1 + 1e-10) + 1e-14);
        const Vec yf = m.yosida_flux(t, x, lam, r);
        const Eigen::VectorXd fd = oracles::fd_gradient(
            [&](const Eigen::VectorXd& q) { return m.moreau(t, x, lam, Vec(q)); }, Eigen::VectorXd(r), 1e-6);
        REQUIRE((fd - Eigen::VectorXd(yf)).lpNorm<Eigen::Infinity>() <= 1e-5 * (1 + yf.norm()));
        // Yosida flux is 1/lambda Lipschitz.
        REQUIRE((yf - m.yosida_flux(t, x, lam, rb)).norm() <= (r - rb).norm() / lam * (1 + 1e-10) + 1e-12);
      }
    }
}

TEST_CASE("Fenchel gap examples and equality case") {
  const auto q = FluxModel::quadratic(1);
  CHECK(q.fenchel_gap(0, x1, v1(3), v1(3)) == doctest::Approx(0.0).scale(1.0));
  CHECK(q.fenchel_gap(0, x1, v1(3), v1(1)) == doctest::Approx(2.0));
  CHECK(FluxModel::total_variation(1, 1.0).fenchel_gap(0, x1, v1(2), v1(1)) == doctest::Approx(0.0).scale(1.0));
  Sampler s(41);
  for (int dim : {1, 2})
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name);
      for (int k = 0; k < 100; ++k) {
        const double t = s.uniform(0, 1);
        const Vec x = s.point(dim), r = s.vector(dim, 1e-2, 5.0);
        const Vec eta = m.flux_select(t, x, r);
        CHECK(std::abs(m.fenchel_gap(t, x, r, eta)) <= 1e-8 * (1 + m.potential(t, x, r)));
        const Vec w = eta + s.vector(dim, 1e-3, 0.5);
        const double jw = m.conjugate(t, x, w);
        if (!std::isfinite(jw)) continue;
        CHECK(m.fenchel_gap(t, x, r, w) >= -1e-10);
      }
    }
}

TEST_CASE("growth constants") {
  SampleSpec spec;
  spec.x_min = Vec::Zero(1);
  spec.x_max = Vec::Ones(1);
  const auto q = FluxModel::quadratic(1);
  CHECK(q.growth().c1 == 0.5);
  CHECK(q.growth().c2 == 0.5);
  CHECK(growth_check(q, spec).pass);
  const auto p4 = FluxModel::p_laplacian(1, 4, {1.0});
  CHECK(p4.growth().c1 == doctest::Approx(0.25));
  CHECK(p4.growth().c2 == doctest::Approx(0.25));
  CHECK(growth_check(p4, spec).pass);
  const auto lg = growth_check(FluxModel::log_growth(1, 1.0), spec);
  CHECK_FALSE(lg.pass);
  CHECK(lg.weakly_coercive_only);
  CHECK(growth_check(FluxModel::total_variation(1, 1.0), spec).singular);
  for (int dim : {1, 2}) {
    SampleSpec sp;
    sp.x_min = Vec::Zero(dim);
    sp.x_max = Vec::Ones(dim);
    for (const auto& [name, m] : catalog(dim)) {
      if (m.growth().coercivity != Coercivity::Strong) continue;
      INFO(name << " dim " << dim);
      const auto rep = growth_check(m, sp);
      CHECK(rep.pass);
      CHECK(rep.lower_violation <= 1e-8);
      CHECK(rep.upper_violation <= 1e-8);
      CHECK(rep.selection_violation <= 1e-8);
    }
  }
}

TEST_CASE("time regularity and symmetry at infinity") {
  Sampler s(51);
  for (const auto& [name, m] : catalog(1)) {
    if (!m.time_dependent()) continue;
    INFO(name);
    const double L = m.time_lipschitz();
    CHECK(L > 0.0);
    for (int k = 0; k < 200; ++k) {
      const double t = s.uniform(0, 1), u = s.uniform(0, 1);
      const Vec x = s.point(1), r = s.vector(1);
      const double jt = m.potential(t, x, r);
      CHECK(jt <= m.potential(u, x, r) + L * std::abs(t - u) * jt + 1e-12 * (1 + jt));
    }
  }
  const auto lg = FluxModel::log_growth(2, 1.0);
  const auto& g = lg.growth();
  for (int k = 0; k < 100; ++k) {
    const Vec x = s.point(2), r = s.vector(2);
    CHECK(lg.potential(0, x, r) <= g.gamma1 * lg.potential(0, x, -r) + g.gamma2 + 1e-12);
  }
}

TEST_CASE("zero section of the lower-order term") {
  const auto m = FluxModel::p_laplacian(1, 2.0, {1.0}, {}, {0.3});
  CHECK(m.zero_section(0, x1)[0] == doctest::Approx(0.3));
  CHECK(m.potential(0, x1, v1(0)) == 0.0);
  CHECK(m.potential(0, x1, v1(-2)) == doctest::Approx(2.0));
}

TEST_CASE("local model of the Moreau envelope") {
  Sampler s(61);
  for (int dim : {1, 2})
    for (const auto& [name, m] : catalog(dim)) {
      INFO(name);
      for (int k = 0; k < 20; ++k) {
        const double t = s.uniform(0, 1), lam = 0.05;
        const Vec x = s.point(dim), r = s.vector(dim, 1e-2, 3.0);
        const auto loc = m.local(t, x, r, lam, true);
        CHECK(loc.value == doctest::Approx(m.moreau(t, x, lam, r)));
        CHECK((loc.gradient - m.yosida_flux(t, x, lam, r)).norm() <= 1e-9 * (1 + loc.gradient.norm()));
        // Hessian against differences of the Yosida flux.
        for (int a = 0; a < dim; ++a) {
          Vec rp = r, rm = r;
          rp[a] += 1e-6;
          rm[a] -= 1e-6;
          const Vec col = (m.yosida_flux(t, x, lam, rp) - m.yosida_flux(t, x, lam, rm)) / 2e-6;
          CHECK((loc.hessian.col(a) - col).norm() <= 1e-4 * (1 + col.norm()));
        }
      }
    }
}

TEST_CASE("catalog identifiers") {
  CHECK(FluxModel::quadratic(1).id() == "quadratic");
  CHECK(FluxModel::p_laplacian(1, 3, {1.0}).id() == "plaplacian");
  CHECK(FluxModel::fractured(1, 2, {1.0}, {0.1}).id() == "fractured");
  CHECK(FluxModel::log_growth(1, 1.0).id() == "loggrowth");
  CHECK(FluxModel::total_variation(1, 1.0).id() == "tv");
  CHECK_FALSE(FluxModel::total_variation(1, 1.0).smooth());
  CHECK(FluxModel::p_laplacian(1, 4, {1.0}).smooth());
  CHECK_FALSE(FluxModel::p_laplacian(1, 1.5, {1.0}).smooth());
}
