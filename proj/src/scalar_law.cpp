#include "scalar_law.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wentzell::detail {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int sign(double s) { return (s > 0.0) - (s < 0.0); }

// Root of a nondecreasing function G on [lo, hi] with G(lo) <= 0 <= G(hi).
// Newton steps are taken when they stay inside the bracket, otherwise the
// interval is bisected. Runs until the bracket collapses to a few ulps.
template <class G, class DG>
double safeguarded_root(G&& g, DG&& dg, double lo, double hi) {
  double z = 0.5 * (lo + hi);
  for (int it = 0; it < 400; ++it) {
    const double gz = g(z);
    if (gz == 0.0) return z;
    if (gz < 0.0) lo = z; else hi = z;
    if (!(hi - lo > 4.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(lo), std::abs(hi))))
      break;
    const double d = dg(z);
    double next = (std::isfinite(d) && d > 0.0) ? z - gz / d : std::numeric_limits<double>::quiet_NaN();
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == z) break;
    z = next;
  }
  return z;
}

}  // namespace

double ScalarLaw::slope_bound(double, const Vec&) const { return kInf; }

double ScalarLaw::select(double t, const Vec& x, double s) const {
  const Slopes sl = slopes(t, x, s);
  if (sl.left <= 0.0 && sl.right >= 0.0) return 0.0;
  return sl.left > 0.0 ? sl.left : sl.right;
}

ProxResult ScalarLaw::prox(double t, const Vec& x, double lambda, double r) const {
  return generic_prox(*this, t, x, lambda, r);
}

double ScalarLaw::conjugate(double t, const Vec& x, double w) const {
  return generic_conjugate(*this, t, x, w);
}

ProxResult generic_prox(const ScalarLaw& law, double t, const Vec& x, double lambda, double r) {
  // z + lambda dphi(z) is strictly increasing and contains 0 at z = 0, so the
  // solution lies between 0 and r.
  double lo = std::min(0.0, r);
  double hi = std::max(0.0, r);
  auto kinks = law.kinks(t, x);
  std::sort(kinks.begin(), kinks.end());
  for (double k : kinks) {
    const Slopes sl = law.slopes(t, x, k);
    const double a = k + lambda * sl.left;
    const double b = k + lambda * sl.right;
    if (r >= a && r <= b) return {k, r > a && r < b};
    if (b < r) lo = std::max(lo, k);
    if (a > r) hi = std::min(hi, k);
  }
  if (lo == hi) return {lo, false};
  const double z = safeguarded_root(
      [&](double s) { return s + lambda * law.slopes(t, x, s).right - r; },
      [&](double s) { return 1.0 + lambda * law.curvature(t, x, s); }, lo, hi);
  return {z, false};
}

double generic_conjugate(const ScalarLaw& law, double t, const Vec& x, double w) {
  if (w == 0.0) return 0.0;
  const int sg = sign(w);
  const double aw = std::abs(w);
  if (aw > law.slope_bound(t, x)) return kInf;
  // Work on the half line s * sg >= 0 where the maximizer lives.
  auto slope = [&](double s) {
    const Slopes sl = law.slopes(t, x, sg * s);
    return sg > 0 ? sl.right : -sl.left;
  };
  auto slope_left = [&](double s) {
    const Slopes sl = law.slopes(t, x, sg * s);
    return sg > 0 ? sl.left : -sl.right;
  };
  if (slope(0.0) >= aw) return 0.0;
  double lo = 0.0;
  double hi = 1.0;
  while (slope(hi) < aw) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e15) return kInf;
  }
  auto kinks = law.kinks(t, x);
  for (double k : kinks) {
    const double ks = sg * k;
    if (ks <= 0.0) continue;
    if (slope_left(ks) <= aw && slope(ks) >= aw) return w * sg * ks - law.value(t, x, sg * ks);
    if (ks < hi && slope(ks) < aw) lo = std::max(lo, ks);
    if (ks > lo && slope_left(ks) > aw) hi = std::min(hi, ks);
  }
  const double s = safeguarded_root([&](double u) { return slope(u) - aw; },
                                    [&](double u) { return law.curvature(t, x, sg * u); }, lo, hi);
  return aw * s - law.value(t, x, sg * s);
}

// ---- PowerLaw ---------------------------------------------------------------

double PowerLaw::value(double t, const Vec& x, double s) const {
  const double as = std::abs(s);
  return alpha_(t, x) * std::pow(as, p_) / p_ + kappa_ * std::log1p(as);
}

Slopes PowerLaw::slopes(double t, const Vec& x, double s) const {
  if (s == 0.0) return {-kappa_, kappa_};
  const double as = std::abs(s);
  const double d = alpha_(t, x) * std::pow(as, p_ - 1.0) + kappa_ / (1.0 + as);
  return {sign(s) * d, sign(s) * d};
}

double PowerLaw::curvature(double t, const Vec& x, double s) const {
  const double as = std::abs(s);
  if (as == 0.0) {
    if (kappa_ > 0.0 || p_ < 2.0) return kInf;
    return p_ == 2.0 ? alpha_(t, x) : 0.0;
  }
  return alpha_(t, x) * (p_ - 1.0) * std::pow(as, p_ - 2.0) - kappa_ / ((1.0 + as) * (1.0 + as));
}

std::vector<double> PowerLaw::kinks(double, const Vec&) const {
  if (kappa_ > 0.0) return {0.0};
  return {};
}

ProxResult PowerLaw::prox(double t, const Vec& x, double lambda, double r) const {
  if (p_ == 2.0 && kappa_ == 0.0) return {r / (1.0 + lambda * alpha_(t, x)), false};
  return generic_prox(*this, t, x, lambda, r);
}

double PowerLaw::conjugate(double t, const Vec& x, double w) const {
  if (kappa_ != 0.0) return generic_conjugate(*this, t, x, w);
  const double q = p_ / (p_ - 1.0);
  const double a = alpha_(t, x);
  return std::pow(std::abs(w), q) / (q * std::pow(a, q - 1.0));
}

// ---- FracturedLaw -----------------------------------------------------------

double FracturedLaw::value(double t, const Vec& x, double s) const {
  double v = alpha_(t, x) * std::pow(std::abs(s), p_) / p_;
  if (s > threshold_) v += (std::pow(s, p_) - std::pow(threshold_, p_)) / p_;
  return v;
}

Slopes FracturedLaw::slopes(double t, const Vec& x, double s) const {
  const double base = alpha_(t, x) * sign(s) * std::pow(std::abs(s), p_ - 1.0);
  if (s > threshold_) {
    const double d = base + std::pow(s, p_ - 1.0);
    return {d, d};
  }
  if (s == threshold_ && threshold_ > 0.0) return {base, base + std::pow(s, p_ - 1.0)};
  return {base, base};
}

double FracturedLaw::curvature(double t, const Vec& x, double s) const {
  const double as = std::abs(s);
  if (s == threshold_ && threshold_ > 0.0) return kInf;
  if (as == 0.0) {
    if (p_ < 2.0) return kInf;
    if (p_ > 2.0) return 0.0;
    return alpha_(t, x) + (threshold_ == 0.0 ? 1.0 : 0.0);  // one-sided at a zero threshold
  }
  const double c = (p_ - 1.0) * std::pow(as, p_ - 2.0);
  return alpha_(t, x) * c + (s > threshold_ ? c : 0.0);
}

std::vector<double> FracturedLaw::kinks(double, const Vec&) const {
  if (threshold_ > 0.0) return {threshold_};
  return {};
}

// ---- LogGrowthLaw -----------------------------------------------------------

double LogGrowthLaw::coefficient(double t, const Vec& x) const {
  const double a = a_(t, x);
  if (!(a > 0.0)) throw Error(ErrorCode::InvalidInput, "log-growth coefficient must be positive");
  return a;
}

double LogGrowthLaw::value(double t, const Vec& x, double s) const {
  const double as = std::abs(s);
  return coefficient(t, x) * as * std::log1p(as);
}

Slopes LogGrowthLaw::slopes(double t, const Vec& x, double s) const {
  const double as = std::abs(s);
  const double d = sign(s) * coefficient(t, x) * (std::log1p(as) + as / (1.0 + as));
  return {d, d};
}

double LogGrowthLaw::curvature(double t, const Vec& x, double s) const {
  const double u = 1.0 / (1.0 + std::abs(s));
  return coefficient(t, x) * (u + u * u);
}

// ---- AbsLaw -----------------------------------------------------------------

double AbsLaw::value(double, const Vec&, double s) const { return rho_ * std::abs(s); }

Slopes AbsLaw::slopes(double, const Vec&, double s) const {
  if (s == 0.0) return {-rho_, rho_};
  return {sign(s) * rho_, sign(s) * rho_};
}

double AbsLaw::curvature(double, const Vec&, double s) const { return s == 0.0 ? kInf : 0.0; }

ProxResult AbsLaw::prox(double, const Vec&, double lambda, double r) const {
  const double thr = lambda * rho_;
  if (std::abs(r) <= thr) return {0.0, std::abs(r) < thr};
  return {r - sign(r) * thr, false};
}

double AbsLaw::conjugate(double, const Vec&, double w) const {
  // Allow a few ulps so that Yosida fluxes computed in floating point stay
  // inside the domain.
  return std::abs(w) <= rho_ * (1.0 + 1e-12) ? 0.0 : kInf;
}

// ---- CustomScalarLaw --------------------------------------------------------

double CustomScalarLaw::zero_slope(double t, const Vec& x) const { return law_.slope(t, x, axis_, 0.0); }

double CustomScalarLaw::value(double t, const Vec& x, double s) const {
  return law_.value(t, x, axis_, s) - law_.value(t, x, axis_, 0.0) - zero_slope(t, x) * s;
}

Slopes CustomScalarLaw::slopes(double t, const Vec& x, double s) const {
  const double d = law_.slope(t, x, axis_, s) - zero_slope(t, x);
  return {d, d};
}

double CustomScalarLaw::curvature(double t, const Vec& x, double s) const {
  if (law_.curvature) return law_.curvature(t, x, axis_, s);
  const double d = 1e-6 * (1.0 + std::abs(s));
  return std::max(0.0, (law_.slope(t, x, axis_, s + d) - law_.slope(t, x, axis_, s - d)) / (2.0 * d));
}

}  // namespace wentzell::detail
