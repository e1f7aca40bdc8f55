#include "wentzell/flux_model.hpp"

#include "scalar_law.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace wentzell {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "INVALID_INPUT";
    case ErrorCode::Unbounded: return "UNBOUNDED";
    case ErrorCode::NonConverged: return "NONCONVERGED";
    case ErrorCode::BadConfig: return "BADCONFIG";
    case ErrorCode::Incompatible: return "INCOMPATIBLE";
    case ErrorCode::Inapplicable: return "INAPPLICABLE";
    case ErrorCode::Parse: return "PARSE";
    case ErrorCode::Validation: return "VALIDATION";
  }
  return "UNKNOWN";
}

const char* to_string(FluxKind kind) {
  switch (kind) {
    case FluxKind::Quadratic: return "quadratic";
    case FluxKind::AnisotropicPLaplacian: return "plaplacian";
    case FluxKind::FracturedMedium: return "fractured";
    case FluxKind::LogGrowth: return "loggrowth";
    case FluxKind::TotalVariation: return "tv";
    case FluxKind::Custom: return "custom";
  }
  return "unknown";
}

Coefficient::Coefficient(double value)
    : constant_(value), lower_(value), upper_(value), time_rate_(0.0) {}

Coefficient::Coefficient(Function f, double lower, double upper, double time_rate)
    : fn_(std::move(f)), lower_(lower), upper_(upper), time_rate_(time_rate) {
  if (!fn_) throw Error(ErrorCode::InvalidInput, "coefficient function is empty");
  if (!(lower <= upper) || !(time_rate >= 0.0))
    throw Error(ErrorCode::InvalidInput, "coefficient bounds must satisfy lower <= upper, time_rate >= 0");
}

namespace detail {

class ModelImpl {
 public:
  FluxKind kind = FluxKind::Quadratic;
  int dim = 1;
  bool radial = false;
  std::vector<std::shared_ptr<const ScalarLaw>> laws;  // one per axis, or one if radial
  GrowthConstants growth;
  double norm_exponent = 2.0;
  double time_lipschitz = 0.0;
  bool time_dependent = false;
  bool smooth = true;
  double rho = 0.0;
  std::vector<double> delta;
  std::vector<std::shared_ptr<const CustomScalarLaw>> custom;

  void check(const Vec& v, const char* what) const {
    if (v.size() != dim) {
      std::ostringstream os;
      os << what << " has dimension " << v.size() << ", model expects " << dim;
      throw Error(ErrorCode::InvalidInput, os.str());
    }
    if (!v.allFinite()) throw Error(ErrorCode::InvalidInput, std::string(what) + " is not finite");
  }
};

}  // namespace detail

namespace {

using detail::ModelImpl;

void check_dim(int dim) {
  if (dim != 1 && dim != 2) throw Error(ErrorCode::InvalidInput, "dimension must be 1 or 2");
}

std::vector<Coefficient> broadcast(std::vector<Coefficient> a, int dim, const char* name) {
  if (a.size() == 1 && dim > 1) a.resize(dim, a.front());
  if (static_cast<int>(a.size()) != dim)
    throw Error(ErrorCode::InvalidInput, std::string(name) + " needs one entry per axis");
  for (const auto& c : a)
    if (!(c.lower() > 0.0)) throw Error(ErrorCode::InvalidInput, std::string(name) + " must be bounded below by a positive constant");
  return a;
}

std::vector<double> broadcast(std::vector<double> a, int dim, const char* name) {
  if (a.empty()) a.assign(dim, 0.0);
  if (a.size() == 1 && dim > 1) a.resize(dim, a.front());
  if (static_cast<int>(a.size()) != dim)
    throw Error(ErrorCode::InvalidInput, std::string(name) + " needs one entry per axis");
  for (double v : a)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidInput, std::string(name) + " must be finite");
  return a;
}

// Bounds between sum_i |r_i|^p and |r|^p.
double norm_lo(int n, double p) { return std::min(1.0, std::pow(n, 1.0 - p / 2.0)); }
double norm_hi(int n, double p) { return std::max(1.0, std::pow(n, 1.0 - p / 2.0)); }

double coefficient_lipschitz(const std::vector<Coefficient>& a) {
  double l = 0.0;
  for (const auto& c : a) l = std::max(l, c.time_rate() / c.lower());
  return l;
}

// Largest kappa keeping alpha |s|^p / p + kappa log(1 + |s|) convex.
double kappa_limit(double alpha_lo, double p) {
  if (p > 2.0) return 0.0;
  if (p == 2.0) return alpha_lo;
  const double s = (2.0 - p) / p;
  return alpha_lo * (p - 1.0) * std::pow(s, p - 2.0) * (2.0 / p) * (2.0 / p);
}

// 1D Yosida slope derivative at r for a scalar law.
double yosida_slope_derivative(const detail::ScalarLaw& law, double t, const Vec& x, double lambda,
                               const detail::ProxResult& pr) {
  if (pr.pinned) return 1.0 / lambda;
  const double c = law.curvature(t, x, pr.z);
  if (!std::isfinite(c)) return 1.0 / lambda;
  return c / (1.0 + lambda * c);
}

}  // namespace

FluxModel::FluxModel(std::shared_ptr<const detail::ModelImpl> impl) : impl_(std::move(impl)) {}

FluxModel FluxModel::quadratic(int dim) {
  check_dim(dim);
  auto m = std::make_shared<ModelImpl>();
  m->kind = FluxKind::Quadratic;
  m->dim = dim;
  auto law = std::make_shared<detail::QuadraticLaw>();
  m->laws.assign(dim, law);
  m->growth = {Coercivity::Strong, 2.0, 0.5, 0.0, 0.5, 0.0, 1.0, 0.0, 1.0, 0.0};
  m->norm_exponent = 2.0;
  return FluxModel(m);
}

FluxModel FluxModel::p_laplacian(int dim, double p, std::vector<Coefficient> alpha, std::vector<double> kappa,
                                 std::vector<double> delta) {
  check_dim(dim);
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidInput, "p must exceed 1");
  alpha = broadcast(std::move(alpha), dim, "alpha");
  kappa = broadcast(std::move(kappa), dim, "kappa");
  delta = broadcast(std::move(delta), dim, "delta");

  auto m = std::make_shared<ModelImpl>();
  m->kind = FluxKind::AnisotropicPLaplacian;
  m->dim = dim;
  double a_lo = kInf, a_hi = 0.0, k_max = 0.0, k_sum = 0.0, k_sq = 0.0;
  for (int i = 0; i < dim; ++i) {
    if (kappa[i] < 0.0) throw Error(ErrorCode::InvalidInput, "kappa must be nonnegative");
    if (kappa[i] > kappa_limit(alpha[i].lower(), p) * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "kappa[" << i << "] = " << kappa[i] << " makes the potential nonconvex (limit "
         << kappa_limit(alpha[i].lower(), p) << ")";
      throw Error(ErrorCode::InvalidInput, os.str());
    }
    a_lo = std::min(a_lo, alpha[i].lower());
    a_hi = std::max(a_hi, alpha[i].upper());
    k_max = std::max(k_max, kappa[i]);
    k_sum += kappa[i];
    k_sq += kappa[i] * kappa[i];
    m->laws.push_back(std::make_shared<detail::PowerLaw>(alpha[i], p, kappa[i]));
  }
  auto& g = m->growth;
  g.coercivity = Coercivity::Strong;
  g.p = p;
  g.c1 = a_lo * norm_lo(dim, p) / p;
  g.c1_0 = 0.0;
  g.c2 = (a_hi + k_max) * norm_hi(dim, p) / p;
  g.c2_0 = k_sum * (p - 1.0) / p;
  g.c3 = a_hi * std::sqrt(std::max(1.0, std::pow(dim, 2.0 - p)));
  g.c3_0 = std::sqrt(k_sq);
  m->norm_exponent = p;
  m->time_lipschitz = coefficient_lipschitz(alpha);
  m->time_dependent = m->time_lipschitz > 0.0;
  m->smooth = p >= 2.0 && k_max == 0.0;
  m->delta = delta;
  return FluxModel(m);
}

FluxModel FluxModel::fractured(int dim, double p, std::vector<Coefficient> alpha, std::vector<double> thresholds) {
  check_dim(dim);
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorCode::InvalidInput, "p must exceed 1");
  alpha = broadcast(std::move(alpha), dim, "alpha");
  thresholds = broadcast(std::move(thresholds), dim, "thresholds");
  auto m = std::make_shared<ModelImpl>();
  m->kind = FluxKind::FracturedMedium;
  m->dim = dim;
  double a_lo = kInf, a_hi = 0.0;
  bool jumps = false;
  for (int i = 0; i < dim; ++i) {
    // A negative threshold makes the filled flux decreasing across the jump.
    if (thresholds[i] < 0.0) throw Error(ErrorCode::InvalidInput, "fracture thresholds must be nonnegative");
    jumps = jumps || thresholds[i] > 0.0;
    a_lo = std::min(a_lo, alpha[i].lower());
    a_hi = std::max(a_hi, alpha[i].upper());
    m->laws.push_back(std::make_shared<detail::FracturedLaw>(alpha[i], p, thresholds[i]));
  }
  auto& g = m->growth;
  g.coercivity = Coercivity::Strong;
  g.p = p;
  g.c1 = a_lo * norm_lo(dim, p) / p;
  g.c2 = (a_hi + 1.0) * norm_hi(dim, p) / p;
  g.c3 = (a_hi + 1.0) * std::sqrt(std::max(1.0, std::pow(dim, 2.0 - p)));
  m->norm_exponent = p;
  m->time_lipschitz = coefficient_lipschitz(alpha);
  m->time_dependent = m->time_lipschitz > 0.0;
  m->smooth = !jumps && p >= 2.0;
  return FluxModel(m);
}

FluxModel FluxModel::log_growth(int dim, Coefficient a) {
  check_dim(dim);
  if (!(a.lower() > 0.0)) throw Error(ErrorCode::InvalidInput, "log-growth coefficient must be positive");
  auto m = std::make_shared<ModelImpl>();
  m->kind = FluxKind::LogGrowth;
  m->dim = dim;
  m->radial = true;
  m->laws.push_back(std::make_shared<detail::LogGrowthLaw>(a));
  m->growth.coercivity = Coercivity::Weak;
  m->growth.p = 1.0;
  m->growth.gamma1 = 1.0;
  m->growth.gamma2 = 0.0;
  m->norm_exponent = 1.0;
  m->time_lipschitz = a.time_rate() / a.lower();
  m->time_dependent = m->time_lipschitz > 0.0;
  m->smooth = true;
  return FluxModel(m);
}

FluxModel FluxModel::total_variation(int dim, double rho) {
  check_dim(dim);
  if (!(rho > 0.0) || !std::isfinite(rho)) throw Error(ErrorCode::InvalidInput, "TV weight must be positive");
  auto m = std::make_shared<ModelImpl>();
  m->kind = FluxKind::TotalVariation;
  m->dim = dim;
  m->radial = true;
  m->laws.push_back(std::make_shared<detail::AbsLaw>(rho));
  m->growth = {Coercivity::Singular, 1.0, rho, 0.0, rho, 0.0, 0.0, rho, 1.0, 0.0};
  m->norm_exponent = 1.0;
  m->smooth = false;
  m->rho = rho;
  return FluxModel(m);
}

FluxModel FluxModel::custom(int dim, CustomLaw law, bool smooth) {
  check_dim(dim);
  if (!law.value || !law.slope) throw Error(ErrorCode::InvalidInput, "custom law needs value and slope profiles");
  auto m = std::make_shared<ModelImpl>();
  m->kind = FluxKind::Custom;
  m->dim = dim;
  for (int i = 0; i < dim; ++i) {
    auto l = std::make_shared<detail::CustomScalarLaw>(law, i);
    m->custom.push_back(l);
    m->laws.push_back(l);
  }
  m->growth = law.growth;
  m->norm_exponent = law.growth.coercivity == Coercivity::Strong ? law.growth.p : 1.0;
  m->time_lipschitz = law.time_lipschitz;
  m->time_dependent = law.time_dependent;
  m->smooth = smooth;
  return FluxModel(m);
}

FluxKind FluxModel::kind() const { return impl_->kind; }
int FluxModel::dim() const { return impl_->dim; }
const GrowthConstants& FluxModel::growth() const { return impl_->growth; }
double FluxModel::norm_exponent() const { return impl_->norm_exponent; }
double FluxModel::time_lipschitz() const { return impl_->time_lipschitz; }
bool FluxModel::time_dependent() const { return impl_->time_dependent; }
bool FluxModel::smooth() const { return impl_->smooth; }
double FluxModel::tv_weight() const { return impl_->rho; }
std::string FluxModel::id() const { return to_string(impl_->kind); }

double FluxModel::potential(double t, const Vec& x, const Vec& r) const {
  impl_->check(r, "gradient");
  if (impl_->radial) return impl_->laws[0]->value(t, x, r.norm());
  double v = 0.0;
  for (int i = 0; i < impl_->dim; ++i) v += impl_->laws[i]->value(t, x, r[i]);
  return v;
}

Vec FluxModel::flux_select(double t, const Vec& x, const Vec& r) const {
  impl_->check(r, "gradient");
  Vec out = Vec::Zero(impl_->dim);
  if (impl_->radial) {
    const double s = r.norm();
    if (s > 0.0) out = impl_->laws[0]->select(t, x, s) / s * r;
    return out;
  }
  for (int i = 0; i < impl_->dim; ++i) out[i] = impl_->laws[i]->select(t, x, r[i]);
  return out;
}

double FluxModel::conjugate(double t, const Vec& x, const Vec& w) const {
  impl_->check(w, "dual vector");
  if (impl_->radial) return impl_->laws[0]->conjugate(t, x, w.norm());
  double v = 0.0;
  for (int i = 0; i < impl_->dim; ++i) {
    v += impl_->laws[i]->conjugate(t, x, w[i]);
    if (!std::isfinite(v)) return kInf;
  }
  return v;
}

Vec FluxModel::resolvent(double t, const Vec& x, double lambda, const Vec& r) const {
  impl_->check(r, "gradient");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidInput, "lambda must be positive");
  Vec z(impl_->dim);
  if (impl_->radial) {
    const double s = r.norm();
    if (s == 0.0) return Vec::Zero(impl_->dim);
    return impl_->laws[0]->prox(t, x, lambda, s).z / s * r;
  }
  for (int i = 0; i < impl_->dim; ++i) z[i] = impl_->laws[i]->prox(t, x, lambda, r[i]).z;
  return z;
}

Vec FluxModel::yosida_flux(double t, const Vec& x, double lambda, const Vec& r) const {
  impl_->check(r, "gradient");
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidInput, "lambda must be positive");
  if (impl_->radial) {
    const double s = r.norm();
    if (s == 0.0) return Vec::Zero(impl_->dim);
    return impl_->laws[0]->yosida(t, x, lambda, s) / s * r;
  }
  Vec b(impl_->dim);
  for (int i = 0; i < impl_->dim; ++i) b[i] = impl_->laws[i]->yosida(t, x, lambda, r[i]);
  return b;
}

double FluxModel::moreau(double t, const Vec& x, double lambda, const Vec& r) const {
  const Vec z = resolvent(t, x, lambda, r);
  return (r - z).squaredNorm() / (2.0 * lambda) + potential(t, x, z);
}

double FluxModel::fenchel_gap(double t, const Vec& x, const Vec& r, const Vec& w) const {
  const double c = conjugate(t, x, w);
  if (!std::isfinite(c)) throw Error(ErrorCode::Unbounded, "conjugate is +infinity at the given dual vector");
  return potential(t, x, r) + c - w.dot(r);
}

Vec FluxModel::zero_section(double t, const Vec& x) const {
  Vec out = Vec::Zero(impl_->dim);
  if (!impl_->delta.empty())
    for (int i = 0; i < impl_->dim; ++i) out[i] = impl_->delta[i];
  for (int i = 0; i < static_cast<int>(impl_->custom.size()); ++i) out[i] = impl_->custom[i]->zero_slope(t, x);
  return out;
}

FluxModel::Local FluxModel::local(double t, const Vec& x, const Vec& r, double lambda, bool with_hessian) const {
  impl_->check(r, "gradient");
  const int n = impl_->dim;
  Local out;
  out.gradient = Vec::Zero(n);
  if (with_hessian) out.hessian = Mat::Zero(n, n);

  if (!impl_->radial) {
    for (int i = 0; i < n; ++i) {
      const auto& law = *impl_->laws[i];
      if (lambda > 0.0) {
        const auto pr = law.prox(t, x, lambda, r[i]);
        const double b = (r[i] - pr.z) / lambda;
        out.value += 0.5 * lambda * b * b + law.value(t, x, pr.z);
        out.gradient[i] = b;
        if (with_hessian) out.hessian(i, i) = yosida_slope_derivative(law, t, x, lambda, pr);
      } else {
        out.value += law.value(t, x, r[i]);
        out.gradient[i] = law.select(t, x, r[i]);
        if (with_hessian) {
          const double c = law.curvature(t, x, r[i]);
          if (!std::isfinite(c)) throw Error(ErrorCode::Inapplicable, "Hessian requested at a point where j is not twice differentiable");
          out.hessian(i, i) = c;
        }
      }
    }
    return out;
  }

  // Radial law phi(|r|): gradient psi(s) r/s, Hessian psi' P + (psi/s)(I - P).
  const auto& law = *impl_->laws[0];
  const double s = r.norm();
  double psi = 0.0, dpsi = 0.0;
  if (lambda > 0.0) {
    const auto pr = law.prox(t, x, lambda, s);
    psi = (s - pr.z) / lambda;
    out.value = 0.5 * lambda * psi * psi + law.value(t, x, pr.z);
    if (with_hessian) dpsi = yosida_slope_derivative(law, t, x, lambda, pr);
  } else {
    out.value = law.value(t, x, s);
    psi = law.select(t, x, s);
    if (with_hessian) {
      dpsi = law.curvature(t, x, s);
      if (!std::isfinite(dpsi)) throw Error(ErrorCode::Inapplicable, "Hessian requested at a point where j is not twice differentiable");
    }
  }
  if (s > 0.0) out.gradient = psi / s * r;
  if (with_hessian) {
    if (s > 0.0) {
      const Vec u = r / s;
      const Mat P = u * u.transpose();
      out.hessian = dpsi * P + (psi / s) * (Mat::Identity(n, n) - P);
    } else {
      out.hessian = dpsi * Mat::Identity(n, n);
    }
  }
  return out;
}

GrowthReport growth_check(const FluxModel& model, const SampleSpec& samples, double tol) {
  GrowthReport rep;
  const auto& g = model.growth();
  if (g.coercivity == Coercivity::Weak) {
    rep.weakly_coercive_only = true;
    return rep;
  }
  if (g.coercivity == Coercivity::Singular) {
    rep.singular = true;
    return rep;
  }
  const int n = model.dim();
  std::mt19937_64 rng(samples.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss;
  const Vec xmin = samples.x_min.size() == n ? samples.x_min : Vec(Vec::Zero(n));
  const Vec xmax = samples.x_max.size() == n ? samples.x_max : Vec(Vec::Ones(n));
  const double lr0 = std::log(samples.radius_min), lr1 = std::log(samples.radius_max);
  rep.lower_violation = rep.upper_violation = rep.selection_violation = -kInf;
  for (int k = 0; k < samples.count; ++k) {
    const double t = samples.t_min + (samples.t_max - samples.t_min) * unit(rng);
    Vec x(n), dir(n);
    for (int i = 0; i < n; ++i) {
      x[i] = xmin[i] + (xmax[i] - xmin[i]) * unit(rng);
      dir[i] = gauss(rng);
    }
    if (dir.norm() == 0.0) dir[0] = 1.0;
    const double rad = std::exp(lr0 + (lr1 - lr0) * unit(rng));
    const Vec r = rad / dir.norm() * dir;
    const double j = model.potential(t, x, r);
    const double rp = std::pow(rad, g.p);
    // Violations are scaled by the size of the bound so large radii do not
    // drown the check in rounding error.
    const double lower = g.c1 * rp + g.c1_0;
    const double upper = g.c2 * rp + g.c2_0;
    const double sel = g.c3 * std::pow(rad, g.p - 1.0) + g.c3_0;
    rep.lower_violation = std::max(rep.lower_violation, (lower - j) / std::max(1.0, std::abs(lower)));
    rep.upper_violation = std::max(rep.upper_violation, (j - upper) / std::max(1.0, std::abs(upper)));
    rep.selection_violation =
        std::max(rep.selection_violation, (model.flux_select(t, x, r).norm() - sel) / std::max(1.0, sel));
  }
  rep.pass = rep.lower_violation <= tol && rep.upper_violation <= tol && rep.selection_violation <= tol;
  return rep;
}

}  // namespace wentzell
