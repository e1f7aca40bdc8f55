#pragma once

#include "wentzell/types.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace wentzell {

namespace detail {
class ModelImpl;
}

/// Scalar coefficient a(t, x) together with the bounds the catalog needs to
/// derive growth and time-regularity constants. The bounds are declared by the
/// caller and are not checked on every evaluation.
class Coefficient {
 public:
  using Function = std::function<double(double t, const Vec& x)>;

  Coefficient(double value);  // NOLINT: constants convert implicitly
  /// `time_rate` bounds |d a / d t| over the space-time cylinder.
  Coefficient(Function f, double lower, double upper, double time_rate);

  double operator()(double t, const Vec& x) const { return fn_ ? fn_(t, x) : constant_; }

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  double time_rate() const { return time_rate_; }
  bool is_constant() const { return !fn_; }

 private:
  Function fn_;
  double constant_ = 0.0;
  double lower_ = 0.0;
  double upper_ = 0.0;
  double time_rate_ = 0.0;
};

enum class FluxKind {
  Quadratic,
  AnisotropicPLaplacian,
  FracturedMedium,
  LogGrowth,
  TotalVariation,
  Custom,
};

const char* to_string(FluxKind kind);

enum class Coercivity {
  Strong,    // two-sided power growth
  Weak,      // superlinear j and j*, symmetric at infinity
  Singular,  // linear growth (total variation); neither of the above
};

/// Constants of the growth, selection-growth and symmetry bounds
///   C1 |r|^p + C1_0 <= j(t,x,r) <= C2 |r|^p + C2_0,
///   |xi| <= C3 |r|^(p-1) + C3_0 for xi in beta(t,x,r),
///   j(t,x,r) <= gamma1 j(t,x,-r) + gamma2.
struct GrowthConstants {
  Coercivity coercivity = Coercivity::Strong;
  double p = 2.0;
  double c1 = 0.0;
  double c1_0 = 0.0;
  double c2 = 0.0;
  double c2_0 = 0.0;
  double c3 = 0.0;
  double c3_0 = 0.0;
  double gamma1 = 1.0;
  double gamma2 = 0.0;
};

/// User-supplied separable law j(t,x,r) = sum_i phi_i(t,x,r_i) with a
/// differentiable convex profile. The catalog subtracts phi_i(0) and the slope
/// at zero, so the supplied profile need not be normalized.
struct CustomLaw {
  using Profile = std::function<double(double t, const Vec& x, int axis, double s)>;

  Profile value;
  Profile slope;
  /// Optional second derivative; enables Newton steps in the resolvent and
  /// the smooth (non-regularized) step route.
  Profile curvature;
  GrowthConstants growth;
  double time_lipschitz = 0.0;
  bool time_dependent = false;
};

/// Flux law beta = dj together with its potential, conjugate, resolvent,
/// Yosida approximation and Moreau envelope. Immutable and cheap to copy.
///
/// Potentials are normalized so that j(t,x,0) = 0 and j >= 0. Separable laws
/// act per axis, radial laws (log growth, total variation) through |r|.
class FluxModel {
 public:
  /// j = |r|^2 / 2.
  static FluxModel quadratic(int dim);
  /// j = sum_i alpha_i |r_i|^p / p + kappa_i log(1 + |r_i|) + delta_i r_i.
  /// The linear part delta is removed by normalization and reported by
  /// zero_section().
  static FluxModel p_laplacian(int dim, double p, std::vector<Coefficient> alpha,
                               std::vector<double> kappa = {}, std::vector<double> delta = {});
  /// Flux (alpha_i + H(r_i - threshold_i)) |r_i|^(p-2) r_i with the Heaviside
  /// jump filled in; thresholds must be nonnegative for monotonicity.
  static FluxModel fractured(int dim, double p, std::vector<Coefficient> alpha,
                             std::vector<double> thresholds);
  /// j = a(t,x) |r| log(1 + |r|), flux a (log(1+|r|) + |r|/(1+|r|)) sgn r.
  static FluxModel log_growth(int dim, Coefficient a);
  /// j = rho |r|.
  static FluxModel total_variation(int dim, double rho);
  static FluxModel custom(int dim, CustomLaw law, bool smooth = true);

  FluxKind kind() const;
  int dim() const;
  const GrowthConstants& growth() const;
  /// Exponent used for gradient norms and space-time norms of this model.
  double norm_exponent() const;
  /// Constant L with j(t,x,r) <= j(s,x,r) + L |t-s| j(t,x,r).
  double time_lipschitz() const;
  bool time_dependent() const;
  /// True when j is C^1 with a locally bounded flux derivative, so the step
  /// problem can be minimized without Moreau-Yosida regularization.
  bool smooth() const;
  /// Total-variation weight rho; zero for other kinds.
  double tv_weight() const;

  double potential(double t, const Vec& x, const Vec& r) const;
  /// Minimal-norm element of beta(t,x,r).
  Vec flux_select(double t, const Vec& x, const Vec& r) const;
  /// j*(t,x,w); +infinity when the supremum is unbounded.
  double conjugate(double t, const Vec& x, const Vec& w) const;
  /// (1 + lambda beta)^{-1} r.
  Vec resolvent(double t, const Vec& x, double lambda, const Vec& r) const;
  Vec yosida_flux(double t, const Vec& x, double lambda, const Vec& r) const;
  double moreau(double t, const Vec& x, double lambda, const Vec& r) const;
  /// j(r) + j*(w) - w.r; throws ErrorCode::Unbounded when j*(w) is infinite.
  double fenchel_gap(double t, const Vec& x, const Vec& r, const Vec& w) const;
  /// Element xi0 of the raw flux at r = 0 that normalization subtracted.
  Vec zero_section(double t, const Vec& x) const;

  /// Value, gradient and (optionally) Hessian of j (lambda == 0) or of the
  /// Moreau envelope j_lambda (lambda > 0) at r. For lambda == 0 the model
  /// must be smooth() when the Hessian is requested.
  struct Local {
    double value = 0.0;
    Vec gradient;
    Mat hessian;
  };
  Local local(double t, const Vec& x, const Vec& r, double lambda, bool with_hessian) const;

  /// Catalog identifier ("quadratic", "plaplacian", ...).
  std::string id() const;

 private:
  explicit FluxModel(std::shared_ptr<const detail::ModelImpl> impl);
  std::shared_ptr<const detail::ModelImpl> impl_;
};

/// Sampling description for growth_check and the property tests.
struct SampleSpec {
  int count = 200;
  double radius_min = 1e-3;
  double radius_max = 1e3;
  double t_min = 0.0;
  double t_max = 1.0;
  Vec x_min;
  Vec x_max;
  std::uint64_t seed = 1;
};

struct GrowthReport {
  bool pass = false;
  bool weakly_coercive_only = false;
  bool singular = false;
  /// Largest violation of the lower bound, upper bound and selection bound
  /// (positive means violated).
  double lower_violation = 0.0;
  double upper_violation = 0.0;
  double selection_violation = 0.0;
};

/// Checks the two-sided growth bound and the selection growth bound on
/// log-uniformly distributed radii.
GrowthReport growth_check(const FluxModel& model, const SampleSpec& samples, double tol = 1e-8);

}  // namespace wentzell
