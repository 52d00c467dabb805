#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "lrf/errors.hpp"
#include "lrf/rng.hpp"
#include "lrf/slowly_varying.hpp"

namespace lrf {

// Right-tail descriptor of a standardized law: P(ξ >= x) = h_eff(x) / x^t for
// all x >= x0, where h_eff(x) = scale^{-t} h_raw(scale·x) is the effective
// slowly varying factor after dividing a raw law by `scale` to reach unit
// variance.
struct TailDescriptor {
  double t = 3.0;
  double x0 = 1.0;
  SlowlyVaryingFn h_raw = SlowlyVaryingFn::constant(1.0);
  double scale = 1.0;

  double effective_h(double x) const;
  double survival_above(double x) const;  // valid for x >= x0
};

// Two-sided heavy-tailed law: a bounded symmetric core (piecewise-uniform
// mixture tuned to zero excess kurtosis) plus mirrored Pareto-type tails with
// P(ξ >= x) = h_eff(x)/x^t exactly above x0. Mean 0 and variance 1 hold
// analytically.
struct HybridLaw {
  double t = 3.0;
  double x0 = 1.0;
  double q = 0.0;       // tail mass per side
  double lambda = 1.0;  // core scale
  double rho = 0.0;     // hump mixture mass
  double hump_center = 0.0;
  double hump_halfwidth = 0.0;
  double core_halfwidth = 1.0;  // center piece half-width (pre-scale)
  SlowlyVaryingFn h_raw = SlowlyVaryingFn::constant(1.0);
  double scale = 1.0;

  double support_max() const { return lambda * (hump_center + hump_halfwidth); }
  double effective_h(double x) const;
  double survival(double x) const;
  double density(double x) const;
  double tail_quantile(double p) const;  // S^{-1}(p) on the upper tail
  double sample(Rng& rng) const;
};

struct StudentLaw {
  double nu = 3.0;
  double sigma0 = 1.0;  // sqrt(nu/(nu-2))

  double survival(double x) const;
  double density(double x) const;
  double sample(Rng& rng) const;
};

// Standardized innovation law (mean 0, variance 1).
class InnovationModel {
 public:
  enum class Kind {
    Gaussian,
    Rademacher,
    UniformCentered,
    StudentLike,
    TwoSidedParetoHybrid,
  };

  static InnovationModel gaussian();
  static InnovationModel rademacher();
  static InnovationModel uniform_centered();
  static InnovationModel student_like(double t);
  // Standardized construction: the descriptor (t, h, x0) is exact by design.
  static InnovationModel pareto_hybrid(double t, SlowlyVaryingFn h, double x0);
  // Raw construction: tails h0(x)/x^t above x0_raw around a core of the given
  // scale; the law is then divided by its standard deviation and the stored
  // descriptor reflects the induced h_eff(x) = σ^{-t} h0(σx).
  static InnovationModel pareto_hybrid_raw(double t, SlowlyVaryingFn h0,
                                           double x0_raw, double core_scale);

  Kind kind() const { return kind_; }
  const char* kind_name() const;
  // Supremum of p with E|ξ|^p < ∞ (+inf for bounded or Gaussian kinds; the
  // supremum itself is not attained for heavy-tailed kinds).
  double moment_order_sup() const { return moment_sup_; }
  const std::optional<TailDescriptor>& tail() const { return tail_; }
  const HybridLaw& hybrid() const;
  const StudentLaw& student() const;

  // Exact P(ξ >= x).
  double survival(double x) const;
  double density(double x) const;  // continuous kinds only
  bool discrete() const { return kind_ == Kind::Rademacher; }
  bool symmetric() const { return true; }

  // E[ξ^order · I(lower < ξ < upper)]. Noninteger orders require lower >= 0.
  double truncated_moment(double order, double lower, double upper) const;

  double sample_one(Rng& rng) const;

 private:
  InnovationModel() = default;
  static InnovationModel make_hybrid(double t, SlowlyVaryingFn h_raw,
                                     double x0_raw, double scale_hint,
                                     bool standardize);
  Kind kind_ = Kind::Gaussian;
  double moment_sup_ = 0.0;
  std::optional<TailDescriptor> tail_;
  std::optional<HybridLaw> hybrid_;
  std::optional<StudentLaw> student_;
};

// i.i.d. draws from the standardized law; deterministic for a fixed stream.
std::vector<double> sample(const InnovationModel& model, RngStream stream,
                           std::int64_t count);

// (x, survival, density) rows for plotting or inspection.
void write_survival_csv(const InnovationModel& model,
                        std::span<const double> xs, std::ostream& os);

// Numeric checks of Karamata-style properties of a slowly varying l:
//   theta > -1:  ∫_A^x y^θ l(y) dy      ~ x^{θ+1} l(x) / (θ+1)
//   theta < -1:  ∫_x^∞ y^θ l(y) dy      ~ x^{θ+1} l(x) / (-θ-1)
// The report carries the numeric integral, the asymptotic form, and their
// ratio, which should drift toward 1 as x grows.
struct KaramataReport {
  int property = 0;  // 2 or 3
  double theta = 0.0;
  double x = 0.0;
  double lower_limit = 1.0;
  double numeric = 0.0;
  double asymptotic = 0.0;
  double ratio = 0.0;
};

KaramataReport karamata_check(const SlowlyVaryingFn& l, double theta, double x,
                              double lower_limit = 1.0);

// Property 4: sup_{t >= x} t^{-eta} l(t) ~ x^{-eta} l(x); returns the ratio.
double karamata_sup_ratio(const SlowlyVaryingFn& l, double eta, double x);

}  // namespace lrf
