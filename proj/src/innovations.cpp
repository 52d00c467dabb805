#include "lrf/innovations.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "lrf/numerics.hpp"

namespace lrf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSqrt3 = 1.7320508075688772935;

bool is_integer_order(double m) {
  return std::abs(m - std::round(m)) < 1e-9;
}
}  // namespace

// ---------------------------------------------------------------------------
// TailDescriptor

double TailDescriptor::effective_h(double x) const {
  return std::pow(scale, -t) * h_raw(scale * x);
}

double TailDescriptor::survival_above(double x) const {
  return effective_h(x) / std::pow(x, t);
}

// ---------------------------------------------------------------------------
// HybridLaw

double HybridLaw::effective_h(double x) const {
  return std::pow(scale, -t) * h_raw(scale * x);
}

namespace {

// Survival of the unit-variance core mixture (uniform center of half-width A
// plus symmetric uniform humps), for y >= 0.
double core_sf(double y, double A, double rho, double B, double d) {
  if (y >= B + d) return 0.0;
  if (y >= B - d) return 0.5 * rho * (B + d - y) / (2.0 * d);
  if (y >= A) return 0.5 * rho;
  return 0.5 * rho + 0.5 * (1.0 - rho) * (A - y) / A;
}

double core_density(double y, double A, double rho, double B, double d) {
  const double ay = std::abs(y);
  double f = 0.0;
  if (ay < A) f += (1.0 - rho) / (2.0 * A);
  if (ay > B - d && ay < B + d) f += 0.5 * rho / (2.0 * d);
  return f;
}

double core_quantile(double v, double A, double rho, double B, double d) {
  // Mass order: left hump rho/2, center 1-rho, right hump rho/2.
  if (v < 0.5 * rho) {
    return -B - d + (v / (0.5 * rho)) * 2.0 * d;
  }
  if (v < 0.5 * rho + (1.0 - rho)) {
    return -A + ((v - 0.5 * rho) / (1.0 - rho)) * 2.0 * A;
  }
  return B - d + ((v - 0.5 * rho - (1.0 - rho)) / (0.5 * rho)) * 2.0 * d;
}

}  // namespace

double HybridLaw::survival(double x) const {
  if (x < 0.0) return 1.0 - survival(-x);
  if (x >= x0) return effective_h(x) / std::pow(x, t);
  const double smax = support_max();
  if (x >= smax) return q;
  return q + (1.0 - 2.0 * q) *
                 core_sf(x / lambda, core_halfwidth, rho, hump_center,
                         hump_halfwidth);
}

double HybridLaw::density(double x) const {
  const double ax = std::abs(x);
  if (ax >= x0) {
    // f = (t h(x) - x h'(x)) / x^{t+1} with h the effective factor.
    const double h = effective_h(ax);
    double hprime = 0.0;
    if (h_raw.kind() == SlowlyVaryingFn::Kind::LogPower) {
      const double y = scale * ax;
      const double lg = std::log(2.718281828459045235 + y);
      hprime = std::pow(scale, -t) * h_raw.scale() * h_raw.exponent() *
               std::pow(lg, h_raw.exponent() - 1.0) /
               (2.718281828459045235 + y) * scale;
    }
    return (t * h - ax * hprime) / std::pow(ax, t + 1.0);
  }
  if (ax >= support_max()) return 0.0;
  return (1.0 - 2.0 * q) / lambda *
         core_density(ax / lambda, core_halfwidth, rho, hump_center,
                      hump_halfwidth);
}

double HybridLaw::tail_quantile(double p) const {
  require(p > 0.0 && p <= q, ErrorCode::InvalidArgument,
          "tail quantile needs p in (0, q]");
  if (h_raw.is_constant()) {
    const double c_eff = std::pow(scale, -t) * h_raw.scale();
    return std::pow(c_eff / p, 1.0 / t);
  }
  // Fixed point x <- (h_eff(x)/p)^{1/t}; contraction because h is slowly
  // varying.
  double x = std::max(x0, std::pow(effective_h(x0) / p, 1.0 / t));
  for (int i = 0; i < 200; ++i) {
    const double next = std::pow(effective_h(x) / p, 1.0 / t);
    if (std::abs(next - x) <= 1e-15 * x) return next;
    x = next;
  }
  return x;
}

double HybridLaw::sample(Rng& rng) const {
  const double u = rng.next_double();
  if (u < q) return -tail_quantile(std::max(u, 1e-300));
  if (u >= 1.0 - q) return tail_quantile(std::max(1.0 - u, 1e-300));
  const double v = (u - q) / (1.0 - 2.0 * q);
  return lambda *
         core_quantile(v, core_halfwidth, rho, hump_center, hump_halfwidth);
}

// ---------------------------------------------------------------------------
// StudentLaw

double StudentLaw::survival(double x) const {
  const double y = sigma0 * x;
  const double z = nu / (nu + y * y);
  const double half_tail = 0.5 * regularized_incomplete_beta(0.5 * nu, 0.5, z);
  return y >= 0.0 ? half_tail : 1.0 - half_tail;
}

double StudentLaw::density(double x) const {
  const double y = sigma0 * x;
  const double ln_norm = std::lgamma(0.5 * (nu + 1.0)) -
                         std::lgamma(0.5 * nu) -
                         0.5 * std::log(nu * 3.14159265358979323846);
  return sigma0 * std::exp(ln_norm) *
         std::pow(1.0 + y * y / nu, -0.5 * (nu + 1.0));
}

namespace {
// Marsaglia–Tsang gamma(alpha, 1) for alpha >= 1.
double gamma_draw(Rng& rng, double alpha) {
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / (3.0 * std::sqrt(d));
  for (;;) {
    double x, v;
    do {
      x = rng.next_normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) {
      return d * v;
    }
  }
}
}  // namespace

double StudentLaw::sample(Rng& rng) const {
  const double z = rng.next_normal();
  const double chi2 = 2.0 * gamma_draw(rng, 0.5 * nu);
  return z * std::sqrt(nu / chi2) / sigma0;
}

// ---------------------------------------------------------------------------
// InnovationModel constructors

InnovationModel InnovationModel::gaussian() {
  InnovationModel m;
  m.kind_ = Kind::Gaussian;
  m.moment_sup_ = kInf;
  return m;
}

InnovationModel InnovationModel::rademacher() {
  InnovationModel m;
  m.kind_ = Kind::Rademacher;
  m.moment_sup_ = kInf;
  return m;
}

InnovationModel InnovationModel::uniform_centered() {
  InnovationModel m;
  m.kind_ = Kind::UniformCentered;
  m.moment_sup_ = kInf;
  return m;
}

InnovationModel InnovationModel::student_like(double t) {
  require(t > 2.0, ErrorCode::InvalidArgument, "tail index must exceed 2");
  InnovationModel m;
  m.kind_ = Kind::StudentLike;
  m.moment_sup_ = t;
  StudentLaw law;
  law.nu = t;
  law.sigma0 = std::sqrt(t / (t - 2.0));
  m.student_ = law;

  // Asymptotic tail constant of the raw Student law:
  // S(y) ~ A_nu * nu^{(nu-1)/2} * y^{-nu}.
  const double a_nu = std::exp(std::lgamma(0.5 * (t + 1.0)) -
                               std::lgamma(0.5 * t)) /
                      std::sqrt(t * 3.14159265358979323846);
  const double c_raw = a_nu * std::pow(t, 0.5 * (t - 1.0));
  // Threshold where the power-law form is accurate to ~1%.
  const double x0_raw = std::sqrt(50.0 * t * (t + 1.0));
  TailDescriptor tail;
  tail.t = t;
  tail.h_raw = SlowlyVaryingFn::constant(c_raw);
  tail.scale = law.sigma0;
  tail.x0 = x0_raw / law.sigma0;
  m.tail_ = tail;
  return m;
}

namespace {

// Solve the core hump geometry so the core mixture has unit variance and
// Gaussian fourth moment (zero excess kurtosis): center Uniform(-1,1) piece
// plus symmetric humps Uniform(±B-d, ±B+d) of total mass rho.
void solve_core(double d, double* rho_out, double* B_out) {
  const double d2 = d * d;
  auto rho_of = [&](double y) {
    return (2.0 / 3.0) / (y + d2 / 3.0 - 1.0 / 3.0);
  };
  auto mu4 = [&](double y) {
    const double rho = rho_of(y);
    return (1.0 - rho) / 5.0 +
           rho * (y * y + 2.0 * y * d2 + d2 * d2 / 5.0);
  };
  double lo = 1.5, hi = 6.0;
  require(mu4(lo) < 3.0 && mu4(hi) > 3.0, ErrorCode::InvalidArgument,
          "core kurtosis solve failed");
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mu4(mid) < 3.0 ? lo : hi) = mid;
  }
  const double y = 0.5 * (lo + hi);
  *rho_out = rho_of(y);
  *B_out = std::sqrt(y);
}

// E[ξ²; ξ >= x0] for survival S(x) = h(x)/x^t above x0, via
// x0² S(x0) + ∫ 2x S(x) dx.
double tail_second_moment(double t, const SlowlyVaryingFn& h, double x0) {
  const double q = h(x0) / std::pow(x0, t);
  if (h.is_constant()) {
    return q * x0 * x0 * t / (t - 2.0);
  }
  const double integral = integrate_to_inf(
      [&](double x) { return 2.0 * x * h(x) / std::pow(x, t); }, x0,
      1e-13 * q * x0 * x0);
  return q * x0 * x0 + integral;
}

}  // namespace

InnovationModel InnovationModel::make_hybrid(double t, SlowlyVaryingFn h_raw,
                                             double x0_raw, double scale_hint,
                                             bool standardize) {
  require(t > 2.0, ErrorCode::InvalidArgument, "tail index must exceed 2");
  require(x0_raw > 0.0, ErrorCode::InvalidArgument,
          "tail threshold must be positive");

  HybridLaw law;
  law.t = t;
  law.h_raw = h_raw;
  law.core_halfwidth = 1.0;
  law.hump_halfwidth = 0.2;
  solve_core(law.hump_halfwidth, &law.rho, &law.hump_center);

  const double q = h_raw(x0_raw) / std::pow(x0_raw, t);
  require(q > 0.0 && q < 0.2, ErrorCode::InvalidArgument,
          "tail mass per side must lie in (0, 0.2)");
  const double vt = tail_second_moment(t, h_raw, x0_raw);

  double lambda_raw, sigma0;
  if (standardize) {
    // Choose the core scale so the total variance is exactly 1.
    require(2.0 * vt < 1.0, ErrorCode::InvalidArgument,
            "tail variance leaves no room for the core");
    lambda_raw = std::sqrt((1.0 - 2.0 * vt) / (1.0 - 2.0 * q));
    sigma0 = 1.0;
  } else {
    lambda_raw = scale_hint;
    sigma0 = std::sqrt((1.0 - 2.0 * q) * scale_hint * scale_hint + 2.0 * vt);
  }

  law.q = q;
  law.lambda = lambda_raw / sigma0;
  law.x0 = x0_raw / sigma0;
  law.scale = sigma0;
  require(law.support_max() < law.x0, ErrorCode::InvalidArgument,
          "core support must stay below the tail threshold");

  InnovationModel m;
  m.kind_ = InnovationModel::Kind::TwoSidedParetoHybrid;
  m.moment_sup_ = t;
  TailDescriptor tail;
  tail.t = t;
  tail.x0 = law.x0;
  tail.h_raw = h_raw;
  tail.scale = sigma0;
  m.tail_ = tail;
  m.hybrid_ = law;
  return m;
}

InnovationModel InnovationModel::pareto_hybrid(double t, SlowlyVaryingFn h,
                                               double x0) {
  return make_hybrid(t, h, x0, 1.0, /*standardize=*/true);
}

InnovationModel InnovationModel::pareto_hybrid_raw(double t,
                                                   SlowlyVaryingFn h0,
                                                   double x0_raw,
                                                   double core_scale) {
  require(core_scale > 0.0, ErrorCode::InvalidArgument,
          "core scale must be positive");
  return make_hybrid(t, h0, x0_raw, core_scale, /*standardize=*/false);
}

const char* InnovationModel::kind_name() const {
  switch (kind_) {
    case Kind::Gaussian: return "gaussian";
    case Kind::Rademacher: return "rademacher";
    case Kind::UniformCentered: return "uniform";
    case Kind::StudentLike: return "student";
    case Kind::TwoSidedParetoHybrid: return "pareto_hybrid";
  }
  return "unknown";
}

const HybridLaw& InnovationModel::hybrid() const {
  require(hybrid_.has_value(), ErrorCode::InvalidArgument,
          "model is not a pareto hybrid");
  return *hybrid_;
}

const StudentLaw& InnovationModel::student() const {
  require(student_.has_value(), ErrorCode::InvalidArgument,
          "model is not a student law");
  return *student_;
}

// ---------------------------------------------------------------------------
// Survival / density / sampling

double InnovationModel::survival(double x) const {
  switch (kind_) {
    case Kind::Gaussian:
      return normal_sf(x);
    case Kind::Rademacher:
      if (x <= -1.0) return 1.0;
      if (x <= 1.0) return 0.5;
      return 0.0;
    case Kind::UniformCentered: {
      if (x <= -kSqrt3) return 1.0;
      if (x >= kSqrt3) return 0.0;
      return (kSqrt3 - x) / (2.0 * kSqrt3);
    }
    case Kind::StudentLike:
      return student_->survival(x);
    case Kind::TwoSidedParetoHybrid:
      return hybrid_->survival(x);
  }
  return 0.0;
}

double InnovationModel::density(double x) const {
  switch (kind_) {
    case Kind::Gaussian:
      return normal_pdf(x);
    case Kind::Rademacher:
      fail(ErrorCode::InvalidArgument, "rademacher has no density");
    case Kind::UniformCentered:
      return std::abs(x) < kSqrt3 ? 1.0 / (2.0 * kSqrt3) : 0.0;
    case Kind::StudentLike:
      return student_->density(x);
    case Kind::TwoSidedParetoHybrid:
      return hybrid_->density(x);
  }
  return 0.0;
}

double InnovationModel::sample_one(Rng& rng) const {
  switch (kind_) {
    case Kind::Gaussian:
      return rng.next_normal();
    case Kind::Rademacher:
      return (rng.next_u64() & 1) ? 1.0 : -1.0;
    case Kind::UniformCentered:
      return (2.0 * rng.next_double() - 1.0) * kSqrt3;
    case Kind::StudentLike:
      return student_->sample(rng);
    case Kind::TwoSidedParetoHybrid:
      return hybrid_->sample(rng);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Truncated moments

namespace {

// ∫_u^v x^m dx (v may be +inf only when the closed form converges upstream).
double power_piece(double m, double u, double v) {
  if (u >= v) return 0.0;
  return (std::pow(v, m + 1.0) - std::pow(u, m + 1.0)) / (m + 1.0);
}

// ∫_u^v x^m f(x) dx over a Pareto-type tail f(x) = t h_eff(x) x^{-t-1} with
// constant h: exact antiderivative. v may be +inf when m < t.
double const_tail_piece(double m, double t, double c_eff, double u, double v) {
  if (u >= v) return 0.0;
  if (std::isinf(v)) {
    return t * c_eff * std::pow(u, m - t) / (t - m);
  }
  if (std::abs(m - t) < 1e-12) {
    return t * c_eff * std::log(v / u);
  }
  return t * c_eff * (std::pow(v, m - t) - std::pow(u, m - t)) / (m - t);
}

// Log-space quadrature of ∫_u^v x^m f(x) dx for densities with a power decay
// of index tail_exp (f ~ x^{-tail_exp-1}); handles v = +inf when m < tail_exp.
template <class Density>
double log_space_piece(const Density& f, double m, double tail_exp, double u,
                       double v, double abs_tol) {
  if (u >= v) return 0.0;
  double w_hi;
  if (std::isinf(v)) {
    w_hi = std::log(u) + 60.0 / std::max(0.05, tail_exp - m);
  } else {
    w_hi = std::log(v);
  }
  w_hi = std::min(w_hi, 700.0);
  auto g = [&](double w) {
    if (w > 690.0) return 0.0;
    const double x = std::exp(w);
    return std::pow(x, m + 1.0) * f(x);
  };
  return integrate(g, std::log(u), w_hi, abs_tol);
}

}  // namespace

double InnovationModel::truncated_moment(double order, double lower,
                                         double upper) const {
  require(order >= 1.0, ErrorCode::InvalidArgument,
          "moment order must be >= 1");
  require(lower < upper, ErrorCode::InvalidArgument,
          "moment range must be nonempty");
  const bool integer_order = is_integer_order(order);
  require(integer_order || lower >= 0.0, ErrorCode::InvalidArgument,
          "noninteger moment orders need a nonnegative lower limit");

  if (order >= moment_sup_ && (std::isinf(upper) || std::isinf(lower))) {
    fail(ErrorCode::NonintegrableMoment,
         "E[xi^" + std::to_string(order) + "] diverges for this tail index");
  }

  if (kind_ == Kind::Rademacher) {
    double total = 0.0;
    if (lower < -1.0 && upper > -1.0) total += 0.5 * std::pow(-1.0, order);
    if (lower < 1.0 && upper > 1.0) total += 0.5;
    return total;
  }

  // Reduce infinite or negative lower limits through symmetry (all continuous
  // kinds here are symmetric; noninteger orders were restricted to x >= 0).
  if (std::isinf(lower) && std::isinf(upper)) {
    if (std::fmod(std::round(order), 2.0) != 0.0) return 0.0;
    return 2.0 * truncated_moment(order, 0.0, upper);
  }
  if (std::isinf(lower)) {
    const double sign =
        std::fmod(std::round(order), 2.0) == 0.0 ? 1.0 : -1.0;
    return sign * truncated_moment(order, -upper, lower * -1.0);
  }
  if (lower < 0.0) {
    const double sign =
        std::fmod(std::round(order), 2.0) == 0.0 ? 1.0 : -1.0;
    if (upper <= 0.0) {
      return sign * truncated_moment(order, -upper, -lower);
    }
    return sign * truncated_moment(order, 0.0, -lower) +
           truncated_moment(order, 0.0, upper);
  }

  // From here on 0 <= lower < upper.
  const double a = lower, b = upper;
  switch (kind_) {
    case Kind::Rademacher:
      return 0.0;  // handled above
    case Kind::UniformCentered: {
      const double u = std::max(a, 0.0), v = std::min(b, kSqrt3);
      return power_piece(order, u, v) / (2.0 * kSqrt3);
    }
    case Kind::Gaussian: {
      const double u = a, v = std::min(b, 12.0 + 2.0 * order);
      if (u >= v) return 0.0;
      auto f = [&](double x) { return std::pow(x, order) * normal_pdf(x); };
      return integrate_segmented(f, u, v, 1e-13, 1.0);
    }
    case Kind::StudentLike: {
      const StudentLaw& law = *student_;
      auto dens = [&](double x) { return law.density(x); };
      const double split = std::max(a, 30.0);
      double total = 0.0;
      if (a < std::min(b, split)) {
        auto f = [&](double x) { return std::pow(x, order) * dens(x); };
        total += integrate_segmented(f, a, std::min(b, split), 1e-13, 2.0);
      }
      if (b > split) {
        total += log_space_piece(dens, order, law.nu, split, b, 1e-13);
      }
      return total;
    }
    case Kind::TwoSidedParetoHybrid: {
      const HybridLaw& law = *hybrid_;
      double total = 0.0;
      // Center piece on [0, lambda*A].
      const double center_hi = law.lambda * law.core_halfwidth;
      const double dens_center = (1.0 - 2.0 * law.q) * (1.0 - law.rho) /
                                 (2.0 * law.core_halfwidth * law.lambda);
      total += dens_center *
               power_piece(order, std::max(a, 0.0), std::min(b, center_hi));
      // Hump piece on [lambda(B-d), lambda(B+d)].
      const double hump_lo = law.lambda * (law.hump_center - law.hump_halfwidth);
      const double hump_hi = law.lambda * (law.hump_center + law.hump_halfwidth);
      const double dens_hump = (1.0 - 2.0 * law.q) * law.rho /
                               (4.0 * law.hump_halfwidth * law.lambda);
      total += dens_hump *
               power_piece(order, std::max(a, hump_lo), std::min(b, hump_hi));
      // Pareto tail above x0.
      const double u = std::max(a, law.x0);
      if (b > u) {
        if (law.h_raw.is_constant()) {
          const double c_eff =
              std::pow(law.scale, -law.t) * law.h_raw.scale();
          total += const_tail_piece(order, law.t, c_eff, u, b);
        } else {
          auto dens = [&](double x) { return law.density(x); };
          total += log_space_piece(dens, order, law.t, u, b, 1e-13);
        }
      }
      return total;
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Sampling and CSV

std::vector<double> sample(const InnovationModel& model, RngStream stream,
                           std::int64_t count) {
  require(count >= 0, ErrorCode::InvalidArgument, "count must be >= 0");
  Rng rng(stream);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i) {
    out.push_back(model.sample_one(rng));
  }
  return out;
}

void write_survival_csv(const InnovationModel& model,
                        std::span<const double> xs, std::ostream& os) {
  os << "x,survival,density\n";
  char buf[96];
  for (double x : xs) {
    const double s = model.survival(x);
    const double d = model.discrete() ? 0.0 : model.density(x);
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g", x, s, d);
    os << buf << '\n';
  }
}

// ---------------------------------------------------------------------------
// Karamata checks

KaramataReport karamata_check(const SlowlyVaryingFn& l, double theta, double x,
                              double lower_limit) {
  require(theta != -1.0, ErrorCode::InvalidArgument,
          "theta = -1 is the excluded boundary case");
  require(x > lower_limit && lower_limit > 0.0, ErrorCode::InvalidArgument,
          "need x > lower_limit > 0");
  KaramataReport rep;
  rep.theta = theta;
  rep.x = x;
  rep.lower_limit = lower_limit;

  auto integrand = [&](double u) {
    // log substitution y = e^u keeps wide ranges cheap
    const double y = std::exp(u);
    return std::pow(y, theta + 1.0) * l(y);
  };

  if (theta > -1.0) {
    rep.property = 2;
    rep.numeric = integrate(integrand, std::log(lower_limit), std::log(x),
                            1e-10 * std::pow(x, theta + 1.0) * l(x));
    rep.asymptotic = std::pow(x, theta + 1.0) * l(x) / (theta + 1.0);
  } else {
    rep.property = 3;
    auto f = [&](double y) { return std::pow(y, theta) * l(y); };
    rep.numeric =
        integrate_to_inf(f, x, 1e-10 * std::pow(x, theta + 1.0) * l(x));
    rep.asymptotic = std::pow(x, theta + 1.0) * l(x) / (-theta - 1.0);
  }
  rep.ratio = rep.numeric / rep.asymptotic;
  return rep;
}

double karamata_sup_ratio(const SlowlyVaryingFn& l, double eta, double x) {
  require(eta > 0.0 && x > 0.0, ErrorCode::InvalidArgument,
          "need eta > 0 and x > 0");
  auto g = [&](double t) { return std::pow(t, -eta) * l(t); };
  if (l.is_constant() || l.exponent() <= 0.0) {
    return 1.0;  // g is nonincreasing from x on; sup attained at x
  }
  // g decreases once eta >= gamma / ln(e+t) roughly; scan log-spaced points
  // up to that turning radius.
  const double gamma = l.exponent();
  const double turn = std::exp(gamma / eta) * 4.0;
  double sup = g(x);
  if (x < turn) {
    const int steps = 4096;
    const double la = std::log(x), lb = std::log(turn);
    for (int i = 0; i <= steps; ++i) {
      const double t = std::exp(la + (lb - la) * i / steps);
      sup = std::max(sup, g(t));
    }
  }
  return sup / g(x);
}

}  // namespace lrf
