#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace lrf {

inline double normal_pdf(double x) {
  return 0.3989422804014326779 * std::exp(-0.5 * x * x);
}

// Φ(x), accurate to full double precision via erfc.
inline double normal_cdf(double x) {
  return 0.5 * std::erfc(-x * 0.7071067811865475244);
}

// 1 - Φ(x), without cancellation for large x.
inline double normal_sf(double x) {
  return 0.5 * std::erfc(x * 0.7071067811865475244);
}

// Sandwich bounds on 1 - Φ(x) for x > 1:
//   (2π)^{-1/2} e^{-x²/2} / (1+x)  <=  1-Φ(x)  <=  (2π)^{-1/2} e^{-x²/2} / x
std::pair<double, double> normal_tail_bounds(double x);

double regularized_incomplete_beta(double a, double b, double x);

// Adaptive Simpson quadrature on [a, b] with an absolute error target.
namespace detail {
inline double simpson_step(double a, double fa, double b, double fb,
                           double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

template <class F>
double adapt(const F& f, double a, double fa, double b, double fb, double m,
             double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson_step(a, fa, m, fm, flm);
  const double right = simpson_step(m, fm, b, fb, frm);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return adapt(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adapt(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

template <class F>
double integrate(const F& f, double a, double b, double abs_tol,
                 int max_depth = 48) {
  if (a == b) return 0.0;
  const double fa = f(a), fb = f(b), m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = detail::simpson_step(a, fa, b, fb, fm);
  return detail::adapt(f, a, fa, b, fb, m, fm, whole, abs_tol, max_depth);
}

// Adaptive quadrature over segments of bounded width; robust for integrands
// whose mass is localized somewhere inside a wide interval (a single
// adaptive pass can step straight over a narrow bump).
template <class F>
double integrate_segmented(const F& f, double a, double b, double abs_tol,
                           double max_seg) {
  if (a >= b) return 0.0;
  const int n_seg =
      std::max(1, static_cast<int>(std::ceil((b - a) / max_seg)));
  double total = 0.0;
  for (int i = 0; i < n_seg; ++i) {
    const double lo = a + (b - a) * i / n_seg;
    const double hi = a + (b - a) * (i + 1) / n_seg;
    total += integrate(f, lo, hi, abs_tol / n_seg);
  }
  return total;
}

// ∫_a^∞ f, via the substitution x = a + u/(1-u) on u ∈ [0,1).
template <class F>
double integrate_to_inf(const F& f, double a, double abs_tol) {
  auto g = [&](double u) {
    if (u >= 1.0) return 0.0;
    const double d = 1.0 - u;
    const double x = a + u / d;
    return f(x) / (d * d);
  };
  return integrate(g, 0.0, 1.0 - 1e-14, abs_tol);
}

// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

std::uint64_t fnv1a64(std::string_view data);

}  // namespace lrf
