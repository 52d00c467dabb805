#pragma once

#include <utility>

#include "lrf/fields.hpp"
#include "lrf/innovations.hpp"
#include "lrf/numerics.hpp"

namespace lrf {

enum class Regime { Moderate, Large, Uniform };

struct DeviationPrediction {
  double x_sigma = 0.0;
  Regime regime = Regime::Moderate;
  double value = 0.0;
  double gaussian_part = 0.0;
  double heavy_part = 0.0;
  bool moderate_ok = false;
  bool large_ok = false;
  bool heavy_dominant = false;
};

// e^{t/2}(t+2)/sqrt(2): the strict lower bound on the admissible constant in
// the large-deviation threshold x >= C_t sqrt(ln U_nt^{-1}).
double large_deviation_ct(double t);

constexpr double kDefaultCtMargin = 0.05;

// Gaussian-regime predictor: value = 1 - Φ(x), flagged valid while
// x² <= 2 ln(U_np^{-1}).
DeviationPrediction moderate_prediction(double x_sigma,
                                        const WeightAggregates& agg, double p);

// Single-big-jump predictor at an absolute threshold: value is the exact sum
// Σ P(b ξ >= x) over the stored positive weights, and heavy_part carries the
// closed power form x^{-t} Σ b^t h_eff(x/b). The two agree to rounding when
// x/b clears the tail threshold for every weight.
DeviationPrediction large_prediction(double x_abs, const WeightTable& table,
                                     const InnovationModel& model,
                                     double ct_margin = kDefaultCtMargin);

// Combined predictor in σ units: value = heavy sum + (1 - Φ(x)).
DeviationPrediction uniform_prediction(double x_sigma, const WeightTable& table,
                                       const WeightAggregates& agg,
                                       const InnovationModel& model, double p,
                                       double ct_margin = kDefaultCtMargin);

struct ValidityRanges {
  double x_moderate_max = 0.0;
  double x_large_min = 0.0;
  bool overlap = false;  // large regime starts inside the moderate range
};

ValidityRanges validity_ranges(const WeightAggregates& agg, double p, double t,
                               double ct_margin = kDefaultCtMargin);

// Exponential-plus-power bound on P(Σ (bξ)^{(y)} >= x):
//   exp(-α² x² / (2 e^m B_n²)) + (A_n(m;0,y) / (β x y^{m-1}))^{β x / y}
// with β = m/(m+2), α = 2/(m+2); A_n and B_n² are assembled from truncated
// moments of the summands b ξ. May exceed 1.
double fuk_nagaev_bound(const WeightTable& table, const InnovationModel& model,
                        double x_abs, double y, double m);

}  // namespace lrf
