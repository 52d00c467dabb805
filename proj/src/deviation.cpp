#include "lrf/deviation.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace lrf {

double large_deviation_ct(double t) {
  return std::exp(0.5 * t) * (t + 2.0) / std::sqrt(2.0);
}

namespace {

double moderate_x_max(const WeightAggregates& agg, double p) {
  const auto it = agg.U.find(p);
  require(it != agg.U.end(), ErrorCode::InvalidArgument,
          "aggregates were not computed for exponent p");
  const double u_np = it->second;
  require(u_np < 1.0, ErrorCode::InvalidRegime,
          "U_np >= 1: moderate validity range is empty");
  return std::sqrt(2.0 * std::log(1.0 / u_np));
}

double large_x_min(const WeightAggregates& agg, double t, double ct_margin) {
  const auto it = agg.U.find(t);
  require(it != agg.U.end(), ErrorCode::InvalidArgument,
          "aggregates were not computed for exponent t");
  const double u_nt = it->second;
  require(u_nt < 1.0, ErrorCode::InvalidRegime,
          "U_nt >= 1: large-deviation threshold undefined");
  return large_deviation_ct(t) * (1.0 + ct_margin) *
         std::sqrt(std::log(1.0 / u_nt));
}

// Validity flags degrade to "not certified" at the degenerate U >= 1
// boundary (a single effective weight) instead of failing the whole
// prediction; the closed-form value is still well defined there.
bool moderate_flag(const WeightAggregates& agg, double p, double x_sigma) {
  const auto it = agg.U.find(p);
  require(it != agg.U.end(), ErrorCode::InvalidArgument,
          "aggregates were not computed for exponent p");
  if (it->second >= 1.0) return false;
  return x_sigma <= std::sqrt(2.0 * std::log(1.0 / it->second));
}

bool large_flag(const WeightAggregates& agg, double t, double ct_margin,
                double x_sigma) {
  const auto it = agg.U.find(t);
  require(it != agg.U.end(), ErrorCode::InvalidArgument,
          "aggregates were not computed for exponent t");
  if (it->second >= 1.0) return false;
  return x_sigma >= large_deviation_ct(t) * (1.0 + ct_margin) *
                        std::sqrt(std::log(1.0 / it->second));
}

// Σ P(b ξ >= x) and the power form x^{-t} Σ b^t h_eff(x/b), over the stored
// positive weights (exact zeros contribute nothing and are skipped).
struct HeavySums {
  double exact = 0.0;
  double power_form = 0.0;
};

HeavySums heavy_sums(std::span<const double> weights, double x,
                     const InnovationModel& model) {
  require(model.tail().has_value(), ErrorCode::InvalidArgument,
          "innovation model carries no tail descriptor");
  const TailDescriptor& tail = *model.tail();
  HeavySums out;
  for (double b : weights) {
    if (b == 0.0) continue;
    require(b > 0.0, ErrorCode::NegativeWeight,
            "heavy-tail predictions need positive weights");
    const double u = x / b;
    out.exact += model.survival(u);
    out.power_form += tail.effective_h(u) / std::pow(u, tail.t);
  }
  return out;
}

}  // namespace

DeviationPrediction moderate_prediction(double x_sigma,
                                        const WeightAggregates& agg,
                                        double p) {
  require(x_sigma >= 0.0, ErrorCode::InvalidArgument, "x must be >= 0");
  require(p > 2.0, ErrorCode::InvalidArgument, "p must exceed 2");
  DeviationPrediction pred;
  pred.x_sigma = x_sigma;
  pred.regime = Regime::Moderate;
  pred.gaussian_part = normal_sf(x_sigma);
  pred.value = pred.gaussian_part;
  pred.moderate_ok = x_sigma <= moderate_x_max(agg, p);
  return pred;
}

DeviationPrediction large_prediction(double x_abs, const WeightTable& table,
                                     const InnovationModel& model,
                                     double ct_margin) {
  require(x_abs > 0.0, ErrorCode::InvalidArgument, "x must be positive");
  require(table.min_weight() >= 0.0, ErrorCode::NegativeWeight,
          "large-deviation prediction requires nonnegative stored weights");
  require(model.tail().has_value(), ErrorCode::InvalidArgument,
          "innovation model carries no tail descriptor");
  const double t = model.tail()->t;

  DeviationPrediction pred;
  pred.regime = Regime::Large;
  pred.x_sigma = x_abs / table.sigma();
  const HeavySums sums = heavy_sums(table.values(), x_abs, model);
  pred.value = std::min(1.0, sums.exact);
  pred.heavy_part = sums.power_form;
  pred.gaussian_part = normal_sf(pred.x_sigma);
  pred.heavy_dominant = true;

  const double exps[] = {t};
  const WeightAggregates agg = aggregates(table, exps);
  pred.large_ok = large_flag(agg, t, ct_margin, pred.x_sigma);
  return pred;
}

DeviationPrediction uniform_prediction(double x_sigma,
                                       const WeightTable& table,
                                       const WeightAggregates& agg,
                                       const InnovationModel& model, double p,
                                       double ct_margin) {
  require(x_sigma > 0.0, ErrorCode::InvalidArgument, "x must be positive");
  require(model.tail().has_value(), ErrorCode::InvalidArgument,
          "innovation model carries no tail descriptor");
  const double t = model.tail()->t;
  require(p > 2.0 && p < t, ErrorCode::InvalidArgument,
          "uniform predictor needs p in (2, t)");
  require(table.min_weight() >= 0.0, ErrorCode::NegativeWeight,
          "uniform prediction requires nonnegative stored weights");

  DeviationPrediction pred;
  pred.regime = Regime::Uniform;
  pred.x_sigma = x_sigma;
  pred.gaussian_part = normal_sf(x_sigma);

  // Heavy sum over σ-normalized weights: P(S >= xσ) terms are P(b/σ ξ >= x).
  const double sigma = table.sigma();
  std::vector<double> normalized;
  normalized.reserve(static_cast<std::size_t>(table.nonzero_count()));
  for (double b : table.values()) {
    if (b != 0.0) normalized.push_back(b / sigma);
  }
  const HeavySums sums = heavy_sums(normalized, x_sigma, model);
  pred.heavy_part = sums.exact;
  pred.value = std::min(1.0, pred.heavy_part + pred.gaussian_part);
  pred.heavy_dominant = pred.heavy_part > pred.gaussian_part;
  pred.moderate_ok = moderate_flag(agg, p, x_sigma);
  pred.large_ok = large_flag(agg, t, ct_margin, x_sigma);
  return pred;
}

ValidityRanges validity_ranges(const WeightAggregates& agg, double p, double t,
                               double ct_margin) {
  require(p > 2.0, ErrorCode::InvalidArgument, "p must exceed 2");
  require(t > 2.0, ErrorCode::InvalidArgument, "t must exceed 2");
  ValidityRanges vr;
  vr.x_moderate_max = moderate_x_max(agg, p);
  vr.x_large_min = large_x_min(agg, t, ct_margin);
  vr.overlap = vr.x_large_min <= vr.x_moderate_max;
  return vr;
}

double fuk_nagaev_bound(const WeightTable& table, const InnovationModel& model,
                        double x_abs, double y, double m) {
  require(x_abs > 0.0 && y > 0.0, ErrorCode::InvalidArgument,
          "x and y must be positive");
  require(m >= 2.0, ErrorCode::InvalidArgument, "m must be >= 2");
  require(model.symmetric(), ErrorCode::UnsupportedModel,
          "moment assembly assumes a symmetric innovation law");
  if (std::isfinite(model.moment_order_sup())) {
    require(m < model.moment_order_sup(), ErrorCode::NonintegrableMoment,
            "m must stay below the tail index for heavy-tailed innovations");
  }

  const double beta = m / (m + 2.0);
  const double alpha = 2.0 / (m + 2.0);

  // A_n(m;0,y) = Σ E[(bξ)^m I(0 < bξ < y)], B_n² = Σ E[(bξ)² I(bξ < y)].
  // Symmetry of ξ makes the sign of b immaterial.
  double a_n = 0.0;
  double b_n2 = 0.0;
  for (double b : table.values()) {
    if (b == 0.0) continue;
    const double ab = std::abs(b);
    a_n += std::pow(ab, m) * model.truncated_moment(m, 0.0, y / ab);
    b_n2 += ab * ab *
            model.truncated_moment(2.0, -std::numeric_limits<double>::infinity(),
                                   y / ab);
  }
  const double term1 =
      b_n2 > 0.0
          ? std::exp(-alpha * alpha * x_abs * x_abs /
                     (2.0 * std::exp(m) * b_n2))
          : 0.0;
  const double term2 =
      a_n > 0.0
          ? std::pow(a_n / (beta * x_abs * std::pow(y, m - 1.0)),
                     beta * x_abs / y)
          : 0.0;
  return term1 + term2;
}

}  // namespace lrf
