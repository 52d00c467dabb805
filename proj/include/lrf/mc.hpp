#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lrf/fields.hpp"
#include "lrf/innovations.hpp"

namespace lrf {

struct TailEstimate {
  double x_sigma = 0.0;  // threshold in σ_n units
  double x_abs = 0.0;
  double p_hat = 0.0;
  double std_err = 0.0;
  // Same replicates tallied at the threshold deflated by three remainder
  // standard deviations; coincides with p_hat for exact tables.
  double p_hat_inflated = 0.0;
  std::int64_t n_samples = 0;
  std::uint64_t seed = 0;
  bool two_sided = false;
};

int resolve_worker_count(int requested);

// Plain Monte Carlo for P(S >= x σ_n) (or P(|S| >= x σ_n)): every replicate
// draws one innovation per nonzero window cell, and all thresholds share the
// same replicates. Replicate-indexed substreams make the result bit-identical
// for any worker count.
std::vector<TailEstimate> simulate_tail(const WeightTable& table,
                                        const InnovationModel& model,
                                        std::span<const double> thresholds_sigma,
                                        std::int64_t n_samples,
                                        std::uint64_t seed,
                                        bool two_sided = false,
                                        int workers = 0);

// Same estimator for the truncated sum Σ (b ξ) I(b ξ <= y); thresholds are
// absolute here.
std::vector<TailEstimate> simulate_truncated_tail(
    const WeightTable& table, const InnovationModel& model, double y_abs,
    std::span<const double> thresholds_abs, std::int64_t n_samples,
    std::uint64_t seed, int workers = 0);

// Exact P(S >= threshold) by full enumeration of the 2^k sign patterns of a
// Rademacher-driven table with k <= 24 nonzero weights.
double enumerate_tail(const WeightTable& table, const InnovationModel& model,
                      double threshold_abs);

struct LilReplicationPoint {
  std::string label;
  double u_np = 0.0;
  double envelope_sigma = 0.0;  // sqrt(2 ln U_np^{-1})
  double envelope_abs = 0.0;
  double exceed_freq = 0.0;
  double std_err = 0.0;
  std::int64_t n_reps = 0;
};

// Empirical exceedance frequencies of |S_n| > σ_n sqrt(2 ln U_np^{-1}).
std::vector<LilReplicationPoint> lil_replication(
    std::span<const WeightTable> tables, const InnovationModel& model,
    double p, std::int64_t n_reps, std::uint64_t seed, int workers = 0);

}  // namespace lrf
