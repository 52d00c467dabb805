#include "lrf/mc.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <thread>

#include "lrf/numerics.hpp"

namespace lrf {

namespace {

// Nonzero weights of a table, in fixed scan order. Zero cells carry no
// information, so skipping them changes neither the law of S nor the
// deterministic replicate streams.
std::vector<double> nonzero_weights(const WeightTable& table) {
  std::vector<double> w;
  w.reserve(static_cast<std::size_t>(table.nonzero_count()));
  for (double v : table.values()) {
    if (v != 0.0) w.push_back(v);
  }
  return w;
}

// --- per-kind samplers for the hot replicate loops -------------------------

struct GaussianSampler {
  explicit GaussianSampler(const InnovationModel&) {}
  double operator()(Rng& rng) const { return rng.next_normal(); }
};

struct UniformSampler {
  explicit UniformSampler(const InnovationModel&) {}
  double operator()(Rng& rng) const {
    // folded form of sqrt(3) * (2u - 1) with u on [0,1)
    constexpr double kScale = 0x1.0p-52 * 1.7320508075688772935;
    return static_cast<double>(rng.next_u64() >> 11) * kScale -
           1.7320508075688772935;
  }
};

struct StudentSampler {
  explicit StudentSampler(const InnovationModel& m) : law(m.student()) {}
  double operator()(Rng& rng) const { return law.sample(rng); }
  StudentLaw law;
};

struct HybridSampler {
  explicit HybridSampler(const InnovationModel& m) : law(m.hybrid()) {}
  double operator()(Rng& rng) const { return law.sample(rng); }
  HybridLaw law;
};

// Rademacher signs are consumed 64 per word; the buffer is replicate-local
// and the ±1 is assembled branch-free (a predicted-random branch here costs
// more than the whole draw).
struct RademacherSampler {
  explicit RademacherSampler(const InnovationModel&) {}
  double operator()(Rng& rng) {
    if (left == 0) {
      buf = rng.next_u64();
      left = 64;
    }
    const std::uint64_t sign_bit = ((buf & 1) ^ 1) << 63;
    buf >>= 1;
    --left;
    return std::bit_cast<double>(0x3FF0000000000000ULL | sign_bit);
  }
  std::uint64_t buf = 0;
  int left = 0;
};

struct Tally {
  std::vector<std::int64_t> hits;
};

// Runs replicates [lo, hi) against sorted thresholds, bumping a histogram at
// the largest threshold not exceeding the replicate statistic. Each replicate
// owns two substreams (2·rep and 2·rep+1) consumed by alternating cells; the
// two independent generator chains overlap in the pipeline, which roughly
// doubles draw throughput without touching the scheduling-independence
// contract.
template <class Sampler>
void run_replicates(const InnovationModel& model, std::span<const double> w,
                    std::uint64_t seed, std::int64_t lo, std::int64_t hi,
                    std::span<const double> thresholds, bool two_sided,
                    double truncate_y, Tally& tally) {
  const std::size_t m = w.size();
  const std::size_t k = thresholds.size();
  std::vector<std::int64_t> hist(k + 1, 0);
  const bool truncated = std::isfinite(truncate_y);

  for (std::int64_t rep = lo; rep < hi; ++rep) {
    Rng rng0(RngStream{seed, 2 * static_cast<std::uint64_t>(rep)});
    Rng rng1(RngStream{seed, 2 * static_cast<std::uint64_t>(rep) + 1});
    Sampler draw0(model);
    Sampler draw1(model);
    double s0 = 0.0, s1 = 0.0;
    std::size_t i = 0;
    if (truncated) {
      for (; i + 1 < m; i += 2) {
        const double t0 = w[i] * draw0(rng0);
        const double t1 = w[i + 1] * draw1(rng1);
        if (t0 <= truncate_y) s0 += t0;
        if (t1 <= truncate_y) s1 += t1;
      }
      if (i < m) {
        const double t0 = w[i] * draw0(rng0);
        if (t0 <= truncate_y) s0 += t0;
      }
    } else {
      for (; i + 1 < m; i += 2) {
        s0 += w[i] * draw0(rng0);
        s1 += w[i + 1] * draw1(rng1);
      }
      if (i < m) s0 += w[i] * draw0(rng0);
    }
    const double s = s0 + s1;
    const double stat = two_sided ? std::abs(s) : s;
    // first index with threshold > stat
    std::size_t idx = 0;
    while (idx < k && thresholds[idx] <= stat) ++idx;
    ++hist[idx];
  }
  for (std::size_t i2 = 0; i2 <= k; ++i2) tally.hits[i2] += hist[i2];
}

template <class Sampler>
void run_partitioned(const InnovationModel& model, std::span<const double> w,
                     std::uint64_t seed, std::int64_t n_samples,
                     std::span<const double> thresholds, bool two_sided,
                     double truncate_y, int workers, Tally& total) {
  if (workers <= 1 || n_samples < 4096) {
    run_replicates<Sampler>(model, w, seed, 0, n_samples, thresholds,
                            two_sided, truncate_y, total);
    return;
  }
  std::vector<Tally> parts(static_cast<std::size_t>(workers));
  for (auto& p : parts) p.hits.assign(thresholds.size() + 1, 0);
  std::atomic<std::int64_t> next_chunk{0};
  const std::int64_t chunk = 1 << 16;
  const std::int64_t n_chunks = (n_samples + chunk - 1) / chunk;

  auto work = [&](int wi) {
    for (;;) {
      const std::int64_t c = next_chunk.fetch_add(1);
      if (c >= n_chunks) break;
      const std::int64_t lo = c * chunk;
      const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n_samples);
      run_replicates<Sampler>(model, w, seed, lo, hi, thresholds, two_sided,
                              truncate_y, parts[static_cast<std::size_t>(wi)]);
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i) threads.emplace_back(work, i);
  for (auto& t : threads) t.join();
  // Integer merge: associative and order-free, so the partition is
  // irrelevant to the result.
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < total.hits.size(); ++i) {
      total.hits[i] += p.hits[i];
    }
  }
}

Tally tally_thresholds(const InnovationModel& model, std::span<const double> w,
                       std::uint64_t seed, std::int64_t n_samples,
                       std::span<const double> thresholds, bool two_sided,
                       double truncate_y, int workers) {
  Tally total;
  total.hits.assign(thresholds.size() + 1, 0);
  switch (model.kind()) {
    case InnovationModel::Kind::Gaussian:
      run_partitioned<GaussianSampler>(model, w, seed, n_samples, thresholds,
                                       two_sided, truncate_y, workers, total);
      break;
    case InnovationModel::Kind::Rademacher:
      run_partitioned<RademacherSampler>(model, w, seed, n_samples, thresholds,
                                         two_sided, truncate_y, workers, total);
      break;
    case InnovationModel::Kind::UniformCentered:
      run_partitioned<UniformSampler>(model, w, seed, n_samples, thresholds,
                                      two_sided, truncate_y, workers, total);
      break;
    case InnovationModel::Kind::StudentLike:
      run_partitioned<StudentSampler>(model, w, seed, n_samples, thresholds,
                                      two_sided, truncate_y, workers, total);
      break;
    case InnovationModel::Kind::TwoSidedParetoHybrid:
      run_partitioned<HybridSampler>(model, w, seed, n_samples, thresholds,
                                     two_sided, truncate_y, workers, total);
      break;
  }
  return total;
}

}  // namespace

int resolve_worker_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LRF_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

std::vector<TailEstimate> simulate_tail(const WeightTable& table,
                                        const InnovationModel& model,
                                        std::span<const double> thresholds_sigma,
                                        std::int64_t n_samples,
                                        std::uint64_t seed, bool two_sided,
                                        int workers) {
  require(n_samples >= 1, ErrorCode::InvalidArgument,
          "n_samples must be >= 1");
  require(!thresholds_sigma.empty(), ErrorCode::InvalidArgument,
          "at least one threshold is required");
  require(std::is_sorted(thresholds_sigma.begin(), thresholds_sigma.end()),
          ErrorCode::InvalidArgument, "thresholds must be sorted ascending");

  const std::vector<double> w = nonzero_weights(table);
  const double sigma = table.sigma();
  const double deflate =
      3.0 * sigma * std::sqrt(table.truncation_epsilon());

  // Raw thresholds plus their remainder-deflated companions, tallied in one
  // pass over shared replicates.
  std::vector<double> merged;
  for (double x : thresholds_sigma) {
    merged.push_back(x * sigma);
    if (deflate > 0.0) merged.push_back(x * sigma - deflate);
  }
  std::sort(merged.begin(), merged.end());
  merged.erase(std::unique(merged.begin(), merged.end()), merged.end());

  const Tally tally =
      tally_thresholds(model, w, seed, n_samples, merged, two_sided,
                       std::numeric_limits<double>::infinity(),
                       resolve_worker_count(workers));

  // Suffix sums convert the histogram to exceedance counts per threshold.
  std::vector<std::int64_t> exceed(merged.size());
  std::int64_t acc = 0;
  for (std::size_t i = merged.size(); i-- > 0;) {
    acc += tally.hits[i + 1];
    exceed[i] = acc;
  }
  auto exceed_at = [&](double x_abs) {
    const auto it = std::lower_bound(merged.begin(), merged.end(), x_abs);
    return exceed[static_cast<std::size_t>(it - merged.begin())];
  };

  std::vector<TailEstimate> out;
  out.reserve(thresholds_sigma.size());
  for (double x : thresholds_sigma) {
    TailEstimate e;
    e.x_sigma = x;
    e.x_abs = x * sigma;
    e.n_samples = n_samples;
    e.seed = seed;
    e.two_sided = two_sided;
    const double n = static_cast<double>(n_samples);
    e.p_hat = static_cast<double>(exceed_at(e.x_abs)) / n;
    e.p_hat_inflated =
        deflate > 0.0
            ? static_cast<double>(exceed_at(e.x_abs - deflate)) / n
            : e.p_hat;
    e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
    out.push_back(e);
  }
  return out;
}

std::vector<TailEstimate> simulate_truncated_tail(
    const WeightTable& table, const InnovationModel& model, double y_abs,
    std::span<const double> thresholds_abs, std::int64_t n_samples,
    std::uint64_t seed, int workers) {
  require(n_samples >= 1, ErrorCode::InvalidArgument,
          "n_samples must be >= 1");
  require(y_abs > 0.0, ErrorCode::InvalidArgument,
          "truncation level must be positive");
  require(std::is_sorted(thresholds_abs.begin(), thresholds_abs.end()),
          ErrorCode::InvalidArgument, "thresholds must be sorted ascending");

  const std::vector<double> w = nonzero_weights(table);
  std::vector<double> merged(thresholds_abs.begin(), thresholds_abs.end());
  const Tally tally =
      tally_thresholds(model, w, seed, n_samples, merged, /*two_sided=*/false,
                       y_abs, resolve_worker_count(workers));

  std::vector<TailEstimate> out;
  std::int64_t acc = 0;
  std::vector<std::int64_t> exceed(merged.size());
  for (std::size_t i = merged.size(); i-- > 0;) {
    acc += tally.hits[i + 1];
    exceed[i] = acc;
  }
  const double n = static_cast<double>(n_samples);
  const double sigma = table.sigma();
  for (std::size_t i = 0; i < merged.size(); ++i) {
    TailEstimate e;
    e.x_abs = merged[i];
    e.x_sigma = merged[i] / sigma;
    e.p_hat = static_cast<double>(exceed[i]) / n;
    e.p_hat_inflated = e.p_hat;
    e.std_err = std::sqrt(e.p_hat * (1.0 - e.p_hat) / n);
    e.n_samples = n_samples;
    e.seed = seed;
    out.push_back(e);
  }
  return out;
}

double enumerate_tail(const WeightTable& table, const InnovationModel& model,
                      double threshold_abs) {
  require(model.kind() == InnovationModel::Kind::Rademacher,
          ErrorCode::UnsupportedModel,
          "exact enumeration supports Rademacher innovations");
  const std::vector<double> w = nonzero_weights(table);
  require(w.size() <= 24, ErrorCode::TooManyAtoms,
          "enumeration is capped at 24 nonzero weights, got " +
              std::to_string(w.size()));
  require(!w.empty(), ErrorCode::DegenerateField, "no nonzero weights");

  const std::uint32_t k = static_cast<std::uint32_t>(w.size());
  const std::uint64_t states = std::uint64_t(1) << k;

  // Gray-code walk: one sign flip per step.
  double s = 0.0;
  std::vector<double> sign(w.size(), -1.0);
  for (double v : w) s -= v;
  std::uint64_t count = (s >= threshold_abs) ? 1 : 0;
  for (std::uint64_t g = 1; g < states; ++g) {
    const int j = std::countr_zero(g);
    sign[static_cast<std::size_t>(j)] = -sign[static_cast<std::size_t>(j)];
    s += 2.0 * sign[static_cast<std::size_t>(j)] * w[static_cast<std::size_t>(j)];
    if (s >= threshold_abs) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(states);
}

std::vector<LilReplicationPoint> lil_replication(
    std::span<const WeightTable> tables, const InnovationModel& model,
    double p, std::int64_t n_reps, std::uint64_t seed, int workers) {
  require(p > 2.0, ErrorCode::InvalidArgument, "moment order p must exceed 2");
  std::vector<LilReplicationPoint> out;
  std::uint64_t table_index = 0;
  for (const WeightTable& table : tables) {
    const double exps[] = {p};
    const WeightAggregates agg = aggregates(table, exps);
    const double u_np = agg.U.at(p);
    require(u_np < 1.0, ErrorCode::InvalidRegime,
            "U_np >= 1: LIL envelope undefined for " + table.label());
    const double x = std::sqrt(2.0 * std::log(1.0 / u_np));

    // Per-table seed offset keeps tables independent under one master seed.
    std::uint64_t mix_state = seed + 0x51ED2701ULL * (table_index + 1);
    const std::uint64_t table_seed = splitmix64(mix_state);
    const double thr[] = {x};
    const std::vector<TailEstimate> est = simulate_tail(
        table, model, thr, n_reps, table_seed, /*two_sided=*/true, workers);

    LilReplicationPoint pt;
    pt.label = table.label();
    pt.u_np = u_np;
    pt.envelope_sigma = x;
    pt.envelope_abs = x * table.sigma();
    pt.exceed_freq = est[0].p_hat;
    pt.std_err = est[0].std_err;
    pt.n_reps = n_reps;
    out.push_back(pt);
    ++table_index;
  }
  return out;
}

}  // namespace lrf
