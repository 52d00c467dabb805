#include "lrf/applications.hpp"

#include <cmath>

namespace lrf {

std::array<double, 2> RegressionDesign::design_point(int j, int k) const {
  const IntRect bbox = region.bounding_box();
  const double nj = static_cast<double>(bbox.j2 - bbox.j1 + 1);
  const double nk = static_cast<double>(bbox.k2 - bbox.k1 + 1);
  return {(j - bbox.j1 + 0.5) / nj, (k - bbox.k1 + 0.5) / nk};
}

double kernel_eval(KernelKind kind, double u2) {
  switch (kind) {
    case KernelKind::Epanechnikov:
      return u2 < 1.0 ? 1.0 - u2 : 0.0;
    case KernelKind::GaussianKernel:
      return std::exp(-0.5 * u2);
    case KernelKind::Flat:
      return 1.0;
  }
  return 0.0;
}

RegressionWeights regression_weights(const RegressionDesign& design) {
  require(design.dim == 1 || design.dim == 2, ErrorCode::InvalidArgument,
          "design dimension must be 1 or 2");
  require(design.bandwidth > 0.0, ErrorCode::InvalidArgument,
          "bandwidth must be positive");

  const IntRect bbox = design.region.bounding_box();
  const int nk = bbox.k2 - bbox.k1 + 1;
  const int nj = bbox.j2 - bbox.j1 + 1;
  RegressionWeights out;
  out.bbox = bbox;
  out.w.assign(static_cast<std::size_t>(nj) * nk, 0.0);

  double total = 0.0;
  for (int j = bbox.j1; j <= bbox.j2; ++j) {
    for (int k = bbox.k1; k <= bbox.k2; ++k) {
      if (!design.region.contains(j, k)) continue;
      const std::array<double, 2> z = design.design_point(j, k);
      double u2 = 0.0;
      for (int d = 0; d < design.dim; ++d) {
        const double u = (design.eval_point[d] - z[d]) / design.bandwidth;
        u2 += u * u;
      }
      const double kv = kernel_eval(design.kernel, u2);
      out.w[static_cast<std::size_t>(j - bbox.j1) * nk +
            static_cast<std::size_t>(k - bbox.k1)] = kv;
      total += kv;
    }
  }
  require(total > 0.0, ErrorCode::EmptyKernelSupport,
          "every kernel evaluation vanished at the requested point");
  for (double& v : out.w) v /= total;
  return out;
}

WeightTable smoother_weight_table(const RegressionDesign& design,
                                  const CoefficientField& field,
                                  double epsilon, const BuildOptions& opts) {
  const RegressionWeights w = regression_weights(design);
  BuildOptions local = opts;
  if (local.label.empty()) {
    local.label = "smoother:" + design.region.describe();
  }
  return build_weighted_table(field, design.region, w.w, epsilon, local);
}

LilEnvelope lil_envelope(const WeightAggregates& agg, double p, double sigma,
                         LilMode mode, std::int64_t n) {
  require(p > 2.0, ErrorCode::InvalidArgument, "p must exceed 2");
  require(sigma > 0.0, ErrorCode::InvalidArgument, "sigma must be positive");
  const auto it = agg.U.find(p);
  require(it != agg.U.end(), ErrorCode::InvalidArgument,
          "aggregates were not computed for exponent p");
  const double u_np = it->second;
  require(u_np < 1.0, ErrorCode::InvalidRegime,
          "U_np >= 1: envelope undefined");

  LilEnvelope env;
  env.mode = mode;
  if (mode == LilMode::UNp) {
    env.value = sigma * std::sqrt(2.0 * std::log(1.0 / u_np));
    return env;
  }
  require(n >= 3, ErrorCode::InvalidArgument, "loglog mode needs n >= 3");
  env.value = sigma * std::sqrt(2.0 * std::log(std::log(
                                    static_cast<double>(n))));
  env.rho_condition_checked = true;
  const double rho = std::sqrt(agg.rho2);
  env.rho_condition_ok =
      rho <= std::pow(std::log(static_cast<double>(n)), -1.0 / (p - 2.0));
  return env;
}

// ---------------------------------------------------------------------------
// Davis–Gut

namespace {
void validate_spec(const DavisGutSpec& spec) {
  switch (spec.kind) {
    case DgWeightKind::One:
      require(spec.c >= 1.0, ErrorCode::InvalidArgument, "need c >= 1");
      break;
    case DgWeightKind::LogPow:
      require(spec.r >= 0.0 && spec.r < 1.0, ErrorCode::InvalidArgument,
              "LogPow exponent must lie in [0,1)");
      require(spec.c >= 1.0, ErrorCode::InvalidArgument, "need c >= 1");
      break;
    case DgWeightKind::Log:
      require(spec.c > 1.0, ErrorCode::InvalidArgument,
              "Log weight needs c > 1");
      break;
  }
}
}  // namespace

double dg_weight(const DavisGutSpec& spec, double t) {
  validate_spec(spec);
  require(t >= spec.c, ErrorCode::InvalidArgument, "t must be >= c");
  switch (spec.kind) {
    case DgWeightKind::One:
      return 1.0;
    case DgWeightKind::LogPow:
      return std::pow(std::log(t), spec.r) / (1.0 - spec.r);
    case DgWeightKind::Log:
      return std::log(t);
  }
  return 1.0;
}

double psi(const DavisGutSpec& spec, double t) {
  validate_spec(spec);
  require(t >= spec.c, ErrorCode::InvalidArgument, "t must be >= c");
  switch (spec.kind) {
    case DgWeightKind::One:
      return std::log(t / spec.c);
    case DgWeightKind::LogPow: {
      const double e = 1.0 - spec.r;
      const double base = spec.c > 1.0 ? std::pow(std::log(spec.c), e) : 0.0;
      return std::pow(std::log(t), e) - base;
    }
    case DgWeightKind::Log:
      return std::log(std::log(t)) - std::log(std::log(spec.c));
  }
  return 0.0;
}

std::int64_t psi_first_exceed(const DavisGutSpec& spec) {
  validate_spec(spec);
  std::int64_t n = static_cast<std::int64_t>(std::ceil(spec.c));
  if (static_cast<double>(n) < spec.c) ++n;
  n = std::max<std::int64_t>(n, 1);
  // Ψ is increasing and unbounded, so a forward scan terminates; jump ahead
  // geometrically first to keep this cheap for slowly growing clocks.
  std::int64_t lo = n;
  while (psi(spec, static_cast<double>(lo)) <= 1.0) {
    std::int64_t next = lo * 2;
    if (psi(spec, static_cast<double>(next)) > 1.0) {
      // binary search in (lo, next]
      std::int64_t a = lo, b = next;
      while (a + 1 < b) {
        const std::int64_t mid = a + (b - a) / 2;
        (psi(spec, static_cast<double>(mid)) > 1.0 ? b : a) = mid;
      }
      return b;
    }
    lo = next;
    require(lo < (std::int64_t(1) << 62), ErrorCode::InvalidArgument,
            "psi never exceeds 1 in representable range");
  }
  return lo;
}

double davis_gut_term(const DavisGutSpec& spec, std::int64_t n, double prob) {
  require(prob >= 0.0 && prob <= 1.0, ErrorCode::InvalidArgument,
          "prob must lie in [0,1]");
  require(n >= psi_first_exceed(spec), ErrorCode::InvalidArgument,
          "series terms start at the first n with psi(n) > 1");
  return prob / (static_cast<double>(n) * dg_weight(spec, static_cast<double>(n)));
}

double series_partial(const DavisGutSpec& spec,
                      const std::map<std::int64_t, double>& probs,
                      std::int64_t n_max) {
  double total = 0.0;
  for (const auto& [n, prob] : probs) {
    if (n > n_max) break;
    total += davis_gut_term(spec, n, prob);
  }
  return total;
}

double dg_proxy_prob(const DavisGutSpec& spec, std::int64_t n) {
  const double psi_n = psi(spec, static_cast<double>(n));
  require(psi_n > 1.0, ErrorCode::InvalidArgument,
          "proxy needs psi(n) > 1");
  const double e = 1.0 + spec.epsilon;
  return std::pow(psi_n, -e * e) / std::sqrt(std::log(psi_n));
}

bool davis_gut_converges(const DavisGutSpec& spec, DgCorollary corollary) {
  const double eps = spec.epsilon;
  switch (corollary) {
    case DgCorollary::C31:
      if (eps > 0.0) return true;
      if (eps < 0.0) return false;
      return spec.loglog_power_b > 0.5;
    case DgCorollary::C32:
      require(spec.r >= 0.0 && spec.r < 1.0, ErrorCode::InvalidArgument,
              "C32 needs r in [0,1)");
      return eps > 0.0;
    case DgCorollary::C33:
      return eps > 0.0;
  }
  return false;
}

}  // namespace lrf
