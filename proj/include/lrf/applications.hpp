#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "lrf/fields.hpp"

namespace lrf {

enum class KernelKind { Epanechnikov, GaussianKernel, Flat };

// Fixed-design regression layout: design points on the regular lattice
// z_{j,k} = ((j - j1 + 1/2)/nj, (k - k1 + 1/2)/nk) scaled into [0,1]^d by the
// region bounding box (first coordinate only when dim == 1).
struct RegressionDesign {
  IndexRegion region = IndexRegion::square(1);
  int dim = 2;  // 1 or 2
  KernelKind kernel = KernelKind::Epanechnikov;
  double bandwidth = 0.25;
  std::array<double, 2> eval_point{0.5, 0.5};

  std::array<double, 2> design_point(int j, int k) const;
};

double kernel_eval(KernelKind kind, double u2);  // u2 = squared norm of u

// Normalized smoother weights w_{j,k}(z) over the region bounding box
// (row-major, zero off-region); they sum to one.
struct RegressionWeights {
  IntRect bbox;
  std::vector<double> w;
  double at(int j, int k) const {
    if (!bbox.contains(j, k)) return 0.0;
    const int nk = bbox.k2 - bbox.k1 + 1;
    return w[static_cast<std::size_t>(j - bbox.j1) * nk +
             static_cast<std::size_t>(k - bbox.k1)];
  }
};

RegressionWeights regression_weights(const RegressionDesign& design);

// Weight field of the smoother residual g_n(z) - E g_n(z):
// b_{n,r,s} = Σ w_{j,k}(z) a_{j+r,k+s}; sigma2() is Var(g_n(z)).
WeightTable smoother_weight_table(const RegressionDesign& design,
                                  const CoefficientField& field,
                                  double epsilon,
                                  const BuildOptions& opts = {});

enum class LilMode { UNp, LogLog };

struct LilEnvelope {
  double value = 0.0;        // absolute units
  LilMode mode = LilMode::UNp;
  bool rho_condition_checked = false;
  bool rho_condition_ok = false;  // ρ_n <= (ln n)^{-1/(p-2)}
};

LilEnvelope lil_envelope(const WeightAggregates& agg, double p, double sigma,
                         LilMode mode, std::int64_t n = 0);

// Davis–Gut clock: Ψ(t) = ∫_c^t (s h(s))^{-1} ds for the three weight kinds
//   One:      h(t) = 1,                  c = 1   -> Ψ(t) = ln t
//   LogPow r: h(t) = (ln t)^r / (1-r),   c = 1   -> Ψ(t) = (ln t)^{1-r}
//   Log:      h(t) = ln t,               c = e   -> Ψ(t) = ln ln t
enum class DgWeightKind { One, LogPow, Log };

struct DavisGutSpec {
  DgWeightKind kind = DgWeightKind::One;
  double r = 0.0;        // LogPow exponent, in [0,1)
  double c = 1.0;        // lower integration limit
  double epsilon = 0.0;  // envelope inflation (1+ε)
  double loglog_power_b = 0.0;  // exponent b of Corollary-style weights
};

double dg_weight(const DavisGutSpec& spec, double t);  // h(t)
double psi(const DavisGutSpec& spec, double t);
std::int64_t psi_first_exceed(const DavisGutSpec& spec);  // min n: Ψ(n) > 1

// Series term prob / (n h(n)) and partial sums over ascending n.
double davis_gut_term(const DavisGutSpec& spec, std::int64_t n, double prob);
double series_partial(const DavisGutSpec& spec,
                      const std::map<std::int64_t, double>& probs,
                      std::int64_t n_max);

// Asymptotic stand-in for P(|S_n| > (1+ε) σ_n sqrt(2 ln Ψ(n))):
// Ψ(n)^{-(1+ε)²} / sqrt(ln Ψ(n)), up to a constant factor.
double dg_proxy_prob(const DavisGutSpec& spec, std::int64_t n);

enum class DgCorollary { C31, C32, C33 };

// Convergence of the corollary series, by the case analysis:
//   C31: ε>0 converges, ε<0 diverges, ε=0 converges iff b > 1/2
//   C32: converges iff ε>0 (any r in [0,1))
//   C33: converges iff ε>0
bool davis_gut_converges(const DavisGutSpec& spec, DgCorollary corollary);

}  // namespace lrf
