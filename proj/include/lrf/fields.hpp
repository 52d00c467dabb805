#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lrf/errors.hpp"
#include "lrf/slowly_varying.hpp"

namespace lrf {

struct IntRect {
  int j1 = 0, j2 = 0, k1 = 0, k2 = 0;  // inclusive bounds

  std::int64_t area() const {
    return static_cast<std::int64_t>(j2 - j1 + 1) *
           static_cast<std::int64_t>(k2 - k1 + 1);
  }
  bool contains(int j, int k) const {
    return j >= j1 && j <= j2 && k >= k1 && k <= k2;
  }
  bool intersects(const IntRect& o) const {
    return j1 <= o.j2 && o.j1 <= j2 && k1 <= o.k2 && o.k1 <= k2;
  }
};

// Bounded piecewise-constant profile on the unit circle. Sector i covers
// angles in (boundary[i-1], boundary[i]] with boundaries in (-pi, pi].
class AngularProfile {
 public:
  static AngularProfile constant_one();
  static AngularProfile piecewise(std::vector<double> boundaries,
                                  std::vector<double> values);

  double eval(double ux, double uy) const;
  double max_abs() const;
  double min_value() const;
  bool is_constant_one() const { return boundaries_.empty(); }

  const std::vector<double>& boundaries() const { return boundaries_; }
  const std::vector<double>& values() const { return values_; }

 private:
  AngularProfile() = default;
  std::vector<double> boundaries_;  // empty means constant 1
  std::vector<double> values_;
};

struct FieldAtom {
  int r = 0, s = 0;
  double value = 0.0;
};

// Parametric coefficient family a_{r,s}. All kinds are square summable by
// construction; norms, decay envelopes, and certified tail sums are available
// analytically, which is what drives window sizing and truncation
// certificates downstream.
class CoefficientField {
 public:
  enum class Kind { FiniteSupport, Geometric, LongRange };

  static CoefficientField finite_support(std::vector<FieldAtom> atoms);
  // a_{r,s} = amplitude * ratio^{|r|+|s|}, ratio in (0,1). Short range:
  // the l1 norm is finite in closed form.
  static CoefficientField geometric(double amplitude, double ratio);
  // a_{r,s} = (|r|+|s|)^{-beta} L(|r|+|s|) b(r/rho, s/rho) off the origin
  // (rho = sqrt(r^2+s^2)) and a_{0,0} = a00. Requires beta in (1,2).
  static CoefficientField long_range(double beta, SlowlyVaryingFn slowly_varying,
                                     AngularProfile angular, double a00 = 0.0);

  Kind kind() const { return kind_; }
  bool has_finite_support() const { return kind_ == Kind::FiniteSupport; }
  double at(int r, int s) const;

  const std::vector<FieldAtom>& atoms() const;
  double geometric_amplitude() const { return amplitude_; }
  double geometric_ratio() const { return ratio_; }
  double beta() const { return beta_; }
  const SlowlyVaryingFn& slowly_varying() const { return slowly_varying_; }
  const AngularProfile& angular() const { return angular_; }
  double a00() const { return a00_; }

  // Σ|a|; +inf for the long-range kind.
  double l1_norm() const;
  // Σ a over all of Z²; finite kinds only.
  double coefficient_sum() const;
  // Certified upper bound on Σ|a|^p (+inf when the sum diverges).
  double lp_sum_upper(double p) const;
  bool nonnegative() const;

  // Decay envelope by l1 radius m >= 1: certified sup of |a| over all cells
  // with |r|+|s| >= m, and inf of a over the ring |r|+|s| = m (0 when no
  // positive lower envelope exists).
  double ring_env_hi(double m) const;
  double ring_env_lo(double m) const;

  struct TailSums {
    double weighted = 0.0;  // Σ_{m>=m0} 4m * env(m)^t
    double flat = 0.0;      // Σ_{m>=m0} 4  * env(m)^t
  };
  // Certified upper bounds; +inf when divergent. m0 >= 1.
  TailSums env_tail_sums(double t, double m0) const;
  // Certified lower bound on Σ_{m>=m0} 4m * env_lo(m + shift)^t.
  double env_tail_sum_lo(double t, double m0, double shift) const;

  // Power-law decay exponent of |a| in the l1 radius (+inf for finite
  // support and geometric kinds).
  double decay_exponent() const;
  // Radius beyond which the radial envelope is nonincreasing.
  int monotone_radius() const;
  IntRect support_box() const;  // finite support only

  std::string describe() const;

 private:
  CoefficientField() = default;

  Kind kind_ = Kind::FiniteSupport;
  std::vector<FieldAtom> atoms_;
  double amplitude_ = 0.0, ratio_ = 0.0;
  double beta_ = 0.0, a00_ = 0.0;
  SlowlyVaryingFn slowly_varying_ = SlowlyVaryingFn::constant(1.0);
  AngularProfile angular_ = AngularProfile::constant_one();
  int monotone_radius_ = 1;  // radius beyond which the radial factor decreases
  double pre_monotone_max_ = 0.0;
};

// Finite index region Γ ⊂ Z²: a disjoint union of integer rectangles.
class IndexRegion {
 public:
  static IndexRegion square(int n);  // [1,n] x [1,n]
  static IndexRegion of_rectangles(std::vector<IntRect> rects);

  const std::vector<IntRect>& rectangles() const { return rects_; }
  std::int64_t cardinality() const { return cardinality_; }
  IntRect bounding_box() const { return bbox_; }
  int max_l1_radius() const;  // max over Γ of |j|+|k|
  bool contains(int j, int k) const;
  IndexRegion reflected() const;  // {(-j,-k) : (j,k) in Γ}
  std::string describe() const;

 private:
  IndexRegion() = default;
  std::vector<IntRect> rects_;
  IntRect bbox_;
  std::int64_t cardinality_ = 0;
};

// Dense weight field b_{n,r,s} on a symmetric window [-mr,mr] x [-ms,ms],
// with the l2 mass of everything outside the window certified against the
// analytic decay envelope of the coefficient family.
class WeightTable {
 public:
  int half_r() const { return mr_; }
  int half_s() const { return ms_; }
  std::int64_t cell_count() const { return values_.size(); }
  double at(int r, int s) const {
    if (r < -mr_ || r > mr_ || s < -ms_ || s > ms_) return 0.0;
    return values_[index(r, s)];
  }
  std::span<const double> values() const { return values_; }

  // Full-field l2 mass: stored mass plus the midpoint of the certified
  // bracket on the neglected tail.
  double sigma2() const { return sigma2_; }
  double sigma() const;
  double truncation_epsilon() const { return truncation_epsilon_; }
  double stored_l2() const { return stored_l2_; }
  double tail_l2_upper() const { return tail_hi_; }
  double tail_l2_lower() const { return tail_lo_; }
  // Certified sup of |b| outside the window.
  double edge_abs_bound() const { return edge_abs_bound_; }
  double decay_exponent() const { return decay_exponent_; }

  double max_abs_weight() const { return max_abs_; }
  double min_weight() const { return min_weight_; }
  std::int64_t nonzero_count() const { return nonzero_count_; }
  const std::string& label() const { return label_; }

  // Certified upper bound on the neglected Σ_{outside} |b|^t (+inf if that
  // sum diverges; 0 for exact tables).
  double tail_pow_upper(double t) const;

  void write_csv(std::ostream& os) const;
  void write_binary(std::ostream& os) const;
  static WeightTable read_binary(std::istream& is);

 private:
  friend class WeightTableBuilder;
  WeightTable() = default;

  std::size_t index(int r, int s) const {
    return static_cast<std::size_t>(r + mr_) *
               static_cast<std::size_t>(2 * ms_ + 1) +
           static_cast<std::size_t>(s + ms_);
  }
  void finalize_stats();

  int mr_ = 0, ms_ = 0;
  std::vector<double> values_;
  double sigma2_ = 0.0;
  double stored_l2_ = 0.0;
  double tail_hi_ = 0.0, tail_lo_ = 0.0;
  double truncation_epsilon_ = 0.0;
  double edge_abs_bound_ = 0.0;
  double decay_exponent_ = 0.0;
  double max_abs_ = 0.0, min_weight_ = 0.0;
  std::int64_t nonzero_count_ = 0;
  std::string label_;

  // Tail-certificate ingredients, kept so aggregates can bound the
  // truncation error of Σ|b|^t for arbitrary exponents.
  struct TailCert {
    CoefficientField field;
    double weight_sum = 0.0;   // Σ region weights (|Γ| unweighted)
    int region_radius = 0;     // max l1 radius of Γ
    int min_outside_radius = 0;
  };
  std::optional<TailCert> cert_;
};

struct BuildOptions {
  std::int64_t max_window_cells = std::int64_t(1) << 26;
  std::string label;
};

// Origin weight that cancels the Euler-Maclaurin constant of the l1 ring
// sums Σ_{m<=M} 4m·m^{-beta} (constant angular profile): with a00 set to
// this value, σ_n² and D_np reach their asymptotic growth exponents already
// at small n instead of dragging an O(n^{beta-2}) transient.
double ring_sum_balanced_a00(double beta);

// b_{n,r,s} = Σ_{(j,k) in Γ} a_{j+r,k+s}, windowed so that the neglected l2
// mass is at most epsilon * σ_n². Exact summation for finite-support fields,
// FFT cross-correlation of the sampled a-grid with the region indicator
// otherwise.
WeightTable build_weights(const CoefficientField& field,
                          const IndexRegion& region, double epsilon,
                          const BuildOptions& opts = {});

// Weighted variant: b = Σ w_{j,k} a_{j+r,k+s} with nonnegative cell weights
// given over the region bounding box (row-major, zero off-region).
WeightTable build_weighted_table(const CoefficientField& field,
                                 const IndexRegion& region,
                                 std::span<const double> bbox_weights,
                                 double epsilon, const BuildOptions& opts = {});

struct WeightAggregates {
  std::map<double, double> D;        // t -> Σ|b|^t
  std::map<double, double> U;        // t -> D_t / D_2^{t/2}
  std::map<double, double> rel_err;  // t -> certified truncation error bound
  double rho2 = 0.0;                 // max b² / σ²
  double d2 = 0.0;                   // stored Σ b²
  double sigma2 = 0.0;
};

WeightAggregates aggregates(const WeightTable& table,
                            std::span<const double> exponents);

struct RhoBound {
  std::string name;
  double value = 0.0;
};

// Analytic upper bounds on ρ_n = max|b|/σ_n available for the field kind.
std::vector<RhoBound> rho_bounds(const CoefficientField& field,
                                 const IndexRegion& region, double sigma);

namespace detail {
// Exposed for equivalence testing of the two build paths.
std::vector<double> correlate_direct(const CoefficientField& field,
                                     const IndexRegion& region,
                                     std::span<const double> bbox_weights,
                                     int mr, int ms);
std::vector<double> correlate_fft(const CoefficientField& field,
                                  const IndexRegion& region,
                                  std::span<const double> bbox_weights, int mr,
                                  int ms);
}  // namespace detail

}  // namespace lrf
