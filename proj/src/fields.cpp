#include "lrf/fields.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "lrf/numerics.hpp"

namespace lrf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

// ---------------------------------------------------------------------------
// AngularProfile

AngularProfile AngularProfile::constant_one() { return AngularProfile(); }

AngularProfile AngularProfile::piecewise(std::vector<double> boundaries,
                                         std::vector<double> values) {
  require(!values.empty(), ErrorCode::InvalidArgument,
          "piecewise profile needs at least one sector");
  require(boundaries.size() == values.size(), ErrorCode::InvalidArgument,
          "sector boundaries and values must match in count");
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
    require(boundaries[i] < boundaries[i + 1], ErrorCode::InvalidArgument,
            "sector boundaries must be strictly increasing");
  }
  require(boundaries.back() <= std::numbers::pi + 1e-12 &&
              boundaries.front() > -std::numbers::pi - 1e-12,
          ErrorCode::InvalidArgument, "boundaries must lie in (-pi, pi]");
  AngularProfile p;
  p.boundaries_ = std::move(boundaries);
  p.values_ = std::move(values);
  return p;
}

double AngularProfile::eval(double ux, double uy) const {
  if (boundaries_.empty()) return 1.0;
  const double theta = std::atan2(uy, ux);
  auto it = std::lower_bound(boundaries_.begin(), boundaries_.end(), theta);
  if (it == boundaries_.end()) return values_.front();  // wraps past pi
  return values_[static_cast<std::size_t>(it - boundaries_.begin())];
}

double AngularProfile::max_abs() const {
  if (boundaries_.empty()) return 1.0;
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

double AngularProfile::min_value() const {
  if (boundaries_.empty()) return 1.0;
  double m = values_.front();
  for (double v : values_) m = std::min(m, v);
  return m;
}

// ---------------------------------------------------------------------------
// CoefficientField

CoefficientField CoefficientField::finite_support(std::vector<FieldAtom> atoms) {
  // Merge duplicates and drop exact zeros.
  std::map<std::pair<int, int>, double> merged;
  for (const FieldAtom& a : atoms) merged[{a.r, a.s}] += a.value;
  CoefficientField f;
  f.kind_ = Kind::FiniteSupport;
  for (const auto& [rs, v] : merged) {
    if (v != 0.0) f.atoms_.push_back({rs.first, rs.second, v});
  }
  return f;
}

CoefficientField CoefficientField::geometric(double amplitude, double ratio) {
  require(amplitude != 0.0, ErrorCode::InvalidArgument,
          "geometric amplitude must be nonzero");
  require(ratio > 0.0 && ratio < 1.0, ErrorCode::InvalidArgument,
          "geometric ratio must lie in (0,1)");
  CoefficientField f;
  f.kind_ = Kind::Geometric;
  f.amplitude_ = amplitude;
  f.ratio_ = ratio;
  return f;
}

CoefficientField CoefficientField::long_range(double beta,
                                              SlowlyVaryingFn slowly_varying,
                                              AngularProfile angular,
                                              double a00) {
  require(beta > 1.0 && beta < 2.0, ErrorCode::InvalidArgument,
          "long-range exponent beta must lie in (1,2)");
  CoefficientField f;
  f.kind_ = Kind::LongRange;
  f.beta_ = beta;
  f.slowly_varying_ = slowly_varying;
  f.angular_ = angular;
  f.a00_ = a00;

  // Radius beyond which x^{-beta} L(x) is nonincreasing. For L with
  // log exponent gamma the radial factor decreases once
  // beta (e+x) ln(e+x) >= gamma x.
  auto radial = [&](double m) {
    return std::pow(m, -beta) * slowly_varying(m);
  };
  int mono = 1;
  if (!slowly_varying.is_constant() && slowly_varying.exponent() > 0.0) {
    const double gamma = slowly_varying.exponent();
    while (mono < (1 << 24)) {
      const double x = static_cast<double>(mono);
      if (beta * (std::numbers::e + x) * std::log(std::numbers::e + x) >=
          gamma * x) {
        break;
      }
      mono *= 2;
    }
    require(mono < (1 << 24), ErrorCode::InvalidArgument,
            "slowly varying factor grows too fast for a usable envelope");
  }
  f.monotone_radius_ = mono;
  double pre_max = 0.0;
  for (int m = 1; m <= mono; ++m) {
    pre_max = std::max(pre_max, radial(static_cast<double>(m)));
  }
  f.pre_monotone_max_ = pre_max;
  return f;
}

const std::vector<FieldAtom>& CoefficientField::atoms() const {
  require(kind_ == Kind::FiniteSupport, ErrorCode::InvalidArgument,
          "atoms() is only defined for finite-support fields");
  return atoms_;
}

double CoefficientField::at(int r, int s) const {
  switch (kind_) {
    case Kind::FiniteSupport: {
      for (const FieldAtom& a : atoms_) {
        if (a.r == r && a.s == s) return a.value;
      }
      return 0.0;
    }
    case Kind::Geometric:
      return amplitude_ * std::pow(ratio_, std::abs(r) + std::abs(s));
    case Kind::LongRange: {
      if (r == 0 && s == 0) return a00_;
      const double m = std::abs(r) + std::abs(s);
      const double rho = std::hypot(static_cast<double>(r),
                                    static_cast<double>(s));
      return std::pow(m, -beta_) * slowly_varying_(m) *
             angular_.eval(r / rho, s / rho);
    }
  }
  return 0.0;
}

double CoefficientField::l1_norm() const {
  switch (kind_) {
    case Kind::FiniteSupport: {
      double t = 0.0;
      for (const FieldAtom& a : atoms_) t += std::abs(a.value);
      return t;
    }
    case Kind::Geometric: {
      const double g = (1.0 + ratio_) / (1.0 - ratio_);
      return std::abs(amplitude_) * g * g;
    }
    case Kind::LongRange:
      return kInf;
  }
  return 0.0;
}

double CoefficientField::coefficient_sum() const {
  switch (kind_) {
    case Kind::FiniteSupport: {
      double t = 0.0;
      for (const FieldAtom& a : atoms_) t += a.value;
      return t;
    }
    case Kind::Geometric: {
      const double g = (1.0 + ratio_) / (1.0 - ratio_);
      return amplitude_ * g * g;
    }
    case Kind::LongRange:
      fail(ErrorCode::InvalidArgument,
           "coefficient_sum is undefined for long-range fields");
  }
  return 0.0;
}

double CoefficientField::lp_sum_upper(double p) const {
  require(p > 0.0, ErrorCode::InvalidArgument, "lp exponent must be positive");
  switch (kind_) {
    case Kind::FiniteSupport: {
      double t = 0.0;
      for (const FieldAtom& a : atoms_) t += std::pow(std::abs(a.value), p);
      return t;
    }
    case Kind::Geometric: {
      const double rp = std::pow(ratio_, p);
      const double g = (1.0 + rp) / (1.0 - rp);
      return std::pow(std::abs(amplitude_), p) * g * g;
    }
    case Kind::LongRange: {
      if (p * beta_ <= 2.0) return kInf;
      // Exact cells out to a moderate radius, envelope ring sums beyond.
      const int cutoff = std::max(2048, monotone_radius_);
      double total = std::pow(std::abs(a00_), p);
      for (int m = 1; m <= cutoff; ++m) {
        const double radial = std::pow(static_cast<double>(m), -beta_) *
                              slowly_varying_(static_cast<double>(m));
        if (angular_.is_constant_one()) {
          total += 4.0 * m * std::pow(radial, p);
          continue;
        }
        double ring = 0.0;
        for (int r = -m; r <= m; ++r) {
          const int as = m - std::abs(r);
          for (int sgn = (as == 0 ? 1 : 0); sgn < 2; ++sgn) {
            const int s = (sgn == 0 ? -as : as);
            const double rho = std::hypot(static_cast<double>(r),
                                          static_cast<double>(s));
            ring += std::pow(std::abs(angular_.eval(r / rho, s / rho)), p);
          }
        }
        total += ring * std::pow(radial, p);
      }
      total += env_tail_sums(p, cutoff + 1).weighted;
      return total;
    }
  }
  return 0.0;
}

bool CoefficientField::nonnegative() const {
  switch (kind_) {
    case Kind::FiniteSupport:
      return std::all_of(atoms_.begin(), atoms_.end(),
                         [](const FieldAtom& a) { return a.value >= 0.0; });
    case Kind::Geometric:
      return amplitude_ > 0.0;
    case Kind::LongRange:
      return angular_.min_value() >= 0.0 && a00_ >= 0.0;
  }
  return false;
}

double CoefficientField::ring_env_hi(double m) const {
  switch (kind_) {
    case Kind::FiniteSupport: {
      double best = 0.0;
      for (const FieldAtom& a : atoms_) {
        if (std::abs(a.r) + std::abs(a.s) >= m) {
          best = std::max(best, std::abs(a.value));
        }
      }
      return best;
    }
    case Kind::Geometric:
      return std::abs(amplitude_) * std::pow(ratio_, m);
    case Kind::LongRange: {
      const double c = angular_.max_abs();
      auto radial = [&](double x) {
        return std::pow(x, -beta_) * slowly_varying_(x);
      };
      if (m >= monotone_radius_) return c * radial(m);
      return c * std::max(pre_monotone_max_,
                          radial(static_cast<double>(monotone_radius_)));
    }
  }
  return 0.0;
}

double CoefficientField::ring_env_lo(double m) const {
  switch (kind_) {
    case Kind::FiniteSupport:
      return 0.0;
    case Kind::Geometric:
      return amplitude_ > 0.0 ? amplitude_ * std::pow(ratio_, m) : 0.0;
    case Kind::LongRange: {
      const double c = angular_.min_value();
      if (c <= 0.0 || m < monotone_radius_) return 0.0;
      return c * std::pow(m, -beta_) * slowly_varying_(m);
    }
  }
  return 0.0;
}

CoefficientField::TailSums CoefficientField::env_tail_sums(double t,
                                                           double m0d) const {
  require(m0d >= 1.0, ErrorCode::InvalidArgument, "tail start must be >= 1");
  const std::int64_t m0 = static_cast<std::int64_t>(std::ceil(m0d));
  switch (kind_) {
    case Kind::FiniteSupport: {
      TailSums ts;
      // Finitely many atoms: sum the envelope rings that still carry atoms.
      for (const FieldAtom& a : atoms_) {
        const int m = std::abs(a.r) + std::abs(a.s);
        if (m >= m0) {
          const double e = std::pow(std::abs(a.value), t);
          ts.weighted += 4.0 * m * e;
          ts.flat += 4.0 * e;
        }
      }
      return ts;
    }
    case Kind::Geometric: {
      const double rho = std::pow(ratio_, t);
      const double cp = std::pow(std::abs(amplitude_), t);
      const double rm = std::pow(ratio_, static_cast<double>(m0) * t);
      TailSums ts;
      // Σ_{m>=m0} m ρ^m = ρ^{m0} (m0 (1-ρ) + ρ) / (1-ρ)²
      ts.weighted = 4.0 * cp * rm *
                    (static_cast<double>(m0) * (1.0 - rho) + rho) /
                    ((1.0 - rho) * (1.0 - rho));
      ts.flat = 4.0 * cp * rm / (1.0 - rho);
      return ts;
    }
    case Kind::LongRange: {
      if (t * beta_ <= 2.0) return {kInf, kInf};
      require(m0 >= monotone_radius_, ErrorCode::InvalidArgument,
              "tail start must lie in the monotone decay zone");
      const double c = angular_.max_abs();
      auto env_pow = [&](double x) {
        return std::pow(c * std::pow(x, -beta_) * slowly_varying_(x), t);
      };
      // Exact ring sums out to m1, then integral majorants: the summand is
      // nonincreasing there, so Σ_{m>m1} g(m) <= ∫_{m1}^∞ g(y+1)-shifted
      // envelope dy, handled with 4(y+1) and 4 weights respectively.
      const std::int64_t m1 = std::max<std::int64_t>(2 * m0, m0 + 4096);
      TailSums ts;
      for (std::int64_t m = m0; m <= m1; ++m) {
        const double e = env_pow(static_cast<double>(m));
        ts.weighted += 4.0 * static_cast<double>(m) * e;
        ts.flat += 4.0 * e;
      }
      const double a = static_cast<double>(m1);
      auto integrand_w = [&](double u) {
        // y = a/u, dy = a/u² du
        if (u <= 0.0) return 0.0;
        const double y = a / u;
        return 4.0 * (y + 1.0) * env_pow(y) * (a / (u * u));
      };
      auto integrand_f = [&](double u) {
        if (u <= 0.0) return 0.0;
        const double y = a / u;
        return 4.0 * env_pow(y) * (a / (u * u));
      };
      const double scale = env_pow(a) * a;
      const double rem_w = integrate(integrand_w, 0.0, 1.0, 1e-9 * scale * a);
      const double rem_f = integrate(integrand_f, 0.0, 1.0, 1e-9 * scale);
      ts.weighted += rem_w * 1.0005;
      ts.flat += rem_f * 1.0005;
      return ts;
    }
  }
  return {};
}

double CoefficientField::env_tail_sum_lo(double t, double m0d,
                                         double shift) const {
  const std::int64_t m0 = static_cast<std::int64_t>(std::ceil(m0d));
  double total = 0.0;
  const std::int64_t m1 = std::max<std::int64_t>(4 * m0, m0 + 8192);
  for (std::int64_t m = m0; m <= m1; ++m) {
    const double lo = ring_env_lo(static_cast<double>(m) + shift);
    if (lo <= 0.0) continue;
    total += 4.0 * static_cast<double>(m) * std::pow(lo, t);
  }
  return total;  // dropping the remainder keeps this a valid lower bound
}

int CoefficientField::monotone_radius() const {
  return kind_ == Kind::LongRange ? monotone_radius_ : 1;
}

double CoefficientField::decay_exponent() const {
  return kind_ == Kind::LongRange ? beta_ : kInf;
}

IntRect CoefficientField::support_box() const {
  require(kind_ == Kind::FiniteSupport, ErrorCode::InvalidArgument,
          "support_box is only defined for finite-support fields");
  require(!atoms_.empty(), ErrorCode::DegenerateField,
          "finite-support field has no nonzero coefficients");
  IntRect box{atoms_[0].r, atoms_[0].r, atoms_[0].s, atoms_[0].s};
  for (const FieldAtom& a : atoms_) {
    box.j1 = std::min(box.j1, a.r);
    box.j2 = std::max(box.j2, a.r);
    box.k1 = std::min(box.k1, a.s);
    box.k2 = std::max(box.k2, a.s);
  }
  return box;
}

std::string CoefficientField::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case Kind::FiniteSupport:
      os << "finite_support[" << atoms_.size() << "]";
      break;
    case Kind::Geometric:
      os << "geometric(c=" << amplitude_ << ",q=" << ratio_ << ")";
      break;
    case Kind::LongRange:
      os << "long_range(beta=" << beta_ << ")";
      break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// IndexRegion

IndexRegion IndexRegion::square(int n) {
  require(n >= 1, ErrorCode::InvalidArgument, "square region needs n >= 1");
  return of_rectangles({IntRect{1, n, 1, n}});
}

IndexRegion IndexRegion::of_rectangles(std::vector<IntRect> rects) {
  require(!rects.empty(), ErrorCode::InvalidArgument,
          "index region must be nonempty");
  for (const IntRect& r : rects) {
    require(r.j1 <= r.j2 && r.k1 <= r.k2, ErrorCode::InvalidArgument,
            "rectangle bounds out of order");
  }
  for (std::size_t i = 0; i < rects.size(); ++i) {
    for (std::size_t j = i + 1; j < rects.size(); ++j) {
      require(!rects[i].intersects(rects[j]), ErrorCode::InvalidArgument,
              "region rectangles must be pairwise disjoint");
    }
  }
  IndexRegion reg;
  reg.rects_ = std::move(rects);
  reg.bbox_ = reg.rects_[0];
  reg.cardinality_ = 0;
  for (const IntRect& r : reg.rects_) {
    reg.bbox_.j1 = std::min(reg.bbox_.j1, r.j1);
    reg.bbox_.j2 = std::max(reg.bbox_.j2, r.j2);
    reg.bbox_.k1 = std::min(reg.bbox_.k1, r.k1);
    reg.bbox_.k2 = std::max(reg.bbox_.k2, r.k2);
    reg.cardinality_ += r.area();
  }
  return reg;
}

int IndexRegion::max_l1_radius() const {
  int best = 0;
  for (const IntRect& r : rects_) {
    const int aj = std::max(std::abs(r.j1), std::abs(r.j2));
    const int ak = std::max(std::abs(r.k1), std::abs(r.k2));
    best = std::max(best, aj + ak);
  }
  return best;
}

bool IndexRegion::contains(int j, int k) const {
  for (const IntRect& r : rects_) {
    if (r.contains(j, k)) return true;
  }
  return false;
}

IndexRegion IndexRegion::reflected() const {
  std::vector<IntRect> out;
  out.reserve(rects_.size());
  for (const IntRect& r : rects_) {
    out.push_back(IntRect{-r.j2, -r.j1, -r.k2, -r.k1});
  }
  return of_rectangles(std::move(out));
}

std::string IndexRegion::describe() const {
  if (rects_.size() == 1 && rects_[0].j1 == 1 && rects_[0].k1 == 1 &&
      rects_[0].j2 == rects_[0].k2) {
    return "n=" + std::to_string(rects_[0].j2);
  }
  std::ostringstream os;
  os << "rects=" << rects_.size() << ",cells=" << cardinality_;
  return os.str();
}

// ---------------------------------------------------------------------------
// Correlation engines

namespace detail {

std::vector<double> correlate_direct(const CoefficientField& field,
                                     const IndexRegion& region,
                                     std::span<const double> bbox_weights,
                                     int mr, int ms) {
  const std::size_t ls = static_cast<std::size_t>(2 * ms + 1);
  std::vector<double> out(static_cast<std::size_t>(2 * mr + 1) * ls, 0.0);
  const IntRect bbox = region.bounding_box();
  const int bk = bbox.k2 - bbox.k1 + 1;

  auto weight_at = [&](int j, int k) -> double {
    if (!bbox_weights.empty()) {
      return bbox_weights[static_cast<std::size_t>(j - bbox.j1) * bk +
                          static_cast<std::size_t>(k - bbox.k1)];
    }
    return 1.0;
  };

  if (field.has_finite_support()) {
    // Each atom translates the (weighted) region indicator.
    for (const FieldAtom& a : field.atoms()) {
      for (const IntRect& rect : region.rectangles()) {
        for (int j = rect.j1; j <= rect.j2; ++j) {
          const int r = a.r - j;
          if (r < -mr || r > mr) continue;
          for (int k = rect.k1; k <= rect.k2; ++k) {
            const int s = a.s - k;
            if (s < -ms || s > ms) continue;
            out[static_cast<std::size_t>(r + mr) * ls +
                static_cast<std::size_t>(s + ms)] += a.value * weight_at(j, k);
          }
        }
      }
    }
    return out;
  }

  for (int r = -mr; r <= mr; ++r) {
    for (int s = -ms; s <= ms; ++s) {
      double acc = 0.0;
      for (const IntRect& rect : region.rectangles()) {
        for (int j = rect.j1; j <= rect.j2; ++j) {
          for (int k = rect.k1; k <= rect.k2; ++k) {
            acc += weight_at(j, k) * field.at(j + r, k + s);
          }
        }
      }
      out[static_cast<std::size_t>(r + mr) * ls +
          static_cast<std::size_t>(s + ms)] = acc;
    }
  }
  return out;
}

namespace {

int next_fast_size(int n) {
  // Smallest size >= n whose factors are all in {2,3,5,7}.
  for (int candidate = n;; ++candidate) {
    int m = candidate;
    for (int f : {2, 3, 5, 7}) {
      while (m % f == 0) m /= f;
    }
    if (m == 1) return candidate;
  }
}

struct FftwBuffer {
  double* data = nullptr;
  explicit FftwBuffer(std::size_t n) {
    data = static_cast<double*>(fftw_malloc(n * sizeof(double)));
    require(data != nullptr, ErrorCode::WindowOverflow,
            "FFT buffer allocation failed");
  }
  ~FftwBuffer() { fftw_free(data); }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

}  // namespace

std::vector<double> correlate_fft(const CoefficientField& field,
                                  const IndexRegion& region,
                                  std::span<const double> bbox_weights, int mr,
                                  int ms) {
  const IntRect bbox = region.bounding_box();
  const int nj = bbox.j2 - bbox.j1 + 1;
  const int nk = bbox.k2 - bbox.k1 + 1;
  const int lr = 2 * mr + 1;
  const int lsz = 2 * ms + 1;
  const int n1 = next_fast_size(lr + nj - 1);
  const int n2 = next_fast_size(lsz + nk - 1);
  const std::size_t real_cells =
      static_cast<std::size_t>(n1) * static_cast<std::size_t>(n2);
  const std::size_t spec_cells =
      static_cast<std::size_t>(n1) * (static_cast<std::size_t>(n2) / 2 + 1);

  FftwBuffer real_buf(real_cells);
  FftwBuffer spec_a(2 * spec_cells);
  FftwBuffer spec_w(2 * spec_cells);

  fftw_plan fwd = fftw_plan_dft_r2c_2d(
      n1, n2, real_buf.data, reinterpret_cast<fftw_complex*>(spec_a.data),
      FFTW_ESTIMATE);
  require(fwd != nullptr, ErrorCode::WindowOverflow, "FFT plan failed");

  // Sampled a-grid: A[p][q] = a(j1 - mr + p, k1 - ms + q).
  std::fill(real_buf.data, real_buf.data + real_cells, 0.0);
  const int a_rows = lr + nj - 1;
  const int a_cols = lsz + nk - 1;
  for (int p = 0; p < a_rows; ++p) {
    const int u = bbox.j1 - mr + p;
    double* row = real_buf.data + static_cast<std::size_t>(p) * n2;
    for (int q = 0; q < a_cols; ++q) {
      row[q] = field.at(u, bbox.k1 - ms + q);
    }
  }
  fftw_execute(fwd);

  // Region indicator (or smoother weights) on the bbox corner.
  std::fill(real_buf.data, real_buf.data + real_cells, 0.0);
  if (!bbox_weights.empty()) {
    for (int p = 0; p < nj; ++p) {
      double* row = real_buf.data + static_cast<std::size_t>(p) * n2;
      for (int q = 0; q < nk; ++q) {
        const double w =
            bbox_weights[static_cast<std::size_t>(p) * nk + q];
        row[q] = region.contains(bbox.j1 + p, bbox.k1 + q) ? w : 0.0;
      }
    }
  } else {
    for (const IntRect& rect : region.rectangles()) {
      for (int j = rect.j1; j <= rect.j2; ++j) {
        double* row =
            real_buf.data + static_cast<std::size_t>(j - bbox.j1) * n2;
        for (int k = rect.k1; k <= rect.k2; ++k) {
          row[k - bbox.k1] = 1.0;
        }
      }
    }
  }
  fftw_execute_dft_r2c(fwd, real_buf.data,
                       reinterpret_cast<fftw_complex*>(spec_w.data));
  fftw_destroy_plan(fwd);

  // Spectral correlation: Â · conj(Ŵ), normalized by the grid size.
  const double norm = 1.0 / (static_cast<double>(n1) * n2);
  for (std::size_t i = 0; i < spec_cells; ++i) {
    const double ar = spec_a.data[2 * i], ai = spec_a.data[2 * i + 1];
    const double wr = spec_w.data[2 * i], wi = spec_w.data[2 * i + 1];
    spec_a.data[2 * i] = (ar * wr + ai * wi) * norm;
    spec_a.data[2 * i + 1] = (ai * wr - ar * wi) * norm;
  }

  fftw_plan bwd = fftw_plan_dft_c2r_2d(
      n1, n2, reinterpret_cast<fftw_complex*>(spec_a.data), real_buf.data,
      FFTW_ESTIMATE);
  require(bwd != nullptr, ErrorCode::WindowOverflow, "FFT plan failed");
  fftw_execute(bwd);
  fftw_destroy_plan(bwd);

  std::vector<double> out(static_cast<std::size_t>(lr) * lsz);
  for (int ri = 0; ri < lr; ++ri) {
    const double* row = real_buf.data + static_cast<std::size_t>(ri) * n2;
    std::copy(row, row + lsz,
              out.begin() + static_cast<std::size_t>(ri) * lsz);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// WeightTable

double WeightTable::sigma() const { return std::sqrt(sigma2_); }

void WeightTable::finalize_stats() {
  stored_l2_ = 0.0;
  max_abs_ = 0.0;
  min_weight_ = values_.empty() ? 0.0 : values_[0];
  nonzero_count_ = 0;
  for (double v : values_) {
    stored_l2_ += v * v;
    max_abs_ = std::max(max_abs_, std::abs(v));
    min_weight_ = std::min(min_weight_, v);
    if (v != 0.0) ++nonzero_count_;
  }
}

double WeightTable::tail_pow_upper(double t) const {
  if (!cert_) return 0.0;
  const CoefficientField& f = cert_->field;
  if (t * f.decay_exponent() <= 2.0) return kInf;
  const double d0 = cert_->min_outside_radius - cert_->region_radius;
  const CoefficientField::TailSums ts = f.env_tail_sums(t, d0);
  const double w1t = std::pow(cert_->weight_sum, t);
  return w1t * (ts.weighted + cert_->region_radius * ts.flat);
}

void WeightTable::write_csv(std::ostream& os) const {
  os << "r,s,b\n";
  char buf[64];
  for (int r = -mr_; r <= mr_; ++r) {
    for (int s = -ms_; s <= ms_; ++s) {
      const double v = values_[index(r, s)];
      if (v == 0.0) continue;
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      os << r << ',' << s << ',' << buf << '\n';
    }
  }
}

namespace {
constexpr char kBinMagic[4] = {'L', 'R', 'F', 'W'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(bool(is), ErrorCode::IoError, "truncated weight-table stream");
  return v;
}
}  // namespace

// Little-endian binary grid: magic, version, window bounds, sigma2,
// truncation epsilon, label, then row-major 64-bit float values.
void WeightTable::write_binary(std::ostream& os) const {
  os.write(kBinMagic, 4);
  put<std::uint32_t>(os, 1);
  put<std::int32_t>(os, -mr_);
  put<std::int32_t>(os, mr_);
  put<std::int32_t>(os, -ms_);
  put<std::int32_t>(os, ms_);
  put<double>(os, sigma2_);
  put<double>(os, truncation_epsilon_);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(label_.size()));
  os.write(label_.data(), static_cast<std::streamsize>(label_.size()));
  os.write(reinterpret_cast<const char*>(values_.data()),
           static_cast<std::streamsize>(values_.size() * sizeof(double)));
}

WeightTable WeightTable::read_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  require(bool(is) && std::equal(magic, magic + 4, kBinMagic),
          ErrorCode::IoError, "not a weight-table stream");
  const auto version = get<std::uint32_t>(is);
  require(version == 1, ErrorCode::IoError, "unsupported weight-table version");
  const auto rlo = get<std::int32_t>(is);
  const auto rhi = get<std::int32_t>(is);
  const auto slo = get<std::int32_t>(is);
  const auto shi = get<std::int32_t>(is);
  require(rlo == -rhi && slo == -shi && rhi >= 0 && shi >= 0,
          ErrorCode::IoError, "invalid window bounds");
  WeightTable t;
  t.mr_ = rhi;
  t.ms_ = shi;
  t.sigma2_ = get<double>(is);
  t.truncation_epsilon_ = get<double>(is);
  const auto label_len = get<std::uint32_t>(is);
  t.label_.resize(label_len);
  is.read(t.label_.data(), label_len);
  t.values_.resize(static_cast<std::size_t>(2 * t.mr_ + 1) *
                   static_cast<std::size_t>(2 * t.ms_ + 1));
  is.read(reinterpret_cast<char*>(t.values_.data()),
          static_cast<std::streamsize>(t.values_.size() * sizeof(double)));
  require(bool(is), ErrorCode::IoError, "truncated weight-table stream");
  t.finalize_stats();
  const double spread = std::max(0.0, t.sigma2_ - t.stored_l2_);
  t.tail_hi_ = t.truncation_epsilon_ * t.sigma2_;
  t.tail_lo_ = std::max(0.0, 2.0 * spread - t.tail_hi_);
  t.decay_exponent_ = kInf;
  return t;
}

// ---------------------------------------------------------------------------
// Builder

class WeightTableBuilder {
 public:
  static WeightTable build(const CoefficientField& field,
                           const IndexRegion& region,
                           std::span<const double> bbox_weights,
                           double epsilon, const BuildOptions& opts) {
    require(epsilon > 0.0 && epsilon < 1.0, ErrorCode::InvalidArgument,
            "truncation epsilon must lie in (0,1)");
    double weight_sum = 0.0;
    if (!bbox_weights.empty()) {
      const IntRect bbox = region.bounding_box();
      require(static_cast<std::int64_t>(bbox_weights.size()) == bbox.area(),
              ErrorCode::InvalidArgument,
              "cell weights must cover the region bounding box");
      for (double w : bbox_weights) {
        require(w >= 0.0, ErrorCode::InvalidArgument,
                "cell weights must be nonnegative");
        weight_sum += w;
      }
    } else {
      weight_sum = static_cast<double>(region.cardinality());
    }

    WeightTable t;
    t.label_ = opts.label.empty() ? region.describe() : opts.label;

    if (field.has_finite_support()) {
      build_exact(t, field, region, bbox_weights, opts);
    } else {
      build_truncated(t, field, region, bbox_weights, weight_sum, epsilon,
                      opts);
    }
    require(t.sigma2_ > 0.0, ErrorCode::DegenerateField,
            "weight field has zero variance");
    return t;
  }

 private:
  static std::int64_t cells_of(std::int64_t base_r, std::int64_t base_s,
                               std::int64_t margin) {
    return (2 * (base_r + margin) + 1) * (2 * (base_s + margin) + 1);
  }

  static void check_cells(std::int64_t mr, std::int64_t ms,
                          const BuildOptions& opts) {
    const std::int64_t cells = (2 * mr + 1) * (2 * ms + 1);
    require(cells <= opts.max_window_cells, ErrorCode::WindowOverflow,
            "certified window of " + std::to_string(cells) +
                " cells exceeds the configured cap of " +
                std::to_string(opts.max_window_cells));
  }

  static void build_exact(WeightTable& t, const CoefficientField& field,
                          const IndexRegion& region,
                          std::span<const double> bbox_weights,
                          const BuildOptions& opts) {
    require(!field.atoms().empty(), ErrorCode::DegenerateField,
            "finite-support field has no nonzero coefficients");
    const IntRect sup = field.support_box();
    const IntRect bbox = region.bounding_box();
    // Nonzero b needs j + r in the support: r in [sup.j1 - j2, sup.j2 - j1].
    const int mr = std::max(std::abs(sup.j1 - bbox.j2),
                            std::abs(sup.j2 - bbox.j1));
    const int ms = std::max(std::abs(sup.k1 - bbox.k2),
                            std::abs(sup.k2 - bbox.k1));
    check_cells(mr, ms, opts);
    t.mr_ = mr;
    t.ms_ = ms;
    t.values_ = detail::correlate_direct(field, region, bbox_weights, mr, ms);
    t.finalize_stats();
    t.sigma2_ = t.stored_l2_;
    t.tail_hi_ = t.tail_lo_ = 0.0;
    t.truncation_epsilon_ = 0.0;
    t.edge_abs_bound_ = 0.0;
    t.decay_exponent_ = kInf;
  }

  // Certified bound on the l2 mass outside a window with margins (mr, ms):
  // every outside cell has l1 radius >= min(mr,ms)+1, and for such a cell at
  // radius m, |b| <= W1 * env(m - R) with R the region's max l1 radius.
  static double tail_l2_hi(const CoefficientField& field, double weight_sum,
                           int region_radius, int min_outside_radius) {
    const double d0 = min_outside_radius - region_radius;
    const CoefficientField::TailSums ts = field.env_tail_sums(2.0, d0);
    return weight_sum * weight_sum *
           (ts.weighted + region_radius * ts.flat);
  }

  static void build_truncated(WeightTable& t, const CoefficientField& field,
                              const IndexRegion& region,
                              std::span<const double> bbox_weights,
                              double weight_sum, double epsilon,
                              const BuildOptions& opts) {
    const IntRect bbox = region.bounding_box();
    const int base_r = std::max(std::abs(bbox.j1), std::abs(bbox.j2));
    const int base_s = std::max(std::abs(bbox.k1), std::abs(bbox.k2));
    const int region_radius = region.max_l1_radius();

    auto min_outside = [&](int margin) {
      return std::min(base_r + margin, base_s + margin) + 1;
    };

    // The envelope argument (outside radius) - (region radius) must stay in
    // the monotone decay zone of the coefficient family.
    const int margin_floor =
        std::max(16, region_radius - std::min(base_r, base_s) +
                         field.monotone_radius() + 1);

    // Pass 1: a cheap core window gives a lower bound on σ² that the
    // analytic growth loop can certify against.
    int margin = margin_floor;
    check_cells(base_r + margin, base_s + margin, opts);
    double stored0 = 0.0;
    {
      std::vector<double> core = detail::correlate_fft(
          field, region, bbox_weights, base_r + margin, base_s + margin);
      for (double v : core) stored0 += v * v;
    }
    require(stored0 > 0.0, ErrorCode::DegenerateField,
            "weight field has zero variance on the core window");

    // Largest margin whose window still fits under the cell cap.
    int margin_cap = margin_floor;
    {
      int lo_cap = margin_floor, hi_cap = 1 << 28;
      require(cells_of(base_r, base_s, lo_cap) <= opts.max_window_cells,
              ErrorCode::WindowOverflow,
              "minimal window already exceeds the configured cap");
      while (lo_cap < hi_cap) {
        const int mid = lo_cap + (hi_cap - lo_cap + 1) / 2;
        if (cells_of(base_r, base_s, mid) <= opts.max_window_cells) {
          lo_cap = mid;
        } else {
          hi_cap = mid - 1;
        }
      }
      margin_cap = lo_cap;
    }

    // Grow the margin until the certified tail is small enough, then shrink
    // back to the smallest sufficient value.
    auto tail_ok = [&](int m) {
      return tail_l2_hi(field, weight_sum, region_radius, min_outside(m)) <=
             epsilon * stored0;
    };
    if (!tail_ok(margin_cap)) {
      fail(ErrorCode::WindowOverflow,
           "certified window would need more than " +
               std::to_string(opts.max_window_cells) +
               " cells to reach the requested epsilon");
    }
    while (!tail_ok(margin)) {
      margin = std::min(margin * 2, margin_cap);
    }
    int lo = std::max(margin_floor, margin / 2), hi = margin;
    while (lo < hi) {
      const int mid = lo + (hi - lo) / 2;
      if (tail_ok(mid)) {
        hi = mid;
      } else {
        lo = mid + 1;
      }
    }
    margin = hi;

    const int mr = base_r + margin;
    const int ms = base_s + margin;
    check_cells(mr, ms, opts);
    t.mr_ = mr;
    t.ms_ = ms;
    t.values_ = detail::correlate_fft(field, region, bbox_weights, mr, ms);
    t.finalize_stats();

    const int m_out = min_outside(margin);
    const double hi_tail =
        tail_l2_hi(field, weight_sum, region_radius, m_out);
    const double lo_tail =
        weight_sum * weight_sum *
        field.env_tail_sum_lo(2.0, m_out, region_radius);
    t.tail_hi_ = hi_tail;
    t.tail_lo_ = std::min(lo_tail, hi_tail);
    t.sigma2_ = t.stored_l2_ + 0.5 * (t.tail_lo_ + t.tail_hi_);
    t.truncation_epsilon_ = hi_tail / t.sigma2_;
    t.edge_abs_bound_ =
        weight_sum * field.ring_env_hi(m_out - region_radius);
    t.decay_exponent_ = field.decay_exponent();
    t.cert_ = WeightTable::TailCert{field, weight_sum, region_radius, m_out};
  }
};

double ring_sum_balanced_a00(double beta) {
  require(beta > 1.0 && beta < 2.0, ErrorCode::InvalidArgument,
          "beta must lie in (1,2)");
  // zeta(s) for s = beta-1 in (0,1), by Euler-Maclaurin:
  // Σ_{m<=M} m^{-s} = M^{1-s}/(1-s) + zeta(s) + M^{-s}/2 - s M^{-s-1}/12 + ...
  const double s = beta - 1.0;
  const int cut = 20000;
  double sum = 0.0;
  for (int m = 1; m <= cut; ++m) sum += std::pow(m, -s);
  const double M = static_cast<double>(cut);
  const double zeta = sum - std::pow(M, 1.0 - s) / (1.0 - s) -
                      0.5 * std::pow(M, -s) + s * std::pow(M, -s - 1.0) / 12.0;
  return -4.0 * zeta;
}

WeightTable build_weights(const CoefficientField& field,
                          const IndexRegion& region, double epsilon,
                          const BuildOptions& opts) {
  return WeightTableBuilder::build(field, region, {}, epsilon, opts);
}

WeightTable build_weighted_table(const CoefficientField& field,
                                 const IndexRegion& region,
                                 std::span<const double> bbox_weights,
                                 double epsilon, const BuildOptions& opts) {
  require(!bbox_weights.empty(), ErrorCode::InvalidArgument,
          "weighted build needs cell weights");
  return WeightTableBuilder::build(field, region, bbox_weights, epsilon, opts);
}

// ---------------------------------------------------------------------------
// Aggregates and rho bounds

WeightAggregates aggregates(const WeightTable& table,
                            std::span<const double> exponents) {
  require(!exponents.empty(), ErrorCode::InvalidArgument,
          "at least one exponent is required");
  for (double t : exponents) {
    require(t > 0.0, ErrorCode::InvalidArgument,
            "aggregate exponents must be positive");
  }

  WeightAggregates agg;
  agg.sigma2 = table.sigma2();

  std::vector<double> exps(exponents.begin(), exponents.end());
  if (std::find(exps.begin(), exps.end(), 2.0) == exps.end()) {
    exps.push_back(2.0);
  }

  for (double t : exps) {
    double d = 0.0;
    for (double v : table.values()) {
      if (v != 0.0) d += std::pow(std::abs(v), t);
    }
    const double tail = table.tail_pow_upper(t);
    if (std::isinf(tail)) {
      agg.D[t] = kInf;
      agg.rel_err[t] = kInf;
    } else {
      agg.D[t] = d;
      agg.rel_err[t] = d > 0.0 ? tail / d : 0.0;
    }
  }
  agg.d2 = agg.D.at(2.0);
  for (auto& [t, d] : agg.D) {
    agg.U[t] = d / std::pow(agg.d2, t / 2.0);
  }
  agg.rho2 = table.max_abs_weight() * table.max_abs_weight() / table.sigma2();
  return agg;
}

std::vector<RhoBound> rho_bounds(const CoefficientField& field,
                                 const IndexRegion& region, double sigma) {
  require(sigma > 0.0, ErrorCode::InvalidArgument, "sigma must be positive");
  std::vector<RhoBound> out;
  const double card = static_cast<double>(region.cardinality());

  const double l1 = field.l1_norm();
  if (std::isfinite(l1)) {
    out.push_back({"l1", l1 / sigma});
  }
  // Hölder family: ρ <= ||a||_u |Γ|^{1/v} / σ with 1/u + 1/v = 1.
  for (double u : {1.25, 1.5, 2.0}) {
    const double lpu = field.lp_sum_upper(u);
    if (!std::isfinite(lpu)) continue;
    const double norm_u = std::pow(lpu, 1.0 / u);
    const double bound = norm_u * std::pow(card, 1.0 - 1.0 / u) / sigma;
    std::ostringstream name;
    name << "holder_u" << u;
    out.push_back({name.str(), bound});
  }
  // Rectangle-union bound: ρ <= 20 (√l ||a||₂ / σ)^{1/5} + 8 √l ||a||₂ / σ.
  const double l2u = field.lp_sum_upper(2.0);
  if (std::isfinite(l2u)) {
    const double root_l =
        std::sqrt(static_cast<double>(region.rectangles().size()));
    const double z = root_l * std::sqrt(l2u) / sigma;
    out.push_back({"rect_union", 20.0 * std::pow(z, 0.2) + 8.0 * z});
  }
  return out;
}

}  // namespace lrf
