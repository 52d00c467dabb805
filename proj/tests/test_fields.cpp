#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "lrf/fields.hpp"
#include "lrf/numerics.hpp"
#include "lrf/rng.hpp"
#include "oracle.hpp"

using namespace lrf;

namespace {

CoefficientField delta_field() {
  return CoefficientField::finite_support({{0, 0, 1.0}});
}

std::vector<std::pair<int, int>> region_cells(const IndexRegion& region) {
  std::vector<std::pair<int, int>> cells;
  for (const IntRect& r : region.rectangles()) {
    for (int j = r.j1; j <= r.j2; ++j) {
      for (int k = r.k1; k <= r.k2; ++k) cells.emplace_back(j, k);
    }
  }
  return cells;
}

}  // namespace

TEST_CASE("delta coefficient shifts the region indicator") {
  const WeightTable t =
      build_weights(delta_field(), IndexRegion::square(10), 1e-6);
  CHECK(t.sigma2() == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(t.truncation_epsilon() == 0.0);
  for (int r = -t.half_r(); r <= t.half_r(); ++r) {
    for (int s = -t.half_s(); s <= t.half_s(); ++s) {
      const double expect =
          (r >= -10 && r <= -1 && s >= -10 && s <= -1) ? 1.0 : 0.0;
      CHECK(t.at(r, s) == expect);
    }
  }
  CHECK(t.nonzero_count() == 100);
}

TEST_CASE("two-atom field against the direct-sum oracle") {
  const CoefficientField f =
      CoefficientField::finite_support({{0, 0, 1.0}, {1, 0, 1.0}});
  const IndexRegion region =
      IndexRegion::of_rectangles({IntRect{1, 2, 1, 1}});
  const WeightTable t = build_weights(f, region, 1e-6);
  CHECK(t.sigma2() == doctest::Approx(6.0).epsilon(1e-15));

  auto a = [&](int r, int s) { return f.at(r, s); };
  const auto cells = region_cells(region);
  int nonzero = 0;
  for (int r = -t.half_r(); r <= t.half_r(); ++r) {
    for (int s = -t.half_s(); s <= t.half_s(); ++s) {
      const double expect = oracle::direct_weight(a, cells, r, s);
      CHECK(t.at(r, s) == doctest::Approx(expect).epsilon(1e-14));
      if (expect != 0.0) ++nonzero;
    }
  }
  CHECK(nonzero == 3);
  CHECK(t.max_abs_weight() == 2.0);  // the overlap cell carries weight 2
}

TEST_CASE("fft path equals direct summation on finite-support fields") {
  Rng rng(RngStream{77, 0});
  for (int trial = 0; trial < 12; ++trial) {
    std::vector<FieldAtom> atoms;
    const int n_atoms = 1 + static_cast<int>(rng.next_u64() % 6);
    for (int i = 0; i < n_atoms; ++i) {
      atoms.push_back({static_cast<int>(rng.next_u64() % 9) - 4,
                       static_cast<int>(rng.next_u64() % 9) - 4,
                       rng.next_double() * 2.0 - 1.0});
    }
    const CoefficientField f = CoefficientField::finite_support(atoms);
    if (f.has_finite_support() && f.atoms().empty()) continue;
    const int n = 3 + static_cast<int>(rng.next_u64() % 14);
    const IndexRegion region = IndexRegion::square(n);
    const int mr = std::min(32, n + 6);
    const int ms = std::min(32, n + 5);

    const std::vector<double> direct =
        detail::correlate_direct(f, region, {}, mr, ms);
    const std::vector<double> fft = detail::correlate_fft(f, region, {}, mr, ms);
    REQUIRE(direct.size() == fft.size());
    double max_abs = 0.0;
    for (double v : direct) max_abs = std::max(max_abs, std::abs(v));
    for (std::size_t i = 0; i < direct.size(); ++i) {
      CHECK(std::abs(direct[i] - fft[i]) <= 1e-12 * std::max(1.0, max_abs));
    }
  }
}

TEST_CASE("long-range sigma2 growth has the expected exponent") {
  // a00 balancing the ring-sum lattice constant removes the finite-n
  // transient, so the Surgailis exponent shows already at n <= 128.
  const CoefficientField f = CoefficientField::long_range(
      1.5, SlowlyVaryingFn::constant(1.0), AngularProfile::constant_one(),
      ring_sum_balanced_a00(1.5));
  std::vector<double> ln_n, ln_sigma2;
  for (int n : {16, 32, 64, 128}) {
    const WeightTable t = build_weights(f, IndexRegion::square(n), 0.05);
    ln_n.push_back(std::log(static_cast<double>(n)));
    ln_sigma2.push_back(std::log(t.sigma2()));
  }
  const double slope = fit_slope(ln_n, ln_sigma2);
  CHECK(slope == doctest::Approx(3.0).epsilon(0.05));  // 6 - 2β = 3
}

TEST_CASE("long-range D_np slope stays under the analytic order") {
  const double beta = 1.5, p = 3.0;
  const CoefficientField f = CoefficientField::long_range(
      beta, SlowlyVaryingFn::constant(1.0), AngularProfile::constant_one(),
      ring_sum_balanced_a00(beta));
  std::vector<double> ln_n, ln_d;
  for (int n : {16, 32, 64, 128}) {
    const WeightTable t = build_weights(f, IndexRegion::square(n), 0.05);
    const double exps[] = {p};
    const WeightAggregates agg = aggregates(t, exps);
    ln_n.push_back(std::log(static_cast<double>(n)));
    ln_d.push_back(std::log(agg.D.at(p)));
  }
  const double slope = fit_slope(ln_n, ln_d);
  CHECK(slope <= p * (2.0 - beta) + 2.0 + 0.15);
}

TEST_CASE("aggregates on the identity field") {
  const WeightTable t =
      build_weights(delta_field(), IndexRegion::square(10), 1e-6);
  const double exps[] = {2.0, 4.0};
  const WeightAggregates agg = aggregates(t, exps);
  CHECK(agg.D.at(2.0) == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(agg.D.at(4.0) == doctest::Approx(100.0).epsilon(1e-15));
  CHECK(agg.U.at(4.0) == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(agg.U.at(2.0) == 1.0);  // exact by definition
  CHECK(agg.rho2 == doctest::Approx(0.01).epsilon(1e-14));
}

TEST_CASE("single weight saturates the aggregate bounds") {
  const WeightTable t =
      build_weights(delta_field(), IndexRegion::square(1), 1e-6);
  const double exps[] = {2.0, 3.0, 5.5};
  const WeightAggregates agg = aggregates(t, exps);
  CHECK(agg.U.at(3.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(agg.U.at(5.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(agg.rho2 == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("U_nt <= rho^(t-2) on exact tables") {
  Rng rng(RngStream{5150, 0});
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FieldAtom> atoms;
    const int n_atoms = 1 + static_cast<int>(rng.next_u64() % 5);
    for (int i = 0; i < n_atoms; ++i) {
      atoms.push_back({static_cast<int>(rng.next_u64() % 7) - 3,
                       static_cast<int>(rng.next_u64() % 7) - 3,
                       rng.next_double() + 0.05});
    }
    const CoefficientField f = CoefficientField::finite_support(atoms);
    const int n = 1 + static_cast<int>(rng.next_u64() % 6);
    const WeightTable t = build_weights(f, IndexRegion::square(n), 1e-6);
    const double exps[] = {2.0, 3.0, 4.0};
    const WeightAggregates agg = aggregates(t, exps);
    const double rho = std::sqrt(agg.rho2);
    CHECK(agg.U.at(3.0) <= std::pow(rho, 1.0) * (1.0 + 1e-12));
    CHECK(agg.U.at(4.0) <= std::pow(rho, 2.0) * (1.0 + 1e-12));
  }
}

TEST_CASE("rho2 for the identity field is exactly n^-2") {
  double prev = 2.0;
  for (int n : {2, 4, 8, 16}) {
    const WeightTable t =
        build_weights(delta_field(), IndexRegion::square(n), 1e-6);
    const double exps[] = {4.0};
    const WeightAggregates agg = aggregates(t, exps);
    const double expected = 1.0 / (static_cast<double>(n) * n);
    CHECK(agg.rho2 == doctest::Approx(expected).epsilon(1e-14));
    CHECK(agg.rho2 < prev);
    prev = agg.rho2;
  }
}

TEST_CASE("rho bounds dominate the exact rho") {
  SUBCASE("identity field: l1 bound is tight") {
    const IndexRegion region = IndexRegion::square(10);
    const WeightTable t = build_weights(delta_field(), region, 1e-6);
    const auto bounds = rho_bounds(delta_field(), region, t.sigma());
    const double exact_rho = t.max_abs_weight() / t.sigma();
    CHECK(exact_rho == doctest::Approx(0.1).epsilon(1e-14));
    bool found_l1 = false;
    for (const RhoBound& b : bounds) {
      CHECK(b.value >= exact_rho - 1e-12);
      if (b.name == "l1") {
        found_l1 = true;
        CHECK(b.value == doctest::Approx(0.1).epsilon(1e-12));
      }
    }
    CHECK(found_l1);
  }

  SUBCASE("two-atom strip: l1 bound is attained") {
    const CoefficientField f =
        CoefficientField::finite_support({{0, 0, 1.0}, {1, 0, 1.0}});
    const IndexRegion region =
        IndexRegion::of_rectangles({IntRect{1, 2, 1, 1}});
    const WeightTable t = build_weights(f, region, 1e-6);
    const double exact_rho = t.max_abs_weight() / t.sigma();
    CHECK(exact_rho == doctest::Approx(2.0 / std::sqrt(6.0)).epsilon(1e-13));
    const auto bounds = rho_bounds(f, region, t.sigma());
    for (const RhoBound& b : bounds) CHECK(b.value >= exact_rho - 1e-12);
  }

  SUBCASE("long-range field: Hölder bound dominates for several n") {
    const CoefficientField f = CoefficientField::long_range(
        1.5, SlowlyVaryingFn::constant(1.0), AngularProfile::constant_one());
    for (int n : {16, 32, 64}) {
      const IndexRegion region = IndexRegion::square(n);
      const WeightTable t = build_weights(f, region, 0.05);
      const double exact_rho = t.max_abs_weight() / t.sigma();
      const auto bounds = rho_bounds(f, region, t.sigma());
      bool found_holder = false;
      for (const RhoBound& b : bounds) {
        CHECK(b.value >= exact_rho - 1e-12);
        if (b.name == "holder_u2") found_holder = true;
      }
      CHECK(found_holder);
      CHECK(f.l1_norm() == std::numeric_limits<double>::infinity());
    }
  }
}

TEST_CASE("truncation certificate brackets the stored mass") {
  // stored l2 <= sigma2 <= stored (1+eps)/(1-eps) for truncated tables
  for (double beta : {1.3, 1.6}) {
    const CoefficientField f = CoefficientField::long_range(
        beta, SlowlyVaryingFn::constant(1.0), AngularProfile::constant_one());
    for (double eps : {0.2, 0.05}) {
      const WeightTable t = build_weights(f, IndexRegion::square(6), eps);
      const double e = t.truncation_epsilon();
      CHECK(e <= eps);
      CHECK(t.stored_l2() <= t.sigma2());
      CHECK(t.sigma2() <=
            t.stored_l2() * (1.0 + e) / (1.0 - e) * (1.0 + 1e-12));
      CHECK(t.tail_l2_lower() <= t.tail_l2_upper());
      // D_2 equals sigma2 within the certificate
      const double exps[] = {2.0};
      const WeightAggregates agg = aggregates(t, exps);
      CHECK(std::abs(agg.D.at(2.0) - t.sigma2()) <= t.tail_l2_upper());
    }
  }
}

TEST_CASE("doubling epsilon never shrinks the window") {
  const CoefficientField f = CoefficientField::long_range(
      1.7, SlowlyVaryingFn::constant(1.0), AngularProfile::constant_one());
  const IndexRegion region = IndexRegion::square(8);
  const WeightTable fine = build_weights(f, region, 0.02);
  const WeightTable coarse = build_weights(f, region, 0.04);
  CHECK(coarse.half_r() <= fine.half_r());
  CHECK(coarse.half_s() <= fine.half_s());

  // Estimates under epsilon and epsilon/10 agree within the coarser
  // certificate.
  const WeightTable finer = build_weights(f, region, 0.002);
  const double gap = std::abs(fine.sigma2() - finer.sigma2());
  CHECK(gap <= 0.02 * fine.sigma2());
  CHECK(fine.truncation_epsilon() <= 0.02);
  CHECK(finer.truncation_epsilon() <= 0.002);
}

TEST_CASE("reflection equivariance") {
  const CoefficientField f = CoefficientField::finite_support(
      {{0, 0, 0.7}, {2, 1, -0.4}, {-1, 3, 1.1}});
  const CoefficientField f_ref = CoefficientField::finite_support(
      {{0, 0, 0.7}, {-2, -1, -0.4}, {1, -3, 1.1}});
  const IndexRegion region = IndexRegion::of_rectangles(
      {IntRect{1, 5, 2, 4}, IntRect{7, 9, 0, 1}});
  const WeightTable t = build_weights(f, region, 1e-6);
  const WeightTable t_ref = build_weights(f_ref, region.reflected(), 1e-6);
  REQUIRE(t.half_r() == t_ref.half_r());
  REQUIRE(t.half_s() == t_ref.half_s());
  for (int r = -t.half_r(); r <= t.half_r(); ++r) {
    for (int s = -t.half_s(); s <= t.half_s(); ++s) {
      CHECK(t.at(r, s) == doctest::Approx(t_ref.at(-r, -s)).epsilon(1e-13));
    }
  }
}

TEST_CASE("geometric field norms are closed-form exact") {
  const CoefficientField f = CoefficientField::geometric(2.0, 0.5);
  // Σ q^{|r|} = (1+q)/(1-q) = 3, so l1 = 2*9 = 18.
  CHECK(f.l1_norm() == doctest::Approx(18.0).epsilon(1e-14));
  CHECK(f.coefficient_sum() == doctest::Approx(18.0).epsilon(1e-14));
  // Σ q^{2|r|} over both axes: ((1+1/4)/(1-1/4))² = (5/3)²
  CHECK(f.lp_sum_upper(2.0) ==
        doctest::Approx(4.0 * 25.0 / 9.0).epsilon(1e-13));

  // windowed mass approaches the analytic total as epsilon shrinks
  const WeightTable t = build_weights(f, IndexRegion::square(6), 1e-8);
  CHECK(t.truncation_epsilon() <= 1e-8);
  CHECK(t.sigma2() > 0.0);
}

TEST_CASE("geometric sigma2 grows like a^2 n^2") {
  const CoefficientField f = CoefficientField::geometric(1.0, 0.3);
  const double a = f.coefficient_sum();
  std::vector<double> ln_n, ln_s;
  for (int n : {32, 64, 128}) {
    const WeightTable t = build_weights(f, IndexRegion::square(n), 1e-8);
    ln_n.push_back(std::log(static_cast<double>(n)));
    ln_s.push_back(std::log(t.sigma2()));
  }
  CHECK(fit_slope(ln_n, ln_s) == doctest::Approx(2.0).epsilon(0.05));
  const WeightTable t128 = build_weights(f, IndexRegion::square(128), 1e-8);
  CHECK(t128.sigma2() / (128.0 * 128.0) == doctest::Approx(a * a).epsilon(0.1));
}

TEST_CASE("degenerate and oversize windows raise typed errors") {
  CHECK_THROWS_AS(build_weights(CoefficientField::finite_support({}),
                                IndexRegion::square(3), 1e-6),
                  Error);
  try {
    build_weights(CoefficientField::finite_support({{0, 0, 0.0}}),
                  IndexRegion::square(3), 1e-6);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DegenerateField);
  }

  const CoefficientField lr = CoefficientField::long_range(
      1.2, SlowlyVaryingFn::constant(1.0), AngularProfile::constant_one());
  BuildOptions opts;
  opts.max_window_cells = 10000;
  try {
    build_weights(lr, IndexRegion::square(32), 1e-6, opts);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::WindowOverflow);
  }

  CHECK_THROWS_AS(build_weights(delta_field(), IndexRegion::square(4), 0.0),
                  Error);
  CHECK_THROWS_AS(build_weights(delta_field(), IndexRegion::square(4), 1.0),
                  Error);
}

TEST_CASE("region validation") {
  CHECK_THROWS_AS(IndexRegion::square(0), Error);
  CHECK_THROWS_AS(IndexRegion::of_rectangles({}), Error);
  CHECK_THROWS_AS(IndexRegion::of_rectangles(
                      {IntRect{1, 4, 1, 4}, IntRect{3, 6, 2, 3}}),
                  Error);
  const IndexRegion r = IndexRegion::of_rectangles(
      {IntRect{1, 4, 1, 4}, IntRect{5, 6, 1, 2}});
  CHECK(r.cardinality() == 16 + 4);
  CHECK(r.max_l1_radius() == 6 + 2);
}

TEST_CASE("binary export round-trips") {
  const CoefficientField f =
      CoefficientField::finite_support({{0, 0, 1.5}, {1, 1, -0.25}});
  const WeightTable t = build_weights(f, IndexRegion::square(5), 1e-6);
  std::stringstream buf;
  t.write_binary(buf);
  const WeightTable back = WeightTable::read_binary(buf);
  CHECK(back.half_r() == t.half_r());
  CHECK(back.half_s() == t.half_s());
  CHECK(back.sigma2() == t.sigma2());
  CHECK(back.label() == t.label());
  for (int r = -t.half_r(); r <= t.half_r(); ++r) {
    for (int s = -t.half_s(); s <= t.half_s(); ++s) {
      CHECK(back.at(r, s) == t.at(r, s));
    }
  }

  std::ostringstream csv;
  t.write_csv(csv);
  CHECK(csv.str().rfind("r,s,b\n", 0) == 0);
}

TEST_CASE("angular profile evaluation") {
  const AngularProfile p = AngularProfile::piecewise(
      {-1.5707963267948966, 0.0, 1.5707963267948966, 3.141592653589793},
      {0.5, 1.0, 2.0, 0.25});
  CHECK(p.max_abs() == 2.0);
  CHECK(p.min_value() == 0.25);
  // angle in (0, pi/2] -> third sector
  CHECK(p.eval(0.7071, 0.7071) == 2.0);
  // angle in (-pi/2, 0] -> second sector
  CHECK(p.eval(0.7071, -0.7071) == 1.0);

  const CoefficientField f = CoefficientField::long_range(
      1.6, SlowlyVaryingFn::constant(1.0), p, 0.3);
  CHECK(f.at(0, 0) == 0.3);
  CHECK(f.at(3, 0) == doctest::Approx(std::pow(3.0, -1.6)).epsilon(1e-12));
}
