#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <vector>

#include "lrf/mc.hpp"
#include "lrf/numerics.hpp"
#include "oracle.hpp"

using namespace lrf;

namespace {

WeightTable delta_table(int n) {
  return build_weights(CoefficientField::finite_support({{0, 0, 1.0}}),
                       IndexRegion::square(n), 1e-6);
}

// A table whose nonzero weights are exactly the given list (delta field over
// a row region scaled by per-cell weights would be overkill; instead use a
// finite field shaped to produce the values directly).
WeightTable table_from_weights(const std::vector<double>& w) {
  std::vector<FieldAtom> atoms;
  for (std::size_t i = 0; i < w.size(); ++i) {
    atoms.push_back({static_cast<int>(2 * i), 0, w[i]});
  }
  // region = single cell, so b(r,s) = a(r, s): the atoms become the weights.
  return build_weights(CoefficientField::finite_support(atoms),
                       IndexRegion::of_rectangles({IntRect{0, 0, 0, 0}}),
                       1e-6);
}

}  // namespace

TEST_CASE("single Rademacher weight: half the mass crosses its value") {
  const WeightTable t = table_from_weights({1.0});
  const InnovationModel m = InnovationModel::rademacher();
  const double thr[] = {1.0 / t.sigma()};  // absolute threshold 1.0
  const auto est = simulate_tail(t, m, thr, 200000, 7);
  CHECK(std::abs(est[0].p_hat - 0.5) < 4.0 * est[0].std_err);
  CHECK(enumerate_tail(t, m, 1.0) == 0.5);
}

TEST_CASE("gaussian innovations give an exactly gaussian sum") {
  const WeightTable t = delta_table(5);
  const InnovationModel m = InnovationModel::gaussian();
  const double thr[] = {0.0, 1.0, 2.0, 3.0};
  const auto est = simulate_tail(t, m, thr, 1'000'000, 99);
  for (std::size_t i = 0; i < 4; ++i) {
    const double p = oracle::phi_bar(thr[i]);
    CHECK(std::abs(est[i].p_hat - p) <=
          5.0 * std::sqrt(p * (1.0 - p) / 1e6));
  }
}

TEST_CASE("pair of unit weights: P(S >= 2) = 1/4") {
  const WeightTable t = table_from_weights({1.0, 1.0});
  const InnovationModel m = InnovationModel::rademacher();
  CHECK(enumerate_tail(t, m, 2.0) == 0.25);
  const double thr[] = {2.0 / t.sigma()};
  const auto est = simulate_tail(t, m, thr, 400000, 3);
  CHECK(std::abs(est[0].p_hat - 0.25) < 4.0 * est[0].std_err);
}

TEST_CASE("enumeration: three weights, frozen patterns") {
  const InnovationModel m = InnovationModel::rademacher();
  CHECK(enumerate_tail(table_from_weights({1.0, 1.0, 1.0}), m, 3.0) == 0.125);
  // weights {2,1,1}: sign patterns reaching >= 2: +++ (4), ++- (2), +-+ (2)
  CHECK(enumerate_tail(table_from_weights({2.0, 1.0, 1.0}), m, 2.0) == 0.375);
}

TEST_CASE("enumeration caps and model support") {
  std::vector<double> w(25, 1.0);
  const WeightTable t = table_from_weights(w);
  try {
    enumerate_tail(t, InnovationModel::rademacher(), 1.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooManyAtoms);
  }
  try {
    enumerate_tail(table_from_weights({1.0}), InnovationModel::gaussian(), 1.0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnsupportedModel);
  }
}

TEST_CASE("simulation agrees with enumeration on random dyadic instances") {
  Rng gen(RngStream{31337, 0});
  const InnovationModel m = InnovationModel::rademacher();
  for (int trial = 0; trial < 8; ++trial) {
    const int k = 3 + static_cast<int>(gen.next_u64() % 14);
    std::vector<double> w;
    double total = 0.0;
    for (int i = 0; i < k; ++i) {
      // dyadic weights keep every partial sum exact in floating point
      const double v = (1.0 + static_cast<double>(gen.next_u64() % 64)) / 32.0;
      w.push_back(v);
      total += v;
    }
    const WeightTable t = table_from_weights(w);
    const double thr_abs = 0.5 * total;  // dyadic again
    const double p_exact = enumerate_tail(t, m, thr_abs);
    const double thr[] = {thr_abs / t.sigma()};
    const auto est = simulate_tail(t, m, thr, 100000, 1234 + trial);
    const double se = std::sqrt(p_exact * (1.0 - p_exact) / 1e5);
    CHECK(std::abs(est[0].p_hat - p_exact) <= 5.0 * se + 1e-12);
  }
}

TEST_CASE("worker count resolution honors the environment") {
  CHECK(resolve_worker_count(3) == 3);
  setenv("LRF_WORKERS", "5", 1);
  CHECK(resolve_worker_count(0) == 5);
  CHECK(resolve_worker_count(2) == 2);
  unsetenv("LRF_WORKERS");
  CHECK(resolve_worker_count(0) == 1);
}

TEST_CASE("results are identical for 1, 4, and 16 workers") {
  const WeightTable t = delta_table(4);
  for (const InnovationModel& m :
       {InnovationModel::gaussian(),
        InnovationModel::pareto_hybrid(3.0, SlowlyVaryingFn::constant(0.15),
                                       2.5)}) {
    CAPTURE(m.kind_name());
    const double thr[] = {0.5, 1.5, 2.5};
    const auto e1 = simulate_tail(t, m, thr, 300000, 42, false, 1);
    const auto e4 = simulate_tail(t, m, thr, 300000, 42, false, 4);
    const auto e16 = simulate_tail(t, m, thr, 300000, 42, false, 16);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(e1[i].p_hat == e4[i].p_hat);
      CHECK(e1[i].p_hat == e16[i].p_hat);
    }
  }
}

TEST_CASE("p_hat is nonincreasing in the threshold within one run") {
  const WeightTable t = delta_table(3);
  const double thr[] = {0.0, 0.5, 1.0, 1.5, 2.0, 2.5};
  const auto est = simulate_tail(t, InnovationModel::uniform_centered(), thr,
                                 200000, 5);
  for (std::size_t i = 1; i < est.size(); ++i) {
    CHECK(est[i].p_hat <= est[i - 1].p_hat);
  }
}

TEST_CASE("two-sided estimates double one-sided for symmetric laws") {
  const WeightTable t = delta_table(4);
  const InnovationModel m = InnovationModel::gaussian();
  const double thr[] = {1.0, 2.0};
  const auto two = simulate_tail(t, m, thr, 2'000'000, 11, true);
  for (std::size_t i = 0; i < 2; ++i) {
    const double expect = 2.0 * oracle::phi_bar(thr[i]);
    CHECK(std::abs(two[i].p_hat - expect) <= 5.0 * two[i].std_err);
  }
}

TEST_CASE("lil replication on the identity field") {
  // envelope sqrt(2 ln 100) with expected exceedance 2(1-Φ(3.0349)) ≈ 0.0024
  std::vector<WeightTable> tables;
  tables.push_back(delta_table(10));
  const auto pts = lil_replication(tables, InnovationModel::gaussian(), 4.0,
                                   400000, 321);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].u_np == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(pts[0].envelope_sigma ==
        doctest::Approx(std::sqrt(2.0 * std::log(100.0))).epsilon(1e-12));
  const double expect = 2.0 * oracle::phi_bar(pts[0].envelope_sigma);
  CHECK(expect == doctest::Approx(0.0024).epsilon(0.01));
  CHECK(std::abs(pts[0].exceed_freq - expect) <=
        5.0 * std::sqrt(expect / 400000.0));
}

TEST_CASE("lil replication cross-checks against enumeration") {
  // weights {1,1,1,1}: U_4 = 4/16, envelope sqrt(2 ln 4) σ = 3.330;
  // |S| >= 3.33 happens only on the all-equal sign patterns: 2/16.
  std::vector<WeightTable> tables;
  tables.push_back(table_from_weights({1.0, 1.0, 1.0, 1.0}));
  const InnovationModel rad = InnovationModel::rademacher();
  const auto pts = lil_replication(tables, rad, 4.0, 400000, 99);
  REQUIRE(pts.size() == 1);
  CHECK(pts[0].envelope_abs ==
        doctest::Approx(2.0 * std::sqrt(2.0 * std::log(4.0))).epsilon(1e-12));
  const double one_sided = enumerate_tail(tables[0], rad, pts[0].envelope_abs);
  CHECK(one_sided == 0.0625);  // 1/16
  const double expect = 2.0 * one_sided;
  CHECK(std::abs(pts[0].exceed_freq - expect) <=
        5.0 * std::sqrt(expect * (1.0 - expect) / 400000.0));
}

TEST_CASE("lil replication rejects the degenerate regime") {
  std::vector<WeightTable> tables;
  tables.push_back(table_from_weights({1.0}));  // U_np = 1
  try {
    lil_replication(tables, InnovationModel::gaussian(), 4.0, 1000, 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidRegime);
  }
}

TEST_CASE("truncated-sum simulation is deterministic and sane") {
  const WeightTable t = delta_table(3);
  const InnovationModel m = InnovationModel::gaussian();
  const double thr_abs[] = {1.0, 3.0};
  const auto a = simulate_truncated_tail(t, m, 2.0, thr_abs, 100000, 17, 1);
  const auto b = simulate_truncated_tail(t, m, 2.0, thr_abs, 100000, 17, 8);
  CHECK(a[0].p_hat == b[0].p_hat);
  CHECK(a[1].p_hat == b[1].p_hat);
  CHECK(a[1].p_hat <= a[0].p_hat);
  // truncation only removes mass from the upper tail
  const double plain_thr[] = {3.0 / t.sigma()};
  const auto plain = simulate_tail(t, m, plain_thr, 100000, 17);
  CHECK(a[1].p_hat <= plain[0].p_hat + 5.0 * plain[0].std_err);
}
