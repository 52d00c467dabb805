#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "lrf/innovations.hpp"
#include "lrf/numerics.hpp"
#include "oracle.hpp"

using namespace lrf;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<InnovationModel> all_kinds() {
  return {InnovationModel::gaussian(),
          InnovationModel::rademacher(),
          InnovationModel::uniform_centered(),
          InnovationModel::student_like(5.0),
          InnovationModel::pareto_hybrid(3.0, SlowlyVaryingFn::constant(0.15),
                                         2.5),
          InnovationModel::pareto_hybrid(5.0, SlowlyVaryingFn::constant(0.15),
                                         2.5)};
}
}  // namespace

TEST_CASE("every kind is standardized: mean 0, variance 1") {
  for (const InnovationModel& m : all_kinds()) {
    CAPTURE(m.kind_name());
    CHECK(std::abs(m.truncated_moment(1.0, -kInf, kInf)) < 1e-10);
    CHECK(m.truncated_moment(2.0, -kInf, kInf) ==
          doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("samplers hit their first two moments") {
  const std::int64_t n = 10'000'000;
  for (const InnovationModel& m : all_kinds()) {
    if (m.moment_order_sup() <= 4.0) continue;  // variance of xi^2 infinite
    CAPTURE(m.kind_name());
    Rng rng(RngStream{314159, 0});
    double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
      const double v = m.sample_one(rng);
      sum += v;
      sum2 += v * v;
      sum4 += v * v * v * v;
    }
    const double mean = sum / static_cast<double>(n);
    const double var = sum2 / static_cast<double>(n);
    const double m4 = sum4 / static_cast<double>(n);
    const double se_mean = 1.0 / std::sqrt(static_cast<double>(n));
    const double se_var =
        std::sqrt(std::max(m4 - var * var, 0.0) / static_cast<double>(n));
    CHECK(std::abs(mean) < 4.0 * se_mean);
    // the tolerance floor covers lattice kinds where xi^2 is constant
    CHECK(std::abs(var - 1.0) <= 4.0 * se_var + 1e-12);
  }
}

TEST_CASE("rademacher draws take only the two signs") {
  const InnovationModel m = InnovationModel::rademacher();
  const std::vector<double> draws = sample(m, RngStream{7, 3}, 1'000'000);
  double sum = 0.0;
  for (double v : draws) {
    REQUIRE((v == 1.0 || v == -1.0));
    sum += v;
  }
  CHECK(std::abs(sum / 1e6) < 4.0 / std::sqrt(1e6));
}

TEST_CASE("gaussian sampler matches the erfc oracle at x=2") {
  const InnovationModel m = InnovationModel::gaussian();
  const std::vector<double> draws = sample(m, RngStream{99, 0}, 1'000'000);
  std::int64_t hits = 0;
  for (double v : draws) {
    if (v >= 2.0) ++hits;
  }
  const double p = oracle::phi_bar(2.0);  // 0.02275...
  const double se = std::sqrt(p * (1.0 - p) / 1e6);
  CHECK(std::abs(hits / 1e6 - p) < 4.0 * se);
}

TEST_CASE("hybrid sampler reproduces the exact tail") {
  const double t = 3.0, x0 = 2.5;
  const InnovationModel m =
      InnovationModel::pareto_hybrid(t, SlowlyVaryingFn::constant(0.15), x0);
  const std::int64_t n = 10'000'000;
  Rng rng(RngStream{2718, 5});
  std::int64_t hits_x0 = 0, hits_2x0 = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    const double v = m.sample_one(rng);
    if (v >= x0) ++hits_x0;
    if (v >= 2.0 * x0) ++hits_2x0;
  }
  const double p1 = 0.15 / std::pow(x0, t);
  const double p2 = 0.15 / std::pow(2.0 * x0, t);
  CHECK(m.survival(x0) == doctest::Approx(p1).epsilon(1e-12));
  CHECK(std::abs(hits_x0 / static_cast<double>(n) - p1) <
        4.0 * std::sqrt(p1 / static_cast<double>(n)));
  CHECK(std::abs(hits_2x0 / static_cast<double>(n) - p2) <
        4.0 * std::sqrt(p2 / static_cast<double>(n)));
}

TEST_CASE("survival fixed points") {
  const InnovationModel r = InnovationModel::rademacher();
  CHECK(r.survival(0.5) == 0.5);
  CHECK(r.survival(1.5) == 0.0);
  CHECK(r.survival(-1.0) == 1.0);

  const InnovationModel g = InnovationModel::gaussian();
  CHECK(g.survival(0.0) == 0.5);

  // survival(x) * x^t / h(x) = 1 identically above the threshold
  const InnovationModel h =
      InnovationModel::pareto_hybrid(3.0, SlowlyVaryingFn::constant(0.2), 3.0);
  for (double x : {3.0, 4.0, 7.5, 20.0, 100.0}) {
    CHECK(h.survival(x) * std::pow(x, 3.0) / 0.2 ==
          doctest::Approx(1.0).epsilon(1e-13));
  }
}

TEST_CASE("survival is nonincreasing on a fine grid") {
  for (const InnovationModel& m : all_kinds()) {
    CAPTURE(m.kind_name());
    double prev = 1.0 + 1e-12;
    for (int i = 0; i <= 1000; ++i) {
      const double x = -6.0 + 14.0 * i / 1000.0;
      const double s = m.survival(x);
      CHECK(s <= prev + 1e-14);
      CHECK(s >= 0.0);
      CHECK(s <= 1.0);
      prev = s;
    }
  }
}

TEST_CASE("symmetric survival identity for continuous kinds") {
  for (const InnovationModel& m : all_kinds()) {
    if (m.discrete()) continue;
    CAPTURE(m.kind_name());
    for (double x : {0.3, 1.1, 2.7}) {
      CHECK(m.survival(-x) ==
            doctest::Approx(1.0 - m.survival(x)).epsilon(1e-12));
    }
  }
}

TEST_CASE("affine-tail consistency under raw-law standardization") {
  const double t = 3.0, c0 = 0.4, x0_raw = 4.0, core_scale = 1.6;
  const InnovationModel m = InnovationModel::pareto_hybrid_raw(
      t, SlowlyVaryingFn::constant(c0), x0_raw, core_scale);
  REQUIRE(m.tail().has_value());
  const TailDescriptor& tail = *m.tail();
  const double sigma0 = tail.scale;
  CHECK(sigma0 > 1.0);  // the raw law was wider than standard
  CHECK(m.truncated_moment(2.0, -kInf, kInf) ==
        doctest::Approx(1.0).epsilon(1e-10));
  // survival(x) = h0(σ x) σ^{-t} / x^t = raw survival at σx, at 5 points
  for (double x : {tail.x0, 1.3 * tail.x0, 2.0 * tail.x0, 3.7 * tail.x0,
                   10.0 * tail.x0}) {
    const double raw_survival = c0 / std::pow(sigma0 * x, t);
    CHECK(m.survival(x) == doctest::Approx(raw_survival).epsilon(1e-12));
    CHECK(tail.effective_h(x) ==
          doctest::Approx(std::pow(sigma0, -t) * c0).epsilon(1e-13));
  }
}

TEST_CASE("log-power tails sample and invert consistently") {
  const InnovationModel m = InnovationModel::pareto_hybrid(
      3.5, SlowlyVaryingFn::log_power(0.05, 1.0), 3.0);
  REQUIRE(m.tail().has_value());
  const HybridLaw& law = m.hybrid();
  for (double p : {law.q, 0.5 * law.q, 0.01 * law.q}) {
    const double x = law.tail_quantile(p);
    CHECK(m.survival(x) == doctest::Approx(p).epsilon(1e-10));
  }
  CHECK(m.truncated_moment(2.0, -kInf, kInf) ==
        doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("truncated moments: fixed values and oracle quadrature") {
  const InnovationModel r = InnovationModel::rademacher();
  CHECK(r.truncated_moment(2.0, -kInf, kInf) == 1.0);

  const InnovationModel g = InnovationModel::gaussian();
  CHECK(g.truncated_moment(2.0, -kInf, 0.0) ==
        doctest::Approx(0.5).epsilon(1e-10));

  // No fourth moment at tail index 3.
  const InnovationModel s3 = InnovationModel::student_like(3.0);
  CHECK_THROWS_AS(s3.truncated_moment(4.0, -kInf, kInf), Error);
  try {
    s3.truncated_moment(3.0, 0.0, kInf);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonintegrableMoment);
  }

  // Against a brute Simpson oracle on the density. The hybrid density is
  // piecewise, so the oracle integrates between the law's breakpoints.
  auto simpson_piecewise = [](const InnovationModel& m,
                              const std::vector<double>& breaks, double order) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
      auto f = [&](double x) { return std::pow(x, order) * m.density(x); };
      // stay strictly inside each piece: the density may jump at the ends
      const double nudge = 1e-10 * (breaks[i + 1] - breaks[i]);
      total += oracle::simpson(f, breaks[i] + nudge, breaks[i + 1] - nudge,
                               4000);
    }
    return total;
  };
  CHECK(g.truncated_moment(2.0, 0.0, 2.0) ==
        doctest::Approx(simpson_piecewise(g, {0.0, 2.0}, 2.0)).epsilon(1e-8));
  CHECK(g.truncated_moment(2.5, 0.5, 2.0) ==
        doctest::Approx(simpson_piecewise(g, {0.5, 2.0}, 2.5)).epsilon(1e-8));

  const InnovationModel hyb =
      InnovationModel::pareto_hybrid(3.0, SlowlyVaryingFn::constant(0.15), 2.5);
  const HybridLaw& law = hyb.hybrid();
  const std::vector<double> breaks = {
      0.0, law.lambda * law.core_halfwidth,
      law.lambda * (law.hump_center - law.hump_halfwidth),
      law.lambda * (law.hump_center + law.hump_halfwidth), 2.0};
  CHECK(hyb.truncated_moment(2.0, 0.0, 2.0) ==
        doctest::Approx(simpson_piecewise(hyb, breaks, 2.0)).epsilon(1e-9));
  std::vector<double> breaks_half = breaks;
  breaks_half[0] = 0.5;
  CHECK(hyb.truncated_moment(2.5, 0.5, 2.0) ==
        doctest::Approx(simpson_piecewise(hyb, breaks_half, 2.5))
            .epsilon(1e-9));
  // With the core support inside (0,2), the closed form is half the core
  // variance share exactly.
  CHECK(hyb.truncated_moment(2.0, 0.0, 2.0) ==
        doctest::Approx(0.5 * (1.0 - 2.0 * law.q) * law.lambda * law.lambda)
            .epsilon(1e-12));

  // Noninteger order with a negative lower limit is rejected.
  CHECK_THROWS_AS(g.truncated_moment(2.5, -1.0, 1.0), Error);
}

TEST_CASE("student survival matches its own density integral") {
  const InnovationModel s = InnovationModel::student_like(4.0);
  for (double x : {0.0, 0.8, 2.0}) {
    auto f = [&](double y) { return s.density(y); };
    const double mass = oracle::simpson(f, x, 60.0, 20000);
    CHECK(s.survival(x) == doctest::Approx(mass).epsilon(1e-6));
  }
  // The asymptotic descriptor tightens beyond its threshold.
  REQUIRE(s.tail().has_value());
  const TailDescriptor& tail = *s.tail();
  const double r1 = s.survival(tail.x0) / tail.survival_above(tail.x0);
  const double r2 =
      s.survival(2.0 * tail.x0) / tail.survival_above(2.0 * tail.x0);
  CHECK(std::abs(r1 - 1.0) < 0.02);
  CHECK(std::abs(r2 - 1.0) < 0.006);
  CHECK(std::abs(r2 - 1.0) < std::abs(r1 - 1.0));
}

TEST_CASE("moment order supremum per kind") {
  CHECK(InnovationModel::gaussian().moment_order_sup() == kInf);
  CHECK(InnovationModel::rademacher().moment_order_sup() == kInf);
  CHECK(InnovationModel::uniform_centered().moment_order_sup() == kInf);
  CHECK(InnovationModel::student_like(3.5).moment_order_sup() == 3.5);
  CHECK(
      InnovationModel::pareto_hybrid(3.0, SlowlyVaryingFn::constant(0.1), 3.0)
          .moment_order_sup() == 3.0);
}

TEST_CASE("sampling is deterministic per stream") {
  const InnovationModel m =
      InnovationModel::pareto_hybrid(3.0, SlowlyVaryingFn::constant(0.15), 2.5);
  const std::vector<double> a = sample(m, RngStream{11, 22}, 1000);
  const std::vector<double> b = sample(m, RngStream{11, 22}, 1000);
  const std::vector<double> c = sample(m, RngStream{11, 23}, 1000);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(sample(m, RngStream{1, 1}, 0).empty());
  CHECK_THROWS_AS(sample(m, RngStream{1, 1}, -1), Error);
}

TEST_CASE("survival table export") {
  const InnovationModel m = InnovationModel::gaussian();
  const double xs[] = {0.0, 1.0};
  std::ostringstream os;
  write_survival_csv(m, xs, os);
  std::istringstream is(os.str());
  std::string header, row0;
  std::getline(is, header);
  CHECK(header == "x,survival,density");
  std::getline(is, row0);
  CHECK(row0.rfind("0,0.5,", 0) == 0);
}

TEST_CASE("karamata property 2: constant and log factors") {
  const SlowlyVaryingFn one = SlowlyVaryingFn::constant(1.0);
  // ∫_A^x dy / x = 1 - A/x exactly
  const KaramataReport rep = karamata_check(one, 0.0, 50.0, 1.0);
  CHECK(rep.property == 2);
  CHECK(rep.ratio == doctest::Approx(1.0 - 1.0 / 50.0).epsilon(1e-9));

  // l = ln-type, θ=0, A=2, x=1e6: ratio ≈ 1 - 1/ln x ≈ 0.928
  const SlowlyVaryingFn lg = SlowlyVaryingFn::log_power(1.0, 1.0);
  const KaramataReport rep2 = karamata_check(lg, 0.0, 1e6, 2.0);
  CHECK(rep2.ratio == doctest::Approx(0.928).epsilon(0.01));
}

TEST_CASE("karamata property 3: exact for constants") {
  const SlowlyVaryingFn one = SlowlyVaryingFn::constant(1.0);
  // ∫_x^∞ y^{-2} dy * (-θ-1) / x^{θ+1} = 1 exactly
  const KaramataReport rep = karamata_check(one, -2.0, 100.0, 1.0);
  CHECK(rep.property == 3);
  CHECK(rep.ratio == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("karamata ratios drift monotonically toward 1 for log-powers") {
  const SlowlyVaryingFn l = SlowlyVaryingFn::log_power(1.0, 2.0);
  for (double theta : {0.5, -0.5, -2.2}) {
    CAPTURE(theta);
    double prev_gap = 1e18;
    for (double x : {1e3, 1e4, 1e5, 1e6}) {
      const KaramataReport rep = karamata_check(l, theta, x, 2.0);
      const double gap = std::abs(rep.ratio - 1.0);
      CHECK(gap < prev_gap);
      prev_gap = gap;
    }
  }
}

TEST_CASE("karamata property 4: sup ratio") {
  CHECK(karamata_sup_ratio(SlowlyVaryingFn::constant(2.0), 0.5, 10.0) == 1.0);
  const SlowlyVaryingFn l = SlowlyVaryingFn::log_power(1.0, 2.0);
  double prev = 1e18;
  for (double x : {1e3, 1e4, 1e5, 1e6}) {
    const double ratio = karamata_sup_ratio(l, 0.05, x);
    CHECK(ratio >= 1.0);
    CHECK(ratio < prev);
    prev = ratio;
  }
}

TEST_CASE("hybrid construction rejects impossible parameters") {
  // Tail mass/variance too large to standardize around.
  CHECK_THROWS_AS(
      InnovationModel::pareto_hybrid(3.0, SlowlyVaryingFn::constant(0.5), 2.0),
      Error);
  CHECK_THROWS_AS(
      InnovationModel::pareto_hybrid(2.0, SlowlyVaryingFn::constant(0.1), 3.0),
      Error);
  CHECK_THROWS_AS(InnovationModel::student_like(2.0), Error);
}
