#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lrf/numerics.hpp"
#include "lrf/slowly_varying.hpp"
#include "oracle.hpp"

using namespace lrf;

TEST_CASE("normal cdf against the erfc oracle") {
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  // Oracle-derived reference values, frozen:
  CHECK(oracle::phi_bar(2.0) == doctest::Approx(0.02275013194817921).epsilon(1e-12));
  CHECK(oracle::phi_bar(3.0) == doctest::Approx(0.001349898031630095).epsilon(1e-12));
  for (double x : {-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 6.0}) {
    CHECK(normal_sf(x) == doctest::Approx(oracle::phi_bar(x)).epsilon(1e-13));
    CHECK(normal_cdf(x) ==
          doctest::Approx(1.0 - oracle::phi_bar(x)).epsilon(1e-13));
  }
}

TEST_CASE("normal tail sandwich brackets the true tail") {
  // At x=2: e^{-2}/(3 sqrt(2π)) <= 1-Φ(2) <= e^{-2}/(2 sqrt(2π)),
  // i.e. about 0.01800 <= 0.02275 <= 0.02700.
  const auto [lo2, hi2] = normal_tail_bounds(2.0);
  const double dens2 = std::exp(-2.0) / std::sqrt(2.0 * 3.14159265358979323846);
  CHECK(lo2 == doctest::Approx(dens2 / 3.0).epsilon(1e-13));
  CHECK(hi2 == doctest::Approx(dens2 / 2.0).epsilon(1e-13));
  CHECK(lo2 == doctest::Approx(0.0180).epsilon(2e-4));
  CHECK(hi2 == doctest::Approx(0.0270).epsilon(2e-4));
  CHECK(lo2 <= 0.02275013194817921);
  CHECK(0.02275013194817921 <= hi2);

  for (int i = 1; i <= 100; ++i) {
    const double x = 1.0 + 7.0 * i / 100.0;
    const auto [lo, hi] = normal_tail_bounds(x);
    const double truth = normal_sf(x);
    CHECK(lo <= truth);
    CHECK(truth <= hi);
  }
  CHECK_THROWS_AS(normal_tail_bounds(0.5), Error);
}

TEST_CASE("adaptive quadrature hits analytic integrals") {
  const double i1 = integrate([](double x) { return x * x; }, 0.0, 3.0, 1e-12);
  CHECK(i1 == doctest::Approx(9.0).epsilon(1e-12));
  const double i2 =
      integrate([](double x) { return std::exp(-x); }, 0.0, 40.0, 1e-13);
  CHECK(i2 == doctest::Approx(1.0).epsilon(1e-12));
  const double i3 = integrate_to_inf(
      [](double x) { return 1.0 / (x * x); }, 2.0, 1e-12);
  CHECK(i3 == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("incomplete beta matches known values") {
  // I_x(1,1) = x
  CHECK(regularized_incomplete_beta(1.0, 1.0, 0.37) ==
        doctest::Approx(0.37).epsilon(1e-12));
  // I_x(2,2) = x²(3-2x)
  CHECK(regularized_incomplete_beta(2.0, 2.0, 0.25) ==
        doctest::Approx(0.25 * 0.25 * 2.5).epsilon(1e-12));
  // Student t3: P(T > 1) = 0.195501 (classic table value)
  const double z = 3.0 / (3.0 + 1.0);
  CHECK(0.5 * regularized_incomplete_beta(1.5, 0.5, z) ==
        doctest::Approx(0.19550110947788527).epsilon(1e-10));
}

TEST_CASE("slope fit recovers exact linear data") {
  const double xs[] = {1.0, 2.0, 3.0, 4.0};
  const double ys[] = {0.5, 2.5, 4.5, 6.5};
  CHECK(fit_slope(xs, ys) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("slowly varying ratios tend to one") {
  const SlowlyVaryingFn l = SlowlyVaryingFn::log_power(2.0, 1.5);
  for (double lambda : {0.5, 2.0, 10.0}) {
    double prev_gap = 1e9;
    for (double x : {1e3, 1e6, 1e9}) {
      const double ratio = l(lambda * x) / l(x);
      const double gap = std::abs(ratio - 1.0);
      // Tolerance scaled like O(1/ln x).
      CHECK(gap < 4.0 * std::abs(std::log(lambda)) / std::log(x));
      CHECK(gap <= prev_gap);
      prev_gap = gap;
    }
  }
  const SlowlyVaryingFn c = SlowlyVaryingFn::constant(3.0);
  CHECK(c(10.0) == 3.0);
  CHECK(c(1e12) == 3.0);
  CHECK_THROWS_AS(SlowlyVaryingFn::constant(-1.0), Error);
}

TEST_CASE("fnv hash is stable and input-sensitive") {
  CHECK(fnv1a64("") == 0xCBF29CE484222325ULL);
  CHECK(fnv1a64("a") != fnv1a64("b"));
  CHECK(fnv1a64("abc") == fnv1a64("abc"));
}
