#include "lrf/rng.hpp"

#include <cmath>

namespace lrf {
namespace {

// 128-block ziggurat for the standard normal, after Marsaglia/Tsang with
// Doornik's double-precision layout. ZIG_R is the start of the tail block,
// ZIG_V the common block area.
constexpr int kZigBlocks = 128;
constexpr double kZigR = 3.442619855899;
constexpr double kZigV = 9.91256303526217e-3;

struct ZigTables {
  double x[kZigBlocks + 1];
  double ratio[kZigBlocks];
  ZigTables() {
    double f = std::exp(-0.5 * kZigR * kZigR);
    x[0] = kZigV / f;
    x[1] = kZigR;
    x[kZigBlocks] = 0.0;
    for (int i = 2; i < kZigBlocks; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kZigV / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kZigBlocks; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

const ZigTables& zig() {
  static const ZigTables tables;
  return tables;
}

}  // namespace

double Rng::next_normal() {
  const ZigTables& z = zig();
  for (;;) {
    const std::uint64_t bits = next_u64();
    const int i = static_cast<int>(bits & 0x7F);
    const bool negative = (bits >> 7) & 1;
    const double u = static_cast<double>(bits >> 11) * 0x1.0p-53;
    if (u < z.ratio[i]) {
      const double v = u * z.x[i];
      return negative ? -v : v;
    }
    if (i == 0) {
      // Tail sample beyond kZigR by exponential rejection.
      double xt, yt;
      do {
        xt = std::log(1.0 - next_double()) / kZigR;
        yt = std::log(1.0 - next_double());
      } while (-2.0 * yt < xt * xt);
      return negative ? xt - kZigR : kZigR - xt;
    }
    const double v = u * z.x[i];
    const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - v * v));
    const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - v * v));
    if (f1 + next_double() * (f0 - f1) < 1.0) return negative ? -v : v;
  }
}

}  // namespace lrf
