#pragma once

#include <cmath>

#include "lrf/errors.hpp"

namespace lrf {

// Slowly varying factor l(x): either a positive constant or
// c * (ln(e + x))^gamma. Both satisfy l(λx)/l(x) -> 1 for every λ > 0 and
// are positive on [0, ∞).
class SlowlyVaryingFn {
 public:
  enum class Kind { Constant, LogPower };

  static SlowlyVaryingFn constant(double c) {
    require(c > 0.0, ErrorCode::InvalidArgument,
            "slowly varying constant must be positive");
    return SlowlyVaryingFn(Kind::Constant, c, 0.0);
  }

  static SlowlyVaryingFn log_power(double c, double gamma) {
    require(c > 0.0, ErrorCode::InvalidArgument,
            "slowly varying scale must be positive");
    return SlowlyVaryingFn(Kind::LogPower, c, gamma);
  }

  double operator()(double x) const {
    if (kind_ == Kind::Constant) return c_;
    return c_ * std::pow(std::log(2.718281828459045235 + x), gamma_);
  }

  Kind kind() const { return kind_; }
  bool is_constant() const { return kind_ == Kind::Constant; }
  double scale() const { return c_; }
  double exponent() const { return gamma_; }

 private:
  SlowlyVaryingFn(Kind kind, double c, double gamma)
      : kind_(kind), c_(c), gamma_(gamma) {}

  Kind kind_;
  double c_;
  double gamma_;
};

}  // namespace lrf
