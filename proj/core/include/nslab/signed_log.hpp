#pragma once

#include <cmath>
#include <limits>
#include <utility>

namespace nslab {

/// A real number stored as sign * exp(log_abs). Zero is sign 0 with
/// log_abs = -infinity.
struct SignedLog {
  double log_abs = 0.0;
  int sign = 1;

  static SignedLog zero() noexcept {
    return {-std::numeric_limits<double>::infinity(), 0};
  }
  static SignedLog one() noexcept { return {0.0, 1}; }

  static SignedLog from(double x) noexcept {
    if (x == 0.0) return zero();
    return {std::log(std::abs(x)), x > 0 ? 1 : -1};
  }

  bool is_zero() const noexcept { return sign == 0; }

  /// Converts back to a double; overflows to +-inf or underflows to 0.
  double value() const noexcept { return sign == 0 ? 0.0 : sign * std::exp(log_abs); }

  SignedLog operator-() const noexcept { return {log_abs, -sign}; }

  friend SignedLog operator*(SignedLog x, SignedLog y) noexcept {
    if (x.sign == 0 || y.sign == 0) return zero();
    return {x.log_abs + y.log_abs, x.sign * y.sign};
  }

  friend SignedLog operator/(SignedLog x, SignedLog y) noexcept {
    // Callers guard against y == 0.
    if (x.sign == 0) return zero();
    return {x.log_abs - y.log_abs, x.sign * y.sign};
  }

  /// Sum with the dominant magnitude factored out.
  friend SignedLog operator+(SignedLog x, SignedLog y) noexcept {
    if (x.sign == 0) return y;
    if (y.sign == 0) return x;
    if (x.log_abs < y.log_abs) std::swap(x, y);
    const double t = (x.sign * y.sign) * std::exp(y.log_abs - x.log_abs);
    if (t == -1.0) return zero();
    return {x.log_abs + std::log1p(t), x.sign};
  }

  friend SignedLog operator-(SignedLog x, SignedLog y) noexcept { return x + (-y); }
};

}  // namespace nslab
