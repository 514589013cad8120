#include "nslab/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "nslab/errors.hpp"

namespace nslab {
namespace {

constexpr double kLn2 = 0.69314718055994530942;
constexpr double kMaxFactorEntry = 1e100;

// Largest singular value of [[1, b], [0, d]].
double sigma1_unit_triangular(double b, double d) {
  const double p = std::hypot(1.0 + d, b);
  const double m = std::hypot(1.0 - d, b);
  return 0.5 * (p + m);
}

}  // namespace

void ScaledProduct::push(const TransferMatrix& a) {
  if (!(std::abs(a.m00) <= kMaxFactorEntry && std::abs(a.m01) <= kMaxFactorEntry &&
        std::abs(a.m10) <= kMaxFactorEntry && std::abs(a.m11) <= kMaxFactorEntry)) {
    throw FactorOverflow("transfer factor entry exceeds 1e100 (pathological potential draw)");
  }
  // M = A * Q
  const double m00 = a.m00 * c_ + a.m01 * s_;
  const double m01 = -a.m00 * s_ + a.m01 * c_;
  const double m10 = a.m10 * c_ + a.m11 * s_;
  const double m11 = -a.m10 * s_ + a.m11 * c_;
  const double rho = std::hypot(m00, m10);
  if (rho == 0.0) throw InvalidArgument("singular transfer factor");
  const double c = m00 / rho;
  const double s = m10 / rho;
  const double x = c * m01 + s * m11;
  const double y = -s * m01 + c * m11;

  // R' = [[rho, x], [0, y]] * R
  const double ratio = std::ldexp(r22_ / r11_, e22_ - e11_);
  shear_ += (x / rho) * ratio;
  int e = 0;
  r11_ = std::frexp(r11_ * rho, &e);
  e11_ += e;
  r22_ = std::frexp(r22_ * y, &e);
  e22_ += e;
  c_ = c;
  s_ = s;

  auto& d = direct_;
  d = {a.m00 * d[0] + a.m01 * d[2], a.m00 * d[1] + a.m01 * d[3],
       a.m10 * d[0] + a.m11 * d[2], a.m10 * d[1] + a.m11 * d[3]};
  const double top = std::max({std::abs(d[0]), std::abs(d[1]), std::abs(d[2]), std::abs(d[3])});
  std::frexp(top, &e);
  if (e > 64 || e < -64) {
    for (double& entry : d) entry = std::ldexp(entry, -e);
    direct_exp_ += e;
  }
  ++length_;
}

double ScaledProduct::log_r11() const noexcept { return std::log(r11_) + e11_ * kLn2; }

double ScaledProduct::log_abs_r22() const noexcept {
  return std::log(std::abs(r22_)) + e22_ * kLn2;
}

double ScaledProduct::log_norm() const noexcept {
  const double w = std::ldexp(r22_ / r11_, e22_ - e11_);
  const double v = log_r11() + std::log(sigma1_unit_triangular(shear_, w));
  // The norm of an SL(2) matrix is at least 1; drop rounding below that.
  return (v < 0.0 && v > -1e-12) ? 0.0 : v;
}

double ScaledProduct::image_log_norm(double v0, double v1) const {
  if (std::abs(std::hypot(v0, v1) - 1.0) > 1e-12) {
    throw InvalidArgument("image_log_norm: vector is not a unit vector");
  }
  // |T v| = |R v| = |(r11 (v0 + shear v1), r22 v1)|
  const SignedLog top = SignedLog::from(v0 + shear_ * v1);
  const SignedLog bottom = SignedLog::from(v1);
  const double l1 = top.is_zero() ? -INFINITY : log_r11() + top.log_abs;
  const double l2 = (bottom.is_zero() || r22_ == 0.0) ? -INFINITY : log_abs_r22() + bottom.log_abs;
  const double hi = std::max(l1, l2);
  if (hi == -INFINITY) return -INFINITY;
  const double lo = std::min(l1, l2);
  return hi + 0.5 * std::log1p(std::exp(2.0 * (lo - hi)));
}

std::array<SignedLog, 4> ScaledProduct::entries() const noexcept {
  std::array<SignedLog, 4> out;
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = SignedLog::from(direct_[i]);
    if (!out[i].is_zero()) out[i].log_abs += direct_exp_ * kLn2;
  }
  return out;
}

double ScaledProduct::log_scale() const noexcept {
  double top = -INFINITY;
  for (const SignedLog& e : entries()) top = std::max(top, e.log_abs);
  return (std::floor(top / kLn2) + 1.0) * kLn2;
}

std::array<double, 4> ScaledProduct::core() const noexcept {
  const double scale = log_scale();
  std::array<double, 4> out{};
  const auto e = entries();
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = e[i].is_zero() ? 0.0 : e[i].sign * std::exp(e[i].log_abs - scale);
  }
  return out;
}

double ScaledProduct::det() const noexcept {
  return (c_ * c_ + s_ * s_) * std::ldexp(r11_ * r22_, e11_ + e22_);
}

ScaledProduct push(ScaledProduct prod, const TransferMatrix& a) {
  prod.push(a);
  return prod;
}

ScaledProduct window_product(const Potential& pot, Window w, double energy) {
  ScaledProduct prod;
  for (double v : pot.on(w)) prod.push(v, energy);
  return prod;
}

}  // namespace nslab
