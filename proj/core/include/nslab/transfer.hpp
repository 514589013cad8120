#pragma once

#include <array>
#include <cstdint>

#include "nslab/lattice.hpp"
#include "nslab/signed_log.hpp"

namespace nslab {

struct TransferMatrix {
  double m00 = 1.0;
  double m01 = 0.0;
  double m10 = 0.0;
  double m11 = 1.0;

  double det() const noexcept { return m00 * m11 - m01 * m10; }
};

/// [[E - v, -1], [1, 0]]
constexpr TransferMatrix transfer_matrix(double v, double energy) noexcept {
  return {energy - v, -1.0, 1.0, 0.0};
}

/// Overflow-safe product of transfer matrices, built by left multiplication
/// (push(A) maps T to A * T).
///
/// Stored as T = Q * R with Q a rotation by (c, s) and R upper triangular,
/// R = [[r11, shear * r11], [0, r22]]. r11 and r22 are kept as a mantissa
/// and a binary exponent, so neither the growing nor the decaying singular
/// direction loses precision, and det(T) = r11 * r22 is tracked directly.
/// The entries themselves come from a second copy multiplied out directly
/// and rescaled by powers of two, so exact zeros and signs survive.
class ScaledProduct {
 public:
  ScaledProduct() = default;

  /// Throws FactorOverflow if an entry of A exceeds 1e100 in magnitude.
  void push(const TransferMatrix& a);
  void push(double v, double energy) { push(transfer_matrix(v, energy)); }

  std::int64_t length() const noexcept { return length_; }

  /// log of the operator 2-norm.
  double log_norm() const noexcept;

  /// log |T v0| for a unit vector v0 (checked to 1e-12).
  double image_log_norm(double v0, double v1) const;

  /// Entries T00, T01, T10, T11 in sign/log form.
  std::array<SignedLog, 4> entries() const noexcept;

  /// Entries divided by exp(log_scale()); largest magnitude in [1/2, 1].
  std::array<double, 4> core() const noexcept;
  double log_scale() const noexcept;

  double det() const noexcept;
  /// |det(T) - 1|.
  double det_defect() const noexcept { return std::abs(det() - 1.0); }

 private:
  double log_r11() const noexcept;
  double log_abs_r22() const noexcept;

  double c_ = 1.0;
  double s_ = 0.0;
  double r11_ = 0.5;  // mantissa in [1/2, 1)
  int e11_ = 1;
  double shear_ = 0.0;
  double r22_ = 0.5;  // signed mantissa, |.| in [1/2, 1) unless zero
  int e22_ = 1;
  std::array<double, 4> direct_{1.0, 0.0, 0.0, 1.0};
  int direct_exp_ = 0;
  std::int64_t length_ = 0;
};

/// Free-function form of ScaledProduct::push.
ScaledProduct push(ScaledProduct prod, const TransferMatrix& a);

/// T_[a,b] = A_b ... A_a at energy E over the realized potential.
ScaledProduct window_product(const Potential& pot, Window w, double energy);

}  // namespace nslab
