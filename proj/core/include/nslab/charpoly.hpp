#pragma once

#include <cstdint>
#include <span>

#include "nslab/lattice.hpp"
#include "nslab/signed_log.hpp"
#include "nslab/transfer.hpp"

namespace nslab {

/// P_[a,b], P_[a+1,b], P_[a,b-1], P_[a+1,b-1] where P_[a,b] = det(H_[a,b] - E).
///
/// Windows of length 0, -1, -2 evaluate to 1, 0, -1, the values that keep the
/// three-term recursion valid. With n = b - a + 1 the transfer product is
///   T_[a,b] = (-1)^n [[P_[a,b], P_[a+1,b]], [-P_[a,b-1], -P_[a+1,b-1]]].
struct ScaledQuad {
  SignedLog p_ab;
  SignedLog p_a1_b;
  SignedLog p_a_b1;
  SignedLog p_a1_b1;
};

/// det(H - E) for the tridiagonal matrix with diagonal v and unit
/// off-diagonal; 1 for an empty span. Exact zeros come back as sign 0.
SignedLog charpoly(std::span<const double> v, double energy);

/// The four polynomials of window [a, b]; requires a <= b + 1.
ScaledQuad charpoly_window(const Potential& pot, Window w, double energy);

/// The polynomials read off a transfer product of length n via the sign
/// pattern documented on ScaledQuad.
ScaledQuad quad_from_product(const ScaledProduct& prod);

struct GreenEntry {
  double log_abs = 0.0;
  int sign = 0;
  Window window;
  std::int64_t x = 0;
  std::int64_t y = 0;

  double value() const noexcept { return SignedLog{log_abs, sign}.value(); }
};

/// (H_[a,b] - E)^{-1}(x, y). For x <= y,
///   G(x, y) = (-1)^(y-x) P_[a,x-1] P_[y+1,b] / P_[a,b].
/// Throws EnergyAtEigenvalue when P_[a,b](E) = 0.
GreenEntry green_entry(const Potential& pot, Window w, double energy, std::int64_t x,
                       std::int64_t y);

enum class Regularity { regular, singular };

struct RegularityResult {
  Regularity verdict = Regularity::singular;
  double log_left = 0.0;   // log |G(x, x - n)|
  double log_right = 0.0;  // log |G(x, x + n)|
  double log_threshold = 0.0;  // -C n

  bool regular() const noexcept { return verdict == Regularity::regular; }
};

/// Regular iff both corner entries of G_[x-n, x+n] seen from x are at most
/// exp(-C n).
RegularityResult regularity_test(const Potential& pot, std::int64_t x, std::int64_t n,
                                 double energy, double c);

/// Interior value of a solution of H psi = E psi from its values just
/// outside [a, b]: -G(x, a) psi(a-1) - G(x, b) psi(b+1).
double eigenfunction_bridge(const Potential& pot, Window w, std::int64_t x, double energy,
                            double psi_left, double psi_right);

}  // namespace nslab
