#include "nslab/charpoly.hpp"

#include <cmath>
#include <string>

#include "nslab/errors.hpp"

namespace nslab {
namespace {

constexpr double kLn2 = 0.69314718055994530942;

// Runs P_k = (v_k - E) P_{k-1} - P_{k-2} from P_0 = 1, P_{-1} = 0 and
// returns (P_len, P_{len-1}). The pair is rescaled by a power of two each
// step; exact zeros survive because rescaling is exact.
struct Recursion {
  double cur = 1.0;
  double prev = 0.0;
  std::int64_t exponent = 0;

  void step(double d) {
    const double next = d * cur - prev;
    prev = cur;
    cur = next;
    const double big = std::max(std::abs(cur), std::abs(prev));
    if (big > 0x1p+64 || (big < 0x1p-64 && big > 0.0)) {
      int e = 0;
      std::frexp(big, &e);
      cur = std::ldexp(cur, -e);
      prev = std::ldexp(prev, -e);
      exponent += e;
    }
  }

  SignedLog as_log(double x) const {
    if (x == 0.0) return SignedLog::zero();
    return {std::log(std::abs(x)) + static_cast<double>(exponent) * kLn2, x > 0 ? 1 : -1};
  }
};

Recursion run(std::span<const double> v, double energy) {
  Recursion r;
  for (double x : v) r.step(x - energy);
  return r;
}

SignedLog window_poly(const Potential& pot, std::int64_t a, std::int64_t b, double energy) {
  if (b < a) return SignedLog::one();
  return charpoly(pot.on({a, b}), energy);
}

}  // namespace

SignedLog charpoly(std::span<const double> v, double energy) {
  const Recursion r = run(v, energy);
  return r.as_log(r.cur);
}

ScaledQuad charpoly_window(const Potential& pot, Window w, double energy) {
  const std::int64_t n = w.length();
  if (n < 0) throw InvalidArgument("charpoly_window: requires a <= b + 1");
  const auto v = pot.on(w);
  ScaledQuad q;
  const Recursion left = run(v, energy);
  q.p_ab = left.as_log(left.cur);
  q.p_a_b1 = left.as_log(left.prev);
  if (n == 0) {
    q.p_a1_b = SignedLog::zero();
    q.p_a1_b1 = SignedLog::from(-1.0);
    return q;
  }
  const Recursion right = run(v.subspan(1), energy);
  q.p_a1_b = right.as_log(right.cur);
  q.p_a1_b1 = n == 1 ? SignedLog::zero() : right.as_log(right.prev);
  return q;
}

ScaledQuad quad_from_product(const ScaledProduct& prod) {
  const auto t = prod.entries();
  const bool odd = prod.length() % 2 != 0;
  const auto s = [odd](SignedLog x, bool flip) { return (odd != flip) ? -x : x; };
  return {s(t[0], false), s(t[1], false), s(t[2], true), s(t[3], true)};
}

GreenEntry green_entry(const Potential& pot, Window w, double energy, std::int64_t x,
                       std::int64_t y) {
  if (x > y) std::swap(x, y);
  if (!(w.a <= x && y <= w.b)) {
    throw InvalidArgument("green_entry: (" + std::to_string(x) + "," + std::to_string(y) +
                          ") outside the window");
  }
  const SignedLog denom = window_poly(pot, w.a, w.b, energy);
  if (denom.is_zero()) {
    throw EnergyAtEigenvalue("green_entry: E is an eigenvalue of H_[" + std::to_string(w.a) +
                             "," + std::to_string(w.b) + "]");
  }
  SignedLog g = window_poly(pot, w.a, x - 1, energy) * window_poly(pot, y + 1, w.b, energy) / denom;
  if ((y - x) % 2 != 0) g = -g;
  return {g.log_abs, g.sign, w, x, y};
}

RegularityResult regularity_test(const Potential& pot, std::int64_t x, std::int64_t n,
                                 double energy, double c) {
  if (n < 0) throw InvalidArgument("regularity_test: negative scale");
  const Window w{x - n, x + n};
  RegularityResult r;
  r.log_left = green_entry(pot, w, energy, x, x - n).log_abs;
  r.log_right = green_entry(pot, w, energy, x, x + n).log_abs;
  r.log_threshold = -c * static_cast<double>(n);
  r.verdict = (r.log_left <= r.log_threshold && r.log_right <= r.log_threshold)
                  ? Regularity::regular
                  : Regularity::singular;
  return r;
}

double eigenfunction_bridge(const Potential& pot, Window w, std::int64_t x, double energy,
                            double psi_left, double psi_right) {
  const GreenEntry ga = green_entry(pot, w, energy, x, w.a);
  const GreenEntry gb = green_entry(pot, w, energy, x, w.b);
  const SignedLog left = SignedLog{ga.log_abs, ga.sign} * SignedLog::from(psi_left);
  const SignedLog right = SignedLog{gb.log_abs, gb.sign} * SignedLog::from(psi_right);
  return (-(left + right)).value();
}

}  // namespace nslab
