#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nslab/errors.hpp"

namespace nslab {

/// Closed integer interval [a, b]. Length b - a + 1 may be zero (a = b + 1).
struct Window {
  std::int64_t a = 0;
  std::int64_t b = 0;

  constexpr std::int64_t length() const noexcept { return b - a + 1; }
  constexpr bool contains(std::int64_t site) const noexcept { return a <= site && site <= b; }
  friend constexpr bool operator==(const Window&, const Window&) = default;
};

/// Realized potential values V(first), ..., V(first + size - 1).
class Potential {
 public:
  Potential() = default;
  Potential(std::int64_t first, std::vector<double> values)
      : first_(first), values_(std::move(values)) {}

  std::int64_t first() const noexcept { return first_; }
  std::int64_t last() const noexcept {
    return first_ + static_cast<std::int64_t>(values_.size()) - 1;
  }
  std::size_t size() const noexcept { return values_.size(); }
  Window window() const noexcept { return {first_, last()}; }

  bool covers(Window w) const noexcept {
    return w.length() <= 0 || (first_ <= w.a && w.b <= last());
  }

  double at(std::int64_t site) const {
    if (site < first_ || site > last()) {
      throw InvalidArgument("potential not realized at site " + std::to_string(site));
    }
    return values_[static_cast<std::size_t>(site - first_)];
  }

  /// Values on a window that must lie inside the realized range.
  std::span<const double> on(Window w) const {
    if (w.length() <= 0) return {};
    if (!covers(w)) {
      throw InvalidArgument("window [" + std::to_string(w.a) + "," + std::to_string(w.b) +
                            "] exceeds the realized potential");
    }
    return std::span<const double>(values_).subspan(static_cast<std::size_t>(w.a - first_),
                                                    static_cast<std::size_t>(w.length()));
  }

  std::span<const double> values() const noexcept { return values_; }

 private:
  std::int64_t first_ = 0;
  std::vector<double> values_;
};

}  // namespace nslab
