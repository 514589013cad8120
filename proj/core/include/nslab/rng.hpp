#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace nslab {

/// Stream tags keep module randomness disjoint for a shared experiment seed.
enum class StreamTag : std::uint64_t {
  ensemble_moments = 1,
  growth = 2,
  exceedance = 3,
  deviation_scan = 4,
  measure_trend = 5,
  additivity = 6,
  regularity = 7,
  localization = 8,
  dynamics = 9,
  verify = 10,
};

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Counter-based generator. The output is a pure function of
/// (seed, tag, index, sub, counter), so a stream can be recreated anywhere
/// without shared state. Satisfies UniformRandomBitGenerator.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  constexpr CounterRng(std::uint64_t seed, std::uint64_t tag, std::uint64_t index = 0,
                       std::uint64_t sub = 0) noexcept
      : key_(derive_key(seed, tag, index, sub)) {}

  constexpr CounterRng(std::uint64_t seed, StreamTag tag, std::uint64_t index = 0,
                       std::uint64_t sub = 0) noexcept
      : CounterRng(seed, static_cast<std::uint64_t>(tag), index, sub) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    ++counter_;
    return detail::mix64(key_ + counter_ * 0x9E3779B97F4A7C15ULL);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
  }

  /// Standard normal deviate (Box-Muller, one value per call).
  double normal() noexcept {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t derive_key(std::uint64_t seed, std::uint64_t tag,
                                            std::uint64_t index, std::uint64_t sub) noexcept {
    std::uint64_t k = detail::mix64(seed + 0x632BE59BD9B4E019ULL);
    k = detail::mix64(k ^ (tag * 0xD1B54A32D192ED03ULL));
    k = detail::mix64(k ^ (index * 0x8CB92BA72F3D8DD7ULL + 0x9E3779B97F4A7C15ULL));
    k = detail::mix64(k ^ (sub * 0xABC98388FB8FAC03ULL + 0x3C6EF372FE94F82BULL));
    return k;
  }

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace nslab
