#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nslab/ensembles.hpp"
#include "nslab/lattice.hpp"
#include "nslab/rng.hpp"

namespace nslab {

struct MonteCarloOptions {
  std::size_t trials = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Monte Carlo estimates of L_[a,b],E = E log ||T_[a,b],E|| over a window
/// list and an energy grid. Every trial uses one potential draw for all
/// energies (common random numbers).
struct GrowthTable {
  std::vector<Window> windows;
  std::vector<double> energies;
  std::vector<double> mean;       ///< [window][energy], row-major
  std::vector<double> std_error;  ///< [window][energy]
  std::size_t trials = 0;

  double mean_at(std::size_t w, std::size_t e) const { return mean[w * energies.size() + e]; }
  double std_error_at(std::size_t w, std::size_t e) const {
    return std_error[w * energies.size() + e];
  }

  /// Index of a window; throws MissingReference if absent.
  std::size_t window_index(Window w) const;

  /// Linear interpolation in E for one window. Outside the grid the end
  /// value is held constant.
  double interpolate(std::size_t w, double energy) const;
};

GrowthTable estimate_growth(const Ensemble& ens, std::span<const Window> windows,
                            std::span<const double> energies, const MonteCarloOptions& opts,
                            StreamTag tag = StreamTag::growth);

struct RatePoint {
  Window window;
  double energy = 0.0;
  double per_site = 0.0;      ///< L / n
  double conservative = 0.0;  ///< (L - 3 stderr) / n
};

struct RateEstimate {
  double h_hat = 0.0;
  bool growth_detected = false;
  std::vector<RatePoint> points;
  /// Largest relative change of L/n between the two longest windows,
  /// over the energy grid.
  double last_relative_change = 0.0;
  bool stabilized = false;  ///< last_relative_change <= 5%

  std::string flag() const { return growth_detected ? "growth detected" : "no growth detected"; }
};

/// h_hat = min over windows and energies of (L - 3 stderr) / n, floored at
/// zero. Needs at least three distinct window lengths.
RateEstimate estimate_h(const GrowthTable& table);

struct Equicontinuity {
  double spacing = 0.0;
  std::vector<double> per_window;  ///< max_i |L(E_{i+1}) - L(E_i)| / n
  double sup = 0.0;
};

/// Requires a uniform energy grid.
Equicontinuity equicontinuity_modulus(const GrowthTable& table);

struct AdditivityDefect {
  Window left;
  Window right;
  double energy = 0.0;
  double mean = 0.0;  ///< mean of log||T_l|| + log||T_r|| - log||T_lr||
  double std_error = 0.0;
  double min = 0.0;   ///< smallest pointwise defect; >= -1e-8 by submultiplicativity
  std::size_t trials = 0;
};

/// Disjoint split [a,b] and [b+1,c]; requires a <= b < c.
AdditivityDefect additivity_defect(const Ensemble& ens, std::int64_t a, std::int64_t b,
                                   std::int64_t c, double energy, const MonteCarloOptions& opts);

/// Columns window_a, window_b, E, mean_log_norm, stderr, trials.
void write_growth_csv(std::ostream& out, const GrowthTable& table);

}  // namespace nslab
