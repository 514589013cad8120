#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nslab/ensembles.hpp"
#include "nslab/growth.hpp"
#include "nslab/lattice.hpp"
#include "nslab/stats.hpp"

namespace nslab {

enum class Statistic { norm, image, entry };

std::string to_string(Statistic s);
Statistic statistic_from_string(const std::string& s);

struct ExceedanceOptions {
  Statistic statistic = Statistic::norm;
  std::array<double, 2> v0{1.0, 0.0};  ///< unit vector for Statistic::image
  MonteCarloOptions mc;
};

struct ExceedancePoint {
  std::int64_t n = 0;
  double reference = 0.0;  ///< L_n used for centring
  std::size_t exceed = 0;
  std::size_t trials = 0;
  double probability = 0.0;
  Interval wilson;
};

struct ExceedanceCurve {
  double energy = 0.0;
  double epsilon = 0.0;
  Statistic statistic = Statistic::norm;
  std::vector<ExceedancePoint> points;
  /// Least squares of log p against n over points with >= 5 exceedances.
  bool fitted = false;
  LineFit fit;
  double delta_hat = 0.0;  ///< -slope
  std::vector<std::int64_t> fit_range;
  bool monotone = false;   ///< each fitted p lies below the previous upper Wilson bound
};

/// P(|stat - L_n| > eps n) for T_n = A_n ... A_1 (window [1, n]) at one
/// energy. stat is log||T_n||, log|T_n v0| or log|P_[1,n]|. The reference
/// table must contain each window [1, n] and at least 10x the trials.
ExceedanceCurve exceedance(const Ensemble& ens, std::span<const std::int64_t> n_list,
                           double energy, double epsilon, const GrowthTable& reference,
                           const ExceedanceOptions& opts);

/// Piecewise-linear reference growth curve for one window.
struct ReferenceCurve {
  std::vector<double> energies;
  std::vector<double> values;
  std::vector<double> std_errors;

  static ReferenceCurve from_table(const GrowthTable& table, Window w);
  static ReferenceCurve constant(double value);
  /// Linear interpolation; end values held constant outside the grid.
  double at(double energy) const;
  double std_error_at(double energy) const;
};

struct DeviationInterval {
  double lo = 0.0;  ///< endpoints, possibly beyond J for edge intervals
  double hi = 0.0;
  double clipped_length = 0.0;   ///< length of the part inside J
  std::vector<std::size_t> eigenvalue_ids;  ///< indices into the window spectrum
};

/// B-_[a,b],eps = { E : log|P_[a,b](E)| - L(E) < -(b - a + 1) eps } on J.
struct DeviationScan {
  Window window;
  double epsilon = 0.0;
  double j_min = 0.0;
  double j_max = 0.0;
  std::vector<double> eigenvalues;
  std::vector<DeviationInterval> intervals;  ///< components meeting J
  double total_length = 0.0;                 ///< Lebesgue measure inside J

  /// Components not containing exactly one eigenvalue, plus one if the
  /// count exceeds the window length.
  std::size_t violations() const;
};

/// Exact scan: between consecutive grid points and eigenvalues the
/// function is concave, so each piece is resolved by locating its maximum
/// and bisecting the two monotone sides to 1e-10. The grid only fixes J and
/// the knots of the reference curve. Components touching the ends of J are
/// followed outside J (reference held flat) to find their eigenvalues.
DeviationScan scan_deviation_set(const Potential& pot, Window w, double epsilon,
                                 std::span<const double> grid, const ReferenceCurve& reference);

/// log|P_[a,b](E)| - L(E) + (b - a + 1) eps; negative inside B-.
double deviation_function(const Potential& pot, Window w, double epsilon,
                          const ReferenceCurve& reference, double energy);

struct MeasurePoint {
  std::int64_t n = 0;
  Window window;  ///< [n + 1, 3n + 1]
  double mean_length = 0.0;
  double std_error = 0.0;
  std::size_t trials = 0;
  std::size_t grid_errors = 0;
  std::size_t violations = 0;
};

struct MeasureTrend {
  double epsilon = 0.0;
  std::vector<MeasurePoint> points;
  bool fitted = false;
  LineFit fit;  ///< log mean length against n over positive means
};

/// Mean total length of B-_[n+1,3n+1],eps over realizations. The reference
/// table must contain each window [n + 1, 3n + 1] on the grid.
MeasureTrend measure_trend(const Ensemble& ens, std::span<const std::int64_t> n_list,
                           double epsilon, std::span<const double> grid,
                           const GrowthTable& reference, const MonteCarloOptions& mc);

struct SingularityCheck {
  std::int64_t n = 0;
  double c = 0.0;  ///< regularity rate h_hat - 6 eps
  std::size_t tested = 0;
  std::size_t singular = 0;
  std::size_t violations = 0;  ///< singular but outside B-
  std::size_t eigenvalue_hits = 0;
};

struct SingularityReport {
  double epsilon = 0.0;
  double h_hat = 0.0;
  std::int64_t n_min = 0;
  std::vector<SingularityCheck> checks;
  std::size_t violations_above_n_min() const;
};

/// At x = 2n + 1 on window [n + 1, 3n + 1]: whenever x is singular at rate
/// h_hat - 6 eps, E must lie in B-_[n+1,3n+1],eps. Energies are the grid.
SingularityReport singular_implies_deviation(const Ensemble& ens,
                                             std::span<const std::int64_t> n_list,
                                             double epsilon, double h_hat, std::int64_t n_min,
                                             std::span<const double> grid,
                                             const GrowthTable& reference,
                                             const MonteCarloOptions& mc);

/// Columns n, reference, exceed, trials, probability, wilson_lo, wilson_hi.
void write_exceedance_csv(std::ostream& out, const ExceedanceCurve& curve);
/// Columns n, window_a, window_b, mean_length, stderr, trials, grid_errors, violations.
void write_measure_csv(std::ostream& out, const MeasureTrend& trend);

}  // namespace nslab
