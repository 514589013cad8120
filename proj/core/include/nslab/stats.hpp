#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace nslab {

/// Pairwise (tree) summation in index order. The association pattern depends
/// only on the length, so results are reproducible bit-for-bit.
double pairwise_sum(std::span<const double> values);

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  ///< sample standard deviation (n - 1)
  double std_error = 0.0;  ///< stddev / sqrt(n)
  std::size_t count = 0;
};

/// Two-pass mean and spread, both reduced with pairwise_sum.
Summary summarize(std::span<const double> values);

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Wilson score interval for `successes` out of `trials` at normal quantile z.
Interval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  Interval slope_ci;  ///< two-sided, Student-t with n - 2 degrees of freedom
  double residual_rms = 0.0;
  std::size_t points = 0;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two
/// distinct x values; the interval needs at least three points.
LineFit fit_line(std::span<const double> x, std::span<const double> y, double confidence = 0.95);

/// Linear-interpolated empirical quantile (type 7), q in [0, 1].
double quantile(std::vector<double> values, double q);

double median(std::vector<double> values);

}  // namespace nslab
