#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "nslab/ensembles.hpp"
#include "nslab/lattice.hpp"
#include "nslab/spectrum.hpp"

namespace nslab {

struct DecayFit {
  std::int64_t center = 0;  ///< site of max |psi|
  double alpha = 0.0;       ///< -slope of log|psi| against |x - center|
  double intercept = 0.0;
  double residual_rms = 0.0;
  std::size_t sites = 0;
  Window fit_window;
};

/// Least-squares decay rate of an eigenvector on window w. Skips the five
/// sites nearest the centre, ten sites at each boundary and entries below
/// 1e-300. Throws InsufficientData with fewer than ten usable sites.
DecayFit decay_fit(std::span<const double> psi, Window w);

/// decay_fit for every eigenvector.
std::vector<DecayFit> decay_fits(const SpectralData& spec, unsigned threads = 1);

/// Median alpha over the middle third of the spectrum (by index).
double median_interior_rate(const std::vector<DecayFit>& fits);

struct SuleRow {
  std::size_t index = 0;
  double eigenvalue = 0.0;
  std::int64_t center = 0;
  double alpha = 0.0;
  double c_min = 0.0;  ///< least C with |psi(x)| <= C e^{C ln^2(1+|l|)} e^{-alpha_global |x-l|}
};

struct SuleFit {
  double quantile_level = 0.1;
  double alpha_global = 0.0;
  double max_c = 0.0;
  std::vector<SuleRow> rows;

  bool localized() const noexcept { return alpha_global > 0.01; }
  std::string verdict() const { return localized() ? "SULE" : "no SULE"; }
};

/// alpha_global is the given quantile of the per-vector rates; the bound
/// is checked over each vector's fit window.
SuleFit sule_fit(const SpectralData& spec, double quantile_level = 0.1, unsigned threads = 1);

struct MomentTrace {
  double q = 0.0;
  std::vector<double> times;
  std::vector<double> moment;     ///< sum (1+|n|)^q |amp|
  std::vector<double> moment_sq;  ///< sum (1+|n|)^q |amp|^2
  std::vector<double> edge_mass;  ///< mass within 10 sites of either edge
  std::vector<bool> contaminated; ///< edge_mass > 1e-6

  /// Sup of moment over uncontaminated times (0 if none).
  double sup() const;
  /// Last uncontaminated value over the first value.
  double growth_ratio() const;
};

MomentTrace dynamical_moment(const Amplitudes& amps, double q);
MomentTrace dynamical_moment(const TruncatedOperator& op, double q, std::span<const double> times,
                             unsigned threads = 1);

struct DelocalizationResult {
  MomentTrace trace;
  MomentTrace free_trace;
  double ratio = 0.0;
  double free_ratio = 0.0;
  std::size_t nonzero_sites = 0;

  /// "delocalized" when the growth ratio is within a factor 10 of the free one.
  std::string verdict() const { return ratio >= free_ratio / 10.0 ? "delocalized" : "localized"; }
};

/// One realization on [-n, n] against the free Laplacian on the same window.
DelocalizationResult delocalization_control(const Ensemble& ens, double q,
                                            std::span<const double> times, std::int64_t n,
                                            std::uint64_t seed, unsigned threads = 1,
                                            std::uint64_t trial = 0);

void write_decay_csv(std::ostream& out, const SpectralData& spec, const std::vector<DecayFit>& fits);
void write_sule_csv(std::ostream& out, const SuleFit& fit);
void write_moment_csv(std::ostream& out, const MomentTrace& trace);

}  // namespace nslab
