#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "nslab/lattice.hpp"

namespace nslab {

/// H_[a,b] with Dirichlet boundary: diagonal V(a..b), off-diagonals 1.
class TruncatedOperator {
 public:
  TruncatedOperator(Window w, std::vector<double> diagonal);
  static TruncatedOperator from(const Potential& pot, Window w);
  static TruncatedOperator free(Window w);

  Window window() const noexcept { return window_; }
  std::size_t size() const noexcept { return diag_.size(); }
  std::span<const double> diagonal() const noexcept { return diag_; }

  /// max |V| + 2, an upper bound for the operator norm.
  double norm_bound() const noexcept;

  /// (H x)(i) for a vector indexed from the window start.
  std::vector<double> apply(std::span<const double> x) const;

 private:
  Window window_;
  std::vector<double> diag_;
};

/// Number of eigenvalues strictly below x (Sturm sequence).
std::int64_t sturm_count(const TruncatedOperator& op, double x);

/// All eigenvalues in ascending order, each bisected to machine precision.
std::vector<double> eigenvalues(const TruncatedOperator& op, unsigned threads = 1);

/// Unit eigenvector for an eigenvalue accurate to machine precision, from
/// the twisted factorization of H - lambda. Sign fixed so the largest
/// component is positive. Throws EigenvectorNonconvergence if the residual
/// exceeds 1e-8 * norm_bound().
std::vector<double> eigenvector(const TruncatedOperator& op, double eigenvalue);

struct SpectralData {
  Window window;
  std::vector<double> values;                ///< ascending
  std::vector<std::vector<double>> vectors;  ///< vectors[j][i] is psi_j(a + i)

  double min_gap() const noexcept;
  double max_residual(const TruncatedOperator& op) const;
  double max_orthogonality_defect() const;
};

/// Full eigendecomposition. Near-degenerate clusters are separated with
/// alternative twist indices and reorthogonalized.
SpectralData diagonalize(const TruncatedOperator& op, unsigned threads = 1);

/// amplitude(t, n) = <delta_n, exp(-i t H) delta_origin>.
struct Amplitudes {
  Window window;
  std::int64_t origin = 0;
  std::vector<double> times;
  std::vector<std::complex<double>> data;  ///< row-major [time][site]

  std::span<const std::complex<double>> at_time(std::size_t ti) const {
    const auto m = static_cast<std::size_t>(window.length());
    return std::span<const std::complex<double>>(data).subspan(ti * m, m);
  }
};

Amplitudes evolve_amplitudes(const SpectralData& spec, std::span<const double> times,
                             std::int64_t origin = 0, unsigned threads = 1);
Amplitudes evolve_amplitudes(const TruncatedOperator& op, std::span<const double> times,
                             std::int64_t origin = 0, unsigned threads = 1);

}  // namespace nslab
