#include "nslab/localization.hpp"

#include <algorithm>
#include <cmath>

#include "nslab/csv.hpp"
#include "nslab/errors.hpp"
#include "nslab/parallel.hpp"
#include "nslab/stats.hpp"

namespace nslab {
namespace {

constexpr std::int64_t kBoundarySites = 10;
constexpr std::int64_t kCoreRadius = 2;  // five sites around the centre
constexpr double kTiny = 1e-300;

std::int64_t find_center(std::span<const double> psi, Window w) {
  std::int64_t best = w.a;
  double best_abs = -1.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const std::int64_t x = w.a + static_cast<std::int64_t>(i);
    const double v = std::abs(psi[i]);
    const bool better = v > best_abs ||
                        (v == best_abs && (std::abs(x) < std::abs(best) ||
                                           (std::abs(x) == std::abs(best) && x < best)));
    if (better) {
      best = x;
      best_abs = v;
    }
  }
  return best;
}

Window interior(Window w) { return {w.a + kBoundarySites, w.b - kBoundarySites}; }

}  // namespace

DecayFit decay_fit(std::span<const double> psi, Window w) {
  if (static_cast<std::int64_t>(psi.size()) != w.length()) {
    throw InvalidArgument("decay_fit: vector length does not match the window");
  }
  DecayFit fit;
  fit.center = find_center(psi, w);
  fit.fit_window = interior(w);
  std::vector<double> xs, ys;
  for (std::int64_t x = fit.fit_window.a; x <= fit.fit_window.b; ++x) {
    if (std::abs(x - fit.center) <= kCoreRadius) continue;
    const double v = std::abs(psi[static_cast<std::size_t>(x - w.a)]);
    if (v < kTiny) continue;
    xs.push_back(static_cast<double>(std::abs(x - fit.center)));
    ys.push_back(std::log(v));
  }
  if (xs.size() < 10) {
    throw InsufficientData("decay_fit: " + std::to_string(xs.size()) +
                           " usable sites, need at least 10");
  }
  const LineFit lf = fit_line(xs, ys);
  fit.alpha = -lf.slope;
  fit.intercept = lf.intercept;
  fit.residual_rms = lf.residual_rms;
  fit.sites = xs.size();
  return fit;
}

std::vector<DecayFit> decay_fits(const SpectralData& spec, unsigned threads) {
  std::vector<DecayFit> out(spec.vectors.size());
  parallel_for(out.size(), threads,
               [&](std::size_t j) { out[j] = decay_fit(spec.vectors[j], spec.window); });
  return out;
}

double median_interior_rate(const std::vector<DecayFit>& fits) {
  const std::size_t m = fits.size();
  std::vector<double> rates;
  for (std::size_t j = m / 3; j < m - m / 3; ++j) rates.push_back(fits[j].alpha);
  if (rates.empty()) throw InsufficientData("median_interior_rate: no eigenvectors");
  return median(std::move(rates));
}

SuleFit sule_fit(const SpectralData& spec, double quantile_level, unsigned threads) {
  const auto fits = decay_fits(spec, threads);
  SuleFit out;
  out.quantile_level = quantile_level;
  std::vector<double> rates;
  for (const auto& f : fits) rates.push_back(f.alpha);
  out.alpha_global = quantile(rates, quantile_level);
  out.rows.resize(fits.size());
  parallel_for(fits.size(), threads, [&](std::size_t j) {
    const auto& psi = spec.vectors[j];
    const DecayFit& f = fits[j];
    double r = -INFINITY;
    for (std::int64_t x = f.fit_window.a; x <= f.fit_window.b; ++x) {
      const double v = std::abs(psi[static_cast<std::size_t>(x - spec.window.a)]);
      if (v < kTiny) continue;
      r = std::max(r, std::log(v) + out.alpha_global * static_cast<double>(std::abs(x - f.center)));
    }
    const double l2 = std::pow(std::log1p(static_cast<double>(std::abs(f.center))), 2);
    // Least C > 0 with log C + C l2 >= r; the left side increases in C.
    double c = std::exp(r);
    if (l2 > 0.0) {
      double lo = 0.0;
      double hi = std::max(1.0, std::exp(r));
      while (std::log(hi) + hi * l2 < r) hi *= 2.0;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (std::log(mid) + mid * l2 >= r) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      c = hi;
    }
    out.rows[j] = {j, spec.values[j], f.center, f.alpha, c};
  });
  for (const auto& row : out.rows) out.max_c = std::max(out.max_c, row.c_min);
  return out;
}

double MomentTrace::sup() const {
  double s = 0.0;
  for (std::size_t i = 0; i < moment.size(); ++i) {
    if (!contaminated[i]) s = std::max(s, moment[i]);
  }
  return s;
}

double MomentTrace::growth_ratio() const {
  if (moment.empty()) return 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < moment.size(); ++i) {
    if (!contaminated[i]) last = i;
  }
  return moment[last] / moment.front();
}

MomentTrace dynamical_moment(const Amplitudes& amps, double q) {
  MomentTrace tr;
  tr.q = q;
  tr.times = amps.times;
  const std::size_t m = static_cast<std::size_t>(amps.window.length());
  std::vector<double> weight(m);
  for (std::size_t i = 0; i < m; ++i) {
    const auto n = amps.window.a + static_cast<std::int64_t>(i) - amps.origin;
    weight[i] = std::pow(1.0 + static_cast<double>(std::abs(n)), q);
  }
  const std::size_t edge = static_cast<std::size_t>(kBoundarySites);
  for (std::size_t ti = 0; ti < amps.times.size(); ++ti) {
    const auto row = amps.at_time(ti);
    std::vector<double> a(m), a2(m);
    double edge_mass = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double mag = std::abs(row[i]);
      a[i] = weight[i] * mag;
      a2[i] = weight[i] * mag * mag;
      if (i < edge || i + edge >= m) edge_mass += mag * mag;
    }
    tr.moment.push_back(pairwise_sum(a));
    tr.moment_sq.push_back(pairwise_sum(a2));
    tr.edge_mass.push_back(edge_mass);
    tr.contaminated.push_back(edge_mass > 1e-6);
  }
  return tr;
}

MomentTrace dynamical_moment(const TruncatedOperator& op, double q, std::span<const double> times,
                             unsigned threads) {
  return dynamical_moment(evolve_amplitudes(op, times, 0, threads), q);
}

DelocalizationResult delocalization_control(const Ensemble& ens, double q,
                                            std::span<const double> times, std::int64_t n,
                                            std::uint64_t seed, unsigned threads,
                                            std::uint64_t trial) {
  if (n < 1) throw InvalidArgument("delocalization_control: n must be >= 1");
  const Window w{-n, n};
  const Potential pot = realize(ens, w, seed, StreamTag::dynamics, trial);
  DelocalizationResult r;
  for (double v : pot.values()) r.nonzero_sites += v != 0.0;
  r.trace = dynamical_moment(TruncatedOperator::from(pot, w), q, times, threads);
  r.free_trace = dynamical_moment(TruncatedOperator::free(w), q, times, threads);
  r.ratio = r.trace.growth_ratio();
  r.free_ratio = r.free_trace.growth_ratio();
  return r;
}

void write_decay_csv(std::ostream& out, const SpectralData& spec,
                     const std::vector<DecayFit>& fits) {
  CsvWriter csv(out, {"index", "eigenvalue", "center", "alpha", "residual_rms", "sites"});
  for (std::size_t j = 0; j < fits.size(); ++j) {
    csv.row(j, spec.values[j], fits[j].center, fits[j].alpha, fits[j].residual_rms, fits[j].sites);
  }
}

void write_sule_csv(std::ostream& out, const SuleFit& fit) {
  CsvWriter csv(out, {"index", "eigenvalue", "center", "alpha", "c_min"});
  for (const auto& r : fit.rows) csv.row(r.index, r.eigenvalue, r.center, r.alpha, r.c_min);
}

void write_moment_csv(std::ostream& out, const MomentTrace& trace) {
  CsvWriter csv(out, {"t", "moment", "moment_sq", "edge_mass", "contaminated"});
  for (std::size_t i = 0; i < trace.times.size(); ++i) {
    csv.row(trace.times[i], trace.moment[i], trace.moment_sq[i], trace.edge_mass[i],
            static_cast<bool>(trace.contaminated[i]));
  }
}

}  // namespace nslab
