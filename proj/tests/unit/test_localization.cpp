#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nslab/csv.hpp"
#include "nslab/errors.hpp"
#include "nslab/localization.hpp"
#include "nslab/stats.hpp"

using namespace nslab;
using Catch::Approx;

namespace {

const Ensemble kStrong = Ensemble::iid(Distribution::point_masses({{0, 0.5}, {8, 0.5}}));

std::vector<double> bump(Window w, std::int64_t center, double alpha) {
  std::vector<double> psi;
  double norm = 0.0;
  for (std::int64_t x = w.a; x <= w.b; ++x) {
    psi.push_back(std::exp(-alpha * static_cast<double>(std::abs(x - center))));
    norm += psi.back() * psi.back();
  }
  for (double& p : psi) p /= std::sqrt(norm);
  return psi;
}

std::vector<double> times(double t_max, int points) {
  std::vector<double> t;
  for (int i = 0; i < points; ++i) t.push_back(t_max * i / (points - 1));
  return t;
}

SpectralData strong_spectrum(std::int64_t n, std::uint64_t seed) {
  const Window w{-n, n};
  const Potential pot = realize(kStrong, w, seed, StreamTag::localization, 0);
  return diagonalize(TruncatedOperator::from(pot, w));
}

}  // namespace

TEST_CASE("decay fit recovers a synthetic rate") {
  const Window w{-100, 100};
  const DecayFit f = decay_fit(bump(w, 10, 0.5), w);
  CHECK(f.center == 10);
  CHECK(f.alpha == Approx(0.5).epsilon(1e-9));
  CHECK(f.residual_rms < 1e-9);
  CHECK(f.sites >= 10);
}

TEST_CASE("decay fit needs enough sites") {
  const Window w{0, 24};
  CHECK_THROWS_AS(decay_fit(bump(w, 12, 0.5), w), InsufficientData);
  const std::vector<double> wrong(3, 1.0);
  CHECK_THROWS(decay_fit(wrong, w));
}

TEST_CASE("free eigenvectors do not decay") {
  const SpectralData spec = diagonalize(TruncatedOperator::free({-200, 199}));
  const auto fits = decay_fits(spec);
  CHECK(std::abs(median_interior_rate(fits)) <= 0.01);
  const SuleFit s = sule_fit(spec);
  CHECK(s.verdict() == "no SULE");
}

TEST_CASE("strong disorder localizes") {
  const SpectralData spec = strong_spectrum(200, 7);
  const auto fits = decay_fits(spec);
  CHECK(median_interior_rate(fits) >= 0.1);
  const SuleFit s = sule_fit(spec, 0.1);
  CHECK(s.verdict() == "SULE");
  CHECK(s.rows.size() == spec.values.size());
  CHECK(std::isfinite(s.max_c));
  std::stringstream ss;
  write_sule_csv(ss, s);
  CHECK(read_csv(ss).rows.size() == spec.values.size());
  std::stringstream dc;
  write_decay_csv(dc, spec, fits);
  CHECK(read_csv(dc).rows.size() == spec.values.size());
}

TEST_CASE("synthetic SULE basis") {
  const Window w{-150, 150};
  SpectralData spec;
  spec.window = w;
  for (std::int64_t l = -100; l <= 100; l += 10) {
    spec.values.push_back(static_cast<double>(l) / 100.0);
    spec.vectors.push_back(bump(w, l, 0.8));
  }
  const SuleFit s = sule_fit(spec, 0.1);
  CHECK(s.alpha_global == Approx(0.8).epsilon(1e-6));
  CHECK(s.localized());
  CHECK(s.max_c < 1.0);
  for (const auto& r : s.rows) CHECK(r.c_min <= s.max_c);
}

TEST_CASE("SULE constant is stable under window doubling") {
  std::vector<double> ratios;
  for (std::uint64_t seed : {1, 2, 3, 4, 5}) {
    const SuleFit small = sule_fit(strong_spectrum(200, seed), 0.1);
    const SuleFit large = sule_fit(strong_spectrum(400, seed), 0.1);
    REQUIRE(small.max_c > 0.0);
    ratios.push_back(large.max_c / small.max_c);
  }
  CHECK(median(ratios) <= 2.0);
}

TEST_CASE("moments at time zero and unitarity") {
  const Window w{-60, 60};
  const Potential pot = realize(kStrong, w, 3, StreamTag::dynamics, 0);
  const TruncatedOperator op = TruncatedOperator::from(pot, w);
  const auto t = times(10.0, 11);
  const MomentTrace m = dynamical_moment(op, 2.0, t);
  CHECK(m.moment.front() == Approx(1.0).margin(1e-12));
  const MomentTrace zero = dynamical_moment(op, 0.0, t);
  for (double v : zero.moment_sq) CHECK(v == Approx(1.0).margin(1e-10));
  const Amplitudes amps = evolve_amplitudes(op, t);
  for (std::size_t i = 0; i < t.size(); ++i) {
    double mass = 0.0;
    for (const auto& a : amps.at_time(i)) mass += std::norm(a);
    CHECK(mass == Approx(1.0).margin(1e-10));
  }
}

TEST_CASE("free motion spreads and disorder does not") {
  const auto t = times(50.0, 26);
  const DelocalizationResult r = delocalization_control(kStrong, 2.0, t, 300, 7);
  CHECK(r.free_ratio >= 1e3);
  CHECK(r.trace.sup() <= 100.0);
  double lo = INFINITY, hi = 0.0;
  for (std::size_t i = t.size() / 2; i < t.size(); ++i) {
    REQUIRE_FALSE(r.trace.contaminated[i]);
    lo = std::min(lo, r.trace.moment[i]);
    hi = std::max(hi, r.trace.moment[i]);
  }
  CHECK(hi / lo <= 2.0);
  CHECK(r.verdict() == "localized");
  std::stringstream ss;
  write_moment_csv(ss, r.trace);
  CHECK(read_csv(ss).rows.size() == t.size());
}

TEST_CASE("deterministic-limit control behaves like the free walk") {
  const Ensemble ens(0, {}, DeterministicLimitRule{2}, {2.0, 1.5, 2.0, 0.5});
  const auto t = times(50.0, 26);
  bool saw_zero = false;
  for (std::uint64_t trial = 0; trial < 5; ++trial) {
    const DelocalizationResult r = delocalization_control(ens, 2.0, t, 300, 11, 1, trial);
    CHECK(r.verdict() == "delocalized");
    if (r.nonzero_sites == 0) {
      saw_zero = true;
      CHECK(r.trace.moment == r.free_trace.moment);
    }
  }
  CHECK(saw_zero);
}

TEST_CASE("dynamics do not depend on the thread count") {
  const auto t = times(20.0, 5);
  const DelocalizationResult a = delocalization_control(kStrong, 2.0, t, 80, 5, 1);
  const DelocalizationResult b = delocalization_control(kStrong, 2.0, t, 80, 5, 4);
  CHECK(a.trace.moment == b.trace.moment);
  CHECK(a.free_trace.moment == b.free_trace.moment);
}
