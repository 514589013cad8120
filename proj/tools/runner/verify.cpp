#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <sstream>

#include "nslab/charpoly.hpp"
#include "nslab/csv.hpp"
#include "nslab/deviations.hpp"
#include "nslab/growth.hpp"
#include "nslab/localization.hpp"
#include "nslab/spectrum.hpp"
#include "nslab/transfer.hpp"
#include "runner.hpp"

namespace nslab::cli {
namespace {

struct Check {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond && ok) detail << "failed: " << what << "; ";
    ok = ok && cond;
  }
};

double rel_log_err(SignedLog x, SignedLog y) {
  if (x.sign != y.sign) return INFINITY;
  if (x.sign == 0) return 0.0;
  return std::abs(x.log_abs - y.log_abs) / std::max(1.0, std::abs(x.log_abs));
}

Potential sample_window(const ExperimentConfig& cfg, Window w, std::uint64_t seed, std::uint64_t trial) {
  return realize(cfg.ensemble, w, seed, StreamTag::verify, trial);
}

// Keeps the verify energies inside J and off the grid knots used elsewhere.
std::vector<double> probe_energies(const ExperimentConfig& cfg) {
  const double lo = cfg.energy.min, hi = cfg.energy.max;
  return {lo + 0.13 * (hi - lo), lo + 0.5 * (hi - lo) + 1e-3, lo + 0.91 * (hi - lo)};
}

void suite_ensembles(const ExperimentConfig& cfg, std::uint64_t seed, Check& c) {
  const Potential wide = sample_window(cfg, {-20, 40}, seed, 0);
  const Potential narrow = sample_window(cfg, {5, 15}, seed, 0);
  bool stable = true;
  for (std::int64_t s = 5; s <= 15; ++s) stable = stable && wide.at(s) == narrow.at(s);
  c.require(stable, "site values depend on the realized window");
  for (std::int64_t s = -20; s <= 40; ++s) {
    const Distribution d = cfg.ensemble.distribution(s);
    if (!d.is_discrete()) continue;
    const auto atoms = d.atoms();
    const bool in_support = std::any_of(atoms.begin(), atoms.end(),
                                        [&](const Atom& a) { return a.value == wide.at(s); });
    c.require(in_support, "sample outside the support at site " + std::to_string(s));
  }
  SamplingOptions so;
  so.seed = seed;
  so.samples = 4096;
  const AuditReport r1 = audit_assumptions(cfg.ensemble, {1, 8}, so);
  const AuditReport r2 = audit_assumptions(cfg.ensemble, {1, 8}, so);
  bool same = r1.sites.size() == r2.sites.size();
  for (std::size_t i = 0; same && i < r1.sites.size(); ++i) {
    same = r1.sites[i].gamma_moment == r2.sites[i].gamma_moment &&
           r1.sites[i].truncated_variance == r2.sites[i].truncated_variance;
  }
  c.require(same, "audit is not deterministic");
  c.detail << "sites 8, audit " << r1.verdict();
}

void suite_transfer(const ExperimentConfig& cfg, std::uint64_t seed, Check& c) {
  double worst_det = 0.0, worst_sub = INFINITY, min_norm = INFINITY;
  for (double e : probe_energies(cfg)) {
    const Potential pot = sample_window(cfg, {1, 4000}, seed, 1);
    ScaledProduct prod;
    for (double v : pot.values()) {
      prod.push(v, e);
      min_norm = std::min(min_norm, prod.log_norm());
    }
    worst_det = std::max(worst_det, prod.det_defect());
    for (std::uint64_t t = 0; t < 40; ++t) {
      const Potential p = sample_window(cfg, {1, 60}, seed, 100 + t);
      const double whole = window_product(p, {1, 60}, e).log_norm();
      const double parts = window_product(p, {1, 25}, e).log_norm() + window_product(p, {26, 60}, e).log_norm();
      worst_sub = std::min(worst_sub, parts - whole);
    }
  }
  c.require(worst_det <= 1e-6, "determinant drifted from 1");
  c.require(min_norm >= 0.0, "negative log norm");
  c.require(worst_sub >= -1e-8, "submultiplicativity defect below tolerance");
  c.detail << "det defect " << format_real(worst_det) << ", min submultiplicativity gap "
           << format_real(worst_sub);
}

void suite_identity(const ExperimentConfig& cfg, std::uint64_t seed, Check& c) {
  double worst = 0.0;
  std::size_t windows = 0;
  for (std::uint64_t t = 0; t < 60; ++t) {
    const std::int64_t n = 1 + static_cast<std::int64_t>(t % 30);
    const Potential pot = sample_window(cfg, {0, 40}, seed, 200 + t);
    for (double e : probe_energies(cfg)) {
      const Window w{3, 3 + n - 1};
      const ScaledQuad q = charpoly_window(pot, w, e);
      const auto ent = window_product(pot, w, e).entries();
      const int s = (n % 2 == 0) ? 1 : -1;
      const SignedLog want[4] = {q.p_ab, q.p_a1_b, -q.p_a_b1, -q.p_a1_b1};
      for (int k = 0; k < 4; ++k) {
        const SignedLog got = s > 0 ? ent[k] : -ent[k];
        worst = std::max(worst, rel_log_err(got, want[k]));
      }
      ++windows;
    }
  }
  c.require(worst <= 1e-7, "transfer entries differ from the polynomials");
  c.detail << windows << " windows, worst relative log error " << format_real(worst);
}

void suite_green(const ExperimentConfig& cfg, std::uint64_t seed, Check& c) {
  double worst_inverse = 0.0, worst_bridge = 0.0;
  for (std::uint64_t t = 0; t < 10; ++t) {
    const Window w{1, 25};
    const Potential pot = sample_window(cfg, {-10, 40}, seed, 300 + t);
    const TruncatedOperator op = TruncatedOperator::from(pot, w);
    const double e = probe_energies(cfg)[t % 3];
    for (std::int64_t y : {w.a, (w.a + w.b) / 2, w.b}) {
      std::vector<double> col;
      for (std::int64_t x = w.a; x <= w.b; ++x) col.push_back(green_entry(pot, w, e, x, y).value());
      const auto hx = op.apply(col);
      double scale = 0.0;
      for (double g : col) scale = std::max(scale, std::abs(g));
      for (std::size_t i = 0; i < col.size(); ++i) {
        const double target = (w.a + static_cast<std::int64_t>(i) == y) ? 1.0 : 0.0;
        worst_inverse = std::max(worst_inverse, std::abs(hx[i] - e * col[i] - target) / std::max(1.0, scale));
      }
    }
    // An eigenvector of a larger box solves the equation inside [a, b].
    const Window big{-8, 33};
    const SpectralData spec = diagonalize(TruncatedOperator::from(pot, big));
    const std::size_t j = spec.values.size() / 2;
    const auto& psi = spec.vectors[j];
    const auto at = [&](std::int64_t s) { return psi[static_cast<std::size_t>(s - big.a)]; };
    // The eigenvector's residual reaches the bridge through ||G|| = 1 / dist(E, spec H_w).
    double dist = INFINITY;
    for (double mu : eigenvalues(op)) dist = std::min(dist, std::abs(mu - spec.values[j]));
    const double amplification = std::max(1.0, 1.0 / dist);
    try {
      for (std::int64_t x = w.a; x <= w.b; ++x) {
        const double e_j = spec.values[j];
        const double got = eigenfunction_bridge(pot, w, x, e_j, at(w.a - 1), at(w.b + 1));
        worst_bridge = std::max(worst_bridge, std::abs(got - at(x)) / amplification);
      }
    } catch (const EnergyAtEigenvalue&) {
    }
  }
  c.require(worst_inverse <= 1e-8, "(H - E) G differs from the identity");
  c.require(worst_bridge <= 1e-9, "bridge does not reproduce the eigenvector");
  c.detail << "inverse defect " << format_real(worst_inverse) << ", bridge defect "
           << format_real(worst_bridge);
}

void suite_spectrum(const ExperimentConfig& cfg, std::uint64_t seed, unsigned threads, Check& c) {
  const Window w{-40, 39};
  const Potential pot = sample_window(cfg, w, seed, 400);
  const TruncatedOperator op = TruncatedOperator::from(pot, w);
  const SpectralData spec = diagonalize(op, threads);
  bool counts = true;
  for (std::size_t j = 0; j + 1 < spec.values.size(); ++j) {
    const double mid = 0.5 * (spec.values[j] + spec.values[j + 1]);
    counts = counts && sturm_count(op, mid) == static_cast<std::int64_t>(j + 1);
  }
  double trace = 0.0, sum = 0.0;
  for (double d : op.diagonal()) trace += d;
  for (double v : spec.values) sum += v;
  const double scale = op.norm_bound();
  c.require(spec.values.size() == op.size(), "wrong number of eigenvalues");
  c.require(counts, "Sturm counts disagree with the computed eigenvalues");
  c.require(spec.min_gap() > 0.0, "eigenvalues are not simple");
  c.require(std::abs(trace - sum) <= 1e-9 * scale * static_cast<double>(op.size()), "trace mismatch");
  c.require(spec.max_residual(op) <= 1e-8 * scale, "residual too large");
  c.require(spec.max_orthogonality_defect() <= 1e-8, "eigenvectors not orthonormal");
  c.detail << "m " << op.size() << ", min gap " << format_real(spec.min_gap()) << ", residual "
           << format_real(spec.max_residual(op));
}

void suite_growth(const ExperimentConfig& cfg, std::uint64_t seed, unsigned threads, Check& c) {
  const std::vector<Window> windows{{1, 16}, {1, 32}, {17, 32}};
  const auto energies = probe_energies(cfg);
  const GrowthTable t = estimate_growth(cfg.ensemble, windows, energies, {200, seed, threads});
  bool nonneg = true, sub = true;
  for (std::size_t e = 0; e < energies.size(); ++e) {
    for (std::size_t w = 0; w < windows.size(); ++w) nonneg = nonneg && t.mean_at(w, e) >= 0.0;
    sub = sub && t.mean_at(1, e) <= t.mean_at(0, e) + t.mean_at(2, e) + 1e-9;
  }
  const AdditivityDefect d = additivity_defect(cfg.ensemble, 1, 16, 32, energies[1], {200, seed, threads});
  c.require(nonneg, "negative mean log norm");
  c.require(sub, "mean growth is not subadditive");
  c.require(d.min >= -1e-8, "pointwise additivity defect negative");
  c.detail << "additivity mean " << format_real(d.mean) << ", min " << format_real(d.min);
}

void suite_deviations(const ExperimentConfig& cfg, std::uint64_t seed, Check& c) {
  const std::int64_t n = 12;
  const Window w{n + 1, 3 * n + 1};
  const auto grid = cfg.energy.values(9);
  std::size_t scans = 0, intervals = 0, bad = 0;
  double worst_sign = -INFINITY;
  for (std::uint64_t t = 0; t < 20; ++t) {
    const Potential pot = sample_window(cfg, w, seed, 500 + t);
    // A flat reference: each component is then a concave-piece sublevel set.
    const ReferenceCurve ref = ReferenceCurve::constant(0.0);
    const DeviationScan s = scan_deviation_set(pot, w, 0.05, grid, ref);
    ++scans;
    intervals += s.intervals.size();
    if (static_cast<std::int64_t>(s.intervals.size()) > w.length()) ++bad;
    for (const auto& iv : s.intervals) {
      if (iv.eigenvalue_ids.empty()) ++bad;
      const double mid = 0.5 * (std::max(iv.lo, s.j_min) + std::min(iv.hi, s.j_max));
      const bool at_root = std::any_of(iv.eigenvalue_ids.begin(), iv.eigenvalue_ids.end(),
                                       [&](std::size_t id) { return s.eigenvalues[id] == mid; });
      if (!at_root) worst_sign = std::max(worst_sign, deviation_function(pot, w, 0.05, ref, mid));
    }
  }
  c.require(bad == 0, "an interval holds no eigenvalue or the count exceeds the window length");
  c.require(worst_sign <= 1e-9 || !std::isfinite(worst_sign), "interval midpoint lies outside B-");
  c.detail << scans << " scans, " << intervals << " intervals";
}

void suite_localization(const ExperimentConfig& cfg, std::uint64_t seed, unsigned threads, Check& c) {
  const Window w{-30, 30};
  const Potential pot = sample_window(cfg, w, seed, 600);
  const TruncatedOperator op = TruncatedOperator::from(pot, w);
  const SpectralData spec = diagonalize(op, threads);
  const std::vector<double> times{0.0, 0.5, 1.0, 2.0, 4.0};
  const Amplitudes amps = evolve_amplitudes(spec, times, 0, threads);
  const MomentTrace mass = dynamical_moment(amps, 0.0);
  double worst = 0.0;
  for (double m : mass.moment_sq) worst = std::max(worst, std::abs(m - 1.0));
  c.require(worst <= 1e-10, "evolution is not unitary");
  c.require(std::abs(mass.moment_sq.front() - 1.0) <= 1e-12 && std::abs(amps.at_time(0)[30] - 1.0) <= 1e-12,
            "initial state is not the origin");
  const SuleFit fit = sule_fit(spec, 0.1, threads);
  bool finite = std::isfinite(fit.max_c);
  for (const auto& r : fit.rows) finite = finite && std::isfinite(r.c_min) && r.c_min >= 0.0;
  c.require(finite, "SULE constants not finite");
  c.detail << "unitarity defect " << format_real(worst) << ", alpha " << format_real(fit.alpha_global);
}

void suite_reproducibility(const ExperimentConfig& cfg, std::uint64_t seed, Check& c) {
  // Fixed worker counts, so the report itself does not depend on --threads.
  const std::vector<Window> windows{{1, 24}, {1, 48}};
  const auto energies = probe_energies(cfg);
  const GrowthTable a = estimate_growth(cfg.ensemble, windows, energies, {120, seed, 1});
  const Window w{-20, 19};
  const Potential pot = sample_window(cfg, w, seed, 700);
  const TruncatedOperator op = TruncatedOperator::from(pot, w);
  const SpectralData s1 = diagonalize(op, 1);
  for (unsigned many : {2u, 4u, 8u}) {
    const GrowthTable b = estimate_growth(cfg.ensemble, windows, energies, {120, seed, many});
    c.require(a.mean == b.mean && a.std_error == b.std_error, "growth depends on the worker count");
    const SpectralData s2 = diagonalize(op, many);
    c.require(s1.values == s2.values && s1.vectors == s2.vectors, "spectrum depends on the worker count");
  }
  c.detail << "compared 1 against 2, 4 and 8 workers";
}

}  // namespace

std::vector<SuiteResult> run_verify_suites(const ExperimentConfig& cfg, std::uint64_t seed,
                                           unsigned threads) {
  using Body = std::function<void(Check&)>;
  const std::vector<std::pair<std::string, Body>> suites{
      {"ensembles", [&](Check& c) { suite_ensembles(cfg, seed, c); }},
      {"transfer", [&](Check& c) { suite_transfer(cfg, seed, c); }},
      {"transfer_polynomial_identity", [&](Check& c) { suite_identity(cfg, seed, c); }},
      {"green_and_bridge", [&](Check& c) { suite_green(cfg, seed, c); }},
      {"spectrum", [&](Check& c) { suite_spectrum(cfg, seed, threads, c); }},
      {"growth", [&](Check& c) { suite_growth(cfg, seed, threads, c); }},
      {"deviation_structure", [&](Check& c) { suite_deviations(cfg, seed, c); }},
      {"localization_dynamics", [&](Check& c) { suite_localization(cfg, seed, threads, c); }},
      {"reproducibility", [&](Check& c) { suite_reproducibility(cfg, seed, c); }},
  };
  std::vector<SuiteResult> out;
  for (const auto& [name, body] : suites) {
    Check c;
    try {
      body(c);
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail << "error: " << e.what();
    }
    out.push_back({name, c.ok, c.detail.str()});
  }
  return out;
}

}  // namespace nslab::cli
