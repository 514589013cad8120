#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "nslab/lattice.hpp"
#include "nslab/rng.hpp"

namespace nslab {

struct Atom {
  double value = 0.0;
  double probability = 0.0;
};

/// Finitely many atoms.
struct PointMasses {
  std::vector<Atom> atoms;
};

/// a w.p. p, b w.p. 1 - p - eps, eps^(-1/gamma) w.p. eps.
struct ThreePoint {
  double a = 0.0;
  double b = 1.0;
  double p = 0.5;
  double eps = 0.0;
  double gamma = 1.0;
};

/// 0 w.p. 1 - 1/n^2 and n w.p. 1/n^2. Finite gamma-moment for gamma <= 2
/// and variance 1 - 1/n^2, yet converges weakly to the point mass at 0.
struct DeterministicLimit {
  std::int64_t n = 1;
};

/// Piecewise-linear inverse CDF through (levels[i], values[i]) with
/// levels[0] = 0 and levels.back() = 1.
struct QuantileTable {
  std::vector<double> levels;
  std::vector<double> values;
};

class Distribution {
 public:
  using Variant = std::variant<PointMasses, ThreePoint, DeterministicLimit, QuantileTable>;

  static Distribution point_masses(std::vector<Atom> atoms);
  static Distribution point_mass(double value) { return point_masses({{value, 1.0}}); }
  static Distribution three_point(double a, double b, double p, double eps, double gamma);
  static Distribution deterministic_limit(std::int64_t n);
  static Distribution quantile_table(std::vector<double> levels, std::vector<double> values);

  const Variant& variant() const noexcept { return v_; }

  /// True for every variant with finite support.
  bool is_discrete() const noexcept { return !std::holds_alternative<QuantileTable>(v_); }

  /// Support with positive-probability atoms only; throws for continuous variants.
  std::vector<Atom> atoms() const;

  /// Inverse CDF at u in [0, 1).
  double quantile(double u) const;

  double sample(CounterRng& rng) const { return quantile(rng.uniform()); }

  std::string describe() const;

 private:
  explicit Distribution(Variant v);
  Variant v_;
  std::vector<double> cumulative_;  // cached CDF for PointMasses
};

/// Draws from dist; deterministic given the stream state.
double sample(const Distribution& dist, CounterRng& rng);

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  bool exact = true;
  bool converged = true;
  std::size_t samples = 0;
};

struct SamplingOptions {
  std::uint64_t seed = 0x5EEDULL;
  std::size_t samples = 1u << 16;
};

/// E|V|^gamma. Exact enumeration for discrete variants, Monte Carlo otherwise.
MomentEstimate gamma_moment(const Distribution& dist, double gamma,
                            const SamplingOptions& opts = {});

/// Variance of clamp(V, -k, k).
MomentEstimate truncated_variance(const Distribution& dist, double k,
                                  const SamplingOptions& opts = {});

/// Untruncated variance, exact for discrete variants.
MomentEstimate variance(const Distribution& dist, const SamplingOptions& opts = {});

struct LogMoments {
  double mean_log_norm = 0.0;
  double mean_log_sq = 0.0;
  double std_error = 0.0;
  bool exact = true;
};

/// Averages of log||A_{v,E}|| and its square over v ~ dist.
LogMoments log_moments(const Distribution& dist, double energy,
                       const SamplingOptions& opts = {});

struct EnsembleParameters {
  double gamma = 2.0;
  double c0 = 1.0;
  double k = 1.0;
  double epsilon_var = 1e-3;
};

struct ConstantRule {
  Distribution distribution;
};

/// Site s uses cycle[(s - phase) mod cycle.size()].
struct PeriodicRule {
  std::vector<Distribution> cycle;
  std::int64_t phase = 0;
};

/// Site s uses DeterministicLimit{|s| + offset}.
struct DeterministicLimitRule {
  std::int64_t offset = 2;
};

/// Site s uses ThreePoint{a, b, p, eps0 * (1 + |s|)^-decay, gamma}.
struct ThreePointDecayRule {
  double a = 0.0;
  double b = 1.0;
  double p = 0.5;
  double eps0 = 0.1;
  double decay = 1.0;
  double gamma = 1.0;
};

using DefaultRule =
    std::variant<ConstantRule, PeriodicRule, DeterministicLimitRule, ThreePointDecayRule>;

/// The map n -> mu_n: an explicit table over a finite window plus a default
/// rule everywhere else. Immutable; safe to share across threads.
class Ensemble {
 public:
  Ensemble(std::int64_t table_origin, std::vector<Distribution> table, DefaultRule rule,
           EnsembleParameters params);

  /// Convenience: the same distribution at every site.
  static Ensemble iid(Distribution dist, EnsembleParameters params = {});

  Distribution distribution(std::int64_t site) const;
  double sample(std::int64_t site, CounterRng& rng) const;

  const EnsembleParameters& parameters() const noexcept { return params_; }
  std::int64_t table_origin() const noexcept { return origin_; }
  const std::vector<Distribution>& table() const noexcept { return table_; }
  const DefaultRule& rule() const noexcept { return rule_; }

 private:
  std::int64_t origin_;
  std::vector<Distribution> table_;
  DefaultRule rule_;
  EnsembleParameters params_;
};

/// Realizes V(first..last). Site s draws from its own stream
/// (seed, tag, trial, s), so a site's value does not depend on the window.
Potential realize(const Ensemble& ens, Window w, std::uint64_t seed, StreamTag tag,
                  std::uint64_t trial);

struct SiteAudit {
  std::int64_t site = 0;
  double gamma_moment = 0.0;
  bool moment_ok = false;
  double truncated_variance = 0.0;
  bool variance_ok = false;
  bool exact = true;
};

struct AuditReport {
  EnsembleParameters parameters;
  std::vector<SiteAudit> sites;
  bool moments_pass = true;
  bool variance_pass = true;
  std::optional<std::int64_t> first_variance_failure;
  std::optional<std::int64_t> last_variance_failure;

  bool passed() const noexcept { return moments_pass && variance_pass; }
  std::string verdict() const {
    return passed() ? "assumptions satisfied" : "assumptions violated";
  }
};

/// Checks the finite gamma-moment bound (<= C0) and the truncated-variance
/// floor (> epsilon_var) at every site of the window. Deterministic for
/// discrete distributions.
AuditReport audit_assumptions(const Ensemble& ens, Window sites,
                              const SamplingOptions& opts = {});

}  // namespace nslab
