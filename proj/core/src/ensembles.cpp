#include "nslab/ensembles.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nslab/errors.hpp"
#include "nslab/stats.hpp"

namespace nslab {
namespace {

constexpr double kProbabilityTolerance = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double three_point_tail(const ThreePoint& d) { return std::pow(d.eps, -1.0 / d.gamma); }

double three_point_quantile(const ThreePoint& d, double u) {
  if (u < d.p) return d.a;
  if (u < 1.0 - d.eps) return d.b;
  return three_point_tail(d);
}

double deterministic_limit_quantile(std::int64_t n, double u) {
  const double nn = static_cast<double>(n);
  return u < 1.0 - 1.0 / (nn * nn) ? 0.0 : nn;
}

double quantile_table_value(const QuantileTable& t, double u) {
  const auto it = std::upper_bound(t.levels.begin(), t.levels.end(), u);
  if (it == t.levels.end()) return t.values.back();
  const auto hi = static_cast<std::size_t>(it - t.levels.begin());
  const auto lo = hi - 1;
  const double frac = (u - t.levels[lo]) / (t.levels[hi] - t.levels[lo]);
  return t.values[lo] + frac * (t.values[hi] - t.values[lo]);
}

// log of the operator norm of [[E - v, -1], [1, 0]].
double log_transfer_norm(double v, double energy) {
  const double a = std::abs(energy - v);
  return std::log(0.5 * (std::sqrt(a * a + 4.0) + a));
}

bool flag_converged(double value, double std_error, double max_term, double total) {
  if (value == 0.0 && std_error == 0.0) return true;
  const bool stable_error = std_error <= 0.05 * std::abs(value);
  const bool no_dominant_term = total <= 0.0 || max_term <= 0.05 * total;
  return stable_error && no_dominant_term;
}

std::vector<double> draw(const Distribution& dist, const SamplingOptions& opts) {
  CounterRng rng(opts.seed, StreamTag::ensemble_moments);
  std::vector<double> xs(std::max<std::size_t>(opts.samples, 2));
  for (double& x : xs) x = dist.sample(rng);
  return xs;
}

}  // namespace

Distribution::Distribution(Variant v) : v_(std::move(v)) {
  if (auto* pm = std::get_if<PointMasses>(&v_)) {
    double acc = 0.0;
    cumulative_.reserve(pm->atoms.size());
    for (const Atom& a : pm->atoms) {
      acc += a.probability;
      cumulative_.push_back(acc);
    }
  }
}

Distribution Distribution::point_masses(std::vector<Atom> atoms) {
  if (atoms.empty()) throw InvalidDistribution("point masses: no atoms");
  double total = 0.0;
  for (const Atom& a : atoms) {
    if (!std::isfinite(a.value)) throw InvalidDistribution("point masses: non-finite atom");
    if (!(a.probability >= 0.0)) {
      throw InvalidDistribution("point masses: negative probability");
    }
    total += a.probability;
  }
  if (std::abs(total - 1.0) > kProbabilityTolerance) {
    std::ostringstream os;
    os.precision(17);
    os << "point masses: probabilities sum to " << total << ", not 1";
    throw InvalidDistribution(os.str());
  }
  return Distribution(PointMasses{std::move(atoms)});
}

Distribution Distribution::three_point(double a, double b, double p, double eps, double gamma) {
  if (!(gamma > 0.0)) throw InvalidDistribution("three-point: gamma must be positive");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidDistribution("three-point: p outside [0,1]");
  if (!(eps >= 0.0 && eps < 1.0)) throw InvalidDistribution("three-point: eps outside [0,1)");
  if (!(p + eps < 1.0)) throw InvalidDistribution("three-point: requires p + eps < 1");
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidDistribution("three-point: non-finite atom");
  }
  return Distribution(ThreePoint{a, b, p, eps, gamma});
}

Distribution Distribution::deterministic_limit(std::int64_t n) {
  if (n < 1) throw InvalidDistribution("deterministic-limit: index must be >= 1");
  return Distribution(DeterministicLimit{n});
}

Distribution Distribution::quantile_table(std::vector<double> levels, std::vector<double> values) {
  if (levels.size() != values.size() || levels.size() < 2) {
    throw InvalidDistribution("quantile table: need >= 2 matching (level, value) pairs");
  }
  if (std::abs(levels.front()) > kProbabilityTolerance ||
      std::abs(levels.back() - 1.0) > kProbabilityTolerance) {
    throw InvalidDistribution("quantile table: levels must run from 0 to 1");
  }
  for (std::size_t i = 1; i < levels.size(); ++i) {
    if (!(levels[i] > levels[i - 1])) {
      throw InvalidDistribution("quantile table: levels must be strictly increasing");
    }
    if (!(values[i] >= values[i - 1])) {
      throw InvalidDistribution("quantile table: values must be nondecreasing");
    }
  }
  levels.front() = 0.0;
  levels.back() = 1.0;
  return Distribution(QuantileTable{std::move(levels), std::move(values)});
}

std::vector<Atom> Distribution::atoms() const {
  return std::visit(
      Overloaded{
          [](const PointMasses& d) {
            std::vector<Atom> out;
            for (const Atom& a : d.atoms) {
              if (a.probability > 0.0) out.push_back(a);
            }
            return out;
          },
          [](const ThreePoint& d) {
            std::vector<Atom> out;
            if (d.p > 0.0) out.push_back({d.a, d.p});
            if (1.0 - d.p - d.eps > 0.0) out.push_back({d.b, 1.0 - d.p - d.eps});
            if (d.eps > 0.0) out.push_back({three_point_tail(d), d.eps});
            return out;
          },
          [](const DeterministicLimit& d) {
            const double n = static_cast<double>(d.n);
            std::vector<Atom> out;
            if (d.n > 1) out.push_back({0.0, 1.0 - 1.0 / (n * n)});
            out.push_back({n, 1.0 / (n * n)});
            return out;
          },
          [](const QuantileTable&) -> std::vector<Atom> {
            throw InvalidArgument("atoms() requested for a continuous quantile table");
          },
      },
      v_);
}

double Distribution::quantile(double u) const {
  return std::visit(
      Overloaded{
          [&](const PointMasses& d) {
            const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
            const auto idx = std::min<std::size_t>(
                static_cast<std::size_t>(it - cumulative_.begin()), d.atoms.size() - 1);
            return d.atoms[idx].value;
          },
          [&](const ThreePoint& d) { return three_point_quantile(d, u); },
          [&](const DeterministicLimit& d) { return deterministic_limit_quantile(d.n, u); },
          [&](const QuantileTable& d) { return quantile_table_value(d, u); },
      },
      v_);
}

std::string Distribution::describe() const {
  std::ostringstream os;
  os.precision(6);
  std::visit(Overloaded{
                 [&](const PointMasses& d) {
                   os << "point_masses{";
                   for (std::size_t i = 0; i < d.atoms.size(); ++i) {
                     os << (i ? "," : "") << "(" << d.atoms[i].value << ","
                        << d.atoms[i].probability << ")";
                   }
                   os << "}";
                 },
                 [&](const ThreePoint& d) {
                   os << "three_point{a=" << d.a << ",b=" << d.b << ",p=" << d.p
                      << ",eps=" << d.eps << ",gamma=" << d.gamma << "}";
                 },
                 [&](const DeterministicLimit& d) { os << "deterministic_limit{n=" << d.n << "}"; },
                 [&](const QuantileTable& d) {
                   os << "quantile_table{" << d.levels.size() << " knots}";
                 },
             },
             v_);
  return os.str();
}

double sample(const Distribution& dist, CounterRng& rng) { return dist.sample(rng); }

MomentEstimate gamma_moment(const Distribution& dist, double gamma, const SamplingOptions& opts) {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma_moment: gamma must be positive");
  MomentEstimate out;
  if (dist.is_discrete()) {
    for (const Atom& a : dist.atoms()) {
      if (a.value != 0.0) out.value += a.probability * std::pow(std::abs(a.value), gamma);
    }
    return out;
  }
  const auto xs = draw(dist, opts);
  std::vector<double> terms(xs.size());
  std::transform(xs.begin(), xs.end(), terms.begin(),
                 [&](double x) { return std::pow(std::abs(x), gamma); });
  const Summary s = summarize(terms);
  out.value = s.mean;
  out.std_error = s.std_error;
  out.exact = false;
  out.samples = xs.size();
  out.converged = flag_converged(s.mean, s.std_error,
                                 *std::max_element(terms.begin(), terms.end()),
                                 s.mean * static_cast<double>(terms.size()));
  return out;
}

namespace {

MomentEstimate discrete_variance(const std::vector<Atom>& atoms, double k) {
  auto clamp = [k](double x) { return k > 0.0 ? std::clamp(x, -k, k) : x; };
  double mean = 0.0;
  for (const Atom& a : atoms) mean += a.probability * clamp(a.value);
  double var = 0.0;
  for (const Atom& a : atoms) {
    const double d = clamp(a.value) - mean;
    var += a.probability * d * d;
  }
  return {var, 0.0, true, true, 0};
}

MomentEstimate sampled_variance(const Distribution& dist, double k, const SamplingOptions& opts) {
  auto xs = draw(dist, opts);
  if (k > 0.0) {
    for (double& x : xs) x = std::clamp(x, -k, k);
  }
  const Summary s = summarize(xs);
  const double var = s.stddev * s.stddev;
  std::vector<double> dev4(xs.size());
  std::transform(xs.begin(), xs.end(), dev4.begin(), [&](double x) {
    const double d = x - s.mean;
    return d * d;
  });
  const Summary s2 = summarize(dev4);
  MomentEstimate out;
  out.value = var;
  out.std_error = s2.std_error;
  out.exact = false;
  out.samples = xs.size();
  out.converged = flag_converged(var, s2.std_error, *std::max_element(dev4.begin(), dev4.end()),
                                 s2.mean * static_cast<double>(dev4.size()));
  return out;
}

}  // namespace

MomentEstimate truncated_variance(const Distribution& dist, double k, const SamplingOptions& opts) {
  if (!(k > 0.0)) throw InvalidArgument("truncated_variance: k must be positive");
  if (dist.is_discrete()) return discrete_variance(dist.atoms(), k);
  return sampled_variance(dist, k, opts);
}

MomentEstimate variance(const Distribution& dist, const SamplingOptions& opts) {
  if (dist.is_discrete()) return discrete_variance(dist.atoms(), 0.0);
  return sampled_variance(dist, 0.0, opts);
}

LogMoments log_moments(const Distribution& dist, double energy, const SamplingOptions& opts) {
  LogMoments out;
  if (dist.is_discrete()) {
    for (const Atom& a : dist.atoms()) {
      const double l = log_transfer_norm(a.value, energy);
      out.mean_log_norm += a.probability * l;
      out.mean_log_sq += a.probability * l * l;
    }
    return out;
  }
  const auto xs = draw(dist, opts);
  std::vector<double> l(xs.size()), l2(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    l[i] = log_transfer_norm(xs[i], energy);
    l2[i] = l[i] * l[i];
  }
  const Summary s = summarize(l);
  out.mean_log_norm = s.mean;
  out.mean_log_sq = summarize(l2).mean;
  out.std_error = s.std_error;
  out.exact = false;
  return out;
}

Ensemble::Ensemble(std::int64_t table_origin, std::vector<Distribution> table, DefaultRule rule,
                   EnsembleParameters params)
    : origin_(table_origin), table_(std::move(table)), rule_(std::move(rule)), params_(params) {
  if (!(params_.gamma > 0.0) || !(params_.c0 > 0.0) || !(params_.k > 0.0) ||
      !(params_.epsilon_var > 0.0)) {
    throw InvalidDistribution("ensemble: gamma, C0, k and epsilon_var must be positive");
  }
  if (auto* p = std::get_if<PeriodicRule>(&rule_); p && p->cycle.empty()) {
    throw InvalidDistribution("ensemble: periodic rule with an empty cycle");
  }
  if (auto* d = std::get_if<DeterministicLimitRule>(&rule_); d && d->offset < 1) {
    throw InvalidDistribution("ensemble: deterministic-limit offset must be >= 1");
  }
  if (auto* t = std::get_if<ThreePointDecayRule>(&rule_)) {
    // Validates the site-0 member; eps only shrinks away from 0.
    (void)Distribution::three_point(t->a, t->b, t->p, t->eps0, t->gamma);
    if (!(t->decay >= 0.0)) throw InvalidDistribution("ensemble: decay must be >= 0");
  }
}

Ensemble Ensemble::iid(Distribution dist, EnsembleParameters params) {
  return Ensemble(0, {}, ConstantRule{std::move(dist)}, params);
}

Distribution Ensemble::distribution(std::int64_t site) const {
  const std::int64_t idx = site - origin_;
  if (idx >= 0 && idx < static_cast<std::int64_t>(table_.size())) {
    return table_[static_cast<std::size_t>(idx)];
  }
  return std::visit(
      Overloaded{
          [](const ConstantRule& r) { return r.distribution; },
          [&](const PeriodicRule& r) {
            const auto n = static_cast<std::int64_t>(r.cycle.size());
            return r.cycle[static_cast<std::size_t>(((site - r.phase) % n + n) % n)];
          },
          [&](const DeterministicLimitRule& r) {
            return Distribution::deterministic_limit(std::abs(site) + r.offset);
          },
          [&](const ThreePointDecayRule& r) {
            const double eps =
                r.eps0 * std::pow(1.0 + static_cast<double>(std::abs(site)), -r.decay);
            return Distribution::three_point(r.a, r.b, r.p, eps, r.gamma);
          },
      },
      rule_);
}

double Ensemble::sample(std::int64_t site, CounterRng& rng) const {
  const std::int64_t idx = site - origin_;
  if (idx >= 0 && idx < static_cast<std::int64_t>(table_.size())) {
    return table_[static_cast<std::size_t>(idx)].sample(rng);
  }
  const double u = rng.uniform();
  return std::visit(
      Overloaded{
          [&](const ConstantRule& r) { return r.distribution.quantile(u); },
          [&](const PeriodicRule& r) {
            const auto n = static_cast<std::int64_t>(r.cycle.size());
            return r.cycle[static_cast<std::size_t>(((site - r.phase) % n + n) % n)].quantile(u);
          },
          [&](const DeterministicLimitRule& r) {
            return deterministic_limit_quantile(std::abs(site) + r.offset, u);
          },
          [&](const ThreePointDecayRule& r) {
            const double eps =
                r.eps0 * std::pow(1.0 + static_cast<double>(std::abs(site)), -r.decay);
            return three_point_quantile(ThreePoint{r.a, r.b, r.p, eps, r.gamma}, u);
          },
      },
      rule_);
}

Potential realize(const Ensemble& ens, Window w, std::uint64_t seed, StreamTag tag,
                  std::uint64_t trial) {
  if (w.length() < 0) throw InvalidArgument("realize: window with negative length");
  std::vector<double> values(static_cast<std::size_t>(w.length()));
  for (std::int64_t s = w.a; s <= w.b; ++s) {
    CounterRng rng(seed, tag, trial, static_cast<std::uint64_t>(s));
    values[static_cast<std::size_t>(s - w.a)] = ens.sample(s, rng);
  }
  return Potential(w.a, std::move(values));
}

AuditReport audit_assumptions(const Ensemble& ens, Window sites, const SamplingOptions& opts) {
  if (sites.length() <= 0) throw InvalidArgument("audit_assumptions: empty site window");
  const EnsembleParameters& p = ens.parameters();
  AuditReport report;
  report.parameters = p;
  report.sites.reserve(static_cast<std::size_t>(sites.length()));
  for (std::int64_t s = sites.a; s <= sites.b; ++s) {
    const Distribution dist = ens.distribution(s);
    SamplingOptions site_opts = opts;
    site_opts.seed = opts.seed ^ static_cast<std::uint64_t>(s);
    const MomentEstimate gm = gamma_moment(dist, p.gamma, site_opts);
    const MomentEstimate tv = truncated_variance(dist, p.k, site_opts);
    SiteAudit a;
    a.site = s;
    a.gamma_moment = gm.value;
    a.moment_ok = gm.value <= p.c0;
    a.truncated_variance = tv.value;
    a.variance_ok = tv.value > p.epsilon_var;
    a.exact = gm.exact && tv.exact;
    report.moments_pass = report.moments_pass && a.moment_ok;
    report.variance_pass = report.variance_pass && a.variance_ok;
    if (!a.variance_ok) {
      if (!report.first_variance_failure) report.first_variance_failure = s;
      report.last_variance_failure = s;
    }
    report.sites.push_back(a);
  }
  return report;
}

}  // namespace nslab
