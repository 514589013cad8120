#include "nslab/deviations.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nslab/charpoly.hpp"
#include "nslab/csv.hpp"
#include "nslab/errors.hpp"
#include "nslab/parallel.hpp"
#include "nslab/spectrum.hpp"
#include "nslab/transfer.hpp"

namespace nslab {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Key for trial t of the i-th entry of an n list, so every n gets its own draws.
std::uint64_t trial_key(std::size_t i, std::size_t t) {
  return (static_cast<std::uint64_t>(i) << 40) | static_cast<std::uint64_t>(t);
}

void check_grid(std::span<const double> grid) {
  if (grid.size() < 2) throw InvalidArgument("energy grid needs at least two points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw InvalidArgument("energy grid must be increasing");
  }
}

// Bisects a sign change of f on [lo, hi] where f(lo) and f(hi) differ in
// sign, down to adjacent doubles.
template <class F>
double bisect(F&& below, double lo, double hi) {
  // below(x) is true on one side of the crossing; lo side has below(lo).
  const bool lo_below = below(lo);
  for (;;) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= std::min(lo, hi) || mid >= std::max(lo, hi)) break;
    if (below(mid) == lo_below) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

class Scanner {
 public:
  Scanner(const Potential& pot, Window w, double epsilon, const ReferenceCurve& ref, double j_min,
          double j_max, std::vector<double> eig)
      : v_(pot.on(w)),
        m_(static_cast<double>(w.length())),
        eps_(epsilon),
        ref_(ref),
        j_min_(j_min),
        j_max_(j_max),
        eig_(std::move(eig)) {}

  double reference(double e) const { return ref_.at(std::clamp(e, j_min_, j_max_)); }

  double f(double e) const {
    const SignedLog p = charpoly(v_, e);
    return p.log_abs - reference(e) + m_ * eps_;
  }

  double fprime(double e, double slope) const {
    double s = 0.0;
    for (double l : eig_) s += 1.0 / (e - l);
    return s - slope;
  }

  struct Piece {
    double u, v;
    bool u_eig, v_eig;
  };

  // Sub-intervals of [u, v] where f < 0. f is concave on the piece.
  std::vector<std::pair<double, double>> resolve(const Piece& p) const {
    const double slope = (reference(p.v) - reference(p.u)) / (p.v - p.u);
    const double fu = p.u_eig ? -kInf : f(p.u);
    const double fv = p.v_eig ? -kInf : f(p.v);
    const double du = p.u_eig ? kInf : fprime(p.u, slope);
    const double dv = p.v_eig ? -kInf : fprime(p.v, slope);
    double top;
    if (du <= 0.0) {
      top = p.u;
    } else if (dv >= 0.0) {
      top = p.v;
    } else {
      top = bisect([&](double e) { return fprime(e, slope) > 0.0; }, p.u, p.v);
    }
    const bool top_eig = (top == p.u && p.u_eig) || (top == p.v && p.v_eig);
    const double ftop = top_eig ? -kInf : f(top);
    if (ftop < 0.0) return {{p.u, p.v}};
    std::vector<std::pair<double, double>> out;
    if (fu < 0.0) {
      out.emplace_back(p.u, bisect([&](double e) { return e == p.u || f(e) < 0.0; }, p.u, top));
    }
    if (fv < 0.0) {
      out.emplace_back(bisect([&](double e) { return e == p.v || f(e) < 0.0; }, p.v, top), p.v);
    }
    return out;
  }

  // Follows a component that contains the end of J outward until f >= 0.
  double extend(double start, int dir) const {
    double cur = start;
    bool cur_eig = false;
    for (;;) {
      // Next eigenvalue strictly beyond cur in direction dir.
      double next = dir < 0 ? -kInf : kInf;
      for (double l : eig_) {
        if (dir < 0 && l < cur) next = std::max(next, l);
        if (dir > 0 && l > cur) next = std::min(next, l);
      }
      if (std::isinf(next)) {
        // Monotone tail: f increases without bound away from the spectrum.
        double step = 1.0;
        double far = cur + dir * step;
        while (f(far) < 0.0) {
          step *= 2.0;
          far = cur + dir * step;
        }
        return bisect([&](double e) { return e == cur || f(e) < 0.0; }, cur, far);
      }
      const Piece p = dir < 0 ? Piece{next, cur, true, cur_eig} : Piece{cur, next, cur_eig, true};
      const auto parts = resolve(p);
      // The part touching cur.
      bool whole = parts.size() == 1 && parts[0].first == p.u && parts[0].second == p.v;
      if (!whole) {
        for (const auto& [lo, hi] : parts) {
          if (dir < 0 && hi == cur) return lo;
          if (dir > 0 && lo == cur) return hi;
        }
        return cur;
      }
      cur = next;
      cur_eig = true;
    }
  }

 private:
  std::span<const double> v_;
  double m_;
  double eps_;
  const ReferenceCurve& ref_;
  double j_min_;
  double j_max_;
  std::vector<double> eig_;
};

}  // namespace

std::string to_string(Statistic s) {
  switch (s) {
    case Statistic::norm:
      return "norm";
    case Statistic::image:
      return "image";
    case Statistic::entry:
      return "entry";
  }
  return "norm";
}

Statistic statistic_from_string(const std::string& s) {
  if (s == "norm") return Statistic::norm;
  if (s == "image") return Statistic::image;
  if (s == "entry") return Statistic::entry;
  throw InvalidArgument("unknown statistic '" + s + "' (expected norm, image or entry)");
}

ExceedanceCurve exceedance(const Ensemble& ens, std::span<const std::int64_t> n_list,
                           double energy, double epsilon, const GrowthTable& reference,
                           const ExceedanceOptions& opts) {
  const std::size_t trials = opts.mc.trials;
  if (trials < 2) throw InvalidArgument("exceedance: trials must be >= 2");
  if (reference.trials < 10 * trials) {
    throw MissingReference("exceedance: reference growth table has " +
                           std::to_string(reference.trials) + " trials, needs >= 10 x " +
                           std::to_string(trials));
  }
  std::vector<double> refs;
  for (std::int64_t n : n_list) {
    if (n < 1) throw InvalidArgument("exceedance: n must be >= 1");
    refs.push_back(reference.interpolate(reference.window_index({1, n}), energy));
  }
  const std::size_t nn = n_list.size();
  std::vector<unsigned char> hit(nn * trials, 0);
  parallel_for(nn * trials, opts.mc.threads, [&](std::size_t k) {
    const std::size_t i = k / trials;
    const std::size_t t = k % trials;
    const std::int64_t n = n_list[i];
    const Potential pot = realize(ens, {1, n}, opts.mc.seed, StreamTag::exceedance, trial_key(i, t));
    const ScaledProduct prod = window_product(pot, {1, n}, energy);
    double stat = 0.0;
    switch (opts.statistic) {
      case Statistic::norm:
        stat = prod.log_norm();
        break;
      case Statistic::image:
        stat = prod.image_log_norm(opts.v0[0], opts.v0[1]);
        break;
      case Statistic::entry:
        stat = prod.entries()[0].log_abs;
        break;
    }
    hit[k] = !(std::abs(stat - refs[i]) <= epsilon * static_cast<double>(n));
  });

  ExceedanceCurve curve;
  curve.energy = energy;
  curve.epsilon = epsilon;
  curve.statistic = opts.statistic;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < nn; ++i) {
    ExceedancePoint p;
    p.n = n_list[i];
    p.reference = refs[i];
    p.trials = trials;
    for (std::size_t t = 0; t < trials; ++t) p.exceed += hit[i * trials + t];
    p.probability = static_cast<double>(p.exceed) / static_cast<double>(trials);
    p.wilson = wilson_interval(p.exceed, trials);
    if (p.exceed >= 5) {
      xs.push_back(static_cast<double>(p.n));
      ys.push_back(std::log(p.probability));
      curve.fit_range.push_back(p.n);
    }
    curve.points.push_back(p);
  }
  if (xs.size() >= 2) {
    curve.fit = fit_line(xs, ys);
    curve.fitted = true;
    curve.delta_hat = -curve.fit.slope;
    curve.monotone = true;
    const ExceedancePoint* prev = nullptr;
    for (const auto& p : curve.points) {
      if (p.exceed < 5) continue;
      if (prev && p.probability > prev->wilson.hi) curve.monotone = false;
      prev = &p;
    }
  }
  return curve;
}

ReferenceCurve ReferenceCurve::from_table(const GrowthTable& table, Window w) {
  const std::size_t idx = table.window_index(w);
  ReferenceCurve r;
  r.energies = table.energies;
  for (std::size_t e = 0; e < table.energies.size(); ++e) {
    r.values.push_back(table.mean_at(idx, e));
    r.std_errors.push_back(table.std_error_at(idx, e));
  }
  return r;
}

ReferenceCurve ReferenceCurve::constant(double value) { return {{0.0}, {value}, {0.0}}; }

namespace {

double interp(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  if (xs.size() == 1 || x <= xs.front()) return ys.front();
  if (x >= xs.back()) return ys.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
  const std::size_t lo = hi - 1;
  const double f = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + f * (ys[hi] - ys[lo]);
}

}  // namespace

double ReferenceCurve::at(double energy) const { return interp(energies, values, energy); }

double ReferenceCurve::std_error_at(double energy) const {
  return interp(energies, std_errors, energy);
}

std::size_t DeviationScan::violations() const {
  std::size_t v = 0;
  for (const auto& iv : intervals) v += iv.eigenvalue_ids.size() != 1;
  if (intervals.size() > static_cast<std::size_t>(window.length())) ++v;
  return v;
}

double deviation_function(const Potential& pot, Window w, double epsilon,
                          const ReferenceCurve& reference, double energy) {
  return charpoly(pot.on(w), energy).log_abs - reference.at(energy) +
         static_cast<double>(w.length()) * epsilon;
}

DeviationScan scan_deviation_set(const Potential& pot, Window w, double epsilon,
                                 std::span<const double> grid, const ReferenceCurve& reference) {
  check_grid(grid);
  if (w.length() < 1) throw InvalidArgument("scan_deviation_set: empty window");
  DeviationScan scan;
  scan.window = w;
  scan.epsilon = epsilon;
  scan.j_min = grid.front();
  scan.j_max = grid.back();
  scan.eigenvalues = eigenvalues(TruncatedOperator::from(pot, w));
  if (std::isinf(epsilon) && epsilon > 0) return scan;

  const Scanner sc(pot, w, epsilon, reference, scan.j_min, scan.j_max, scan.eigenvalues);

  // Knots: grid, reference knots and eigenvalues inside J.
  std::vector<std::pair<double, bool>> knots;
  for (double g : grid) knots.emplace_back(g, false);
  for (double e : reference.energies) {
    if (e > scan.j_min && e < scan.j_max) knots.emplace_back(e, false);
  }
  for (double l : scan.eigenvalues) {
    if (l > scan.j_min && l < scan.j_max) knots.emplace_back(l, true);
  }
  std::sort(knots.begin(), knots.end(), [](const auto& x, const auto& y) {
    return x.first < y.first || (x.first == y.first && x.second > y.second);
  });
  knots.erase(std::unique(knots.begin(), knots.end(),
                          [](const auto& x, const auto& y) { return x.first == y.first; }),
              knots.end());

  std::vector<std::pair<double, double>> segs;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    const Scanner::Piece p{knots[i - 1].first, knots[i].first, knots[i - 1].second,
                           knots[i].second};
    for (const auto& s : sc.resolve(p)) {
      if (!segs.empty() && segs.back().second == s.first) {
        segs.back().second = s.second;
      } else {
        segs.push_back(s);
      }
    }
  }
  if (!segs.empty() && segs.front().first == scan.j_min) {
    segs.front().first = sc.extend(scan.j_min, -1);
  }
  if (!segs.empty() && segs.back().second == scan.j_max) {
    segs.back().second = sc.extend(scan.j_max, +1);
  }

  for (const auto& [lo, hi] : segs) {
    DeviationInterval iv;
    iv.lo = lo;
    iv.hi = hi;
    iv.clipped_length = std::max(0.0, std::min(hi, scan.j_max) - std::max(lo, scan.j_min));
    for (std::size_t j = 0; j < scan.eigenvalues.size(); ++j) {
      if (lo <= scan.eigenvalues[j] && scan.eigenvalues[j] <= hi) iv.eigenvalue_ids.push_back(j);
    }
    scan.total_length += iv.clipped_length;
    scan.intervals.push_back(std::move(iv));
  }
  return scan;
}

MeasureTrend measure_trend(const Ensemble& ens, std::span<const std::int64_t> n_list,
                           double epsilon, std::span<const double> grid,
                           const GrowthTable& reference, const MonteCarloOptions& mc) {
  check_grid(grid);
  if (mc.trials < 2) throw InvalidArgument("measure_trend: trials must be >= 2");
  std::vector<ReferenceCurve> refs;
  for (std::int64_t n : n_list) {
    if (n < 1) throw InvalidArgument("measure_trend: n must be >= 1");
    refs.push_back(ReferenceCurve::from_table(reference, {n + 1, 3 * n + 1}));
  }
  const std::size_t nn = n_list.size();
  std::vector<double> lengths(nn * mc.trials);
  std::vector<std::size_t> viol(nn * mc.trials);
  parallel_for(nn * mc.trials, mc.threads, [&](std::size_t k) {
    const std::size_t i = k / mc.trials;
    const std::size_t t = k % mc.trials;
    const Window w{n_list[i] + 1, 3 * n_list[i] + 1};
    const Potential pot = realize(ens, w, mc.seed, StreamTag::measure_trend, trial_key(i, t));
    const DeviationScan s = scan_deviation_set(pot, w, epsilon, grid, refs[i]);
    lengths[k] = s.total_length;
    viol[k] = s.violations();
  });
  MeasureTrend trend;
  trend.epsilon = epsilon;
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < nn; ++i) {
    MeasurePoint p;
    p.n = n_list[i];
    p.window = {p.n + 1, 3 * p.n + 1};
    const auto slice = std::span<const double>(lengths).subspan(i * mc.trials, mc.trials);
    const Summary s = summarize(slice);
    p.mean_length = s.mean;
    p.std_error = s.std_error;
    p.trials = mc.trials;
    for (std::size_t t = 0; t < mc.trials; ++t) p.violations += viol[i * mc.trials + t];
    if (p.mean_length > 0.0) {
      xs.push_back(static_cast<double>(p.n));
      ys.push_back(std::log(p.mean_length));
    }
    trend.points.push_back(p);
  }
  if (xs.size() >= 2) {
    trend.fit = fit_line(xs, ys);
    trend.fitted = true;
  }
  return trend;
}

std::size_t SingularityReport::violations_above_n_min() const {
  std::size_t v = 0;
  for (const auto& c : checks) {
    if (c.n > n_min) v += c.violations;
  }
  return v;
}

SingularityReport singular_implies_deviation(const Ensemble& ens,
                                             std::span<const std::int64_t> n_list,
                                             double epsilon, double h_hat, std::int64_t n_min,
                                             std::span<const double> grid,
                                             const GrowthTable& reference,
                                             const MonteCarloOptions& mc) {
  check_grid(grid);
  SingularityReport report;
  report.epsilon = epsilon;
  report.h_hat = h_hat;
  report.n_min = n_min;
  const double c = h_hat - 6.0 * epsilon;
  const std::size_t nn = n_list.size();
  const std::size_t ng = grid.size();
  // Per (n, trial, energy): 0 regular, 1 singular inside B-, 2 violation, 3 eigenvalue.
  std::vector<unsigned char> outcome(nn * mc.trials * ng, 0);
  std::vector<ReferenceCurve> refs;
  for (std::int64_t n : n_list) refs.push_back(ReferenceCurve::from_table(reference, {n + 1, 3 * n + 1}));
  parallel_for(nn * mc.trials, mc.threads, [&](std::size_t k) {
    const std::size_t i = k / mc.trials;
    const std::size_t t = k % mc.trials;
    const std::int64_t n = n_list[i];
    const Window w{n + 1, 3 * n + 1};
    const Potential pot = realize(ens, w, mc.seed, StreamTag::regularity, trial_key(i, t));
    for (std::size_t e = 0; e < ng; ++e) {
      unsigned char o = 0;
      try {
        const RegularityResult r = regularity_test(pot, 2 * n + 1, n, grid[e], c);
        if (!r.regular()) {
          o = deviation_function(pot, w, epsilon, refs[i], grid[e]) < 0.0 ? 1 : 2;
        }
      } catch (const EnergyAtEigenvalue&) {
        o = 3;
      }
      outcome[k * ng + e] = o;
    }
  });
  for (std::size_t i = 0; i < nn; ++i) {
    SingularityCheck ch;
    ch.n = n_list[i];
    ch.c = c;
    for (std::size_t t = 0; t < mc.trials; ++t) {
      for (std::size_t e = 0; e < ng; ++e) {
        const unsigned char o = outcome[(i * mc.trials + t) * ng + e];
        ++ch.tested;
        ch.singular += o == 1 || o == 2;
        ch.violations += o == 2;
        ch.eigenvalue_hits += o == 3;
      }
    }
    report.checks.push_back(ch);
  }
  return report;
}

void write_exceedance_csv(std::ostream& out, const ExceedanceCurve& curve) {
  CsvWriter csv(out, {"n", "reference", "exceed", "trials", "probability", "wilson_lo", "wilson_hi"});
  for (const auto& p : curve.points) {
    csv.row(p.n, p.reference, p.exceed, p.trials, p.probability, p.wilson.lo, p.wilson.hi);
  }
}

void write_measure_csv(std::ostream& out, const MeasureTrend& trend) {
  CsvWriter csv(out, {"n", "window_a", "window_b", "mean_length", "stderr", "trials",
                      "grid_errors", "violations"});
  for (const auto& p : trend.points) {
    csv.row(p.n, p.window.a, p.window.b, p.mean_length, p.std_error, p.trials, p.grid_errors,
            p.violations);
  }
}

}  // namespace nslab
