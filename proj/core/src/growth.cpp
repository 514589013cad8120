#include "nslab/growth.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "nslab/csv.hpp"
#include "nslab/errors.hpp"
#include "nslab/parallel.hpp"
#include "nslab/stats.hpp"
#include "nslab/transfer.hpp"

namespace nslab {

std::size_t GrowthTable::window_index(Window w) const {
  const auto it = std::find(windows.begin(), windows.end(), w);
  if (it == windows.end()) {
    throw MissingReference("growth table has no window [" + std::to_string(w.a) + "," +
                           std::to_string(w.b) + "]");
  }
  return static_cast<std::size_t>(it - windows.begin());
}

double GrowthTable::interpolate(std::size_t w, double energy) const {
  const std::size_t g = energies.size();
  if (g == 1 || energy <= energies.front()) return mean_at(w, 0);
  if (energy >= energies.back()) return mean_at(w, g - 1);
  const auto it = std::upper_bound(energies.begin(), energies.end(), energy);
  const auto hi = static_cast<std::size_t>(it - energies.begin());
  const std::size_t lo = hi - 1;
  const double f = (energy - energies[lo]) / (energies[hi] - energies[lo]);
  return mean_at(w, lo) + f * (mean_at(w, hi) - mean_at(w, lo));
}

GrowthTable estimate_growth(const Ensemble& ens, std::span<const Window> windows,
                            std::span<const double> energies, const MonteCarloOptions& opts,
                            StreamTag tag) {
  if (opts.trials < 2) throw InvalidArgument("estimate_growth: trials must be >= 2");
  if (windows.empty() || energies.empty()) {
    throw InvalidArgument("estimate_growth: empty window list or energy grid");
  }
  Window hull = windows.front();
  for (const Window& w : windows) {
    if (w.length() < 1) throw InvalidArgument("estimate_growth: empty window");
    hull.a = std::min(hull.a, w.a);
    hull.b = std::max(hull.b, w.b);
  }
  // Windows sharing a left end are evaluated along one growing product.
  std::map<std::int64_t, std::vector<std::size_t>> by_start;
  for (std::size_t i = 0; i < windows.size(); ++i) by_start[windows[i].a].push_back(i);
  for (auto& [a, ids] : by_start) {
    std::sort(ids.begin(), ids.end(),
              [&](std::size_t x, std::size_t y) { return windows[x].b < windows[y].b; });
  }

  const std::size_t nw = windows.size();
  const std::size_t ne = energies.size();
  std::vector<double> samples(opts.trials * nw * ne);  // [cell][trial]
  parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
    const Potential pot = realize(ens, hull, opts.seed, tag, t);
    for (std::size_t e = 0; e < ne; ++e) {
      for (const auto& [a, ids] : by_start) {
        ScaledProduct prod;
        std::int64_t next = a;
        for (std::size_t id : ids) {
          for (; next <= windows[id].b; ++next) prod.push(pot.at(next), energies[e]);
          samples[(id * ne + e) * opts.trials + t] = prod.log_norm();
        }
      }
    }
  });

  GrowthTable table;
  table.windows.assign(windows.begin(), windows.end());
  table.energies.assign(energies.begin(), energies.end());
  table.trials = opts.trials;
  table.mean.resize(nw * ne);
  table.std_error.resize(nw * ne);
  for (std::size_t cell = 0; cell < nw * ne; ++cell) {
    const Summary s = summarize(std::span<const double>(samples).subspan(cell * opts.trials, opts.trials));
    table.mean[cell] = s.mean;
    table.std_error[cell] = s.std_error;
  }
  return table;
}

RateEstimate estimate_h(const GrowthTable& table) {
  std::vector<std::int64_t> lengths;
  for (const Window& w : table.windows) lengths.push_back(w.length());
  std::sort(lengths.begin(), lengths.end());
  lengths.erase(std::unique(lengths.begin(), lengths.end()), lengths.end());
  if (lengths.size() < 3) {
    throw InsufficientData("estimate_h: the table must cover at least three window lengths");
  }
  RateEstimate r;
  double h = INFINITY;
  for (std::size_t w = 0; w < table.windows.size(); ++w) {
    const double n = static_cast<double>(table.windows[w].length());
    for (std::size_t e = 0; e < table.energies.size(); ++e) {
      RatePoint p;
      p.window = table.windows[w];
      p.energy = table.energies[e];
      p.per_site = table.mean_at(w, e) / n;
      p.conservative = (table.mean_at(w, e) - 3.0 * table.std_error_at(w, e)) / n;
      h = std::min(h, p.conservative);
      r.points.push_back(p);
    }
  }
  r.growth_detected = h > 0.0;
  r.h_hat = r.growth_detected ? h : 0.0;

  // Relative change of L/n between the two longest windows.
  std::size_t longest = 0, second = 0;
  for (std::size_t w = 0; w < table.windows.size(); ++w) {
    if (table.windows[w].length() == lengths.back()) longest = w;
    if (table.windows[w].length() == lengths[lengths.size() - 2]) second = w;
  }
  const double n1 = static_cast<double>(table.windows[longest].length());
  const double n2 = static_cast<double>(table.windows[second].length());
  for (std::size_t e = 0; e < table.energies.size(); ++e) {
    const double a = table.mean_at(longest, e) / n1;
    const double b = table.mean_at(second, e) / n2;
    const double rel = b != 0.0 ? std::abs(a - b) / std::abs(b) : (a == 0.0 ? 0.0 : INFINITY);
    r.last_relative_change = std::max(r.last_relative_change, rel);
  }
  r.stabilized = r.last_relative_change <= 0.05;
  return r;
}

Equicontinuity equicontinuity_modulus(const GrowthTable& table) {
  Equicontinuity out;
  out.per_window.assign(table.windows.size(), 0.0);
  const std::size_t g = table.energies.size();
  if (g < 2) return out;
  out.spacing = (table.energies.back() - table.energies.front()) / static_cast<double>(g - 1);
  for (std::size_t i = 1; i < g; ++i) {
    const double d = table.energies[i] - table.energies[i - 1];
    if (std::abs(d - out.spacing) > 1e-9 * std::max(1.0, std::abs(out.spacing))) {
      throw InvalidArgument("equicontinuity_modulus: energy grid is not uniform");
    }
  }
  for (std::size_t w = 0; w < table.windows.size(); ++w) {
    const double n = static_cast<double>(table.windows[w].length());
    double m = 0.0;
    for (std::size_t i = 1; i < g; ++i) {
      m = std::max(m, std::abs(table.mean_at(w, i) - table.mean_at(w, i - 1)) / n);
    }
    out.per_window[w] = m;
    out.sup = std::max(out.sup, m);
  }
  return out;
}

AdditivityDefect additivity_defect(const Ensemble& ens, std::int64_t a, std::int64_t b,
                                   std::int64_t c, double energy, const MonteCarloOptions& opts) {
  if (!(a <= b && b < c)) throw InvalidArgument("additivity_defect: requires a <= b < c");
  if (opts.trials < 2) throw InvalidArgument("additivity_defect: trials must be >= 2");
  std::vector<double> defects(opts.trials);
  parallel_for(opts.trials, opts.threads, [&](std::size_t t) {
    const Potential pot = realize(ens, {a, c}, opts.seed, StreamTag::additivity, t);
    ScaledProduct left = window_product(pot, {a, b}, energy);
    ScaledProduct right = window_product(pot, {b + 1, c}, energy);
    ScaledProduct whole = left;
    for (std::int64_t s = b + 1; s <= c; ++s) whole.push(pot.at(s), energy);
    defects[t] = left.log_norm() + right.log_norm() - whole.log_norm();
  });
  const Summary s = summarize(defects);
  AdditivityDefect out;
  out.left = {a, b};
  out.right = {b + 1, c};
  out.energy = energy;
  out.mean = s.mean;
  out.std_error = s.std_error;
  out.min = *std::min_element(defects.begin(), defects.end());
  out.trials = opts.trials;
  return out;
}

void write_growth_csv(std::ostream& out, const GrowthTable& table) {
  CsvWriter csv(out, {"window_a", "window_b", "E", "mean_log_norm", "stderr", "trials"});
  for (std::size_t w = 0; w < table.windows.size(); ++w) {
    for (std::size_t e = 0; e < table.energies.size(); ++e) {
      csv.row(table.windows[w].a, table.windows[w].b, table.energies[e], table.mean_at(w, e),
              table.std_error_at(w, e), table.trials);
    }
  }
}

}  // namespace nslab
