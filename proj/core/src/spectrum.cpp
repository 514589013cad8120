#include "nslab/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "nslab/errors.hpp"
#include "nslab/parallel.hpp"

namespace nslab {
namespace {

constexpr double kPivMin = std::numeric_limits<double>::min() / std::numeric_limits<double>::epsilon();

double guard(double q) { return std::abs(q) < kPivMin ? -kPivMin : q; }

struct Twist {
  std::vector<double> dp;
  std::vector<double> dm;
  std::vector<double> gamma;
};

Twist twist(std::span<const double> d, double lambda) {
  const std::size_t m = d.size();
  Twist t{std::vector<double>(m), std::vector<double>(m), std::vector<double>(m)};
  t.dp[0] = guard(d[0] - lambda);
  for (std::size_t i = 1; i < m; ++i) t.dp[i] = guard(d[i] - lambda - 1.0 / t.dp[i - 1]);
  t.dm[m - 1] = guard(d[m - 1] - lambda);
  for (std::size_t i = m - 1; i-- > 0;) t.dm[i] = guard(d[i] - lambda - 1.0 / t.dm[i + 1]);
  for (std::size_t i = 0; i < m; ++i) t.gamma[i] = t.dp[i] + t.dm[i] - (d[i] - lambda);
  return t;
}

// Solves (H - lambda) x = gamma_k e_k with x_k = 1, then normalizes.
std::vector<double> twisted_solve(const Twist& t, std::size_t k) {
  const std::size_t m = t.dp.size();
  std::vector<double> x(m, 0.0);
  x[k] = 1.0;
  for (std::size_t i = k; i-- > 0;) x[i] = -x[i + 1] / t.dp[i];
  for (std::size_t i = k + 1; i < m; ++i) x[i] = -x[i - 1] / t.dm[i];
  double big = 0.0;
  for (double v : x) big = std::max(big, std::abs(v));
  for (double& v : x) v /= big;
  double norm2 = 0.0;
  for (double v : x) norm2 += v * v;
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : x) v *= inv;
  return x;
}

std::size_t argmin_abs(std::span<const double> g) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (std::abs(g[i]) < std::abs(g[k])) k = i;
  }
  return k;
}

// Twist indices at local minima of |gamma|, best first.
std::vector<std::size_t> twist_candidates(std::span<const double> g) {
  std::vector<std::size_t> out;
  const std::size_t m = g.size();
  for (std::size_t i = 0; i < m; ++i) {
    const double v = std::abs(g[i]);
    const bool left = i == 0 || v <= std::abs(g[i - 1]);
    const bool right = i + 1 == m || v <= std::abs(g[i + 1]);
    if (left && right) out.push_back(i);
  }
  std::stable_sort(out.begin(), out.end(),
                   [&](std::size_t x, std::size_t y) { return std::abs(g[x]) < std::abs(g[y]); });
  return out;
}

void fix_sign(std::vector<double>& x) {
  std::size_t k = 0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (std::abs(x[i]) > std::abs(x[k])) k = i;
  }
  if (x[k] < 0) {
    for (double& v : x) v = -v;
  }
}

double dot(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double residual(const TruncatedOperator& op, std::span<const double> x, double lambda) {
  const auto hx = op.apply(x);
  double r = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) r += (hx[i] - lambda * x[i]) * (hx[i] - lambda * x[i]);
  return std::sqrt(r);
}

}  // namespace

TruncatedOperator::TruncatedOperator(Window w, std::vector<double> diagonal)
    : window_(w), diag_(std::move(diagonal)) {
  if (w.length() < 1 || static_cast<std::size_t>(w.length()) != diag_.size()) {
    throw InvalidArgument("truncated operator needs a nonempty window matching its diagonal");
  }
}

TruncatedOperator TruncatedOperator::from(const Potential& pot, Window w) {
  const auto v = pot.on(w);
  return TruncatedOperator(w, std::vector<double>(v.begin(), v.end()));
}

TruncatedOperator TruncatedOperator::free(Window w) {
  if (w.length() < 1) throw InvalidArgument("truncated operator needs a nonempty window");
  return TruncatedOperator(w, std::vector<double>(static_cast<std::size_t>(w.length()), 0.0));
}

double TruncatedOperator::norm_bound() const noexcept {
  double v = 0.0;
  for (double d : diag_) v = std::max(v, std::abs(d));
  return v + 2.0;
}

std::vector<double> TruncatedOperator::apply(std::span<const double> x) const {
  const std::size_t m = diag_.size();
  std::vector<double> y(m);
  for (std::size_t i = 0; i < m; ++i) {
    double s = diag_[i] * x[i];
    if (i > 0) s += x[i - 1];
    if (i + 1 < m) s += x[i + 1];
    y[i] = s;
  }
  return y;
}

std::int64_t sturm_count(const TruncatedOperator& op, double x) {
  const auto d = op.diagonal();
  std::int64_t count = 0;
  double q = guard(d[0] - x);
  if (q < 0) ++count;
  for (std::size_t i = 1; i < d.size(); ++i) {
    q = guard(d[i] - x - 1.0 / q);
    if (q < 0) ++count;
  }
  return count;
}

std::vector<double> eigenvalues(const TruncatedOperator& op, unsigned threads) {
  const auto d = op.diagonal();
  const auto [dmin, dmax] = std::minmax_element(d.begin(), d.end());
  const double lo0 = *dmin - 2.0 - 1e-12;
  const double hi0 = *dmax + 2.0 + 1e-12;
  std::vector<double> out(d.size());
  parallel_for(d.size(), threads, [&](std::size_t k) {
    double lo = lo0;
    double hi = hi0;
    const auto target = static_cast<std::int64_t>(k);
    for (;;) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (sturm_count(op, mid) <= target) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out[k] = 0.5 * (lo + hi);
  });
  return out;
}

std::vector<double> eigenvector(const TruncatedOperator& op, double eigenvalue) {
  const Twist t = twist(op.diagonal(), eigenvalue);
  auto x = twisted_solve(t, argmin_abs(t.gamma));
  fix_sign(x);
  const double r = residual(op, x, eigenvalue);
  if (!(r <= 1e-8 * op.norm_bound())) {
    throw EigenvectorNonconvergence("eigenvector residual " + std::to_string(r) +
                                    " exceeds 1e-8 * ||H|| at E = " + std::to_string(eigenvalue));
  }
  return x;
}

double SpectralData::min_gap() const noexcept {
  double g = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < values.size(); ++j) g = std::min(g, values[j] - values[j - 1]);
  return g;
}

double SpectralData::max_residual(const TruncatedOperator& op) const {
  double r = 0.0;
  for (std::size_t j = 0; j < values.size(); ++j) r = std::max(r, residual(op, vectors[j], values[j]));
  return r;
}

double SpectralData::max_orthogonality_defect() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i; j < vectors.size(); ++j) {
      const double target = i == j ? 1.0 : 0.0;
      worst = std::max(worst, std::abs(dot(vectors[i], vectors[j]) - target));
    }
  }
  return worst;
}

SpectralData diagonalize(const TruncatedOperator& op, unsigned threads) {
  SpectralData spec;
  spec.window = op.window();
  spec.values = eigenvalues(op, threads);
  const std::size_t m = spec.values.size();
  spec.vectors.resize(m);
  parallel_for(m, threads, [&](std::size_t j) {
    const Twist t = twist(op.diagonal(), spec.values[j]);
    spec.vectors[j] = twisted_solve(t, argmin_abs(t.gamma));
  });

  const double scale = op.norm_bound();
  const double cluster_gap = 1e-5 * scale;
  std::size_t start = 0;
  while (start < m) {
    std::size_t end = start + 1;
    while (end < m && spec.values[end] - spec.values[end - 1] < cluster_gap) ++end;
    for (std::size_t j = start + 1; j < end; ++j) {
      auto max_overlap = [&](std::span<const double> x) {
        double w = 0.0;
        for (std::size_t i = start; i < j; ++i) w = std::max(w, std::abs(dot(x, spec.vectors[i])));
        return w;
      };
      if (max_overlap(spec.vectors[j]) >= 0.5) {
        const Twist t = twist(op.diagonal(), spec.values[j]);
        double best = 2.0;
        for (std::size_t k : twist_candidates(t.gamma)) {
          auto x = twisted_solve(t, k);
          const double w = max_overlap(x);
          if (w < best) {
            best = w;
            spec.vectors[j] = std::move(x);
          }
          if (best < 0.5) break;
        }
      }
      // Reorthogonalize only against vectors that visibly overlap, so
      // exponentially small tails are not polluted by rounding.
      auto& x = spec.vectors[j];
      bool touched = false;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t i = start; i < j; ++i) {
          const double w = dot(x, spec.vectors[i]);
          if (std::abs(w) > 1e-10) {
            for (std::size_t s = 0; s < x.size(); ++s) x[s] -= w * spec.vectors[i][s];
            touched = true;
          }
        }
      }
      if (touched) {
        const double n = std::sqrt(dot(x, x));
        for (double& v : x) v /= n;
      }
    }
    start = end;
  }

  for (std::size_t j = 0; j < m; ++j) {
    fix_sign(spec.vectors[j]);
    const double r = residual(op, spec.vectors[j], spec.values[j]);
    if (!(r <= 1e-8 * scale)) {
      throw EigenvectorNonconvergence("eigenvector " + std::to_string(j) + " residual " +
                                      std::to_string(r) + " exceeds 1e-8 * ||H||");
    }
  }
  return spec;
}

Amplitudes evolve_amplitudes(const SpectralData& spec, std::span<const double> times,
                             std::int64_t origin, unsigned threads) {
  if (!spec.window.contains(origin)) {
    throw InvalidArgument("evolve_amplitudes: window excludes the origin site " +
                          std::to_string(origin));
  }
  const std::size_t m = spec.values.size();
  const auto i0 = static_cast<std::size_t>(origin - spec.window.a);
  Amplitudes out;
  out.window = spec.window;
  out.origin = origin;
  out.times.assign(times.begin(), times.end());
  out.data.assign(times.size() * m, {0.0, 0.0});
  parallel_for(times.size(), threads, [&](std::size_t ti) {
    const double t = times[ti];
    std::complex<double>* row = out.data.data() + ti * m;
    for (std::size_t j = 0; j < m; ++j) {
      const auto& psi = spec.vectors[j];
      const double phase = -t * spec.values[j];
      const std::complex<double> w = psi[i0] * std::complex<double>(std::cos(phase), std::sin(phase));
      for (std::size_t n = 0; n < m; ++n) row[n] += w * psi[n];
    }
  });
  return out;
}

Amplitudes evolve_amplitudes(const TruncatedOperator& op, std::span<const double> times,
                             std::int64_t origin, unsigned threads) {
  return evolve_amplitudes(diagonalize(op, threads), times, origin, threads);
}

}  // namespace nslab
