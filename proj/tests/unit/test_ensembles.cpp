#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "nslab/ensembles.hpp"
#include "nslab/errors.hpp"
#include "oracle.hpp"

using namespace nslab;
using Catch::Approx;

namespace {

std::vector<oracle::Atom> to_oracle(const std::vector<Atom>& atoms) {
  std::vector<oracle::Atom> out;
  for (const auto& a : atoms) out.push_back({a.value, a.probability});
  return out;
}

}  // namespace

TEST_CASE("sampling") {
  CounterRng rng(1, StreamTag::verify);
  SECTION("point mass") {
    const auto d = Distribution::point_mass(5.0);
    for (int i = 0; i < 100; ++i) CHECK(d.sample(rng) == 5.0);
  }
  SECTION("fair coin mean") {
    const auto d = Distribution::point_masses({{0, 0.5}, {1, 0.5}});
    const int n = 100000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += sample(d, rng);
    const double sigma = 0.5 / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(s / n - 0.5) <= 3.0 * sigma);
  }
  SECTION("deterministic-limit n=2 only takes 0 and 2") {
    const auto d = Distribution::deterministic_limit(2);
    std::set<double> seen;
    for (int i = 0; i < 10000; ++i) seen.insert(d.sample(rng));
    CHECK(seen == std::set<double>{0.0, 2.0});
  }
  SECTION("same stream state gives the same draw") {
    const auto d = Distribution::three_point(0, 1, 0.5, 0.25, 1.0);
    CounterRng a(9, StreamTag::growth, 3, 4), b(9, StreamTag::growth, 3, 4);
    for (int i = 0; i < 50; ++i) CHECK(d.sample(a) == d.sample(b));
  }
}

TEST_CASE("distribution invariants are enforced") {
  CHECK_THROWS_AS(Distribution::point_masses({{0, 0.5}, {1, 0.4}}), InvalidDistribution);
  CHECK_THROWS_AS(Distribution::point_masses({{0, -0.1}, {1, 1.1}}), InvalidDistribution);
  CHECK_THROWS_AS(Distribution::point_masses({}), InvalidDistribution);
  CHECK_NOTHROW(Distribution::point_masses({{0, 0.5}, {1, 0.5 + 1e-13}}));
  CHECK_THROWS_AS(Distribution::three_point(0, 1, 0.6, 0.4, 1.0), InvalidDistribution);
  CHECK_THROWS_AS(Distribution::three_point(0, 1, 0.5, 0.1, 0.0), InvalidDistribution);
  CHECK_THROWS_AS(Distribution::deterministic_limit(0), InvalidDistribution);
  CHECK_THROWS_AS(Distribution::quantile_table({0.0, 0.5}, {1.0, 2.0}), InvalidDistribution);
  CHECK_THROWS_AS(Distribution::quantile_table({0.0, 1.0}, {2.0, 1.0}), InvalidDistribution);
}

TEST_CASE("gamma moments") {
  for (std::int64_t n = 1; n <= 60; ++n) {
    const auto m = gamma_moment(Distribution::deterministic_limit(n), 2.0);
    CHECK(m.exact);
    CHECK(m.value == Approx(1.0).epsilon(1e-14));
  }
  const auto b = gamma_moment(Distribution::three_point(0, 1, 0.5, 0.25, 1.0), 1.0);
  CHECK(b.value == Approx(1.25).epsilon(1e-15));
  CHECK(b.value <= 3.0);
  CHECK(gamma_moment(Distribution::point_mass(0.0), 0.7).value == 0.0);
  CHECK(gamma_moment(Distribution::point_mass(0.0), 3.0).value == 0.0);
}

TEST_CASE("three-point moment bound over random parameters") {
  CounterRng rng(2024, StreamTag::verify);
  for (int i = 0; i < 200; ++i) {
    const double a = 6.0 * rng.uniform() - 3.0;
    const double b = 6.0 * rng.uniform() - 3.0;
    const double p = 0.9 * rng.uniform();
    const double eps = (1.0 - p) * 0.99 * rng.uniform();
    const double gamma = 0.2 + 3.0 * rng.uniform();
    const auto d = Distribution::three_point(a, b, p, eps, gamma);
    const double m = std::max(std::abs(a), std::abs(b));
    const double value = gamma_moment(d, gamma).value;
    CHECK(value == Approx(oracle::exact_gamma_moment(to_oracle(d.atoms()), gamma)).epsilon(1e-12));
    CHECK(value <= 2.0 * std::pow(m, gamma) + 1.0 + 1e-12);
  }
}

TEST_CASE("truncated variance") {
  CHECK(truncated_variance(Distribution::point_mass(7.0), 5.0).value == 0.0);
  CHECK(truncated_variance(Distribution::point_masses({{-1, 0.5}, {1, 0.5}}), 2.0).value ==
        Approx(1.0));
  CHECK(truncated_variance(Distribution::deterministic_limit(2), 1.0).value ==
        Approx(3.0 / 16.0).epsilon(1e-14));
}

TEST_CASE("deterministic-limit variance formulas") {
  for (std::int64_t n = 1; n <= 40; ++n) {
    const auto d = Distribution::deterministic_limit(n);
    const double nn = static_cast<double>(n);
    CHECK(variance(d).value == Approx(1.0 - 1.0 / (nn * nn)).margin(1e-14));
    for (double k : {0.5, 1.0, 2.0, 3.5}) {
      if (nn <= k) continue;
      const double expect = k * k * (1.0 / (nn * nn)) * (1.0 - 1.0 / (nn * nn));
      CHECK(truncated_variance(d, k).value == Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("truncated variance obeys the Popoviciu bound") {
  CounterRng rng(77, StreamTag::verify);
  for (int i = 0; i < 200; ++i) {
    std::vector<Atom> atoms;
    const int count = 1 + static_cast<int>(rng.uniform() * 6);
    double total = 0.0;
    for (int j = 0; j < count; ++j) {
      atoms.push_back({20.0 * rng.uniform() - 10.0, rng.uniform() + 0.01});
      total += atoms.back().probability;
    }
    for (auto& a : atoms) a.probability /= total;
    const auto d = Distribution::point_masses(atoms);
    double psum = 0.0;
    for (const auto& a : d.atoms()) psum += a.probability;
    CHECK(std::abs(psum - 1.0) <= 1e-12);
    const double k = 0.1 + 5.0 * rng.uniform();
    const double tv = truncated_variance(d, k).value;
    double lo = k, hi = -k;
    for (const auto& a : atoms) {
      lo = std::min(lo, std::clamp(a.value, -k, k));
      hi = std::max(hi, std::clamp(a.value, -k, k));
    }
    CHECK(tv <= (hi - lo) * (hi - lo) / 4.0 + 1e-12);
    CHECK(tv <= k * k + 1e-12);
    CHECK(tv == Approx(oracle::exact_truncated_variance(to_oracle(atoms), k)).margin(1e-12));
  }
}

TEST_CASE("log moments") {
  const auto rot = log_moments(Distribution::point_mass(0.3), 0.3);
  CHECK(rot.mean_log_norm == Approx(0.0).margin(1e-15));
  CHECK(rot.mean_log_sq == Approx(0.0).margin(1e-15));

  const auto two = log_moments(Distribution::point_masses({{0, 0.5}, {3, 0.5}}), 0.0);
  const oracle::Real s3 = oracle::largest_singular_value({-3, -1, 1, 0});
  const double l3 = static_cast<double>(log(s3));
  CHECK(two.mean_log_norm == Approx(0.5 * l3).epsilon(1e-14));
  CHECK(two.mean_log_sq == Approx(0.5 * l3 * l3).epsilon(1e-14));

  for (double e : {-1.0, 0.0, 0.7, 2.5}) {
    const auto m = log_moments(Distribution::three_point(-1, 2, 0.3, 0.1, 2.0), e);
    CHECK(m.mean_log_norm <= std::sqrt(m.mean_log_sq) + 1e-15);
  }
}

TEST_CASE("quantile-table moments are sampled with an error bar") {
  // Uniform on [0, 1]: E V^2 = 1/3, variance 1/12.
  const auto d = Distribution::quantile_table({0.0, 1.0}, {0.0, 1.0});
  SamplingOptions opts;
  opts.samples = 1 << 16;
  const auto m = gamma_moment(d, 2.0, opts);
  CHECK_FALSE(m.exact);
  CHECK(m.std_error > 0.0);
  CHECK(std::abs(m.value - 1.0 / 3.0) <= 4.0 * m.std_error);
  CHECK(m.converged);
  const auto v = truncated_variance(d, 10.0, opts);
  CHECK(std::abs(v.value - 1.0 / 12.0) <= 4.0 * v.std_error + 1e-3);
}

TEST_CASE("audit") {
  EnsembleParameters params{1.0, 3.0, 1.0, 0.05};
  SECTION("three-point family bounded away from degeneracy passes everywhere") {
    const Ensemble ens(0, {}, ThreePointDecayRule{0, 1, 0.5, 0.2, 1.0, 1.0}, params);
    const auto r = audit_assumptions(ens, {-50, 50});
    CHECK(r.passed());
    CHECK(r.verdict() == "assumptions satisfied");
  }
  SECTION("deterministic limit passes the moment bound and fails the floor beyond k") {
    const Ensemble ens(0, {}, DeterministicLimitRule{2}, {2.0, 1.5, 2.0, 0.5});
    const auto r = audit_assumptions(ens, {0, 100});
    CHECK(r.moments_pass);
    CHECK_FALSE(r.variance_pass);
    REQUIRE(r.first_variance_failure.has_value());
    CHECK(*r.first_variance_failure == 1);  // family index n = 3 > k
    for (const auto& s : r.sites) {
      CHECK(s.gamma_moment == Approx(1.0));
      CHECK(s.variance_ok == (std::abs(s.site) + 2 <= 2));
    }
    CHECK(r.sites.back().truncated_variance < 1e-3);
    CHECK(r.verdict() == "assumptions violated");
  }
  SECTION("constant potential fails the floor at every site") {
    const auto ens = Ensemble::iid(Distribution::point_mass(0.0), params);
    const auto r = audit_assumptions(ens, {-5, 5});
    for (const auto& s : r.sites) CHECK_FALSE(s.variance_ok);
  }
  SECTION("deterministic for discrete ensembles") {
    const Ensemble ens(0, {}, DeterministicLimitRule{2}, {2.0, 1.5, 2.0, 0.5});
    SamplingOptions a, b;
    a.seed = 1;
    b.seed = 99;
    const auto r1 = audit_assumptions(ens, {0, 20}, a);
    const auto r2 = audit_assumptions(ens, {0, 20}, b);
    for (std::size_t i = 0; i < r1.sites.size(); ++i) {
      CHECK(r1.sites[i].exact);
      CHECK(r1.sites[i].truncated_variance == r2.sites[i].truncated_variance);
    }
  }
}

TEST_CASE("ensemble rules and realizations") {
  const EnsembleParameters params;
  CHECK_THROWS_AS(Ensemble::iid(Distribution::point_mass(0.0), {0.0, 1.0, 1.0, 0.1}), InvalidDistribution);

  const Ensemble periodic(0, {}, PeriodicRule{{Distribution::point_mass(1), Distribution::point_mass(2)}, 1},
                          params);
  CHECK(periodic.distribution(1).atoms()[0].value == 1.0);
  CHECK(periodic.distribution(2).atoms()[0].value == 2.0);
  CHECK(periodic.distribution(-1).atoms()[0].value == 1.0);
  CHECK(periodic.distribution(-2).atoms()[0].value == 2.0);

  const Ensemble tabled(-1, {Distribution::point_mass(7), Distribution::point_mass(8)},
                        ConstantRule{Distribution::point_mass(0)}, params);
  const Potential p = realize(tabled, {-3, 2}, 5, StreamTag::verify, 0);
  CHECK(p.at(-1) == 7.0);
  CHECK(p.at(0) == 8.0);
  CHECK(p.at(2) == 0.0);

  const auto ens = Ensemble::iid(Distribution::point_masses({{0, 0.5}, {3, 0.5}}));
  const Potential wide = realize(ens, {-100, 100}, 11, StreamTag::growth, 4);
  const Potential part = realize(ens, {10, 20}, 11, StreamTag::growth, 4);
  for (std::int64_t s = 10; s <= 20; ++s) CHECK(wide.at(s) == part.at(s));
  const Potential other = realize(ens, {-100, 100}, 11, StreamTag::growth, 5);
  CHECK(std::vector<double>(wide.values().begin(), wide.values().end()) !=
        std::vector<double>(other.values().begin(), other.values().end()));
}
