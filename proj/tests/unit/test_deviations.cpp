#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <sstream>

#include "nslab/csv.hpp"
#include "nslab/deviations.hpp"
#include "nslab/spectrum.hpp"
#include "oracle.hpp"

using namespace nslab;
using Catch::Approx;

namespace {

const Ensemble kTwoPoint = Ensemble::iid(Distribution::point_masses({{0, 0.5}, {3, 0.5}}));

std::vector<double> grid(double lo, double hi, int points) {
  std::vector<double> g;
  for (int i = 0; i < points; ++i) g.push_back(lo + (hi - lo) * i / (points - 1));
  return g;
}

GrowthTable prefix_reference(const Ensemble& ens, const std::vector<std::int64_t>& ns, double e,
                             std::size_t trials, std::uint64_t seed) {
  std::vector<Window> ws;
  for (auto n : ns) ws.push_back({1, n});
  const std::vector<double> es{e};
  return estimate_growth(ens, ws, es, {trials, seed, 1});
}

}  // namespace

TEST_CASE("statistic names round-trip") {
  for (Statistic s : {Statistic::norm, Statistic::image, Statistic::entry}) {
    CHECK(statistic_from_string(to_string(s)) == s);
  }
  CHECK_THROWS_AS(statistic_from_string("trace"), InvalidArgument);
}

TEST_CASE("exceedance beyond the one-step bound is zero") {
  const std::vector<std::int64_t> ns{1, 5, 10, 20};
  const GrowthTable ref = prefix_reference(kTwoPoint, ns, 0.0, 1000, 1);
  // Both log||T|| and log|T v| lie within n log 5 of zero, as does L_n.
  for (Statistic s : {Statistic::norm, Statistic::image}) {
    ExceedanceOptions o;
    o.statistic = s;
    o.mc = {100, 2, 1};
    const ExceedanceCurve c = exceedance(kTwoPoint, ns, 0.0, 2.0 * std::log(5.0) + 0.01, ref, o);
    for (const auto& p : c.points) {
      CHECK(p.exceed == 0);
      CHECK(p.probability == 0.0);
    }
    CHECK_FALSE(c.fitted);
  }
}

TEST_CASE("one-step exceedance against exact enumeration") {
  const auto ens = Ensemble::iid(Distribution::point_masses({{0, 0.7}, {3, 0.3}}));
  const std::vector<std::int64_t> ns{1};
  const GrowthTable ref = prefix_reference(ens, ns, 0.0, 20000, 3);
  const double l3 = static_cast<double>(log(oracle::largest_singular_value({-3, -1, 1, 0})));
  // |0 - L| is about 0.36 and |l3 - L| about 0.84, so only v = 3 exceeds.
  REQUIRE(std::abs(ref.mean_at(0, 0) - 0.3 * l3) < 0.05);
  ExceedanceOptions o;
  o.mc = {2000, 4, 1};
  const ExceedanceCurve c = exceedance(ens, ns, 0.0, 0.6, ref, o);
  REQUIRE(c.points.size() == 1);
  CHECK(c.points[0].wilson.contains(0.3));
  CHECK(c.points[0].probability >= 0.0);
  CHECK(c.points[0].probability <= 1.0);
}

TEST_CASE("exceedance decays with n") {
  const std::vector<std::int64_t> ns{50, 100, 150, 200, 250, 300, 350, 400};
  const GrowthTable ref = prefix_reference(kTwoPoint, ns, 0.0, 10000, 5);
  const double eps = 0.1 * ref.mean_at(3, 0) / 200.0;
  for (Statistic s : {Statistic::norm, Statistic::image, Statistic::entry}) {
    ExceedanceOptions o;
    o.statistic = s;
    o.v0 = {0.6, 0.8};
    o.mc = {1000, 6, 1};
    const ExceedanceCurve c = exceedance(kTwoPoint, ns, 0.0, eps, ref, o);
    REQUIRE(c.fitted);
    CHECK(c.fit.slope < 0.0);
    CHECK(c.fit.slope_ci.hi < 0.0);
    CHECK(c.delta_hat == Approx(-c.fit.slope));
    for (const auto& p : c.points) CHECK(p.wilson.contains(p.probability));
  }
}

TEST_CASE("exceedance needs a sufficient reference") {
  const std::vector<std::int64_t> ns{10, 20};
  ExceedanceOptions o;
  o.mc = {100, 1, 1};
  const GrowthTable thin = prefix_reference(kTwoPoint, ns, 0.0, 500, 1);
  CHECK_THROWS_AS(exceedance(kTwoPoint, ns, 0.0, 0.1, thin, o), MissingReference);
  const GrowthTable partial = prefix_reference(kTwoPoint, {10}, 0.0, 1000, 1);
  CHECK_THROWS_AS(exceedance(kTwoPoint, ns, 0.0, 0.1, partial, o), MissingReference);
}

TEST_CASE("one-site deviation set") {
  const Potential pot(0, {0.2});
  const auto g = grid(-0.5, 0.5, 5);
  const DeviationScan s = scan_deviation_set(pot, {0, 0}, 1.0, g, ReferenceCurve::constant(0.0));
  REQUIRE(s.intervals.size() == 1);
  const double r = std::exp(-1.0);
  CHECK(s.intervals[0].lo == Approx(0.2 - r).margin(1e-10));
  CHECK(s.intervals[0].hi == Approx(0.2 + r).margin(1e-10));
  CHECK(s.intervals[0].eigenvalue_ids == std::vector<std::size_t>{0});
  CHECK(s.total_length == Approx(0.5 - (0.2 - r)).margin(1e-10));
  CHECK(s.violations() == 0);

  const DeviationScan none = scan_deviation_set(pot, {0, 0}, std::numeric_limits<double>::infinity(), g,
                                                ReferenceCurve::constant(0.0));
  CHECK(none.intervals.empty());
  CHECK(none.total_length == 0.0);
}

TEST_CASE("deviation intervals around eigenvalues") {
  const std::int64_t n = 40;
  const Window w{n + 1, 3 * n + 1};
  const auto g = grid(-0.5, 0.5, 33);
  const std::vector<Window> ws{w};
  const GrowthTable table = estimate_growth(kTwoPoint, ws, g, {500, 7, 1});
  const ReferenceCurve ref = ReferenceCurve::from_table(table, w);
  std::size_t violations = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    const Potential pot = realize(kTwoPoint, w, 8, StreamTag::deviation_scan, t);
    const DeviationScan s = scan_deviation_set(pot, w, 0.4, g, ref);
    violations += s.violations();
    CHECK(static_cast<std::int64_t>(s.intervals.size()) <= w.length());
    CHECK(s.total_length <= s.j_max - s.j_min);
    double sum = 0.0;
    for (const auto& iv : s.intervals) {
      CHECK(iv.lo <= iv.hi);
      CHECK_FALSE(iv.eigenvalue_ids.empty());
      for (auto id : iv.eigenvalue_ids) {
        CHECK(s.eigenvalues[id] >= iv.lo);
        CHECK(s.eigenvalues[id] <= iv.hi);
      }
      // Endpoints are roots: negative just inside towards the eigenvalues,
      // non-negative just outside. Components narrower than the eigenvalue
      // accuracy collapse onto the eigenvalue and are skipped inside.
      const double first = s.eigenvalues[iv.eigenvalue_ids.front()];
      const double last = s.eigenvalues[iv.eigenvalue_ids.back()];
      if (first - iv.lo > 1e-12) CHECK(deviation_function(pot, w, 0.4, ref, 0.5 * (iv.lo + first)) < 0.0);
      if (iv.hi - last > 1e-12) CHECK(deviation_function(pot, w, 0.4, ref, 0.5 * (last + iv.hi)) < 0.0);
      if (iv.lo > s.j_min) CHECK(deviation_function(pot, w, 0.4, ref, iv.lo - 1e-9) >= -1e-9);
      if (iv.hi < s.j_max) CHECK(deviation_function(pot, w, 0.4, ref, iv.hi + 1e-9) >= -1e-9);
      sum += iv.clipped_length;
    }
    CHECK(sum == Approx(s.total_length).margin(1e-12));
    CHECK(s.eigenvalues == eigenvalues(TruncatedOperator::from(pot, w)));
  }
  CHECK(violations == 0);
}

TEST_CASE("measure of the deviation set") {
  const std::vector<std::int64_t> ns{10, 20, 30};
  const auto g = grid(-0.5, 0.5, 9);
  std::vector<Window> ws;
  for (auto n : ns) ws.push_back({n + 1, 3 * n + 1});
  const GrowthTable table = estimate_growth(kTwoPoint, ws, g, {300, 9, 1});
  const MeasureTrend huge = measure_trend(kTwoPoint, ns, 100.0, g, table, {20, 10, 1});
  // The true measure is below e^-2000; only rounding-level widths remain.
  for (const auto& p : huge.points) CHECK(p.mean_length <= 1e-12);
  const MeasureTrend small = measure_trend(kTwoPoint, ns, 0.05, g, table, {20, 10, 1});
  for (const auto& p : small.points) {
    CHECK(p.mean_length <= 1.0);
    CHECK(p.mean_length > 0.0);
    CHECK(p.grid_errors == 0);
    CHECK(p.window == Window{p.n + 1, 3 * p.n + 1});
  }
  std::stringstream ss;
  write_measure_csv(ss, small);
  CHECK(read_csv(ss).rows.size() == ns.size());
}
