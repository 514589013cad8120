#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "nslab/csv.hpp"
#include "nslab/ensemble_io.hpp"
#include "nslab/errors.hpp"

using namespace nslab;
using nlohmann::json;

namespace {

std::string config_error(const json& j) {
  try {
    ensemble_from_json(j);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("reals round-trip through text") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(gen) * std::pow(10.0, static_cast<int>(gen() % 40) - 20);
    CHECK(std::stod(format_real(x)) == x);
  }
  CHECK(format_real(0.0) == format_real(0.0));
  CHECK(format_real(INFINITY) == "inf");
  CHECK(format_real(-INFINITY) == "-inf");
}

TEST_CASE("csv writer and reader agree") {
  std::stringstream ss;
  {
    CsvWriter csv(ss, {"name", "value", "flag", "count"});
    csv.row("plain", 0.25, true, 3);
    csv.row("with, comma", -1.5, false, -7);
    csv.row("with \"quote\"", 1e-300, true, std::int64_t{1} << 40);
    CHECK_THROWS_AS(csv.row("short", 1.0), InvalidArgument);
  }
  const CsvTable t = read_csv(ss);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.header == std::vector<std::string>{"name", "value", "flag", "count"});
  CHECK(t.rows[1][t.column("name")] == "with, comma");
  CHECK(t.rows[2][0] == "with \"quote\"");
  CHECK(std::stod(t.rows[2][t.column("value")]) == 1e-300);
  CHECK(t.rows[0][t.column("flag")] == "1");
  CHECK(t.rows[2][3] == "1099511627776");
  CHECK_THROWS_AS(t.column("missing"), InvalidArgument);
}

TEST_CASE("ensemble descriptions round-trip") {
  const json j = R"({
    "parameters": {"gamma": 2, "C0": 1.5, "k": 2, "epsilon_var": 0.5},
    "default": {"rule": "periodic", "phase": 1, "cycle": [
      {"type": "point_masses", "atoms": [[0, 0.5], [3, 0.5]]},
      {"type": "three_point", "a": 0, "b": 1, "p": 0.5, "eps": 0.25, "gamma": 1}]},
    "table": {"origin": -2, "sites": [
      {"type": "deterministic_limit", "n": 3},
      {"type": "quantile_table", "levels": [0, 0.5, 1], "values": [-1, 0, 2]}]}
  })"_json;
  const Ensemble e = ensemble_from_json(j);
  CHECK(e.table_origin() == -2);
  CHECK(e.table().size() == 2);
  CHECK(e.parameters().c0 == 1.5);
  const json back = to_json(e);
  CHECK(to_json(ensemble_from_json(back)) == back);
  for (std::int64_t s = -4; s <= 4; ++s) {
    CHECK(to_json(e.distribution(s)) == to_json(ensemble_from_json(back).distribution(s)));
  }
  for (const char* rule : {R"({"parameters": {"gamma": 2, "C0": 1.5, "k": 2, "epsilon_var": 0.5}, "default": {"rule": "deterministic_limit", "offset": 2}})",
                           R"({"parameters": {"gamma": 2, "C0": 1.5, "k": 2, "epsilon_var": 0.5}, "default": {"rule": "three_point_decay", "a": 0, "b": 1,
                                "p": 0.5, "eps0": 0.1, "decay": 1, "gamma": 1}})",
                           R"({"parameters": {"gamma": 2, "C0": 1.5, "k": 2, "epsilon_var": 0.5}, "default": {"rule": "constant", "distribution":
                                {"type": "point_masses", "atoms": [[1, 1]]}}})"}) {
    const json r = json::parse(rule);
    const json once = to_json(ensemble_from_json(r));
    CHECK(to_json(ensemble_from_json(once)) == once);
  }
}

TEST_CASE("ensemble errors name the field") {
  CHECK_THAT(config_error(json::object()), Catch::Matchers::ContainsSubstring("ensemble.parameters"));
  CHECK_THAT(config_error(R"({"parameters": {"gamma": 2, "C0": 1, "k": 1, "epsilon_var": 0.1}})"_json),
             Catch::Matchers::ContainsSubstring("ensemble.default"));
  CHECK_THAT(config_error(R"({"parameters": {"gamma": 2, "C0": 1, "k": 1, "epsilon_var": 0.1},
                "default": {"rule": "spiral"}})"_json),
             Catch::Matchers::ContainsSubstring("ensemble.default.rule"));
  CHECK_THAT(config_error(R"({"parameters": {"gamma": 2, "C0": 1, "k": 1, "epsilon_var": 0.1},
                "default": {"rule": "constant", "distribution":
                {"type": "point_masses", "atoms": [[0, 0.5], [1, 0.4]]}}})"_json),
             Catch::Matchers::ContainsSubstring("ensemble.default.distribution"));
  CHECK_THAT(config_error(R"({"parameters": {"gamma": 2, "C0": 1, "k": 1, "epsilon_var": 0.1},
                "default": {"rule": "periodic", "cycle": []}})"_json),
             Catch::Matchers::ContainsSubstring("ensemble.default.cycle"));
  CHECK_THAT(config_error(R"({"parameters": {"gamma": 2, "C0": 1, "k": 1, "epsilon_var": 0.1},
                "default": {"rule": "deterministic_limit", "offset": 2},
                "table": {"origin": 0, "sites": [{"type": "deterministic_limit", "n": 0}]}})"_json),
             Catch::Matchers::ContainsSubstring("ensemble.table.sites[0]"));
  CHECK_THAT(config_error(R"({"parameters": {"gamma": "two"},
                "default": {"rule": "deterministic_limit"}})"_json),
             Catch::Matchers::ContainsSubstring("ensemble.parameters.gamma"));
}

TEST_CASE("audit report serialization") {
  const Ensemble e(0, {}, DeterministicLimitRule{2}, {2.0, 1.5, 2.0, 0.5});
  const AuditReport r = audit_assumptions(e, {0, 20});
  const json j = to_json(r);
  CHECK(j.at("verdict") == "assumptions violated");
  CHECK(j.at("sites").size() == 21);
  std::stringstream ss;
  write_audit_csv(ss, r);
  const CsvTable t = read_csv(ss);
  REQUIRE(t.rows.size() == 21);
  CHECK(t.header == std::vector<std::string>{"site", "gamma_moment", "moment_ok",
                                             "truncated_variance", "variance_ok", "exact"});
  CHECK(t.rows[0][t.column("site")] == "0");
  CHECK(t.rows[20][t.column("variance_ok")] == "0");
  CHECK(t.rows[0][t.column("exact")] == "1");
}
