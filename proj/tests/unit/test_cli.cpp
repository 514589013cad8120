#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result run(const std::string& args) {
  const std::string cmd = std::string(NSLAB_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), p)) r.output += buf.data();
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("nslab_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string config(const std::string& name) {
  return std::string(NSLAB_CONFIG_DIR) + "/" + name + ".json";
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load(const fs::path& p) { return json::parse(slurp(p)); }

fs::path write_text(const std::string& name, const std::string& text) {
  const fs::path p = fs::temp_directory_path() / ("nslab_cli_" + name + ".json");
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_CASE("list names every subcommand") {
  const Result r = run("list");
  CHECK(r.code == 0);
  for (const char* s : {"audit", "growth", "deviations", "spectrum", "localize", "dynamics", "verify"}) {
    CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring(s));
  }
}

TEST_CASE("config errors exit 2 with a location") {
  const fs::path syntax = write_text("syntax", "{\n  \"ensemble\": 3\n  x}");
  Result r = run("growth --config " + syntax.string());
  CHECK(r.code == 2);
  CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("line 3"));

  const fs::path field = write_text("field", R"({
    "ensemble": {"parameters": {"gamma": 2, "C0": 1, "k": 1, "epsilon_var": 0.1},
      "default": {"rule": "constant", "distribution":
      {"type": "point_masses", "atoms": [[0, 1]]}}},
    "growth": {"trials": "many"}
  })");
  r = run("growth --config " + field.string());
  CHECK(r.code == 2);
  CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("growth.trials"));

  const fs::path dist = write_text("dist", R"({
    "ensemble": {"parameters": {"gamma": 2, "C0": 1, "k": 1, "epsilon_var": 0.1},
      "default": {"rule": "constant", "distribution":
      {"type": "point_masses", "atoms": [[0, 0.5]]}}}
  })");
  r = run("audit --config " + dist.string());
  CHECK(r.code == 2);
  CHECK_THAT(r.output, Catch::Matchers::ContainsSubstring("ensemble.default.distribution"));

  CHECK(run("growth --config /nonexistent/path.json").code != 0);
  CHECK(run("growth --config " + config("small") + " --threads 0").code != 0);
}

TEST_CASE("verify passes on the two-point config") {
  const fs::path out = scratch("verify");
  const Result r = run("verify --config " + config("two_point") + " --out " + out.string());
  INFO(r.output);
  CHECK(r.code == 0);
  const json s = load(out / "summary.json");
  CHECK(s.at("results").at("passed") == true);
  CHECK(s.at("results").at("suite_count").get<int>() >= 8);
}

TEST_CASE("audit on the deterministic limit reports a violation") {
  const fs::path out = scratch("audit");
  const Result r = run("audit --config " + config("deterministic_limit") + " --out " + out.string());
  CHECK(r.code == 0);
  const json s = load(out / "summary.json");
  CHECK(s.at("results").at("verdict") == "assumptions violated");
  CHECK(fs::exists(out / "audit.csv"));
}

TEST_CASE("output does not depend on the thread count") {
  for (const char* sub : {"growth", "deviations", "dynamics"}) {
    const fs::path a = scratch(std::string(sub) + "_t1");
    const fs::path b = scratch(std::string(sub) + "_t3");
    REQUIRE(run(std::string(sub) + " --config " + config("small") + " --threads 1 --out " + a.string()).code == 0);
    REQUIRE(run(std::string(sub) + " --config " + config("small") + " --threads 3 --out " + b.string()).code == 0);
    std::size_t compared = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
      const auto name = entry.path().filename();
      if (name == "manifest.json") continue;
      INFO(sub << "/" << name.string());
      CHECK(slurp(entry.path()) == slurp(b / name));
      ++compared;
    }
    CHECK(compared >= 2);
  }
}

TEST_CASE("seed override changes the draws") {
  const fs::path a = scratch("seed_a");
  const fs::path b = scratch("seed_b");
  REQUIRE(run("growth --config " + config("small") + " --out " + a.string()).code == 0);
  REQUIRE(run("growth --config " + config("small") + " --seed 43 --out " + b.string()).code == 0);
  CHECK(slurp(a / "growth.csv") != slurp(b / "growth.csv"));
  CHECK(load(b / "manifest.json").at("seed") == 43);
}

TEST_CASE("manifest checksums match the artifacts") {
  const fs::path out = scratch("manifest");
  REQUIRE(run("spectrum --config " + config("small") + " --out " + out.string()).code == 0);
  const json m = load(out / "manifest.json");
  CHECK(m.at("seed") == 42);
  CHECK(m.contains("wall_time_seconds"));
  CHECK(m.at("config").at("name") == "small");
  REQUIRE(m.at("artifacts").size() >= 2);
  for (const auto& art : m.at("artifacts")) {
    const fs::path file = out / art.at("file").get<std::string>();
    REQUIRE(fs::exists(file));
    CHECK(art.at("bytes").get<std::uintmax_t>() == fs::file_size(file));
    FILE* p = popen(("sha256sum " + file.string()).c_str(), "r");
    REQUIRE(p != nullptr);
    std::array<char, 65> hex{};
    REQUIRE(std::fgets(hex.data(), hex.size(), p) != nullptr);
    pclose(p);
    CHECK(art.at("sha256").get<std::string>() == std::string(hex.data()));
  }
}
