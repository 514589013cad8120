#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace nslab::cli {

inline constexpr const char* kSubcommands[] = {"audit",    "growth",   "deviations", "spectrum",
                                               "localize", "dynamics", "verify"};

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::optional<std::filesystem::path> out;
};

/// Output directory, effective seed and the list of files written so far.
class RunContext {
 public:
  RunContext(ExperimentConfig cfg, const RunOptions& opts);

  const ExperimentConfig& config() const noexcept { return cfg_; }
  std::uint64_t seed() const noexcept { return seed_; }
  unsigned threads() const noexcept { return threads_; }
  const std::filesystem::path& out_dir() const noexcept { return out_; }

  /// Writes out_dir/name through `writer` and records it for the manifest.
  void write(const std::string& name, const std::function<void(std::ostream&)>& writer);
  void write_json(const std::string& name, const nlohmann::json& j);

  const std::vector<std::string>& artifacts() const noexcept { return artifacts_; }

 private:
  ExperimentConfig cfg_;
  std::uint64_t seed_;
  unsigned threads_;
  std::filesystem::path out_;
  std::vector<std::string> artifacts_;
};

nlohmann::json run_audit(RunContext& ctx);
nlohmann::json run_growth(RunContext& ctx);
nlohmann::json run_deviations(RunContext& ctx);
nlohmann::json run_spectrum(RunContext& ctx);
nlohmann::json run_localize(RunContext& ctx);
nlohmann::json run_dynamics(RunContext& ctx);

struct SuiteResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Small-scale property suites; every suite runs even if an earlier one fails.
std::vector<SuiteResult> run_verify_suites(const ExperimentConfig& cfg, std::uint64_t seed,
                                           unsigned threads);
nlohmann::json run_verify(RunContext& ctx, bool& passed);

/// Hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

/// Runs one subcommand end to end: artifacts, summary.json, manifest.json.
/// Exit codes: 0 success, 1 verify failure, 2 configuration error,
/// 3 computation error.
int run(const std::string& subcommand, const RunOptions& opts, std::ostream& log);

}  // namespace nslab::cli
