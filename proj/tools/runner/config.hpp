#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "nslab/ensembles.hpp"
#include "nslab/lattice.hpp"

namespace nslab::cli {

struct EnergyGrid {
  double min = -0.5;
  double max = 0.5;
  std::size_t points = 9;

  std::vector<double> values() const;
  std::vector<double> values(std::size_t n) const;
};

struct AuditConfig {
  Window sites{1, 50};
  std::size_t samples = 1u << 16;
};

struct GrowthConfig {
  std::int64_t start = 1;
  std::vector<std::int64_t> lengths{64, 128, 256, 512};
  std::size_t trials = 10000;
  std::size_t equicontinuity_points = 33;
  std::vector<std::int64_t> equicontinuity_lengths{64, 128, 256};
  std::size_t equicontinuity_trials = 2000;
  std::array<std::int64_t, 3> additivity{1, 150, 300};
  double additivity_energy = 0.0;
  std::size_t additivity_trials = 2000;
};

struct DeviationsConfig {
  double energy = 0.0;
  std::vector<std::int64_t> lengths{50, 100, 150, 200, 250, 300, 350, 400};
  std::size_t trials = 2000;
  std::size_t reference_trials = 20000;
  double epsilon_fraction = 0.1;     // eps = fraction * L(epsilon_length) / epsilon_length
  std::int64_t epsilon_length = 200;
  std::array<double, 2> v0{0.6, 0.8};

  std::size_t grid_points = 33;
  std::size_t scan_reference_trials = 2000;
  std::int64_t scan_n = 120;
  std::size_t scans = 200;
  double scan_epsilon_h = 1.0;       // multiples of h_hat
  std::vector<std::int64_t> measure_lengths{20, 40, 60, 80, 100, 120};
  std::size_t measure_trials = 200;
  double measure_epsilon_h = 0.15;
  std::vector<std::int64_t> singular_lengths{10, 20, 40, 60};
  std::size_t singular_trials = 100;
  double singular_epsilon_h = 0.15;
  std::int64_t singular_n_min = 30;
};

struct SpectrumConfig {
  Window window{-200, 199};
  bool eigenvectors = false;
};

struct LocalizeConfig {
  std::int64_t half_width = 200;
  double quantile = 0.1;
  bool doubling_check = true;
};

struct DynamicsConfig {
  double q = 2.0;
  std::int64_t half_width = 600;
  double t_max = 100.0;
  std::size_t t_points = 51;
  std::size_t control_trials = 3;

  std::vector<double> times() const;
};

struct ExperimentConfig {
  std::string name = "experiment";
  nlohmann::json ensemble_json;
  Ensemble ensemble = Ensemble::iid(Distribution::point_mass(0.0));
  std::uint64_t seed = 1;
  EnergyGrid energy;
  AuditConfig audit;
  GrowthConfig growth;
  DeviationsConfig deviations;
  SpectrumConfig spectrum;
  LocalizeConfig localize;
  DynamicsConfig dynamics;
  std::filesystem::path output = "out";
  nlohmann::json raw;  ///< echo of the parsed file
};

/// Parses a JSON config (comments allowed). ConfigError messages carry the
/// line and column for syntax errors and the dotted path for field errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace nslab::cli
