#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "nslab/ensemble_io.hpp"
#include "nslab/errors.hpp"

namespace nslab::cli {
namespace {

using nlohmann::json;

// Typed optional-field access with dotted error paths.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
  }

  bool has(const char* key) const { return j_.contains(key); }

  Section child(const char* key) const {
    static const json empty = json::object();
    return has(key) ? Section(j_.at(key), sub(key)) : Section(empty, sub(key));
  }

  void read(const char* key, double& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError(sub(key) + ": expected a number");
    out = v.get<double>();
  }

  void read(const char* key, bool& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_boolean()) throw ConfigError(sub(key) + ": expected true or false");
    out = v.get<bool>();
  }

  void read(const char* key, std::int64_t& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) throw ConfigError(sub(key) + ": expected an integer");
    out = v.get<std::int64_t>();
  }

  void read(const char* key, std::uint64_t& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (v.is_number_unsigned()) {
      out = v.get<std::uint64_t>();
    } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      out = static_cast<std::uint64_t>(v.get<std::int64_t>());
    } else if (v.is_string()) {
      try {
        std::size_t used = 0;
        out = std::stoull(v.get<std::string>(), &used, 0);
        if (used != v.get<std::string>().size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ConfigError(sub(key) + ": expected an unsigned 64-bit integer");
      }
    } else {
      throw ConfigError(sub(key) + ": expected an unsigned 64-bit integer");
    }
  }

  void read(const char* key, std::string& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError(sub(key) + ": expected a string");
    out = v.get<std::string>();
  }

  void read(const char* key, std::vector<std::int64_t>& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array()) throw ConfigError(sub(key) + ": expected an array of integers");
    out.clear();
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number_integer()) {
        throw ConfigError(sub(key) + "[" + std::to_string(i) + "]: expected an integer");
      }
      out.push_back(v[i].get<std::int64_t>());
    }
  }

  template <class T, std::size_t N>
  void read(const char* key, std::array<T, N>& out) const {
    if (!has(key)) return;
    const json& v = j_.at(key);
    if (!v.is_array() || v.size() != N) {
      throw ConfigError(sub(key) + ": expected an array of " + std::to_string(N) + " numbers");
    }
    for (std::size_t i = 0; i < N; ++i) {
      if (!v[i].is_number()) {
        throw ConfigError(sub(key) + "[" + std::to_string(i) + "]: expected a number");
      }
      out[i] = v[i].get<T>();
    }
  }

  void read(const char* key, Window& out) const {
    std::array<std::int64_t, 2> ab{out.a, out.b};
    read(key, ab);
    if (ab[0] > ab[1]) throw ConfigError(sub(key) + ": expected [a, b] with a <= b");
    out = {ab[0], ab[1]};
  }

  std::string sub(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const json& j_;
  std::string path_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void require_positive_lengths(const std::vector<std::int64_t>& xs, const std::string& path) {
  require(!xs.empty(), path + ": must not be empty");
  for (std::int64_t x : xs) require(x >= 1, path + ": lengths must be >= 1");
}

}  // namespace

std::vector<double> EnergyGrid::values() const { return values(points); }

std::vector<double> EnergyGrid::values(std::size_t n) const {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = n == 1 ? min : min + (max - min) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  if (n > 1) out.back() = max;
  return out;
}

std::vector<double> DynamicsConfig::times() const {
  std::vector<double> out(t_points);
  for (std::size_t i = 0; i < t_points; ++i) {
    out[i] = t_points == 1 ? 0.0 : t_max * static_cast<double>(i) / static_cast<double>(t_points - 1);
  }
  return out;
}

ExperimentConfig parse_config(const std::string& text) {
  json raw;
  try {
    raw = json::parse(text, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config syntax error: ") + e.what());
  }
  ExperimentConfig cfg;
  cfg.raw = raw;
  const Section root(raw, "");
  root.read("name", cfg.name);
  require(root.has("ensemble"), "ensemble: missing field");
  cfg.ensemble_json = raw.at("ensemble");
  cfg.ensemble = ensemble_from_json(cfg.ensemble_json, "ensemble");
  root.read("seed", cfg.seed);
  std::string out = cfg.output.string();
  root.read("output", out);
  cfg.output = out;

  const Section e = root.child("energy");
  e.read("min", cfg.energy.min);
  e.read("max", cfg.energy.max);
  e.read("points", cfg.energy.points);
  require(cfg.energy.min < cfg.energy.max, "energy: requires min < max");
  require(cfg.energy.points >= 2, "energy.points: grid size must be >= 2");

  const Section a = root.child("audit");
  a.read("sites", cfg.audit.sites);
  a.read("samples", cfg.audit.samples);
  require(cfg.audit.samples >= 2, "audit.samples: must be >= 2");

  const Section g = root.child("growth");
  auto& gc = cfg.growth;
  g.read("start", gc.start);
  g.read("lengths", gc.lengths);
  g.read("trials", gc.trials);
  g.read("equicontinuity_points", gc.equicontinuity_points);
  g.read("equicontinuity_lengths", gc.equicontinuity_lengths);
  g.read("equicontinuity_trials", gc.equicontinuity_trials);
  g.read("additivity", gc.additivity);
  g.read("additivity_energy", gc.additivity_energy);
  g.read("additivity_trials", gc.additivity_trials);
  require_positive_lengths(gc.lengths, "growth.lengths");
  require_positive_lengths(gc.equicontinuity_lengths, "growth.equicontinuity_lengths");
  require(gc.trials >= 2, "growth.trials: must be >= 2");
  require(gc.equicontinuity_trials >= 2, "growth.equicontinuity_trials: must be >= 2");
  require(gc.additivity_trials >= 2, "growth.additivity_trials: must be >= 2");
  require(gc.equicontinuity_points >= 2, "growth.equicontinuity_points: must be >= 2");
  require(gc.additivity[0] <= gc.additivity[1] && gc.additivity[1] < gc.additivity[2],
          "growth.additivity: expected [a, b, c] with a <= b < c");

  const Section d = root.child("deviations");
  auto& dc = cfg.deviations;
  d.read("energy", dc.energy);
  d.read("lengths", dc.lengths);
  d.read("trials", dc.trials);
  d.read("reference_trials", dc.reference_trials);
  d.read("epsilon_fraction", dc.epsilon_fraction);
  d.read("epsilon_length", dc.epsilon_length);
  d.read("v0", dc.v0);
  d.read("grid_points", dc.grid_points);
  d.read("scan_reference_trials", dc.scan_reference_trials);
  d.read("scan_n", dc.scan_n);
  d.read("scans", dc.scans);
  d.read("scan_epsilon_h", dc.scan_epsilon_h);
  d.read("measure_lengths", dc.measure_lengths);
  d.read("measure_trials", dc.measure_trials);
  d.read("measure_epsilon_h", dc.measure_epsilon_h);
  d.read("singular_lengths", dc.singular_lengths);
  d.read("singular_trials", dc.singular_trials);
  d.read("singular_epsilon_h", dc.singular_epsilon_h);
  d.read("singular_n_min", dc.singular_n_min);
  require_positive_lengths(dc.lengths, "deviations.lengths");
  require_positive_lengths(dc.measure_lengths, "deviations.measure_lengths");
  require_positive_lengths(dc.singular_lengths, "deviations.singular_lengths");
  require(dc.trials >= 2, "deviations.trials: must be >= 2");
  require(dc.reference_trials >= 10 * dc.trials,
          "deviations.reference_trials: must be >= 10 x deviations.trials");
  require(dc.scan_reference_trials >= 2, "deviations.scan_reference_trials: must be >= 2");
  require(dc.measure_trials >= 2, "deviations.measure_trials: must be >= 2");
  require(dc.singular_trials >= 1, "deviations.singular_trials: must be >= 1");
  require(dc.grid_points >= 2, "deviations.grid_points: must be >= 2");
  require(dc.scan_n >= 1, "deviations.scan_n: must be >= 1");
  require(std::find(dc.lengths.begin(), dc.lengths.end(), dc.epsilon_length) != dc.lengths.end(),
          "deviations.epsilon_length: must be one of deviations.lengths");
  require(std::abs(std::hypot(dc.v0[0], dc.v0[1]) - 1.0) <= 1e-12,
          "deviations.v0: must be a unit vector");

  const Section s = root.child("spectrum");
  s.read("window", cfg.spectrum.window);
  s.read("eigenvectors", cfg.spectrum.eigenvectors);

  const Section l = root.child("localize");
  l.read("half_width", cfg.localize.half_width);
  l.read("quantile", cfg.localize.quantile);
  l.read("doubling_check", cfg.localize.doubling_check);
  require(cfg.localize.half_width >= 20, "localize.half_width: must be >= 20");
  require(cfg.localize.quantile >= 0.0 && cfg.localize.quantile <= 1.0,
          "localize.quantile: must lie in [0, 1]");

  const Section y = root.child("dynamics");
  y.read("q", cfg.dynamics.q);
  y.read("half_width", cfg.dynamics.half_width);
  y.read("t_max", cfg.dynamics.t_max);
  y.read("t_points", cfg.dynamics.t_points);
  y.read("control_trials", cfg.dynamics.control_trials);
  require(cfg.dynamics.q > 0.0, "dynamics.q: must be positive");
  require(cfg.dynamics.half_width >= 11, "dynamics.half_width: must be >= 11");
  require(cfg.dynamics.t_points >= 2, "dynamics.t_points: must be >= 2");
  require(cfg.dynamics.t_max > 0.0, "dynamics.t_max: must be positive");
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace nslab::cli
