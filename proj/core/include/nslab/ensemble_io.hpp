#pragma once

#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "nslab/ensembles.hpp"

namespace nslab {

/// Ensemble description schema:
///
///   {
///     "parameters": {"gamma": 2, "C0": 1.5, "k": 2, "epsilon_var": 0.5},
///     "default": {"rule": "constant", "distribution": DIST}
///              | {"rule": "periodic", "phase": 0, "cycle": [DIST, ...]}
///              | {"rule": "deterministic_limit", "offset": 2}
///              | {"rule": "three_point_decay", "a": 0, "b": 1, "p": 0.5,
///                 "eps0": 0.1, "decay": 1, "gamma": 1},
///     "table": {"origin": -2, "sites": [DIST, ...]}        (optional)
///   }
///
///   DIST = {"type": "point_masses", "atoms": [[value, probability], ...]}
///        | {"type": "three_point", "a": 0, "b": 1, "p": 0.5, "eps": 0.25, "gamma": 1}
///        | {"type": "deterministic_limit", "n": 3}
///        | {"type": "quantile_table", "levels": [0, ..., 1], "values": [...]}
///
/// Errors are ConfigError naming the offending field path.
Distribution distribution_from_json(const nlohmann::json& j, const std::string& path = "distribution");
nlohmann::json to_json(const Distribution& d);

Ensemble ensemble_from_json(const nlohmann::json& j, const std::string& path = "ensemble");
nlohmann::json to_json(const Ensemble& e);

nlohmann::json to_json(const AuditReport& r);
/// One row per site: site, gamma_moment, moment_ok, truncated_variance, variance_ok, exact.
void write_audit_csv(std::ostream& out, const AuditReport& r);

}  // namespace nslab
