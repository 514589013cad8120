#include "nslab/ensemble_io.hpp"

#include "nslab/csv.hpp"
#include "nslab/errors.hpp"

namespace nslab {
namespace {

using nlohmann::json;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const json& field(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + "." + key + ": missing field");
  return *it;
}

double number(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

double number_or(const json& j, const char* key, const std::string& path, double fallback) {
  return j.contains(key) ? number(j, key, path) : fallback;
}

std::int64_t integer(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_number_integer()) throw ConfigError(path + "." + key + ": expected an integer");
  return v.get<std::int64_t>();
}

std::string text(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_string()) throw ConfigError(path + "." + key + ": expected a string");
  return v.get<std::string>();
}

std::vector<double> numbers(const json& j, const char* key, const std::string& path) {
  const json& v = field(j, key, path);
  if (!v.is_array()) throw ConfigError(path + "." + key + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) {
      throw ConfigError(path + "." + key + "[" + std::to_string(i) + "]: expected a number");
    }
    out.push_back(v[i].get<double>());
  }
  return out;
}

template <class F>
auto rethrow_as_config(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

}  // namespace

Distribution distribution_from_json(const json& j, const std::string& path) {
  const std::string type = text(j, "type", path);
  return rethrow_as_config(path, [&] {
    if (type == "point_masses") {
      const json& atoms = field(j, "atoms", path);
      if (!atoms.is_array()) throw ConfigError(path + ".atoms: expected an array");
      std::vector<Atom> out;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        const json& a = atoms[i];
        const std::string p = path + ".atoms[" + std::to_string(i) + "]";
        if (!a.is_array() || a.size() != 2 || !a[0].is_number() || !a[1].is_number()) {
          throw ConfigError(p + ": expected [value, probability]");
        }
        out.push_back({a[0].get<double>(), a[1].get<double>()});
      }
      return Distribution::point_masses(std::move(out));
    }
    if (type == "three_point") {
      return Distribution::three_point(number(j, "a", path), number(j, "b", path),
                                       number(j, "p", path), number(j, "eps", path),
                                       number(j, "gamma", path));
    }
    if (type == "deterministic_limit") return Distribution::deterministic_limit(integer(j, "n", path));
    if (type == "quantile_table") {
      return Distribution::quantile_table(numbers(j, "levels", path), numbers(j, "values", path));
    }
    throw ConfigError(path + ".type: unknown distribution type '" + type + "'");
  });
}

json to_json(const Distribution& d) {
  return std::visit(
      Overloaded{
          [](const PointMasses& p) {
            json atoms = json::array();
            for (const Atom& a : p.atoms) atoms.push_back({a.value, a.probability});
            return json{{"type", "point_masses"}, {"atoms", atoms}};
          },
          [](const ThreePoint& t) {
            return json{{"type", "three_point"}, {"a", t.a}, {"b", t.b},       {"p", t.p},
                        {"eps", t.eps},          {"gamma", t.gamma}};
          },
          [](const DeterministicLimit& x) { return json{{"type", "deterministic_limit"}, {"n", x.n}}; },
          [](const QuantileTable& q) {
            return json{{"type", "quantile_table"}, {"levels", q.levels}, {"values", q.values}};
          },
      },
      d.variant());
}

Ensemble ensemble_from_json(const json& j, const std::string& path) {
  const json& pj = field(j, "parameters", path);
  const std::string pp = path + ".parameters";
  EnsembleParameters params;
  params.gamma = number(pj, "gamma", pp);
  params.c0 = number(pj, "C0", pp);
  params.k = number(pj, "k", pp);
  params.epsilon_var = number(pj, "epsilon_var", pp);

  const json& dj = field(j, "default", path);
  const std::string dp = path + ".default";
  const std::string rule = text(dj, "rule", dp);
  DefaultRule def = DeterministicLimitRule{};
  if (rule == "constant") {
    def = ConstantRule{distribution_from_json(field(dj, "distribution", dp), dp + ".distribution")};
  } else if (rule == "periodic") {
    const json& cj = field(dj, "cycle", dp);
    if (!cj.is_array() || cj.empty()) throw ConfigError(dp + ".cycle: expected a nonempty array");
    PeriodicRule p;
    for (std::size_t i = 0; i < cj.size(); ++i) {
      p.cycle.push_back(distribution_from_json(cj[i], dp + ".cycle[" + std::to_string(i) + "]"));
    }
    p.phase = dj.contains("phase") ? integer(dj, "phase", dp) : 0;
    def = std::move(p);
  } else if (rule == "deterministic_limit") {
    def = DeterministicLimitRule{dj.contains("offset") ? integer(dj, "offset", dp) : 2};
  } else if (rule == "three_point_decay") {
    def = ThreePointDecayRule{number(dj, "a", dp),    number(dj, "b", dp),
                              number(dj, "p", dp),    number(dj, "eps0", dp),
                              number_or(dj, "decay", dp, 1.0), number(dj, "gamma", dp)};
  } else {
    throw ConfigError(dp + ".rule: unknown rule '" + rule + "'");
  }

  std::int64_t origin = 0;
  std::vector<Distribution> table;
  if (j.contains("table")) {
    const json& tj = j.at("table");
    const std::string tp = path + ".table";
    origin = integer(tj, "origin", tp);
    const json& sj = field(tj, "sites", tp);
    if (!sj.is_array()) throw ConfigError(tp + ".sites: expected an array");
    for (std::size_t i = 0; i < sj.size(); ++i) {
      table.push_back(distribution_from_json(sj[i], tp + ".sites[" + std::to_string(i) + "]"));
    }
  }
  return rethrow_as_config(path, [&] { return Ensemble(origin, std::move(table), std::move(def), params); });
}

json to_json(const Ensemble& e) {
  const auto& p = e.parameters();
  json out;
  out["parameters"] = {{"gamma", p.gamma}, {"C0", p.c0}, {"k", p.k}, {"epsilon_var", p.epsilon_var}};
  out["default"] = std::visit(
      Overloaded{
          [](const ConstantRule& r) {
            return json{{"rule", "constant"}, {"distribution", to_json(r.distribution)}};
          },
          [](const PeriodicRule& r) {
            json cycle = json::array();
            for (const auto& d : r.cycle) cycle.push_back(to_json(d));
            return json{{"rule", "periodic"}, {"phase", r.phase}, {"cycle", cycle}};
          },
          [](const DeterministicLimitRule& r) {
            return json{{"rule", "deterministic_limit"}, {"offset", r.offset}};
          },
          [](const ThreePointDecayRule& r) {
            return json{{"rule", "three_point_decay"}, {"a", r.a},         {"b", r.b},
                        {"p", r.p},                    {"eps0", r.eps0},   {"decay", r.decay},
                        {"gamma", r.gamma}};
          },
      },
      e.rule());
  if (!e.table().empty()) {
    json sites = json::array();
    for (const auto& d : e.table()) sites.push_back(to_json(d));
    out["table"] = {{"origin", e.table_origin()}, {"sites", sites}};
  }
  return out;
}

json to_json(const AuditReport& r) {
  json sites = json::array();
  for (const auto& s : r.sites) {
    sites.push_back({{"site", s.site},
                     {"gamma_moment", s.gamma_moment},
                     {"moment_ok", s.moment_ok},
                     {"truncated_variance", s.truncated_variance},
                     {"variance_ok", s.variance_ok},
                     {"exact", s.exact}});
  }
  json out{{"parameters",
            {{"gamma", r.parameters.gamma},
             {"C0", r.parameters.c0},
             {"k", r.parameters.k},
             {"epsilon_var", r.parameters.epsilon_var}}},
           {"moments_pass", r.moments_pass},
           {"variance_pass", r.variance_pass},
           {"verdict", r.verdict()},
           {"sites", sites}};
  out["first_variance_failure"] =
      r.first_variance_failure ? json(*r.first_variance_failure) : json(nullptr);
  out["last_variance_failure"] =
      r.last_variance_failure ? json(*r.last_variance_failure) : json(nullptr);
  return out;
}

void write_audit_csv(std::ostream& out, const AuditReport& r) {
  CsvWriter csv(out, {"site", "gamma_moment", "moment_ok", "truncated_variance", "variance_ok", "exact"});
  for (const auto& s : r.sites) {
    csv.row(s.site, s.gamma_moment, s.moment_ok, s.truncated_variance, s.variance_ok, s.exact);
  }
}

}  // namespace nslab
