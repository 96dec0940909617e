#include "psps/demographics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "psps/csv.hpp"
#include "psps/error.hpp"

namespace psps {

using nlohmann::json;

double TractRecord::population() const {
  const auto it = features.find(kPopulationFeature);
  return it == features.end() ? 0.0 : it->second;
}

double AssignmentMatrix::weight(std::size_t tract, std::size_t bus) const {
  for (const auto& [b, w] : weights.at(tract)) {
    if (b == bus) return w;
  }
  return 0.0;
}

double haversine_km(const LatLon& a, const LatLon& b) {
  constexpr double kEarthRadius = 6371.0088;
  constexpr double rad = std::numbers::pi / 180.0;
  const double dlat = (b.lat - a.lat) * rad;
  const double dlon = (b.lon - a.lon) * rad;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2.0 * kEarthRadius * std::asin(std::min(1.0, std::sqrt(h)));
}

namespace {

// Radius membership tolerates the rounding of the distance that set it.
bool within(double d, double radius) { return d <= radius * (1.0 + 1e-12); }

}  // namespace

AssignmentMatrix assign_tracts(const std::vector<TractRecord>& tracts, const std::vector<BusSite>& buses,
                               const AssignmentOptions& options) {
  if (tracts.empty()) throw InputError("tract assignment needs at least one tract");
  if (buses.empty()) throw InputError("tract assignment needs at least one load bus");
  const std::size_t nc = tracts.size();
  const std::size_t nb = buses.size();
  std::vector<std::vector<double>> dist(nc, std::vector<double>(nb));
  for (std::size_t c = 0; c < nc; ++c) {
    for (std::size_t n = 0; n < nb; ++n) {
      dist[c][n] = std::max(kMinDistanceKm, haversine_km(tracts[c].center, buses[n].location));
    }
  }

  AssignmentMatrix out;
  out.radius_km.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) out.radius_km[c] = *std::min_element(dist[c].begin(), dist[c].end());

  auto covered = [&](std::size_t n) {
    for (std::size_t c = 0; c < nc; ++c) {
      if (within(dist[c][n], out.radius_km[c])) return true;
    }
    return false;
  };
  for (std::size_t n = 0; n < nb; ++n) {
    if (covered(n)) continue;
    std::size_t nearest = 0;
    for (std::size_t c = 1; c < nc; ++c) {
      if (dist[c][n] < dist[nearest][n]) nearest = c;
    }
    out.radius_km[nearest] = std::max(out.radius_km[nearest], dist[nearest][n]);
  }

  out.weights.resize(nc);
  for (std::size_t c = 0; c < nc; ++c) {
    double total = 0.0;
    for (std::size_t n = 0; n < nb; ++n) {
      if (within(dist[c][n], out.radius_km[c])) total += options.inverse_distance ? 1.0 / dist[c][n] : dist[c][n];
    }
    if (total <= 0.0) {
      out.unassigned_tracts.push_back(c);
      continue;
    }
    for (std::size_t n = 0; n < nb; ++n) {
      if (!within(dist[c][n], out.radius_km[c])) continue;
      const double w = options.inverse_distance ? 1.0 / dist[c][n] : dist[c][n];
      out.weights[c].emplace_back(n, w / total);
    }
  }
  return out;
}

double BusFeatures::population() const {
  const auto it = features.find(kPopulationFeature);
  return it == features.end() ? 0.0 : it->second;
}

std::vector<BusFeatures> bus_features(const std::vector<TractRecord>& tracts, const AssignmentMatrix& assignment,
                                      std::size_t bus_count) {
  std::vector<BusFeatures> out(bus_count);
  for (std::size_t c = 0; c < tracts.size() && c < assignment.weights.size(); ++c) {
    const auto& tract = tracts[c];
    for (const auto& [n, a] : assignment.weights[c]) {
      auto& bus = out.at(n);
      for (const auto& [name, value] : tract.features) bus.features[name] += value * a;
      for (const auto& [index, flagged] : tract.vuln_flags) {
        bus.vulnerable_population[index] += (flagged ? tract.population() : 0.0) * a;
      }
    }
  }
  return out;
}

std::vector<BusFractions> group_fractions(const std::vector<BusFeatures>& features, const std::vector<std::string>& groups,
                                          const std::vector<std::string>& indices) {
  std::vector<BusFractions> out;
  out.reserve(features.size());
  for (const auto& f : features) {
    BusFractions b;
    b.population = f.population();
    b.zero_population = !(b.population > 0.0);
    for (const auto& g : groups) {
      const auto it = f.features.find(g);
      const double count = it == f.features.end() ? 0.0 : it->second;
      b.group[g] = b.zero_population ? 0.0 : std::clamp(count / b.population, 0.0, 1.0);
    }
    for (const auto& idx : indices) {
      const auto it = f.vulnerable_population.find(idx);
      const double count = it == f.vulnerable_population.end() ? 0.0 : it->second;
      b.vuln[idx] = b.zero_population ? 0.0 : std::clamp(count / b.population, 0.0, 1.0);
    }
    out.push_back(std::move(b));
  }
  return out;
}

bool rule_matches(const TractRecord& tract, const VulnerabilityRule& rule) {
  for (const auto& clause : rule) {
    bool all = true;
    for (const auto& cond : clause) {
      const auto it = tract.percentiles.find(cond.indicator);
      if (it == tract.percentiles.end()) {
        throw InputError("vulnerability rule references missing indicator '" + cond.indicator + "' (tract " +
                         tract.gidtr + ")");
      }
      if (!(it->second >= cond.min_percentile)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

void flag_vulnerability(std::vector<TractRecord>& tracts, const std::string& index_name,
                        const VulnerabilityRule& rule) {
  // Validate every indicator first so a bad rule fails even when an earlier
  // clause would short-circuit.
  for (const auto& tract : tracts) {
    for (const auto& clause : rule) {
      for (const auto& cond : clause) {
        if (!tract.percentiles.contains(cond.indicator)) {
          throw InputError("vulnerability rule '" + index_name + "' references missing indicator '" + cond.indicator +
                           "' (tract " + tract.gidtr + ")");
        }
      }
    }
  }
  for (auto& tract : tracts) tract.vuln_flags[index_name] = rule_matches(tract, rule);
}

std::map<std::string, VulnerabilityRule> rules_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("rule file: expected an object {index_name: [[...]...]}");
  std::map<std::string, VulnerabilityRule> out;
  for (const auto& [name, clauses] : doc.items()) {
    if (!clauses.is_array()) throw InputError("rule file: " + name + " must be a list of clauses");
    VulnerabilityRule rule;
    for (const auto& clause : clauses) {
      if (!clause.is_array()) throw InputError("rule file: " + name + ": each clause must be a list of conditions");
      RuleClause rc;
      for (const auto& cond : clause) {
        if (!cond.is_object() || !cond.contains("indicator") || !cond.contains("min_percentile")) {
          throw InputError("rule file: " + name + ": conditions need 'indicator' and 'min_percentile'");
        }
        const double p = cond.at("min_percentile").get<double>();
        if (!(p >= 0.0 && p <= 100.0)) throw InputError("rule file: " + name + ": min_percentile outside [0,100]");
        rc.push_back({cond.at("indicator").get<std::string>(), p});
      }
      rule.push_back(std::move(rc));
    }
    out.emplace(name, std::move(rule));
  }
  return out;
}

std::vector<TractRecord> load_tracts(const std::string& path) {
  const auto table = csv::read_file(path);
  for (const char* required : {"gidtr", "lat", "lon", "population"}) {
    if (table.column(required) < 0) throw InputError(path + ": missing column '" + required + "'");
  }
  std::vector<TractRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& row = table.rows[i];
    const std::string where = path + ":" + std::to_string(table.line_numbers[i]);
    TractRecord t;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      const std::string& col = table.header[c];
      const std::string& cell = row[c];
      if (col == "gidtr") {
        t.gidtr = cell;
      } else if (col == "lat") {
        t.center.lat = csv::parse_double(cell, where + " lat");
      } else if (col == "lon") {
        t.center.lon = csv::parse_double(cell, where + " lon");
      } else if (col.rfind("pct_", 0) == 0) {
        const double p = csv::parse_double(cell, where + " " + col);
        if (!(p >= 0.0 && p <= 100.0)) throw InputError(where + ": " + col + " outside [0,100]");
        t.percentiles[col.substr(4)] = p;
      } else if (col.rfind("flag_", 0) == 0) {
        const double f = csv::parse_double(cell, where + " " + col);
        if (f != 0.0 && f != 1.0) throw InputError(where + ": " + col + " must be 0 or 1");
        t.vuln_flags[col.substr(5)] = f == 1.0;
      } else {
        const double v = csv::parse_double(cell, where + " " + col);
        if (!(v >= 0.0)) throw InputError(where + ": " + col + " must be >= 0");
        t.features[col] = v;
      }
    }
    for (const auto& [name, v] : t.features) {
      if (name != kPopulationFeature && v > t.population() * (1.0 + 1e-9)) {
        throw InputError(where + ": group count " + name + " exceeds population");
      }
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::pair<Network, DemographicAssignment> attach_demographics(const Network& network,
                                                              const std::vector<TractRecord>& tracts,
                                                              const std::vector<std::string>& indices,
                                                              const AssignmentOptions& options) {
  DemographicAssignment result;
  std::vector<BusSite> sites;
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < network.buses().size(); ++i) {
    const auto& bus = network.buses()[i];
    if (bus.total_demand() > 0.0) {
      sites.push_back({bus.id, bus.location});
      positions.push_back(i);
      result.load_bus_ids.push_back(bus.id);
    }
  }
  const auto groups = network.all_groups();
  for (const auto& g : groups) {
    for (const auto& t : tracts) {
      if (!t.features.contains(g)) throw InputError("tract " + t.gidtr + " has no column for group '" + g + "'");
    }
  }
  for (const auto& idx : indices) {
    for (const auto& t : tracts) {
      if (!t.vuln_flags.contains(idx)) throw InputError("tract " + t.gidtr + " has no flag for index '" + idx + "'");
    }
  }
  result.matrix = assign_tracts(tracts, sites, options);
  const auto features = bus_features(tracts, result.matrix, sites.size());
  result.fractions = group_fractions(features, groups, indices);

  auto buses = network.buses();
  for (auto& bus : buses) {
    bus.population = 0.0;
    bus.group_fractions.clear();
    bus.vuln_fraction.clear();
  }
  for (std::size_t k = 0; k < positions.size(); ++k) {
    auto& bus = buses[positions[k]];
    const auto& f = result.fractions[k];
    bus.population = f.population;
    bus.group_fractions = f.group;
    bus.vuln_fraction = f.vuln;
    if (f.zero_population) result.zero_population_buses.push_back(bus.id);
  }
  return {network.with_buses(std::move(buses)), std::move(result)};
}

json assignment_to_json(const DemographicAssignment& a, const std::vector<TractRecord>& tracts) {
  json doc;
  json entries = json::array();
  for (std::size_t c = 0; c < a.matrix.weights.size(); ++c) {
    for (const auto& [n, w] : a.matrix.weights[c]) {
      entries.push_back({{"tract", tracts[c].gidtr}, {"bus", a.load_bus_ids[n]}, {"weight", w}});
    }
  }
  doc["weights"] = std::move(entries);
  json radius = json::object();
  for (std::size_t c = 0; c < a.matrix.radius_km.size(); ++c) radius[tracts[c].gidtr] = a.matrix.radius_km[c];
  doc["radius_km"] = std::move(radius);
  json unassigned = json::array();
  for (auto c : a.matrix.unassigned_tracts) unassigned.push_back(tracts[c].gidtr);
  doc["unassigned_tracts"] = std::move(unassigned);
  doc["zero_population_buses"] = a.zero_population_buses;
  return doc;
}

}  // namespace psps
