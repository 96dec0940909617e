#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "psps/grid.hpp"

namespace psps {

inline constexpr const char* kPopulationFeature = "population";

struct TractRecord {
  std::string gidtr;
  LatLon center;
  std::map<std::string, double> features;     // includes "population"
  std::map<std::string, double> percentiles;  // indicator -> [0, 100]
  std::map<std::string, bool> vuln_flags;     // index name -> flagged

  [[nodiscard]] double population() const;
};

/// A load bus as seen by the assignment: id and location only.
struct BusSite {
  std::string id;
  LatLon location;
};

struct AssignmentOptions {
  /// Weight buses by 1/d instead of d inside a tract's radius.
  bool inverse_distance = false;
};

/// Sparse tract-to-bus weights. `weights[c]` lists (bus position, a_cn).
struct AssignmentMatrix {
  std::vector<std::vector<std::pair<std::size_t, double>>> weights;
  std::vector<double> radius_km;
  std::vector<std::size_t> unassigned_tracts;  // tracts with no bus in radius

  [[nodiscard]] double weight(std::size_t tract, std::size_t bus) const;
};

/// Great-circle distance in km.
double haversine_km(const LatLon& a, const LatLon& b);

/// Distances below this (1 m) are floored so the weight formula stays defined.
inline constexpr double kMinDistanceKm = 0.001;

/// Three-pass assignment: radius = nearest-bus distance; each still
/// uncovered bus (in input order) stretches its nearest tract's radius;
/// weights over in-radius buses are d / sum(d) (or the inverse variant).
/// Throws InputError on empty inputs.
AssignmentMatrix assign_tracts(const std::vector<TractRecord>& tracts, const std::vector<BusSite>& buses,
                               const AssignmentOptions& options = {});

/// f_n = sum_c f_c * a_cn, plus the vulnerable population per index.
struct BusFeatures {
  std::map<std::string, double> features;
  std::map<std::string, double> vulnerable_population;

  [[nodiscard]] double population() const;
};
std::vector<BusFeatures> bus_features(const std::vector<TractRecord>& tracts, const AssignmentMatrix& assignment,
                                      std::size_t bus_count);

struct BusFractions {
  double population = 0.0;
  std::map<std::string, double> group;
  std::map<std::string, double> vuln;
  bool zero_population = false;
};

/// gamma^grp = group count / population and gamma^vuln = vulnerable
/// population / population. Zero-population buses get all-zero fractions and
/// `zero_population = true`.
std::vector<BusFractions> group_fractions(const std::vector<BusFeatures>& features,
                                          const std::vector<std::string>& groups,
                                          const std::vector<std::string>& indices);

/// One clause is a conjunction of (indicator >= min_percentile); a rule is a
/// disjunction of clauses.
struct PercentileCondition {
  std::string indicator;
  double min_percentile = 0.0;
};
using RuleClause = std::vector<PercentileCondition>;
using VulnerabilityRule = std::vector<RuleClause>;

bool rule_matches(const TractRecord& tract, const VulnerabilityRule& rule);

/// Sets `vuln_flags[index_name]` on every tract. Throws InputError naming a
/// missing indicator.
void flag_vulnerability(std::vector<TractRecord>& tracts, const std::string& index_name,
                        const VulnerabilityRule& rule);

/// `{index_name: [[{indicator, min_percentile}...]...]}`
std::map<std::string, VulnerabilityRule> rules_from_json(const nlohmann::json& doc);

/// Tract CSV: `gidtr, lat, lon, population` then free columns. Columns named
/// `pct_<indicator>` are percentiles, `flag_<index>` are 0/1 flags, all
/// other columns are features (group counts).
std::vector<TractRecord> load_tracts(const std::string& path);

/// Result of attaching demographics to a network.
struct DemographicAssignment {
  std::vector<std::string> load_bus_ids;
  AssignmentMatrix matrix;
  std::vector<BusFractions> fractions;  // per load bus
  std::vector<std::string> zero_population_buses;
};

/// Runs assignment over load buses (nonzero total demand), computes
/// fractions for every declared group and index, and writes them into the
/// buses. Non-load buses keep zero population.
std::pair<Network, DemographicAssignment> attach_demographics(const Network& network,
                                                              const std::vector<TractRecord>& tracts,
                                                              const std::vector<std::string>& indices,
                                                              const AssignmentOptions& options = {});

nlohmann::json assignment_to_json(const DemographicAssignment& assignment, const std::vector<TractRecord>& tracts);

}  // namespace psps
