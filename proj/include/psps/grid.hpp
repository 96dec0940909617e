#pragma once

#include <cstddef>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace psps {

/// Undergrounding cost rate in million USD per mile.
inline constexpr double kUndergroundCostPerMile = 7.0;

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

/// Days are ordered day indices; demand arrays are indexed by position in
/// `days`, not by the day index itself.
struct Horizon {
  std::vector<int> days;
  int periods_per_day = 1;
  double base_power = 100.0;  // MVA

  [[nodiscard]] std::optional<std::size_t> day_position(int day) const;
};

enum class FamilyKind { partition, overlay };

/// A set of demographic groups. Partition families (race/ethnicity) have
/// per-bus fractions summing to one; overlay families (uninsured, low
/// income) are independent fractions.
struct GroupFamily {
  std::string name;
  FamilyKind kind = FamilyKind::partition;
  std::vector<std::string> groups;
};

struct Bus {
  std::string id;
  std::vector<std::vector<double>> demand;  // [day position][period], p.u.
  double population = 0.0;
  std::map<std::string, double> group_fractions;
  std::map<std::string, double> vuln_fraction;  // index name -> fraction
  LatLon location;

  [[nodiscard]] double load(std::size_t day_pos, int period) const;
  [[nodiscard]] double total_demand() const;
  [[nodiscard]] double group_fraction(const std::string& group) const;
  [[nodiscard]] double vulnerable_fraction(const std::string& index) const;
};

struct Line {
  std::string id;
  std::string from_bus;
  std::string to_bus;
  double susceptance = 0.0;  // p.u.
  double flow_limit = 0.0;   // p.u.
  double angle_min = -std::numbers::pi / 3;
  double angle_max = std::numbers::pi / 3;
  double length = 0.0;            // miles
  double underground_cost = 0.0;  // million USD
  std::vector<LatLon> path;
};

struct Generator {
  std::string id;
  std::string bus;
  double p_min = 0.0;
  double p_max = 0.0;
};

/// The physical system plus bus-level demographics. Immutable once built.
/// Incidence sets skip references to unknown buses; validate_network()
/// reports those.
class Network {
 public:
  Network() = default;
  Network(Horizon horizon, std::vector<Bus> buses, std::vector<Line> lines,
          std::vector<Generator> generators,
          std::vector<GroupFamily> families = {});

  [[nodiscard]] const Horizon& horizon() const { return horizon_; }
  [[nodiscard]] const std::vector<Bus>& buses() const { return buses_; }
  [[nodiscard]] const std::vector<Line>& lines() const { return lines_; }
  [[nodiscard]] const std::vector<Generator>& generators() const { return generators_; }
  [[nodiscard]] const std::vector<GroupFamily>& families() const { return families_; }

  [[nodiscard]] std::optional<std::size_t> bus_index(const std::string& id) const;
  [[nodiscard]] std::optional<std::size_t> line_index(const std::string& id) const;

  // Incidence, indexed by bus position.
  [[nodiscard]] const std::vector<std::size_t>& generators_at(std::size_t bus) const { return gens_at_[bus]; }
  [[nodiscard]] const std::vector<std::size_t>& lines_to(std::size_t bus) const { return lines_to_[bus]; }
  [[nodiscard]] const std::vector<std::size_t>& lines_from(std::size_t bus) const { return lines_from_[bus]; }

  /// Every group of every family, in declaration order.
  [[nodiscard]] std::vector<std::string> all_groups() const;
  [[nodiscard]] double total_demand() const;

  /// Path used for risk integration: the stored polyline, or the straight
  /// segment between the terminal buses when none was given.
  [[nodiscard]] std::vector<LatLon> line_path(const Line& line) const;

  /// Copy with replaced buses; used after demographic assignment.
  [[nodiscard]] Network with_buses(std::vector<Bus> buses) const;
  [[nodiscard]] Network with_families(std::vector<GroupFamily> families) const;

 private:
  void build_incidence();

  Horizon horizon_;
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<Generator> generators_;
  std::vector<GroupFamily> families_;
  std::map<std::string, std::size_t> bus_lookup_;
  std::map<std::string, std::size_t> line_lookup_;
  std::vector<std::vector<std::size_t>> gens_at_;
  std::vector<std::vector<std::size_t>> lines_to_;
  std::vector<std::vector<std::size_t>> lines_from_;
};

enum class Severity { error, warning };

struct Violation {
  Severity severity = Severity::error;
  std::string entity;  // e.g. "line L3"
  std::string rule;    // e.g. "dangling bus reference"
};

/// Structural checks. Returns every violation found; disconnected networks
/// produce a warning-level entry, everything else is an error.
std::vector<Violation> validate_network(const Network& network);
bool has_errors(const std::vector<Violation>& violations);

// ---------------------------------------------------------------------------
// Scenario configuration

enum class ObjectiveKind { total_load_shed, max_group_percent_shed };
enum class PolicyKind { none, budget, load_shed_reduction };

struct ScenarioSpec {
  std::string model_id;
  ObjectiveKind objective = ObjectiveKind::total_load_shed;
  PolicyKind policy = PolicyKind::none;
  std::string vulnerability_index;  // empty = none
  double budget = 0.0;              // million USD
  double big_m_upper = 2.0 * std::numbers::pi;
  double big_m_lower = -2.0 * std::numbers::pi;
  double policy_fraction = 0.4;
  double mip_gap = 0.01;
  double time_limit = 3600.0;  // seconds
};

/// The eleven catalog rows at `budget`. BL-M0 always has budget 0.
std::vector<ScenarioSpec> scenario_catalog(double budget);

/// Catalog row for `model_id` at `budget`; throws ConfigError if unknown.
ScenarioSpec catalog_entry(const std::string& model_id, double budget);

/// Empty iff the spec is internally consistent and matches its catalog row.
std::vector<std::string> check_scenario(const ScenarioSpec& spec);

std::string to_string(ObjectiveKind kind);
std::string to_string(PolicyKind kind);

}  // namespace psps
