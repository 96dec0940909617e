#include "psps/grid.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <set>

#include "psps/csv.hpp"
#include "psps/error.hpp"

namespace psps {

std::optional<std::size_t> Horizon::day_position(int day) const {
  const auto it = std::find(days.begin(), days.end(), day);
  if (it == days.end()) return std::nullopt;
  return static_cast<std::size_t>(it - days.begin());
}

double Bus::load(std::size_t day_pos, int period) const {
  if (day_pos >= demand.size()) return 0.0;
  const auto& row = demand[day_pos];
  if (period < 0 || static_cast<std::size_t>(period) >= row.size()) return 0.0;
  return row[static_cast<std::size_t>(period)];
}

double Bus::total_demand() const {
  double total = 0.0;
  for (const auto& row : demand) total = std::accumulate(row.begin(), row.end(), total);
  return total;
}

double Bus::group_fraction(const std::string& group) const {
  const auto it = group_fractions.find(group);
  return it == group_fractions.end() ? 0.0 : it->second;
}

double Bus::vulnerable_fraction(const std::string& index) const {
  const auto it = vuln_fraction.find(index);
  return it == vuln_fraction.end() ? 0.0 : it->second;
}

Network::Network(Horizon horizon, std::vector<Bus> buses, std::vector<Line> lines,
                 std::vector<Generator> generators, std::vector<GroupFamily> families)
    : horizon_(std::move(horizon)),
      buses_(std::move(buses)),
      lines_(std::move(lines)),
      generators_(std::move(generators)),
      families_(std::move(families)) {
  build_incidence();
}

void Network::build_incidence() {
  bus_lookup_.clear();
  line_lookup_.clear();
  for (std::size_t i = 0; i < buses_.size(); ++i) bus_lookup_.emplace(buses_[i].id, i);
  for (std::size_t i = 0; i < lines_.size(); ++i) line_lookup_.emplace(lines_[i].id, i);
  gens_at_.assign(buses_.size(), {});
  lines_to_.assign(buses_.size(), {});
  lines_from_.assign(buses_.size(), {});
  for (std::size_t g = 0; g < generators_.size(); ++g) {
    if (auto b = bus_index(generators_[g].bus)) gens_at_[*b].push_back(g);
  }
  for (std::size_t l = 0; l < lines_.size(); ++l) {
    if (auto b = bus_index(lines_[l].from_bus)) lines_from_[*b].push_back(l);
    if (auto b = bus_index(lines_[l].to_bus)) lines_to_[*b].push_back(l);
  }
}

std::optional<std::size_t> Network::bus_index(const std::string& id) const {
  const auto it = bus_lookup_.find(id);
  if (it == bus_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> Network::line_index(const std::string& id) const {
  const auto it = line_lookup_.find(id);
  if (it == line_lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> Network::all_groups() const {
  std::vector<std::string> out;
  for (const auto& family : families_) {
    for (const auto& g : family.groups) {
      if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
    }
  }
  return out;
}

double Network::total_demand() const {
  double total = 0.0;
  for (const auto& bus : buses_) total += bus.total_demand();
  return total;
}

std::vector<LatLon> Network::line_path(const Line& line) const {
  if (line.path.size() >= 2) return line.path;
  const auto from = bus_index(line.from_bus);
  const auto to = bus_index(line.to_bus);
  if (!from || !to) return {};
  return {buses_[*from].location, buses_[*to].location};
}

Network Network::with_buses(std::vector<Bus> buses) const {
  return Network(horizon_, std::move(buses), lines_, generators_, families_);
}

Network Network::with_families(std::vector<GroupFamily> families) const {
  return Network(horizon_, buses_, lines_, generators_, std::move(families));
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kFractionTol = 1e-6;
constexpr double kEndpointTol = 1e-6;

struct Collector {
  std::vector<Violation> out;
  void error(std::string entity, std::string rule) {
    out.push_back({Severity::error, std::move(entity), std::move(rule)});
  }
  void warning(std::string entity, std::string rule) {
    out.push_back({Severity::warning, std::move(entity), std::move(rule)});
  }
};

bool same_point(const LatLon& a, const LatLon& b) {
  return std::abs(a.lat - b.lat) <= kEndpointTol && std::abs(a.lon - b.lon) <= kEndpointTol;
}

void check_horizon(const Horizon& h, Collector& c) {
  if (h.days.empty()) c.error("horizon", "days must be nonempty");
  if (std::set<int>(h.days.begin(), h.days.end()).size() != h.days.size()) c.error("horizon", "duplicate day index");
  if (!std::is_sorted(h.days.begin(), h.days.end())) c.error("horizon", "days must be in ascending order");
  if (h.periods_per_day < 1) c.error("horizon", "periods_per_day must be >= 1");
  if (!(h.base_power > 0.0)) c.error("horizon", "base_power must be > 0");
}

void check_bus(const Network& net, const Bus& bus, Collector& c) {
  const std::string entity = "bus " + bus.id;
  const auto& h = net.horizon();
  if (bus.demand.size() != h.days.size()) {
    c.error(entity, "demand has " + std::to_string(bus.demand.size()) + " days, horizon has " +
                        std::to_string(h.days.size()));
  }
  for (std::size_t d = 0; d < bus.demand.size(); ++d) {
    if (static_cast<int>(bus.demand[d].size()) != h.periods_per_day) {
      c.error(entity, "demand day " + std::to_string(d) + " has " + std::to_string(bus.demand[d].size()) +
                          " periods, expected " + std::to_string(h.periods_per_day));
    }
    for (double v : bus.demand[d]) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        c.error(entity, "negative or non-finite demand " + format_number(v));
        break;
      }
    }
  }
  if (!(bus.population >= 0.0)) c.error(entity, "population must be >= 0");
  for (const auto& [group, f] : bus.group_fractions) {
    if (!(f >= 0.0 && f <= 1.0)) c.error(entity, "group fraction " + group + " = " + format_number(f) + " outside [0,1]");
  }
  for (const auto& [index, f] : bus.vuln_fraction) {
    if (!(f >= 0.0 && f <= 1.0)) c.error(entity, "vulnerability fraction " + index + " = " + format_number(f) + " outside [0,1]");
  }
  for (const auto& family : net.families()) {
    if (family.kind != FamilyKind::partition) continue;
    bool any = false;
    double sum = 0.0;
    for (const auto& g : family.groups) {
      const auto it = bus.group_fractions.find(g);
      if (it == bus.group_fractions.end()) continue;
      any = true;
      sum += it->second;
    }
    // Buses without people (or without demographic data yet) carry no partition.
    if (!any || (bus.population == 0.0 && sum == 0.0)) continue;
    if (sum > 1.0 + kFractionTol) {
      c.error(entity, "partition fractions sum " + format_number(sum) + " > 1+1e-6 (family " + family.name + ")");
    } else if (sum < 1.0 - kFractionTol) {
      c.error(entity, "partition fractions sum " + format_number(sum) + " < 1-1e-6 (family " + family.name + ")");
    }
  }
  for (const auto& [group, f] : bus.group_fractions) {
    bool declared = false;
    for (const auto& family : net.families()) {
      declared = declared || std::find(family.groups.begin(), family.groups.end(), group) != family.groups.end();
    }
    if (!declared && !net.families().empty()) c.error(entity, "group " + group + " is not in any declared family");
  }
}

void check_line(const Network& net, const Line& line, Collector& c) {
  const std::string entity = "line " + line.id;
  const auto from = net.bus_index(line.from_bus);
  const auto to = net.bus_index(line.to_bus);
  if (!from) c.error(entity, "dangling bus reference: from_bus " + line.from_bus);
  if (!to) c.error(entity, "dangling bus reference: to_bus " + line.to_bus);
  if (line.from_bus == line.to_bus) c.error(entity, "from_bus equals to_bus");
  if (!(line.flow_limit > 0.0)) c.error(entity, "flow_limit must be > 0");
  if (!(line.angle_min < line.angle_max)) c.error(entity, "angle_min must be < angle_max");
  if (!(line.length >= 0.0)) c.error(entity, "length must be >= 0");
  if (!(line.underground_cost >= 0.0)) c.error(entity, "underground_cost must be >= 0");
  if (!std::isfinite(line.susceptance)) c.error(entity, "susceptance must be finite");
  if (line.path.size() == 1) c.error(entity, "path needs at least two vertices");
  if (line.path.size() >= 2 && from && to) {
    if (!same_point(line.path.front(), net.buses()[*from].location)) {
      c.error(entity, "path start does not coincide with from_bus location");
    }
    if (!same_point(line.path.back(), net.buses()[*to].location)) {
      c.error(entity, "path end does not coincide with to_bus location");
    }
  }
}

bool connected(const Network& net) {
  const std::size_t n = net.buses().size();
  if (n <= 1) return true;
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<std::size_t(std::size_t)> root = [&](std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (const auto& line : net.lines()) {
    const auto a = net.bus_index(line.from_bus);
    const auto b = net.bus_index(line.to_bus);
    if (a && b) parent[root(*a)] = root(*b);
  }
  const std::size_t r = root(0);
  for (std::size_t i = 1; i < n; ++i) {
    if (root(i) != r) return false;
  }
  return true;
}

template <typename T>
void check_unique_ids(const std::vector<T>& items, const std::string& kind, Collector& c) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (item.id.empty()) c.error(kind, "empty id");
    if (item.id.find_first_of(" \t\r\n") != std::string::npos) c.error(kind + " " + item.id, "id contains whitespace");
    if (!seen.insert(item.id).second) c.error(kind + " " + item.id, "duplicate id");
  }
}

}  // namespace

std::vector<Violation> validate_network(const Network& network) {
  Collector c;
  check_horizon(network.horizon(), c);
  check_unique_ids(network.buses(), "bus", c);
  check_unique_ids(network.lines(), "line", c);
  check_unique_ids(network.generators(), "generator", c);
  for (const auto& bus : network.buses()) check_bus(network, bus, c);
  for (const auto& line : network.lines()) check_line(network, line, c);
  for (const auto& gen : network.generators()) {
    const std::string entity = "generator " + gen.id;
    if (!network.bus_index(gen.bus)) c.error(entity, "dangling bus reference: bus " + gen.bus);
    if (!(gen.p_min >= 0.0)) c.error(entity, "p_min must be >= 0");
    if (!(gen.p_min <= gen.p_max)) c.error(entity, "p_min must be <= p_max");
  }
  std::set<std::string> family_names;
  for (const auto& family : network.families()) {
    if (!family_names.insert(family.name).second) c.error("family " + family.name, "duplicate family name");
    if (family.groups.empty()) c.error("family " + family.name, "family has no groups");
  }
  if (network.buses().empty()) c.error("network", "no buses");
  if (!connected(network)) c.warning("network", "network is disconnected");
  return c.out;
}

bool has_errors(const std::vector<Violation>& violations) {
  return std::any_of(violations.begin(), violations.end(),
                     [](const Violation& v) { return v.severity == Severity::error; });
}

// ---------------------------------------------------------------------------

namespace {

struct CatalogRow {
  const char* id;
  ObjectiveKind objective;
  PolicyKind policy;
  const char* index;
};

constexpr CatalogRow kCatalog[] = {
    {"BL-M0", ObjectiveKind::total_load_shed, PolicyKind::none, ""},
    {"BL-M1", ObjectiveKind::total_load_shed, PolicyKind::none, ""},
    {"M2", ObjectiveKind::total_load_shed, PolicyKind::budget, "CEJST"},
    {"M3", ObjectiveKind::total_load_shed, PolicyKind::load_shed_reduction, "CEJST"},
    {"M4", ObjectiveKind::total_load_shed, PolicyKind::budget, "SVI"},
    {"M5", ObjectiveKind::total_load_shed, PolicyKind::load_shed_reduction, "SVI"},
    {"E-M6", ObjectiveKind::max_group_percent_shed, PolicyKind::none, ""},
    {"E-M7", ObjectiveKind::max_group_percent_shed, PolicyKind::budget, "CEJST"},
    {"E-M8", ObjectiveKind::max_group_percent_shed, PolicyKind::load_shed_reduction, "CEJST"},
    {"E-M9", ObjectiveKind::max_group_percent_shed, PolicyKind::budget, "SVI"},
    {"E-M10", ObjectiveKind::max_group_percent_shed, PolicyKind::load_shed_reduction, "SVI"},
};

const CatalogRow* find_row(const std::string& id) {
  for (const auto& row : kCatalog) {
    if (id == row.id) return &row;
  }
  return nullptr;
}

ScenarioSpec from_row(const CatalogRow& row, double budget) {
  ScenarioSpec spec;
  spec.model_id = row.id;
  spec.objective = row.objective;
  spec.policy = row.policy;
  spec.vulnerability_index = row.index;
  spec.budget = std::string_view(row.id) == "BL-M0" ? 0.0 : budget;
  return spec;
}

}  // namespace

std::vector<ScenarioSpec> scenario_catalog(double budget) {
  if (!(budget >= 0.0)) throw ConfigError("budget must be >= 0");
  std::vector<ScenarioSpec> out;
  for (const auto& row : kCatalog) out.push_back(from_row(row, budget));
  return out;
}

ScenarioSpec catalog_entry(const std::string& model_id, double budget) {
  if (!(budget >= 0.0)) throw ConfigError("budget must be >= 0");
  const auto* row = find_row(model_id);
  if (!row) throw ConfigError("unknown model id '" + model_id + "'");
  return from_row(*row, budget);
}

std::vector<std::string> check_scenario(const ScenarioSpec& spec) {
  std::vector<std::string> problems;
  if (!(spec.budget >= 0.0)) problems.push_back("budget must be >= 0");
  if (spec.policy != PolicyKind::none && spec.vulnerability_index.empty()) {
    problems.push_back("policy constraint requires a vulnerability index");
  }
  if (!(spec.big_m_upper > 0.0) || !(spec.big_m_lower < 0.0)) problems.push_back("big-M bounds must straddle 0");
  if (!(spec.mip_gap >= 0.0)) problems.push_back("mip_gap must be >= 0");
  if (!(spec.time_limit > 0.0)) problems.push_back("time_limit must be > 0");
  if (!(spec.policy_fraction >= 0.0 && spec.policy_fraction <= 1.0)) problems.push_back("policy_fraction outside [0,1]");
  const auto* row = find_row(spec.model_id);
  if (!row) {
    problems.push_back("unknown model id '" + spec.model_id + "'");
    return problems;
  }
  if (row->objective != spec.objective) problems.push_back(spec.model_id + ": objective does not match catalog");
  if (row->policy != spec.policy) problems.push_back(spec.model_id + ": policy constraint does not match catalog");
  if (spec.vulnerability_index != row->index) {
    problems.push_back(spec.model_id + ": vulnerability index '" + spec.vulnerability_index +
                       "' does not match catalog '" + row->index + "'");
  }
  if (spec.model_id == "BL-M0" && spec.budget != 0.0) problems.push_back("BL-M0 must have budget 0");
  return problems;
}

std::string to_string(ObjectiveKind kind) {
  return kind == ObjectiveKind::total_load_shed ? "total-load-shed" : "max-group-percent-shed";
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::none: return "none";
    case PolicyKind::budget: return "budget";
    case PolicyKind::load_shed_reduction: return "load-shed-reduction";
  }
  return "none";
}

}  // namespace psps
