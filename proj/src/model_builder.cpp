#include "psps/model_builder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "psps/csv.hpp"
#include "psps/error.hpp"

namespace psps {

namespace {

struct Positions {
  std::vector<std::size_t> risk_line;  // network line -> profile line position
  std::vector<std::size_t> risk_day;   // horizon day pos -> profile day position
};

Positions align(const Network& network, const RiskProfile& risk) {
  Positions p;
  for (const auto& line : network.lines()) {
    const auto pos = risk.line_position(line.id);
    if (!pos) throw BuildError("missing risk category for line " + line.id);
    p.risk_line.push_back(*pos);
  }
  for (int d : network.horizon().days) {
    const auto pos = risk.day_position(d);
    if (!pos) throw BuildError("missing risk category for day " + std::to_string(d));
    p.risk_day.push_back(*pos);
  }
  return p;
}

bool switchable(const RiskProfile& risk, const Positions& p, std::size_t dp, std::size_t l) {
  return risk.is_switchable(p.risk_day[dp], p.risk_line[l]);
}

RiskCategory category(const RiskProfile& risk, const Positions& p, std::size_t dp, std::size_t l) {
  return risk.category[p.risk_day[dp]][p.risk_line[l]];
}

bool in_harden_set(const RiskProfile& risk, const Positions& p, std::size_t l) { return risk.harden[p.risk_line[l]]; }

std::string row_name(const char* tag, const std::string& entity, int day, int period) {
  return std::string(tag) + "_" + entity + "_" + std::to_string(day) + "_" + std::to_string(period);
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') c = '_';
  }
  return out;
}

void require_valid(const Network& network) {
  const auto violations = validate_network(network);
  for (const auto& v : violations) {
    if (v.severity == Severity::error) throw BuildError("invalid network: " + v.entity + ": " + v.rule);
  }
}

}  // namespace

double group_demand(const Network& network, const std::string& group) {
  double total = 0.0;
  for (const auto& bus : network.buses()) total += bus.group_fraction(group) * bus.total_demand();
  return total;
}

std::vector<std::string> required_indices(const ScenarioSpec& spec) {
  if (spec.policy == PolicyKind::none || spec.vulnerability_index.empty()) return {};
  return {spec.vulnerability_index};
}

MilpModel build_dcots(const Network& network, const RiskProfile& risk, const ScenarioSpec& spec) {
  require_valid(network);
  const Positions pos = align(network, risk);
  const auto& h = network.horizon();
  const auto& buses = network.buses();
  const auto& lines = network.lines();
  const auto& gens = network.generators();

  MilpModel m;
  std::ostringstream id;
  id << spec.model_id << "@B" << format_number(spec.budget);
  m.scenario_id = id.str();
  m.metadata["model_id"] = spec.model_id;
  m.metadata["objective"] = to_string(spec.objective);
  m.metadata["policy"] = to_string(spec.policy);
  m.metadata["vulnerability_index"] = spec.vulnerability_index;
  m.metadata["budget"] = spec.budget;
  m.metadata["total_demand"] = network.total_demand();
  m.metadata["days"] = h.days;
  m.metadata["periods_per_day"] = h.periods_per_day;

  // Continuous variables, per (day, period).
  for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
    const int d = h.days[dp];
    for (int t = 1; t <= h.periods_per_day; ++t) {
      for (const auto& g : gens) m.vars.add({names::gen(g.id, d, t), g.p_min, g.p_max, false, "2a"});
      for (const auto& b : buses) m.vars.add({names::theta(b.id, d, t), -kInf, kInf, false, ""});
      for (const auto& b : buses) m.vars.add({names::shed(b.id, d, t), 0.0, b.load(dp, t - 1), false, "2b"});
      for (std::size_t l = 0; l < lines.size(); ++l) {
        const auto& line = lines[l];
        if (switchable(risk, pos, dp, l)) {
          m.vars.add({names::flow(line.id, d, t), -kInf, kInf, false, ""});
        } else {
          m.vars.add({names::flow(line.id, d, t), -line.flow_limit, line.flow_limit, false, "2d"});
        }
      }
    }
  }
  // Binaries: energization for switchable (line, day), undergrounding for the harden set.
  for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
    for (std::size_t l = 0; l < lines.size(); ++l) {
      if (switchable(risk, pos, dp, l)) m.vars.add({names::z(lines[l].id, h.days[dp]), 0.0, 1.0, true, ""});
    }
  }
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (!in_harden_set(risk, pos, l)) continue;
    const bool affordable = lines[l].underground_cost <= spec.budget;
    m.vars.add({names::y(lines[l].id), 0.0, affordable ? 1.0 : 0.0, true, affordable ? "" : "6"});
  }

  const double m_lo = spec.big_m_lower;
  const double m_hi = spec.big_m_upper;
  for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
    const int d = h.days[dp];
    for (int t = 1; t <= h.periods_per_day; ++t) {
      for (std::size_t l = 0; l < lines.size(); ++l) {
        const auto& line = lines[l];
        const int f = m.vars.at(names::flow(line.id, d, t));
        const int th_fr = m.vars.at(names::theta(line.from_bus, d, t));
        const int th_to = m.vars.at(names::theta(line.to_bus, d, t));
        const double b = line.susceptance;
        const double abs_b = std::abs(b);
        if (switchable(risk, pos, dp, l)) {
          const int z = m.vars.at(names::z(line.id, d));
          m.add_row({row_name("2c_lo", line.id, d, t), "2c", RowSense::ge, 0.0, {{f, 1.0}, {z, line.flow_limit}}});
          m.add_row({row_name("2c_up", line.id, d, t), "2c", RowSense::le, 0.0, {{f, 1.0}, {z, -line.flow_limit}}});
          m.add_row({row_name("2f", line.id, d, t), "2f", RowSense::ge, m_lo,
                     {{th_fr, 1.0}, {th_to, -1.0}, {z, m_lo - line.angle_min}}});
          m.add_row({row_name("2g", line.id, d, t), "2g", RowSense::le, m_hi,
                     {{th_fr, 1.0}, {th_to, -1.0}, {z, m_hi - line.angle_max}}});
          std::vector<Term> flow_lo{{f, 1.0}};
          std::vector<Term> flow_hi{{f, 1.0}};
          if (b != 0.0) {
            flow_lo.insert(flow_lo.end(), {{th_fr, b}, {th_to, -b}, {z, abs_b * m_lo}});
            flow_hi.insert(flow_hi.end(), {{th_fr, b}, {th_to, -b}, {z, abs_b * m_hi}});
          }
          m.add_row({row_name("2h", line.id, d, t), "2h", RowSense::ge, abs_b * m_lo, std::move(flow_lo)});
          m.add_row({row_name("2i", line.id, d, t), "2i", RowSense::le, abs_b * m_hi, std::move(flow_hi)});
        } else {
          m.add_row({row_name("2e_lo", line.id, d, t), "2e", RowSense::ge, line.angle_min, {{th_fr, 1.0}, {th_to, -1.0}}});
          m.add_row({row_name("2e_up", line.id, d, t), "2e", RowSense::le, line.angle_max, {{th_fr, 1.0}, {th_to, -1.0}}});
          std::vector<Term> terms{{f, 1.0}};
          if (b != 0.0) terms.insert(terms.end(), {{th_fr, b}, {th_to, -b}});
          m.add_row({row_name("2j", line.id, d, t), "2j", RowSense::eq, 0.0, std::move(terms)});
        }
      }
      for (std::size_t n = 0; n < buses.size(); ++n) {
        std::vector<Term> terms;
        for (auto l : network.lines_from(n)) terms.push_back({m.vars.at(names::flow(lines[l].id, d, t)), 1.0});
        for (auto l : network.lines_to(n)) terms.push_back({m.vars.at(names::flow(lines[l].id, d, t)), -1.0});
        for (auto g : network.generators_at(n)) terms.push_back({m.vars.at(names::gen(gens[g].id, d, t)), -1.0});
        terms.push_back({m.vars.at(names::shed(buses[n].id, d, t)), -1.0});
        m.add_row({row_name("bal", buses[n].id, d, t), "balance", RowSense::eq, -buses[n].load(dp, t - 1),
                   std::move(terms)});
      }
    }
  }
  return m;
}

void add_hardening(MilpModel& m, const Network& network, const RiskProfile& risk) {
  const Positions pos = align(network, risk);
  const auto& h = network.horizon();
  const auto& lines = network.lines();
  for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
    const int d = h.days[dp];
    for (std::size_t l = 0; l < lines.size(); ++l) {
      const auto cat = category(risk, pos, dp, l);
      if (cat == RiskCategory::low) continue;
      const int z = m.vars.at(names::z(lines[l].id, d));
      const int y = m.vars.at(names::y(lines[l].id));
      const std::string suffix = lines[l].id + "_" + std::to_string(d);
      if (cat == RiskCategory::high) {
        m.add_row({"4_" + suffix, "4", RowSense::eq, 0.0, {{z, 1.0}, {y, -1.0}}});
      } else {
        m.add_row({"5_" + suffix, "5", RowSense::le, 0.0, {{y, 1.0}, {z, -1.0}}});
      }
    }
  }
}

void add_budget(MilpModel& m, const Network& network, const RiskProfile& risk, const ScenarioSpec& spec) {
  if (!(spec.budget >= 0.0)) throw BuildError("budget must be >= 0");
  const Positions pos = align(network, risk);
  Row row{"6_budget", "6", RowSense::le, spec.budget, {}};
  const auto& lines = network.lines();
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (!in_harden_set(risk, pos, l)) continue;
    if (lines[l].underground_cost != 0.0) row.terms.push_back({m.vars.at(names::y(lines[l].id)), lines[l].underground_cost});
  }
  m.add_row(std::move(row));
}

void add_risk_cap(MilpModel& m, const Network& network, const RiskProfile& risk) {
  const Positions pos = align(network, risk);
  const auto& h = network.horizon();
  const auto& lines = network.lines();
  for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
    const int d = h.days[dp];
    Row row{"7_" + std::to_string(d), "7", RowSense::le, risk.thresholds.psps, {}};
    for (std::size_t l = 0; l < lines.size(); ++l) {
      const double r = risk.risk[pos.risk_day[dp]][pos.risk_line[l]];
      if (!(r > 0.0)) continue;
      if (switchable(risk, pos, dp, l)) {
        row.terms.push_back({m.vars.at(names::z(lines[l].id, d)), r});
      } else {
        row.rhs -= r;
      }
      if (in_harden_set(risk, pos, l)) row.terms.push_back({m.vars.at(names::y(lines[l].id)), -r});
    }
    m.add_row(std::move(row));
  }
}

void add_policy_budget(MilpModel& m, const Network& network, const RiskProfile& risk, const ScenarioSpec& spec) {
  if (spec.vulnerability_index.empty()) throw BuildError("policy budget constraint needs a vulnerability index");
  const Positions pos = align(network, risk);
  const auto& lines = network.lines();
  Row row{"9_vuln_budget", "9", RowSense::ge, spec.policy_fraction * spec.budget, {}};
  for (std::size_t l = 0; l < lines.size(); ++l) {
    if (!in_harden_set(risk, pos, l)) continue;
    const auto& line = lines[l];
    const auto& fr = network.buses()[*network.bus_index(line.from_bus)];
    const auto& to = network.buses()[*network.bus_index(line.to_bus)];
    const double coef = 0.5 * line.underground_cost *
                        (to.vulnerable_fraction(spec.vulnerability_index) + fr.vulnerable_fraction(spec.vulnerability_index));
    if (coef != 0.0) row.terms.push_back({m.vars.at(names::y(line.id)), coef});
  }
  m.add_row(std::move(row));
}

void add_policy_loadshed(MilpModel& m, const Network& network, const BaselineReference& baseline,
                         const ScenarioSpec& spec) {
  const auto& index = spec.vulnerability_index;
  if (index.empty()) throw BuildError("load-shed reduction constraint needs a vulnerability index");
  const auto it = baseline.vuln_shed.find(index);
  if (it == baseline.vuln_shed.end()) throw BuildError("baseline missing vulnerable shed for index " + index);
  if (!(baseline.total_shed > 0.0)) throw BuildError("no reduction to allocate: baseline total shed is 0");
  const double frac = spec.policy_fraction;
  const auto& h = network.horizon();
  Row share{"10_reduction", "10", RowSense::ge, frac * baseline.total_shed - it->second, {}};
  Row cap{"10_no_worse", "10aux", RowSense::le, baseline.total_shed, {}};
  for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
    for (int t = 1; t <= h.periods_per_day; ++t) {
      for (const auto& bus : network.buses()) {
        const int ps = m.vars.at(names::shed(bus.id, h.days[dp], t));
        const double coef = frac - bus.vulnerable_fraction(index);
        if (coef != 0.0) share.terms.push_back({ps, coef});
        cap.terms.push_back({ps, 1.0});
      }
    }
  }
  m.metadata["baseline"] = {{"total_shed", baseline.total_shed}, {"vuln_shed", baseline.vuln_shed}};
  m.add_row(std::move(share));
  m.add_row(std::move(cap));
}

void add_equity(MilpModel& m, const Network& network, const std::vector<std::string>& groups) {
  const auto& h = network.horizon();
  struct Included {
    std::string group;
    double demand;
  };
  std::vector<Included> included;
  nlohmann::json excluded = nlohmann::json::array();
  for (const auto& g : groups) {
    const double demand = group_demand(network, g);
    if (demand > 0.0) {
      included.push_back({g, demand});
    } else {
      excluded.push_back(g);
    }
  }
  m.metadata["excluded_groups"] = excluded;
  if (included.empty()) throw BuildError("equity objective: every group has zero demand");
  const int alpha = m.vars.add({names::alpha, 0.0, 1.0, false, ""});
  nlohmann::json meta = nlohmann::json::array();
  for (std::size_t k = 0; k < included.size(); ++k) {
    const auto& [group, demand] = included[k];
    Row row{"11_" + std::to_string(k + 1) + "_" + sanitize(group), "11", RowSense::le, 0.0, {}};
    for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
      for (int t = 1; t <= h.periods_per_day; ++t) {
        for (const auto& bus : network.buses()) {
          const double gamma = bus.group_fraction(group);
          if (gamma != 0.0) row.terms.push_back({m.vars.at(names::shed(bus.id, h.days[dp], t)), gamma});
        }
      }
    }
    row.terms.push_back({alpha, -demand});
    meta.push_back({{"group", group}, {"demand", demand}, {"row", row.name}});
    m.add_row(std::move(row));
  }
  m.metadata["equity_groups"] = meta;
}

void set_objective(MilpModel& m, const Network& network, const ScenarioSpec& spec) {
  m.objective.clear();
  m.objective_offset = 0.0;
  if (spec.objective == ObjectiveKind::max_group_percent_shed) {
    const int alpha = m.vars.find(names::alpha);
    if (alpha < 0) throw BuildError("equity objective requires the equity rows (alpha is not defined)");
    m.objective.push_back({alpha, 1.0});
    return;
  }
  const double total = network.total_demand();
  if (!(total > 0.0)) throw BuildError("total demand is zero; load shed fraction is undefined");
  for (std::size_t j = 0; j < m.vars.size(); ++j) {
    if (m.vars[j].tag == "2b") m.objective.push_back({static_cast<int>(j), 1.0 / total});
  }
}

MilpModel build_scenario(const Network& network, const RiskProfile& risk, const ScenarioSpec& spec,
                         const std::optional<BaselineReference>& baseline, const BuildOptions& options) {
  const auto problems = check_scenario(spec);
  if (!problems.empty()) throw ConfigError("scenario " + spec.model_id + ": " + problems.front());
  if (!spec.vulnerability_index.empty()) {
    const bool present = std::any_of(network.buses().begin(), network.buses().end(), [&](const Bus& b) {
      return b.vuln_fraction.contains(spec.vulnerability_index);
    });
    if (!present) throw BuildError("no bus carries vulnerability fractions for index " + spec.vulnerability_index);
  }
  MilpModel m = build_dcots(network, risk, spec);
  add_hardening(m, network, risk);
  add_budget(m, network, risk, spec);
  add_risk_cap(m, network, risk);
  if (spec.policy == PolicyKind::budget) {
    add_policy_budget(m, network, risk, spec);
  } else if (spec.policy == PolicyKind::load_shed_reduction) {
    if (!baseline) throw BuildError(spec.model_id + " needs the BL-M0 baseline reference");
    add_policy_loadshed(m, network, *baseline, spec);
  }
  if (spec.objective == ObjectiveKind::max_group_percent_shed) {
    add_equity(m, network, options.groups.empty() ? network.all_groups() : options.groups);
  }
  set_objective(m, network, spec);
  return m;
}

}  // namespace psps
