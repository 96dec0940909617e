#pragma once

// Test fixtures: tiny hand-built networks, a seeded random generator and
// independent checks computed from network data rather than model rows.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "psps/analysis.hpp"
#include "psps/grid.hpp"
#include "psps/milp.hpp"
#include "psps/model_builder.hpp"
#include "psps/risk.hpp"
#include "psps/solve.hpp"

namespace psps::testing {

inline constexpr double kHighRisk = 2e6;
inline constexpr double kMediumRisk = 10.0;

inline Horizon horizon(int days, int periods) {
  Horizon h;
  for (int d = 1; d <= days; ++d) h.days.push_back(d);
  h.periods_per_day = periods;
  return h;
}

/// Bus with the same load in every (day, period).
inline Bus flat_bus(const std::string& id, const Horizon& h, double load, double population = 0.0,
                    std::map<std::string, double> groups = {}, std::map<std::string, double> vuln = {}) {
  Bus b;
  b.id = id;
  b.demand.assign(h.days.size(), std::vector<double>(static_cast<std::size_t>(h.periods_per_day), load));
  b.population = population;
  b.group_fractions = std::move(groups);
  b.vuln_fraction = std::move(vuln);
  return b;
}

inline Line make_line(const std::string& id, const std::string& from, const std::string& to, double limit = 10.0,
                      double susceptance = -10.0, double cost = 1.0) {
  Line l;
  l.id = id;
  l.from_bus = from;
  l.to_bus = to;
  l.flow_limit = limit;
  l.susceptance = susceptance;
  l.underground_cost = cost;
  l.length = cost / kUndergroundCostPerMile;
  return l;
}

inline Generator make_gen(const std::string& id, const std::string& bus, double p_max, double p_min = 0.0) {
  return {id, bus, p_min, p_max};
}

inline GroupFamily partition(const std::string& name, std::vector<std::string> groups) {
  return {name, FamilyKind::partition, std::move(groups)};
}

/// Profile with the given (line, day) risk values; everything else 0.
inline RiskProfile risk_profile(const Network& net, const std::map<std::pair<std::string, int>, double>& values,
                                double r_psps = 6e8) {
  std::vector<std::string> ids;
  for (const auto& l : net.lines()) ids.push_back(l.id);
  std::vector<std::vector<double>> risk;
  for (int d : net.horizon().days) {
    std::vector<double> row;
    for (const auto& id : ids) {
      const auto it = values.find({id, d});
      row.push_back(it == values.end() ? 0.0 : it->second);
    }
    risk.push_back(std::move(row));
  }
  RiskThresholds t;
  t.psps = r_psps;
  return make_risk_profile(ids, net.horizon().days, std::move(risk), t);
}

inline RiskProfile quiet_profile(const Network& net) { return risk_profile(net, {}); }

// ---------------------------------------------------------------------------
// Relaxations used by the binding checks.

inline MilpModel drop_rows(const MilpModel& m, const std::string& tag) {
  MilpModel out = m;
  out.rows.erase(std::remove_if(out.rows.begin(), out.rows.end(), [&](const Row& r) { return r.tag == tag; }),
                 out.rows.end());
  return out;
}

inline MilpModel drop_row(const MilpModel& m, const std::string& name) {
  MilpModel out = m;
  out.rows.erase(std::remove_if(out.rows.begin(), out.rows.end(), [&](const Row& r) { return r.name == name; }),
                 out.rows.end());
  return out;
}

/// Loosens every bound tagged `tag`: upper bounds to +inf, or, with
/// `lower_mirror`, lower bounds to -ub.
inline MilpModel relax_bounds(const MilpModel& m, const std::string& tag, bool lower_mirror = false) {
  MilpModel out = m;
  for (std::size_t j = 0; j < out.vars.size(); ++j) {
    auto& v = out.vars[j];
    if (v.tag != tag) continue;
    if (lower_mirror) {
      v.lb = -v.ub;
    } else if (v.integer) {
      v.ub = 1.0;
    } else {
      v.lb = -kInf;
      v.ub = kInf;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Independent checks on raw solution values.

inline double raw(const MilpModel& m, const Solution& s, const std::string& name, double fallback = 0.0) {
  const int j = m.vars.find(name);
  return j < 0 ? fallback : s.values[static_cast<std::size_t>(j)];
}

/// Largest |sum out f - sum in f - sum pg - ps + load| over buses and periods.
inline double max_balance_residual(const Network& net, const MilpModel& m, const Solution& s) {
  const auto& h = net.horizon();
  double worst = 0.0;
  for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
    const int d = h.days[dp];
    for (int t = 1; t <= h.periods_per_day; ++t) {
      for (const auto& bus : net.buses()) {
        double r = bus.load(dp, t - 1) - raw(m, s, names::shed(bus.id, d, t));
        for (const auto& line : net.lines()) {
          const double f = raw(m, s, names::flow(line.id, d, t));
          if (line.from_bus == bus.id) r += f;
          if (line.to_bus == bus.id) r -= f;
        }
        for (const auto& g : net.generators()) {
          if (g.bus == bus.id) r -= raw(m, s, names::gen(g.id, d, t));
        }
        worst = std::max(worst, std::abs(r));
      }
    }
  }
  return worst;
}

struct PhysicsReport {
  double worst_off_flow = 0.0;     // |f| on de-energized (line, day)
  double worst_flow_law = 0.0;     // |f + b (th_fr - th_to)| on energized lines
  double worst_angle_excess = 0.0; // angle-limit violation on energized lines
  double worst_limit_excess = 0.0; // |f| beyond the flow limit
};

/// Substitutes the binaries and checks the switched DC flow logic directly.
inline PhysicsReport check_physics(const Network& net, const MilpModel& m, const Solution& s) {
  PhysicsReport rep;
  const auto& h = net.horizon();
  for (int d : h.days) {
    for (const auto& line : net.lines()) {
      const double z = std::round(raw(m, s, names::z(line.id, d), 1.0));
      for (int t = 1; t <= h.periods_per_day; ++t) {
        const double f = raw(m, s, names::flow(line.id, d, t));
        const double dth = raw(m, s, names::theta(line.from_bus, d, t)) - raw(m, s, names::theta(line.to_bus, d, t));
        if (z < 0.5) {
          rep.worst_off_flow = std::max(rep.worst_off_flow, std::abs(f));
        } else {
          rep.worst_flow_law = std::max(rep.worst_flow_law, std::abs(f + line.susceptance * dth));
          rep.worst_angle_excess =
              std::max({rep.worst_angle_excess, line.angle_min - dth, dth - line.angle_max});
        }
        rep.worst_limit_excess = std::max(rep.worst_limit_excess, std::abs(f) - line.flow_limit);
      }
    }
  }
  return rep;
}

/// Total shed and vulnerable-weighted shed from raw ps values.
inline std::pair<double, double> shed_totals(const Network& net, const MilpModel& m, const Solution& s,
                                             const std::string& index) {
  double total = 0.0;
  double vuln = 0.0;
  const auto& h = net.horizon();
  for (const auto& bus : net.buses()) {
    for (int d : h.days) {
      for (int t = 1; t <= h.periods_per_day; ++t) {
        const double v = raw(m, s, names::shed(bus.id, d, t));
        total += v;
        vuln += bus.vulnerable_fraction(index) * v;
      }
    }
  }
  return {total, vuln};
}

/// Vulnerable-attributed undergrounding spend from raw y values.
inline double vulnerable_spend(const Network& net, const MilpModel& m, const Solution& s, const std::string& index) {
  double spend = 0.0;
  for (const auto& line : net.lines()) {
    const double y = raw(m, s, names::y(line.id));
    const auto& a = net.buses()[*net.bus_index(line.from_bus)];
    const auto& b = net.buses()[*net.bus_index(line.to_bus)];
    spend += y * line.underground_cost / 2.0 * (a.vulnerable_fraction(index) + b.vulnerable_fraction(index));
  }
  return spend;
}

// ---------------------------------------------------------------------------
// Random fixtures.

struct RandomFixture {
  Network network;
  RiskProfile risk;
  double budget = 0.0;
  std::uint32_t seed = 0;
};

/// Connected 3-6 bus network, 3-8 lines, 1-2 days, 2-4 periods. Generation
/// is short of peak demand so the baseline always sheds; every bus carries
/// CEJST/SVI fractions of at least 0.45 and a two-group partition. At most
/// `max_free_binaries` switching/undergrounding binaries remain free at
/// the returned budget, and at least one harden line is affordable.
inline RandomFixture random_fixture(std::uint32_t seed, int max_free_binaries = 10) {
  std::mt19937 rng(seed);
  auto uni = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
  auto pick = [&](int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng); };

  const int n_bus = pick(3, 6);
  const int n_days = pick(1, 2);
  const int n_periods = pick(2, 4);
  const Horizon h = horizon(n_days, n_periods);

  std::vector<Bus> buses;
  double peak = 0.0;
  for (int i = 0; i < n_bus; ++i) {
    Bus b;
    b.id = "N" + std::to_string(i + 1);
    const double base = i == 0 ? 0.0 : uni(0.2, 1.0);
    for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
      std::vector<double> row;
      for (int t = 0; t < n_periods; ++t) row.push_back(std::round(base * uni(0.8, 1.2) * 1000.0) / 1000.0);
      b.demand.push_back(std::move(row));
    }
    b.population = i == 0 ? 0.0 : std::round(uni(500.0, 5000.0));
    if (b.population > 0.0) {
      const double a = std::round(uni(0.1, 0.9) * 100.0) / 100.0;
      b.group_fractions = {{"GroupA", a}, {"GroupB", 1.0 - a}};
      b.vuln_fraction = {{"CEJST", std::round(uni(0.45, 1.0) * 100.0) / 100.0},
                         {"SVI", std::round(uni(0.45, 1.0) * 100.0) / 100.0}};
    } else {
      b.vuln_fraction = {{"CEJST", 0.5}, {"SVI", 0.5}};
    }
    buses.push_back(std::move(b));
  }
  for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
    for (int t = 0; t < n_periods; ++t) {
      double total = 0.0;
      for (const auto& b : buses) total += b.demand[dp][static_cast<std::size_t>(t)];
      peak = std::max(peak, total);
    }
  }

  // Spanning tree plus random extra edges.
  std::vector<Line> lines;
  std::set<std::pair<int, int>> used;
  auto add_line = [&](int a, int b) {
    Line l;
    l.id = "E" + std::to_string(lines.size() + 1);
    l.from_bus = buses[static_cast<std::size_t>(a)].id;
    l.to_bus = buses[static_cast<std::size_t>(b)].id;
    l.susceptance = -std::round(uni(5.0, 20.0));
    l.flow_limit = std::round(uni(0.3, 1.5) * 100.0) / 100.0;
    l.underground_cost = std::round(uni(1.0, 4.0));
    l.length = l.underground_cost / kUndergroundCostPerMile;
    used.insert({std::min(a, b), std::max(a, b)});
    lines.push_back(std::move(l));
  };
  for (int i = 1; i < n_bus; ++i) add_line(pick(0, i - 1), i);
  const int max_lines = std::min(8, n_bus * (n_bus - 1) / 2);
  const int target = pick(std::max(3, n_bus - 1), max_lines);
  int guard = 0;
  while (static_cast<int>(lines.size()) < target && guard++ < 100) {
    const int a = pick(0, n_bus - 1);
    const int b = pick(0, n_bus - 1);
    if (a == b || used.count({std::min(a, b), std::max(a, b)})) continue;
    add_line(a, b);
  }

  std::vector<Generator> gens;
  gens.push_back(make_gen("G1", buses[0].id, std::round(peak * uni(0.75, 0.9) * 100.0) / 100.0));
  if (n_bus > 3 && pick(0, 1) == 1) {
    gens.push_back(make_gen("G2", buses[static_cast<std::size_t>(n_bus - 1)].id, std::round(uni(0.1, 0.3) * 100.0) / 100.0));
  }

  Network net(h, std::move(buses), std::move(lines), std::move(gens), {partition("race", {"GroupA", "GroupB"})});

  // Risk categories within the binary budget.
  std::vector<std::vector<double>> risk(h.days.size(), std::vector<double>(net.lines().size(), 0.0));
  int switch_count = 0;
  std::set<std::size_t> harden;
  for (std::size_t l = 0; l < net.lines().size(); ++l) {
    for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
      const int roll = pick(0, 9);
      const int extra = 1 + (harden.count(l) ? 0 : 1);
      if (roll < 5 || switch_count + extra > max_free_binaries) continue;
      risk[dp][l] = roll < 8 ? std::round(uni(2.0, 9e5)) : std::round(uni(2e6, 4e8));
      switch_count += extra;
      harden.insert(l);
    }
  }
  if (harden.empty()) {
    risk[0][0] = 3e6;
    harden.insert(0);
  }
  double max_day = 0.0;
  for (const auto& day : risk) {
    double s = 0.0;
    for (double v : day) s += v;
    max_day = std::max(max_day, s);
  }
  RiskThresholds thr;
  thr.psps = std::round(max_day * uni(0.3, 0.8));
  std::vector<std::string> ids;
  for (const auto& l : net.lines()) ids.push_back(l.id);
  RandomFixture f;
  f.seed = seed;
  f.risk = make_risk_profile(ids, h.days, std::move(risk), thr);
  double cheapest = kInf;
  for (std::size_t l : harden) cheapest = std::min(cheapest, net.lines()[l].underground_cost);
  f.budget = cheapest + std::round(uni(0.0, 3.0));
  f.network = std::move(net);
  return f;
}

inline BaselineReference baseline_from_solution(const Network& net, const MilpModel& m, const Solution& s) {
  BaselineReference ref;
  for (const char* index : {"CEJST", "SVI"}) {
    const auto [total, vuln] = shed_totals(net, m, s, index);
    ref.total_shed = total;
    ref.vuln_shed[index] = vuln;
  }
  return ref;
}

}  // namespace psps::testing
