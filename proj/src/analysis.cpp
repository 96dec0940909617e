#include "psps/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "psps/csv.hpp"
#include "psps/error.hpp"

namespace psps {

namespace fs = std::filesystem;

namespace {

double lookup(const MilpModel& model, const Solution& solution, const std::string& name, double fallback) {
  const int j = model.vars.find(name);
  return j < 0 ? fallback : solution.values.at(static_cast<std::size_t>(j));
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string{}; }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw InputError("write failed: " + path.string());
}

}  // namespace

SolutionView view_solution(const MilpModel& model, const Solution& solution, const Network& network) {
  if (solution.values.size() != model.vars.size()) throw SolverError("solution has no values to view");
  const auto& h = network.horizon();
  SolutionView v;
  for (const auto& bus : network.buses()) {
    std::vector<std::vector<double>> per_day;
    for (int d : h.days) {
      std::vector<double> per_period;
      for (int t = 1; t <= h.periods_per_day; ++t) per_period.push_back(lookup(model, solution, names::shed(bus.id, d, t), 0.0));
      per_day.push_back(std::move(per_period));
    }
    v.shed.push_back(std::move(per_day));
  }
  for (const auto& line : network.lines()) v.undergrounded.push_back(lookup(model, solution, names::y(line.id), 0.0));
  for (int d : h.days) {
    std::vector<double> row;
    for (std::size_t l = 0; l < network.lines().size(); ++l) {
      const double z = lookup(model, solution, names::z(network.lines()[l].id, d), 1.0);
      row.push_back(z - v.undergrounded[l]);
    }
    v.energized.push_back(std::move(row));
  }
  return v;
}

double posthoc_alpha(const MilpModel& model, const Solution& solution) {
  const int alpha = model.vars.find(names::alpha);
  double best = 0.0;
  for (const Row* row : model.rows_tagged("11")) {
    double shed = 0.0;
    double demand = 0.0;
    for (const auto& t : row->terms) {
      if (t.col == alpha) {
        demand -= t.coef;
      } else {
        shed += t.coef * solution.values.at(static_cast<std::size_t>(t.col));
      }
    }
    if (demand > 0.0) best = std::max(best, shed / demand);
  }
  return best;
}

Solution postprocess_equity(const MilpModel& model, const Solution& solution, const Solver& solver) {
  if (!has_solution(solution.status)) throw SolverError("post-processing needs a feasible equity solution");
  MilpModel restricted = model;
  for (std::size_t j = 0; j < restricted.vars.size(); ++j) {
    auto& v = restricted.vars[j];
    if (v.integer) v.lb = v.ub = std::round(solution.values.at(j));
  }
  double total = 0.0;
  if (model.metadata.contains("total_demand")) total = model.metadata["total_demand"].get<double>();
  if (!(total > 0.0)) throw SolverError("post-processing needs the model's total demand");
  restricted.objective.clear();
  restricted.objective_offset = 0.0;
  for (std::size_t j = 0; j < restricted.vars.size(); ++j) {
    if (restricted.vars[j].tag == "2b") restricted.objective.push_back({static_cast<int>(j), 1.0 / total});
  }
  Solution out = solver(restricted);
  if (!has_solution(out.status)) {
    throw SolverError("internal error: restricted re-solve returned " + to_string(out.status) +
                      (out.diagnostics.empty() ? "" : ": " + out.diagnostics));
  }
  for (std::size_t j = 0; j < model.vars.size(); ++j) {
    if (model.vars[j].integer) out.values[j] = solution.values[j];
  }
  const int alpha = model.vars.find(names::alpha);
  if (alpha >= 0) out.values[static_cast<std::size_t>(alpha)] = posthoc_alpha(model, out);
  out.objective = restricted.objective_value(out.values);
  out.gap = 0.0;
  out.wall_time += solution.wall_time;
  return out;
}

const GroupRow* GroupMetrics::find(const std::string& group) const {
  for (const auto& r : rows) {
    if (r.group == group) return &r;
  }
  return nullptr;
}

std::optional<double> unfairness_ratio(std::optional<double> group_percent, std::optional<double> overall_percent) {
  if (!group_percent || !overall_percent || *overall_percent == 0.0) return std::nullopt;
  return *group_percent / *overall_percent;
}

GroupMetrics compute_group_metrics(const Network& network, const RiskProfile& risk, const SolutionView& view,
                                   const std::vector<std::string>& groups, const SolutionView* baseline) {
  const auto& buses = network.buses();
  const auto& lines = network.lines();
  const auto& h = network.horizon();

  std::vector<double> bus_shed(buses.size(), 0.0);
  for (std::size_t b = 0; b < buses.size(); ++b) {
    for (const auto& day : view.shed.at(b)) {
      for (double v : day) bus_shed[b] += v;
    }
  }

  // Season-summed risk removed per line.
  std::vector<double> line_rr(lines.size(), 0.0);
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const auto lp = risk.line_position(lines[l].id);
    if (!lp) continue;
    for (std::size_t dp = 0; dp < h.days.size(); ++dp) {
      const auto rdp = risk.day_position(h.days[dp]);
      if (!rdp) continue;
      const double base = baseline ? baseline->energized.at(dp).at(l) : 1.0;
      line_rr[l] += risk.risk[*rdp][*lp] * (base - view.energized.at(dp).at(l));
    }
  }
  std::vector<double> line_spend(lines.size(), 0.0);
  for (std::size_t l = 0; l < lines.size(); ++l) line_spend[l] = view.undergrounded.at(l) * lines[l].underground_cost;

  auto end_weight = [&](const Line& line, auto gamma_of) {
    double w = 0.0;
    for (const auto& id : {line.from_bus, line.to_bus}) {
      const auto b = network.bus_index(id);
      if (b) w += 0.5 * gamma_of(buses[*b]);
    }
    return w;
  };

  GroupMetrics out;
  for (const auto& g : groups) {
    GroupRow row;
    row.group = g;
    for (const auto& f : network.families()) {
      if (std::find(f.groups.begin(), f.groups.end(), g) != f.groups.end()) {
        row.family = f.name;
        break;
      }
    }
    for (std::size_t b = 0; b < buses.size(); ++b) {
      const double gamma = buses[b].group_fraction(g);
      row.demand += gamma * buses[b].total_demand();
      row.shed += gamma * bus_shed[b];
      row.population += gamma * buses[b].population;
    }
    for (std::size_t l = 0; l < lines.size(); ++l) {
      const double w = end_weight(lines[l], [&](const Bus& bus) { return bus.group_fraction(g); });
      row.budget_allocated += line_spend[l] * w;
      row.risk_reduction += line_rr[l] * w;
    }
    out.rows.push_back(std::move(row));
  }

  GroupRow overall;
  overall.group = "Overall";
  for (std::size_t b = 0; b < buses.size(); ++b) {
    overall.demand += buses[b].total_demand();
    overall.shed += bus_shed[b];
    overall.population += buses[b].population;
  }
  for (std::size_t l = 0; l < lines.size(); ++l) {
    overall.budget_allocated += line_spend[l];
    overall.risk_reduction += line_rr[l];
  }
  out.total_spend = overall.budget_allocated;
  out.total_risk_reduction = overall.risk_reduction;

  // Remainder not covered by the first partition family.
  const GroupFamily* partition = nullptr;
  for (const auto& f : network.families()) {
    if (f.kind == FamilyKind::partition) {
      partition = &f;
      break;
    }
  }
  for (std::size_t l = 0; l < lines.size(); ++l) {
    const double w = end_weight(lines[l], [&](const Bus& bus) {
      double covered = 0.0;
      if (partition) {
        for (const auto& g : partition->groups) covered += bus.group_fraction(g);
      }
      return std::max(0.0, 1.0 - covered);
    });
    out.unattributed_budget += line_spend[l] * w;
    out.unattributed_risk_reduction += line_rr[l] * w;
  }

  out.rows.push_back(std::move(overall));
  auto finish = [](GroupRow& r) {
    if (r.demand > 0.0) r.percent_shed = 100.0 * r.shed / r.demand;
    if (r.population > 0.0) {
      r.per_capita_budget = r.budget_allocated * 1e6 / r.population;
      r.per_capita_risk_reduction = r.risk_reduction / r.population;
    }
  };
  for (auto& r : out.rows) finish(r);
  const auto overall_percent = out.rows.back().percent_shed;
  for (auto& r : out.rows) r.unfairness = unfairness_ratio(r.percent_shed, overall_percent);
  return out;
}

nlohmann::json metrics_to_json(const GroupMetrics& metrics) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : metrics.rows) {
    rows.push_back({{"group", r.group},
                    {"family", r.family},
                    {"demand_pu", r.demand},
                    {"shed_pu", r.shed},
                    {"percent_shed", opt_json(r.percent_shed)},
                    {"above_threshold", r.above_threshold()},
                    {"unfairness", opt_json(r.unfairness)},
                    {"population", r.population},
                    {"budget_allocated_musd", r.budget_allocated},
                    {"per_capita_budget_usd", opt_json(r.per_capita_budget)},
                    {"risk_reduction", r.risk_reduction},
                    {"per_capita_risk_reduction", opt_json(r.per_capita_risk_reduction)}});
  }
  return {{"groups", rows},
          {"total_spend_musd", metrics.total_spend},
          {"unattributed_budget_musd", metrics.unattributed_budget},
          {"total_risk_reduction", metrics.total_risk_reduction},
          {"unattributed_risk_reduction", metrics.unattributed_risk_reduction}};
}

std::string report_csv(const std::vector<ScenarioResult>& results) {
  std::ostringstream out;
  csv::write_row(out, {"scenario", "model_id", "budget", "status", "group", "family", "demand_pu", "shed_pu",
                       "percent_shed", "above_threshold", "unfairness", "population", "budget_allocated_musd",
                       "per_capita_budget_usd", "risk_reduction", "per_capita_risk_reduction"});
  for (const auto& s : results) {
    const std::vector<std::string> head = {s.scenario_id, s.spec.model_id, format_number(s.spec.budget),
                                           to_string(s.status)};
    if (!s.metrics) {
      auto row = head;
      row.insert(row.end(), {"Overall", "", "", "", "", "", "", "", "", "", "", ""});
      csv::write_row(out, row);
      continue;
    }
    for (const auto& r : s.metrics->rows) {
      auto row = head;
      row.insert(row.end(), {r.group, r.family, format_number(r.demand), format_number(r.shed),
                             opt_number(r.percent_shed), r.above_threshold() ? "true" : "false",
                             opt_number(r.unfairness), format_number(r.population),
                             format_number(r.budget_allocated), opt_number(r.per_capita_budget),
                             format_number(r.risk_reduction), opt_number(r.per_capita_risk_reduction)});
      csv::write_row(out, row);
    }
  }
  return out.str();
}

nlohmann::json report_json(const std::vector<ScenarioResult>& results) {
  nlohmann::json scenarios = nlohmann::json::array();
  for (const auto& s : results) {
    nlohmann::json doc = {{"scenario", s.scenario_id},
                          {"model_id", s.spec.model_id},
                          {"budget_musd", s.spec.budget},
                          {"objective_kind", to_string(s.spec.objective)},
                          {"policy", to_string(s.spec.policy)},
                          {"vulnerability_index", s.spec.vulnerability_index},
                          {"status", to_string(s.status)},
                          {"objective", has_solution(s.status) ? nlohmann::json(s.objective) : nlohmann::json(nullptr)},
                          {"gap", s.gap},
                          {"shed_fraction", opt_json(s.shed_fraction)},
                          {"alpha", opt_json(s.alpha)},
                          {"diagnostics", s.diagnostics}};
    doc["metrics"] = s.metrics ? metrics_to_json(*s.metrics) : nlohmann::json(nullptr);
    scenarios.push_back(std::move(doc));
  }
  return {{"scenarios", scenarios}};
}

void write_report(const std::vector<ScenarioResult>& results, const std::string& out_dir,
                  const ReportOptions& options) {
  if (results.empty()) throw InputError("report needs at least one scenario result");
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "report.csv", report_csv(results));
  write_file(dir / "report.json", report_json(results).dump(2) + "\n");
  if (!options.curves) return;

  const fs::path curves = dir / "curves";
  fs::create_directories(curves, ec);
  if (ec) throw InputError("cannot create " + curves.string() + ": " + ec.message());
  std::map<std::string, std::vector<const ScenarioResult*>> by_model;
  for (const auto& s : results) by_model[s.spec.model_id].push_back(&s);
  for (auto& [model, list] : by_model) {
    std::stable_sort(list.begin(), list.end(),
                     [](const ScenarioResult* a, const ScenarioResult* b) { return a->spec.budget < b->spec.budget; });
    std::ostringstream out;
    csv::write_row(out, {"budget", "group", "percent_shed", "per_capita_budget_usd", "per_capita_risk_reduction"});
    for (const auto* s : list) {
      if (!s->metrics) continue;
      for (const auto& r : s->metrics->rows) {
        csv::write_row(out, {format_number(s->spec.budget), r.group, opt_number(r.percent_shed),
                             opt_number(r.per_capita_budget), opt_number(r.per_capita_risk_reduction)});
      }
    }
    write_file(curves / (model + ".csv"), out.str());
  }
}

}  // namespace psps
