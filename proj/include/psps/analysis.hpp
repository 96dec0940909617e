#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "psps/grid.hpp"
#include "psps/milp.hpp"
#include "psps/risk.hpp"
#include "psps/solve.hpp"

namespace psps {

/// Operational decisions read back from a solution by variable name.
struct SolutionView {
  std::vector<std::vector<std::vector<double>>> shed;  // [bus][day pos][period]
  std::vector<double> undergrounded;                   // y per line
  std::vector<std::vector<double>> energized;          // z per [day pos][line]
};

SolutionView view_solution(const MilpModel& model, const Solution& solution, const Network& network);

/// Fixes every integer column at its solved value, swaps in the total-shed
/// objective and re-solves the continuous part. The alpha column, if any,
/// is then reset to the post-hoc max group shed ratio and `objective` holds
/// the total-shed fraction. Throws SolverError if the restriction fails.
Solution postprocess_equity(const MilpModel& model, const Solution& solution, const Solver& solver);

/// max_m P^s_m / P^l_m over the groups recorded in the model's equity rows.
double posthoc_alpha(const MilpModel& model, const Solution& solution);

inline constexpr double kShedHighlightPercent = 1.0;

struct GroupRow {
  std::string group;   // "Overall" for the whole-network row
  std::string family;  // empty for the overall row
  double demand = 0.0;  // P^l_m, p.u.
  double shed = 0.0;    // P^s_m, p.u.
  std::optional<double> percent_shed;
  std::optional<double> unfairness;
  double population = 0.0;
  double budget_allocated = 0.0;  // million USD
  std::optional<double> per_capita_budget;  // USD per person
  double risk_reduction = 0.0;
  std::optional<double> per_capita_risk_reduction;

  [[nodiscard]] bool above_threshold() const {
    return percent_shed && *percent_shed > kShedHighlightPercent;
  }
};

struct GroupMetrics {
  std::vector<GroupRow> rows;  // groups in order, overall row last
  double total_spend = 0.0;
  double unattributed_budget = 0.0;  // halves landing on population-free buses
  double total_risk_reduction = 0.0;
  double unattributed_risk_reduction = 0.0;

  [[nodiscard]] const GroupRow& overall() const { return rows.back(); }
  [[nodiscard]] const GroupRow* find(const std::string& group) const;
};

/// percent_group / percent_overall; empty if either is missing or overall is 0.
std::optional<double> unfairness_ratio(std::optional<double> group_percent, std::optional<double> overall_percent);

/// Group demand/shed by gamma-weighted sums, unfairness against the overall
/// row, budget and risk reduction split half-and-half to the terminal buses.
/// Risk reduction of line l is sum_d r_ld (e_base - e) with e = z - y the
/// energized-above-ground indicator; without a baseline e_base = 1.
GroupMetrics compute_group_metrics(const Network& network, const RiskProfile& risk, const SolutionView& view,
                                   const std::vector<std::string>& groups,
                                   const SolutionView* baseline = nullptr);

struct ScenarioResult {
  ScenarioSpec spec;
  std::string scenario_id;
  SolveStatus status = SolveStatus::error;
  double objective = 0.0;  // solver objective (alpha for equity models)
  double gap = 0.0;
  std::optional<double> shed_fraction;  // after post-processing
  std::optional<double> alpha;
  std::optional<GroupMetrics> metrics;
  std::string diagnostics;
};

struct ReportOptions {
  bool curves = false;
};

/// report.csv (one row per scenario x group plus an overall row),
/// report.json, and curves/<model>.csv when requested. Scenarios are
/// written in the given order.
void write_report(const std::vector<ScenarioResult>& results, const std::string& out_dir,
                  const ReportOptions& options = {});

std::string report_csv(const std::vector<ScenarioResult>& results);
nlohmann::json report_json(const std::vector<ScenarioResult>& results);
nlohmann::json metrics_to_json(const GroupMetrics& metrics);

}  // namespace psps
