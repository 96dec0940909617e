#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "psps/grid.hpp"
#include "psps/milp.hpp"
#include "psps/risk.hpp"

namespace psps {

/// Load shed of the no-budget baseline, used by the load-shed-reduction
/// policy row.
struct BaselineReference {
  double total_shed = 0.0;                  // p.u.
  std::map<std::string, double> vuln_shed;  // index -> p.u.
};

/// Options shared by the builder steps.
struct BuildOptions {
  /// Groups entering the max-min rows; empty means every declared group.
  std::vector<std::string> groups;
};

/// DC-OTS core: generation, shed, flow and angle variables for every
/// (day, period); z for switchable (line, day); y for the harden set;
/// flow limits, big-M angle/flow rows, exact flow rows and power balance.
/// Throws BuildError if the risk profile misses a line or day.
MilpModel build_dcots(const Network& network, const RiskProfile& risk, const ScenarioSpec& spec);

/// High-risk days tie z to y; medium-risk days require y <= z.
void add_hardening(MilpModel& model, const Network& network, const RiskProfile& risk);

/// sum phi_ug * y <= B
void add_budget(MilpModel& model, const Network& network, const RiskProfile& risk, const ScenarioSpec& spec);

/// Per day: sum r (z - y) <= R_PSPS, fixed-z constants moved to the rhs.
void add_risk_cap(MilpModel& model, const Network& network, const RiskProfile& risk);

/// Vulnerable-attributed spend sum y (phi/2)(g_to + g_fr) >= fraction * B.
void add_policy_budget(MilpModel& model, const Network& network, const RiskProfile& risk,
                       const ScenarioSpec& spec);

/// Linearized reduction share plus the no-worse-than-baseline row.
/// Throws BuildError when the baseline has no shed to reduce.
void add_policy_loadshed(MilpModel& model, const Network& network, const BaselineReference& baseline,
                         const ScenarioSpec& spec);

/// alpha in [0,1] with one row sum gamma*ps - alpha*P^l_m <= 0 per group.
/// Groups with zero demand are skipped and listed in
/// metadata["excluded_groups"]. Throws BuildError if none remain.
void add_equity(MilpModel& model, const Network& network, const std::vector<std::string>& groups);

/// Fraction of demand shed, or alpha for equity objectives.
void set_objective(MilpModel& model, const Network& network, const ScenarioSpec& spec);

/// Composes the steps for one catalog row. `baseline` is required for the
/// load-shed-reduction policy.
MilpModel build_scenario(const Network& network, const RiskProfile& risk, const ScenarioSpec& spec,
                         const std::optional<BaselineReference>& baseline = std::nullopt,
                         const BuildOptions& options = {});

/// Group demand P^l_m over the horizon.
double group_demand(const Network& network, const std::string& group);

/// Indices of the vulnerability index used by `spec` (none -> empty).
std::vector<std::string> required_indices(const ScenarioSpec& spec);

}  // namespace psps
