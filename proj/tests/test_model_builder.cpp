#include <gtest/gtest.h>

#include "psps/error.hpp"
#include "psps/model_builder.hpp"
#include "psps/mps.hpp"
#include "psps/solve.hpp"
#include "support/fixtures.hpp"

using namespace psps;
using namespace psps::testing;

namespace {

const Row& row_named(const MilpModel& m, const std::string& prefix) {
  for (const auto& r : m.rows)
    if (r.name.rfind(prefix, 0) == 0) return r;
  throw std::runtime_error("no row " + prefix);
}

std::map<std::string, double> terms_by_name(const MilpModel& m, const Row& r) {
  std::map<std::string, double> out;
  for (const auto& t : r.terms) out[m.vars[static_cast<std::size_t>(t.col)].name] += t.coef;
  return out;
}

// Row with z fixed at 1: the z term folds into the right-hand side.
std::pair<std::map<std::string, double>, double> with_z_one(const MilpModel& m, const Row& r) {
  auto terms = terms_by_name(m, r);
  double rhs = r.rhs;
  for (auto it = terms.begin(); it != terms.end();) {
    if (it->first.rfind("z_", 0) == 0) {
      rhs -= it->second;
      it = terms.erase(it);
    } else {
      ++it;
    }
  }
  return {terms, rhs};
}

Network two_bus(double gen, double load) {
  const Horizon h = horizon(1, 1);
  return Network(h, {flat_bus("A", h, 0.0), flat_bus("B", h, load)}, {make_line("L", "A", "B")},
                 {make_gen("G", "A", gen)});
}

Solution fixed(const MilpModel& m, std::map<std::string, double> bins) {
  std::vector<double> v(m.vars.size(), 0.0);
  for (const auto& [k, x] : bins) v[static_cast<std::size_t>(m.vars.at(k))] = x;
  return solve_fixed_binaries(m, v);
}

}  // namespace

TEST(Dcots, SwitchedRowsCollapseWhenEnergized) {
  const Network net = two_bus(2, 1);
  const auto sw = build_dcots(net, risk_profile(net, {{{"L", 1}, kMediumRisk}}), catalog_entry("BL-M0", 0));
  const auto fx = build_dcots(net, quiet_profile(net), catalog_entry("BL-M0", 0));
  const auto [f_terms, f_rhs] = with_z_one(sw, row_named(sw, "2f"));
  const auto [g_terms, g_rhs] = with_z_one(sw, row_named(sw, "2g"));
  EXPECT_EQ(f_terms, terms_by_name(fx, row_named(fx, "2e_lo")));
  EXPECT_NEAR(f_rhs, row_named(fx, "2e_lo").rhs, 1e-15);
  EXPECT_EQ(g_terms, terms_by_name(fx, row_named(fx, "2e_up")));
  EXPECT_NEAR(g_rhs, row_named(fx, "2e_up").rhs, 1e-15);
  const auto [h_terms, h_rhs] = with_z_one(sw, row_named(sw, "2h"));
  const auto [i_terms, i_rhs] = with_z_one(sw, row_named(sw, "2i"));
  const auto j_terms = terms_by_name(fx, row_named(fx, "2j"));
  EXPECT_EQ(h_terms, j_terms);
  EXPECT_EQ(i_terms, j_terms);
  EXPECT_NEAR(h_rhs, 0.0, 1e-12);
  EXPECT_NEAR(i_rhs, 0.0, 1e-12);
  for (const auto& r : sw.rows) EXPECT_FALSE(r.tag == "2e" || r.tag == "2j");
}

TEST(Dcots, BigMConstants) {
  const Network net = two_bus(2, 1);
  const auto m = build_dcots(net, risk_profile(net, {{{"L", 1}, kMediumRisk}}), catalog_entry("BL-M0", 0));
  EXPECT_DOUBLE_EQ(row_named(m, "2f").rhs, -2 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(row_named(m, "2i").rhs, 10 * 2 * std::numbers::pi);
}

TEST(Dcots, NoSwitchingNoShedWhenCapacitySuffices) {
  const Network net = two_bus(2, 1);
  const auto m = build_scenario(net, quiet_profile(net), catalog_entry("BL-M0", 0));
  EXPECT_EQ(m.integer_count(), 0u);
  const auto s = oracle_solve(m);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_NEAR(s.objective, 0.0, 1e-12);
}

TEST(Dcots, TriangleWithLineOffMatchesDirectSolve) {
  const Horizon h = horizon(1, 1);
  Network net(h, {flat_bus("A", h, 0.0), flat_bus("B", h, 0.3), flat_bus("C", h, 0.5)},
              {make_line("L1", "A", "B", 10, -8), make_line("L2", "B", "C", 10, -12), make_line("L3", "C", "A", 10, -5)},
              {make_gen("G", "A", 2)});
  const auto m = build_scenario(net, risk_profile(net, {{{"L3", 1}, kHighRisk}}), catalog_entry("BL-M0", 0));
  const auto s = oracle_solve(m);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_EQ(raw(m, s, names::z("L3", 1)), 0.0);
  // Radial remainder: B theta = P gives flows 0.8 and 0.5.
  const double tA = raw(m, s, names::theta("A", 1, 1));
  const double tB = raw(m, s, names::theta("B", 1, 1));
  const double tC = raw(m, s, names::theta("C", 1, 1));
  EXPECT_NEAR(tA - tB, 0.8 / 8, 1e-8);
  EXPECT_NEAR(tB - tC, 0.5 / 12, 1e-8);
  EXPECT_NEAR(raw(m, s, names::flow("L1", 1, 1)), 0.8, 1e-8);
  EXPECT_NEAR(raw(m, s, names::flow("L2", 1, 1)), 0.5, 1e-8);
  EXPECT_NEAR(raw(m, s, names::flow("L3", 1, 1)), 0.0, 1e-12);
}

TEST(Dcots, MissingRiskIsBuildError) {
  const Network net = two_bus(1, 1);
  const auto r = make_risk_profile({"other"}, {1}, {{0}}, RiskThresholds{});
  EXPECT_THROW(build_dcots(net, r, catalog_entry("BL-M0", 0)), BuildError);
}

TEST(Hardening, HighForcesOffMediumForcesOn) {
  const Horizon h = horizon(1, 1);
  Network net(h, {flat_bus("A", h, 0.0), flat_bus("B", h, 1.0), flat_bus("C", h, 1.0)},
              {make_line("LH", "A", "B"), make_line("LM", "A", "C")}, {make_gen("G", "A", 5)});
  const auto risk = risk_profile(net, {{{"LH", 1}, kHighRisk}, {{"LM", 1}, kMediumRisk}});
  const auto m = build_scenario(net, risk, catalog_entry("BL-M1", 10));
  // High: z = y.
  EXPECT_FALSE(has_solution(fixed(m, {{"z_LH_1", 1}, {"y_LH", 0}}).status));
  EXPECT_TRUE(has_solution(fixed(m, {{"z_LH_1", 0}, {"y_LH", 0}}).status));
  // Medium: y = 1 needs z = 1; y = 0 leaves z free.
  EXPECT_FALSE(has_solution(fixed(m, {{"z_LM_1", 0}, {"y_LM", 1}}).status));
  EXPECT_TRUE(has_solution(fixed(m, {{"z_LM_1", 1}, {"y_LM", 1}}).status));
  EXPECT_TRUE(has_solution(fixed(m, {{"z_LM_1", 0}, {"y_LM", 0}}).status));
  EXPECT_TRUE(has_solution(fixed(m, {{"z_LM_1", 1}, {"y_LM", 0}}).status));
}

TEST(Budget, ZeroBudgetFixesY) {
  const auto f = random_fixture(21);
  const auto m = build_scenario(f.network, f.risk, catalog_entry("BL-M0", 0));
  for (const auto& v : m.vars.all())
    if (v.name.rfind("y_", 0) == 0) EXPECT_EQ(v.ub, 0.0) << v.name;
}

TEST(Budget, PicksTheBetterOfTwoLines) {
  const Horizon h = horizon(1, 1);
  Network net(h, {flat_bus("A", h, 0.0), flat_bus("B", h, 1.0), flat_bus("C", h, 0.7)},
              {make_line("L1", "A", "B", 10, -10, 600), make_line("L2", "A", "C", 10, -10, 500)},
              {make_gen("G", "A", 5)});
  const auto risk = risk_profile(net, {{{"L1", 1}, kHighRisk}, {{"L2", 1}, kHighRisk}});
  const auto m = build_scenario(net, risk, catalog_entry("BL-M1", 1000));
  const auto s = oracle_solve(m);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_EQ(raw(m, s, "y_L1"), 1.0);
  EXPECT_EQ(raw(m, s, "y_L2"), 0.0);
  EXPECT_NEAR(s.objective, 0.7 / 1.7, 1e-12);

  const auto rich = build_scenario(net, risk, catalog_entry("BL-M1", 1100));
  const auto s_rich = oracle_solve(rich);
  const auto s_uncapped = oracle_solve(drop_rows(rich, "6"));
  EXPECT_EQ(s_rich.values, s_uncapped.values);
}

TEST(RiskCap, TwoLinesOneMustGo) {
  const Horizon h = horizon(1, 1);
  Network net(h, {flat_bus("A", h, 0.0), flat_bus("B", h, 1.0), flat_bus("C", h, 1.2)},
              {make_line("L1", "A", "B"), make_line("L2", "A", "C")}, {make_gen("G", "A", 5)});
  RiskThresholds t;
  t.psps = 6e8;
  t.high = 5e8;
  const auto risk = make_risk_profile({"L1", "L2"}, {1}, {{4e8, 3e8}}, t);
  const auto m = build_scenario(net, risk, catalog_entry("BL-M0", 0));
  const auto s = oracle_solve(m);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_LT(raw(m, s, "z_L1_1") + raw(m, s, "z_L2_1"), 2.0);
  EXPECT_EQ(raw(m, s, "z_L2_1"), 1.0);  // keep the line serving more load
  const auto& cap = row_named(m, "7_");
  const auto terms = terms_by_name(m, cap);
  EXPECT_EQ(terms.at("z_L1_1"), 4e8);
  EXPECT_EQ(terms.at("y_L1"), -4e8);
  EXPECT_EQ(cap.rhs, 6e8);
}

TEST(RiskCap, FixedLinesMoveToRhs) {
  const Horizon h = horizon(1, 1);
  Network net(h, {flat_bus("A", h, 0.0), flat_bus("B", h, 1.0)}, {make_line("L1", "A", "B"), make_line("L2", "A", "B")},
              {make_gen("G", "A", 5)});
  // L2 sits below R_low: never switched, always contributes its risk.
  const auto risk = risk_profile(net, {{{"L1", 1}, 5.0}, {{"L2", 1}, 0.5}}, 100.0);
  const auto m = build_scenario(net, risk, catalog_entry("BL-M0", 0));
  EXPECT_DOUBLE_EQ(row_named(m, "7_").rhs, 99.5);
}

TEST(PolicyBudget, Coefficients) {
  const Horizon h = horizon(1, 1);
  Network net(h,
              {flat_bus("A", h, 0.0, 0, {}, {{"CEJST", 1.0}}), flat_bus("B", h, 1.0, 10, {}, {{"CEJST", 0.0}}),
               flat_bus("C", h, 1.0, 10, {}, {{"CEJST", 1.0}})},
              {make_line("L1", "A", "B", 10, -10, 10), make_line("L2", "A", "C", 10, -10, 4)}, {make_gen("G", "A", 5)});
  const auto risk = risk_profile(net, {{{"L1", 1}, kHighRisk}, {{"L2", 1}, kHighRisk}});
  const auto m = build_scenario(net, risk, catalog_entry("M2", 20));
  const auto& r = row_named(m, "9_");
  const auto terms = terms_by_name(m, r);
  EXPECT_DOUBLE_EQ(terms.at("y_L1"), 5.0);
  EXPECT_DOUBLE_EQ(terms.at("y_L2"), 4.0);
  EXPECT_DOUBLE_EQ(r.rhs, 8.0);
  EXPECT_EQ(r.sense, RowSense::ge);
}

TEST(PolicyBudget, NoVulnerablePopulationIsInfeasible) {
  const Horizon h = horizon(1, 1);
  Network net(h, {flat_bus("A", h, 0.0, 0, {}, {{"CEJST", 0.0}}), flat_bus("B", h, 1.0, 10, {}, {{"CEJST", 0.0}})},
              {make_line("L1", "A", "B")}, {make_gen("G", "A", 5)});
  const auto risk = risk_profile(net, {{{"L1", 1}, kHighRisk}});
  EXPECT_EQ(oracle_solve(build_scenario(net, risk, catalog_entry("M2", 5))).status, SolveStatus::infeasible);
  // Zero budget: the row is vacuous.
  const auto m0 = build_scenario(net, risk, catalog_entry("M2", 0));
  EXPECT_EQ(row_named(m0, "9_").rhs, 0.0);
  EXPECT_EQ(oracle_solve(m0).status, SolveStatus::optimal);
}

TEST(PolicyLoadShed, Errors) {
  const auto f = random_fixture(31);
  EXPECT_THROW(build_scenario(f.network, f.risk, catalog_entry("M3", f.budget)), BuildError);
  BaselineReference zero;
  zero.vuln_shed["CEJST"] = 0.0;
  try {
    build_scenario(f.network, f.risk, catalog_entry("M3", f.budget), zero);
    FAIL();
  } catch (const BuildError& e) {
    EXPECT_NE(std::string(e.what()).find("no reduction to allocate"), std::string::npos);
  }
}

TEST(PolicyLoadShed, EnumerationKeepsOnlyCompliantAssignments) {
  const Horizon h = horizon(1, 1);
  Network net(h,
              {flat_bus("B1", h, 1.0, 10, {}, {{"CEJST", 1.0}}), flat_bus("B2", h, 1.0, 10, {}, {{"CEJST", 0.0}}),
               flat_bus("B3", h, 1.0, 10, {}, {{"CEJST", 0.0}}), flat_bus("S", h, 0.0, 0, {}, {{"CEJST", 0.0}})},
              {make_line("L1", "S", "B1", 10, -10, 1), make_line("L2", "S", "B2", 10, -10, 1),
               make_line("L3", "S", "B3", 10, -10, 1)},
              {make_gen("G", "S", 5)});
  const auto risk = risk_profile(net, {{{"L1", 1}, kHighRisk}, {{"L2", 1}, kHighRisk}, {{"L3", 1}, kHighRisk}});
  const auto bl = build_scenario(net, risk, catalog_entry("BL-M0", 0));
  const auto bls = oracle_solve(bl);
  const auto ref = baseline_from_solution(net, bl, bls);
  ASSERT_DOUBLE_EQ(ref.total_shed, 3.0);
  const auto m = build_scenario(net, risk, catalog_entry("M3", 2), ref);
  const auto loose = drop_rows(m, "10");
  // Shedding is voluntary, so the policy never cuts an assignment; it forces
  // extra shed on the assignments that favour non-vulnerable buses.
  int binding = 0;
  for (int mask = 0; mask < 8; ++mask) {
    std::map<std::string, double> bins;
    for (int l = 0; l < 3; ++l) {
      const std::string id = "L" + std::to_string(l + 1);
      bins["y_" + id] = bins["z_" + id + "_1"] = (mask >> l) & 1;
    }
    const auto with = fixed(m, bins);
    const auto without = fixed(loose, bins);
    ASSERT_EQ(has_solution(with.status), has_solution(without.status)) << mask;
    if (!has_solution(with.status)) continue;
    const auto [p, v] = shed_totals(net, m, with, "CEJST");
    EXPECT_GE(ref.vuln_shed.at("CEJST") - v, 0.4 * (ref.total_shed - p) - 1e-9) << mask;
    EXPECT_GE(with.objective, without.objective - 1e-12) << mask;
    if (with.objective > without.objective + 1e-9) {
      ++binding;
      const auto [p0, v0] = shed_totals(net, loose, without, "CEJST");
      EXPECT_LT(ref.vuln_shed.at("CEJST") - v0, 0.4 * (ref.total_shed - p0)) << mask;
    }
  }
  EXPECT_GT(binding, 0);
  const auto s = oracle_solve(m);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_EQ(raw(m, s, "y_L1"), 1.0);
}

TEST(Equity, SingleGroupAlphaIsShedFraction) {
  const Horizon h = horizon(1, 2);
  Network net(h, {flat_bus("A", h, 0.0), flat_bus("B", h, 1.0, 10, {{"X", 1.0}}), flat_bus("C", h, 1.0, 10, {{"X", 1.0}})},
              {make_line("L1", "A", "B"), make_line("L2", "A", "C")}, {make_gen("G", "A", 1.5)},
              {partition("f", {"X"})});
  const auto m = build_scenario(net, quiet_profile(net), catalog_entry("E-M6", 0));
  const auto s = oracle_solve(m);
  EXPECT_NEAR(s.objective, 0.25, 1e-9);
  EXPECT_EQ(m.objective.size(), 1u);
  EXPECT_EQ(m.vars[static_cast<std::size_t>(m.objective[0].col)].name, "alpha");
  EXPECT_EQ(m.objective[0].coef, 1.0);
}

TEST(Equity, MaxOfGroupRatios) {
  const Horizon h = horizon(1, 1);
  // Group B sits behind a line that can only carry 0.98 of its 1.0 demand.
  Network net(h,
              {flat_bus("S", h, 0.0), flat_bus("BA", h, 1.0, 10, {{"A", 1.0}}), flat_bus("BB", h, 1.0, 10, {{"B", 1.0}})},
              {make_line("L1", "S", "BA"), make_line("L2", "S", "BB", 0.98)}, {make_gen("G", "S", 5)},
              {partition("f", {"A", "B"})});
  const auto m = build_scenario(net, quiet_profile(net), catalog_entry("E-M6", 0));
  const auto s = oracle_solve(m);
  EXPECT_NEAR(s.objective, 0.02, 1e-9);
}

TEST(Equity, ThreeGroupsAlphaMatchesPostHoc) {
  const auto f = random_fixture(41);
  auto buses = f.network.buses();
  for (auto& b : buses) {
    if (b.group_fractions.empty()) continue;
    const double a = b.group_fractions.at("GroupA");
    b.group_fractions = {{"GroupA", 0.5 * a}, {"GroupB", 1.0 - a}, {"GroupC", 0.5 * a}};
  }
  const Network net = f.network.with_buses(buses).with_families({partition("race", {"GroupA", "GroupB", "GroupC"})});
  const auto m = build_scenario(net, f.risk, catalog_entry("E-M6", f.budget));
  const auto s = oracle_solve(m);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_NEAR(s.objective, posthoc_alpha(m, s), 1e-8);
}

TEST(Equity, ZeroDemandGroupsExcluded) {
  const Horizon h = horizon(1, 1);
  Network net(h, {flat_bus("S", h, 0.0), flat_bus("B", h, 1.0, 10, {{"A", 1.0}})}, {make_line("L", "S", "B")},
              {make_gen("G", "S", 1)}, {partition("f", {"A", "Z"})});
  const auto m = build_scenario(net, quiet_profile(net), catalog_entry("E-M6", 0));
  EXPECT_EQ(m.metadata.at("excluded_groups"), nlohmann::json::array({"Z"}));
  BuildOptions only_z;
  only_z.groups = {"Z"};
  EXPECT_THROW(build_scenario(net, quiet_profile(net), catalog_entry("E-M6", 0), std::nullopt, only_z), BuildError);
}

TEST(Objective, ShedCoefficientsAndZeroDemand) {
  const Network net = two_bus(1, 2);
  const auto m = build_scenario(net, quiet_profile(net), catalog_entry("BL-M0", 0));
  for (const auto& t : m.objective) {
    EXPECT_EQ(m.vars[static_cast<std::size_t>(t.col)].tag, "2b");
    EXPECT_DOUBLE_EQ(t.coef, 0.5);
  }
  EXPECT_EQ(m.objective.size(), 2u);
  const Network empty = two_bus(1, 0);
  EXPECT_THROW(build_scenario(empty, quiet_profile(empty), catalog_entry("BL-M0", 0)), BuildError);
  auto eq = build_dcots(net, quiet_profile(net), catalog_entry("E-M6", 0));
  EXPECT_THROW(set_objective(eq, net, catalog_entry("E-M6", 0)), BuildError);
}

TEST(Scenario, CompositionAndDeterminism) {
  const auto f = random_fixture(51);
  const auto bl = build_scenario(f.network, f.risk, catalog_entry("BL-M0", 0));
  for (const auto& v : bl.vars.all())
    if (v.name.rfind("y_", 0) == 0) EXPECT_EQ(v.ub, 0.0);
  const auto ref = baseline_from_solution(f.network, bl, oracle_solve(bl));
  const auto em8 = build_scenario(f.network, f.risk, catalog_entry("E-M8", f.budget), ref);
  EXPECT_FALSE(em8.rows_tagged("11").empty());
  EXPECT_EQ(em8.rows_tagged("10").size(), 1u);
  EXPECT_EQ(em8.rows_tagged("10aux").size(), 1u);
  const auto again = build_scenario(f.network, f.risk, catalog_entry("E-M8", f.budget), ref);
  EXPECT_EQ(model_to_json(em8).dump(), model_to_json(again).dump());
  EXPECT_EQ(emit_model_file(em8), emit_model_file(again));
}

TEST(Scenario, EveryRowTagged) {
  const auto f = random_fixture(61);
  const auto m = build_scenario(f.network, f.risk, catalog_entry("E-M7", f.budget));
  std::set<std::string> names;
  for (const auto& r : m.rows) {
    EXPECT_FALSE(r.tag.empty()) << r.name;
    EXPECT_TRUE(names.insert(r.name).second) << r.name;
  }
}

TEST(Scenario, GroupDemand) {
  const auto f = random_fixture(71);
  const double total = f.network.total_demand();
  EXPECT_NEAR(group_demand(f.network, "GroupA") + group_demand(f.network, "GroupB"), total, 1e-9);
  EXPECT_EQ(required_indices(catalog_entry("M4", 1)), std::vector<std::string>{"SVI"});
  EXPECT_TRUE(required_indices(catalog_entry("E-M6", 1)).empty());
}
