#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "psps/analysis.hpp"
#include "psps/csv.hpp"
#include "psps/demographics.hpp"
#include "psps/error.hpp"
#include "psps/model_builder.hpp"
#include "psps/mps.hpp"
#include "psps/network_io.hpp"
#include "psps/pipeline.hpp"
#include "psps/risk.hpp"
#include "psps/solve.hpp"

namespace fs = std::filesystem;
using namespace psps;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
  if (!out) throw InputError("write failed: " + path);
}

void write_json(const nlohmann::json& doc, const std::string& path) {
  if (const auto parent = fs::path(path).parent_path(); !parent.empty()) fs::create_directories(parent);
  write_json_file(doc, path);
}

int cmd_validate(const std::string& network_path, const std::string& config_path) {
  int rc = 0;
  if (!config_path.empty()) {
    const auto cfg = load_run_config(config_path);
    std::cout << "config ok: " << config_path << " (sha256 " << cfg.hash << ")\n";
  }
  if (!network_path.empty()) {
    const auto net = load_network(network_path);
    const auto violations = validate_network(net);
    for (const auto& v : violations) {
      std::cout << (v.severity == Severity::error ? "error: " : "warning: ") << v.entity << ": " << v.rule << '\n';
    }
    if (has_errors(violations)) {
      rc = 1;
    } else {
      std::cout << "network ok: " << net.buses().size() << " buses, " << net.lines().size() << " lines, "
                << net.generators().size() << " generators\n";
    }
  }
  return rc;
}

std::vector<std::string> groups_or_all(const Network& net, const std::vector<std::string>& groups) {
  return groups.empty() ? net.all_groups() : groups;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wildfire shutoff and undergrounding planner with equity constraints"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "psps 1.0.0");

  // validate
  std::string v_network, v_config;
  auto* validate = app.add_subcommand("validate", "Check a network JSON and/or a run config");
  validate->add_option("--network", v_network, "Network JSON")->check(CLI::ExistingFile);
  validate->add_option("--config", v_config, "Run config JSON")->check(CLI::ExistingFile);

  // risk
  std::string r_network, r_raster, r_meta, r_out = "risk_profile.json";
  RiskThresholds r_thr;
  auto* risk = app.add_subcommand("risk", "Compute the per-line per-day risk profile from a raster");
  risk->add_option("--network", r_network, "Network JSON")->required()->check(CLI::ExistingFile);
  risk->add_option("--raster", r_raster, "Raster CSV (day,row,col,value)")->required()->check(CLI::ExistingFile);
  risk->add_option("--meta", r_meta, "Raster sidecar JSON")->required()->check(CLI::ExistingFile);
  risk->add_option("--r-psps", r_thr.psps, "Daily shutoff trigger")->capture_default_str();
  risk->add_option("--r-high", r_thr.high, "High-risk line threshold")->capture_default_str();
  risk->add_option("--r-low", r_thr.low, "Medium-risk line threshold")->capture_default_str();
  risk->add_option("--out", r_out, "Output profile JSON")->capture_default_str();

  // assign
  std::string a_network, a_tracts, a_rules, a_out = "network_demographics.json", a_assignment;
  std::vector<std::string> a_indices;
  bool a_inverse = false;
  auto* assign = app.add_subcommand("assign", "Assign census tracts to load buses and attach group fractions");
  assign->add_option("--network", a_network, "Network JSON")->required()->check(CLI::ExistingFile);
  assign->add_option("--tracts", a_tracts, "Tract CSV")->required()->check(CLI::ExistingFile);
  assign->add_option("--rules", a_rules, "Vulnerability rules JSON")->check(CLI::ExistingFile);
  assign->add_option("--index", a_indices, "Vulnerability index to attach (repeatable)");
  assign->add_flag("--inverse-distance", a_inverse, "Weight buses by 1/d inside a tract radius");
  assign->add_option("--out", a_out, "Output network JSON")->capture_default_str();
  assign->add_option("--assignment", a_assignment, "Also write the assignment matrix JSON");

  // build
  std::string b_network, b_risk, b_model_id = "BL-M0", b_out = "model.mps", b_json, b_baseline;
  double b_budget = 0.0;
  std::vector<std::string> b_groups;
  bool b_emit_only = false;
  auto* build = app.add_subcommand("build", "Build one scenario model and emit it as MPS");
  build->add_option("--network", b_network, "Network JSON (with demographics)")->required()->check(CLI::ExistingFile);
  build->add_option("--risk", b_risk, "Risk profile JSON")->required()->check(CLI::ExistingFile);
  build->add_option("--model", b_model_id, "Catalog model id")->capture_default_str();
  build->add_option("--budget", b_budget, "Undergrounding budget, million USD")->capture_default_str();
  build->add_option("--baseline", b_baseline, "Baseline reference JSON {total_shed, vuln_shed}")
      ->check(CLI::ExistingFile);
  build->add_option("--group", b_groups, "Equity group (repeatable; default all)");
  build->add_option("--out", b_out, "Output MPS file")->capture_default_str();
  build->add_option("--model-json", b_json, "Output model JSON (default: MPS path with .json)");
  build->add_flag("--emit-only", b_emit_only, "Write the MPS file and exit");

  // solve
  std::string s_model, s_out = "solution.json", s_backend, s_warm;
  double s_gap = 0.01, s_time = 3600.0;
  bool s_oracle = false;
  int s_cap = 16;
  auto* solve_cmd = app.add_subcommand("solve", "Solve a model JSON written by build");
  solve_cmd->add_option("--model", s_model, "Model JSON")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--out", s_out, "Output solution JSON")->capture_default_str();
  solve_cmd->add_option("--backend", s_backend, "Backend JSON (default: bundled HiGHS script)")
      ->check(CLI::ExistingFile);
  solve_cmd->add_option("--gap", s_gap, "Relative MIP gap")->capture_default_str();
  solve_cmd->add_option("--time-limit", s_time, "Seconds")->capture_default_str();
  solve_cmd->add_option("--warm-start", s_warm, "Solution JSON to warm start from")->check(CLI::ExistingFile);
  solve_cmd->add_flag("--oracle", s_oracle, "Use exhaustive enumeration (small models only)");
  solve_cmd->add_option("--oracle-cap", s_cap, "Maximum free binaries for the oracle")->capture_default_str();

  // report
  std::string p_network, p_risk, p_model, p_solution, p_out_dir = "report", p_baseline_model, p_baseline_solution;
  std::vector<std::string> p_groups;
  auto* report = app.add_subcommand("report", "Group metrics and report files for one solved scenario");
  report->add_option("--network", p_network, "Network JSON (with demographics)")->required()->check(CLI::ExistingFile);
  report->add_option("--risk", p_risk, "Risk profile JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--model", p_model, "Model JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--solution", p_solution, "Solution JSON")->required()->check(CLI::ExistingFile);
  report->add_option("--baseline-model", p_baseline_model, "Baseline model JSON")->check(CLI::ExistingFile);
  report->add_option("--baseline-solution", p_baseline_solution, "Baseline solution JSON")->check(CLI::ExistingFile);
  report->add_option("--group", p_groups, "Group (repeatable; default all)");
  report->add_option("--out-dir", p_out_dir, "Output directory")->capture_default_str();

  // run
  std::string config_path;
  RunOptions run_opts;
  auto* run = app.add_subcommand("run", "Run the full scenario matrix from a config file");
  run->add_option("--config", config_path, "Run config JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out-dir", run_opts.out_dir, "Output directory")->capture_default_str();
  run->add_option("--jobs", run_opts.jobs, "Concurrent scenarios per budget")->check(CLI::PositiveNumber);
  run->add_flag("--oracle", run_opts.force_oracle, "Use the oracle for models under its cap");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate) {
      if (v_network.empty() && v_config.empty()) throw ConfigError("validate: give --network and/or --config");
      return cmd_validate(v_network, v_config);
    }
    if (*risk) {
      const auto net = load_network(r_network);
      const auto grid = load_pixel_grid(r_raster, r_meta);
      const auto profile = compute_risk_profile(net, grid, r_thr);
      write_json(risk_profile_to_json(profile), r_out);
      std::cout << "risk profile: " << profile.line_ids.size() << " lines x " << profile.days.size() << " days, "
                << psps_days(profile).size() << " trigger days -> " << r_out << '\n';
      return 0;
    }
    if (*assign) {
      const auto net = load_network(a_network);
      auto tracts = load_tracts(a_tracts);
      if (!a_rules.empty()) {
        const auto rules = rules_from_json(read_json_file(a_rules));
        for (const auto& idx : a_indices) {
          if (const auto it = rules.find(idx); it != rules.end()) flag_vulnerability(tracts, idx, it->second);
        }
      }
      AssignmentOptions ao;
      ao.inverse_distance = a_inverse;
      const auto [attached, assignment] = attach_demographics(net, tracts, a_indices, ao);
      write_json(network_to_json(attached), a_out);
      if (!a_assignment.empty()) write_json(assignment_to_json(assignment, tracts), a_assignment);
      for (const auto& id : assignment.zero_population_buses) std::cerr << "warning: bus " << id << " has no population\n";
      std::cout << "assigned " << tracts.size() << " tracts to " << assignment.load_bus_ids.size() << " load buses -> "
                << a_out << '\n';
      return 0;
    }
    if (*build) {
      const auto net = load_network(b_network);
      const auto profile = risk_profile_from_json(read_json_file(b_risk));
      const auto spec = catalog_entry(b_model_id, b_budget);
      std::optional<BaselineReference> baseline;
      if (!b_baseline.empty()) {
        const auto doc = read_json_file(b_baseline);
        BaselineReference ref;
        ref.total_shed = doc.at("total_shed").get<double>();
        ref.vuln_shed = doc.value("vuln_shed", std::map<std::string, double>{});
        baseline = ref;
      }
      BuildOptions bo;
      bo.groups = groups_or_all(net, b_groups);
      const auto model = build_scenario(net, profile, spec, baseline, bo);
      write_text(b_out, emit_model_file(model));
      if (b_emit_only) return 0;
      const std::string json_path = b_json.empty() ? fs::path(b_out).replace_extension(".json").string() : b_json;
      write_json(model_to_json(model), json_path);
      std::cout << "model " << model.scenario_id << ": " << model.vars.size() << " columns (" << model.integer_count()
                << " integer), " << model.rows.size() << " rows -> " << b_out << ", " << json_path << '\n';
      return 0;
    }
    if (*solve_cmd) {
      const auto model = model_from_json(read_json_file(s_model));
      Solution solution;
      if (s_oracle) {
        solution = oracle_solve(model, {s_cap, 0});
      } else {
        SolveOptions so;
        so.mip_gap = s_gap;
        so.time_limit = s_time;
        so.backend = backend_from_environment(s_backend.empty() ? default_backend() : load_backend(s_backend));
        if (!s_warm.empty()) so.warm_start = solution_from_json(model, read_json_file(s_warm)).value_map(model);
        solution = solve(model, so);
      }
      write_json(solution_to_json(model, solution), s_out);
      std::cout << "status " << to_string(solution.status);
      if (has_solution(solution.status)) {
        std::cout << ", objective " << format_number(solution.objective) << ", gap " << format_number(solution.gap);
      }
      std::cout << " -> " << s_out << '\n';
      if (!solution.diagnostics.empty()) std::cerr << solution.diagnostics << '\n';
      return solution.status == SolveStatus::error ? 1 : 0;
    }
    if (*report) {
      const auto net = load_network(p_network);
      const auto profile = risk_profile_from_json(read_json_file(p_risk));
      const auto model = model_from_json(read_json_file(p_model));
      const auto solution = solution_from_json(model, read_json_file(p_solution));
      ScenarioResult result;
      const auto& meta = model.metadata;
      result.spec = catalog_entry(meta.value("model_id", std::string{"BL-M0"}), meta.value("budget", 0.0));
      result.scenario_id = model.scenario_id;
      result.status = solution.status;
      result.objective = solution.objective;
      result.gap = solution.gap;
      result.diagnostics = solution.diagnostics;
      if (has_solution(solution.status)) {
        std::optional<SolutionView> base_view;
        if (!p_baseline_model.empty() && !p_baseline_solution.empty()) {
          const auto bm = model_from_json(read_json_file(p_baseline_model));
          base_view = view_solution(bm, solution_from_json(bm, read_json_file(p_baseline_solution)), net);
        }
        const auto view = view_solution(model, solution, net);
        result.metrics = compute_group_metrics(net, profile, view, groups_or_all(net, p_groups),
                                               base_view ? &*base_view : nullptr);
        if (model.vars.contains(names::alpha)) result.alpha = posthoc_alpha(model, solution);
        result.shed_fraction = result.metrics->overall().demand > 0.0
                                   ? std::optional<double>(result.metrics->overall().shed / result.metrics->overall().demand)
                                   : std::nullopt;
      }
      ReportOptions ro;
      ro.curves = true;
      write_report({result}, p_out_dir, ro);
      std::cout << "report -> " << p_out_dir << '\n';
      return 0;
    }
    if (*run) {
      const auto config = load_run_config(config_path);
      const auto outcome = run_pipeline(config, run_opts);
      const auto& counts = outcome.manifest["status_counts"];
      std::cout << "run complete:";
      for (const auto& [status, n] : counts.items()) std::cout << ' ' << status << '=' << n.get<int>();
      std::cout << " -> " << run_opts.out_dir << '\n';
      return outcome.exit_code;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
