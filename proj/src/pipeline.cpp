#include "psps/pipeline.hpp"

#include <fcntl.h>
#include <openssl/evp.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "psps/analysis.hpp"
#include "psps/csv.hpp"
#include "psps/error.hpp"
#include "psps/model_builder.hpp"
#include "psps/mps.hpp"
#include "psps/network_io.hpp"

namespace psps {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_bytes(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << bytes;
  out.close();
  if (!out) throw InputError("write failed: " + path.string());
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError((where.empty() ? "" : where + ".") + key + ": unknown field");
    }
  }
}

template <typename T>
T get_field(const json& obj, const std::string& where, const char* key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

std::string resolve(const std::string& base, const std::string& path) {
  if (path.empty()) return path;
  const fs::path p(path);
  return p.is_absolute() ? path : (fs::path(base) / p).lexically_normal().string();
}

/// Flock held for the lifetime of the object.
class FileLock {
 public:
  FileLock(const fs::path& path, bool exclusive) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT, 0644);
    if (fd_ < 0) throw InputError("cannot open lock file " + path.string());
    if (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      ::close(fd_);
      throw InputError("cannot lock " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

json read_cache(const fs::path& file) {
  std::ifstream in(file);
  if (!in) return json::object();
  try {
    json doc = json::parse(in);
    return doc.is_object() ? doc : json::object();
  } catch (const json::exception&) {
    return json::object();
  }
}

std::string scenario_name(const std::string& model_id, double budget) {
  return model_id + "_B" + format_number(budget);
}

BaselineReference baseline_from(const MilpModel& model, const Solution& solution, const Network& network) {
  BaselineReference ref;
  const auto view = view_solution(model, solution, network);
  std::set<std::string> indices;
  for (const auto& b : network.buses()) {
    for (const auto& [index, f] : b.vuln_fraction) indices.insert(index);
  }
  for (std::size_t b = 0; b < network.buses().size(); ++b) {
    double shed = 0.0;
    for (const auto& day : view.shed[b]) {
      for (double v : day) shed += v;
    }
    ref.total_shed += shed;
    for (const auto& index : indices) ref.vuln_shed[index] += network.buses()[b].vulnerable_fraction(index) * shed;
  }
  for (const auto& index : indices) ref.vuln_shed.try_emplace(index, 0.0);
  return ref;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw InputError("sha256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int{digest[i]};
  return out.str();
}

std::string file_sha256(const std::string& path) { return sha256_hex(read_bytes(path)); }

StageCache::StageCache(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw InputError("cannot create " + dir_ + ": " + ec.message());
}

bool StageCache::fresh(const std::string& stage, const std::string& digest,
                       const std::vector<std::string>& outputs) const {
  FileLock lock(fs::path(dir_) / ".lock", false);
  const json doc = read_cache(fs::path(dir_) / ".stage-cache.json");
  if (!doc.contains(stage) || !doc[stage].is_string() || doc[stage].get<std::string>() != digest) return false;
  return std::all_of(outputs.begin(), outputs.end(), [](const std::string& p) { return fs::exists(p); });
}

void StageCache::record(const std::string& stage, const std::string& digest) {
  FileLock lock(fs::path(dir_) / ".lock", true);
  const fs::path file = fs::path(dir_) / ".stage-cache.json";
  json doc = read_cache(file);
  doc[stage] = digest;
  const fs::path tmp = file.string() + ".tmp";
  write_bytes(tmp, doc.dump(2) + "\n");
  fs::rename(tmp, file);
}

RunConfig parse_run_config(const json& doc, const std::string& base_dir) {
  check_keys(doc, "", {"inputs", "thresholds", "budgets", "models", "groups", "indices", "inverse_distance", "solver",
                       "report"});
  RunConfig c;
  if (!doc.contains("inputs")) throw ConfigError("inputs: required");
  const auto& in = doc["inputs"];
  check_keys(in, "inputs", {"network", "raster", "raster_meta", "risk_profile", "tracts", "rules"});
  c.inputs.network = resolve(base_dir, get_field<std::string>(in, "inputs", "network", ""));
  c.inputs.raster = resolve(base_dir, get_field<std::string>(in, "inputs", "raster", ""));
  c.inputs.raster_meta = resolve(base_dir, get_field<std::string>(in, "inputs", "raster_meta", ""));
  c.inputs.risk_profile = resolve(base_dir, get_field<std::string>(in, "inputs", "risk_profile", ""));
  c.inputs.tracts = resolve(base_dir, get_field<std::string>(in, "inputs", "tracts", ""));
  c.inputs.rules = resolve(base_dir, get_field<std::string>(in, "inputs", "rules", ""));
  if (c.inputs.network.empty()) throw ConfigError("inputs.network: required");
  if (c.inputs.risk_profile.empty() && (c.inputs.raster.empty() || c.inputs.raster_meta.empty())) {
    throw ConfigError("inputs.raster: required (with inputs.raster_meta) unless inputs.risk_profile is given");
  }

  if (doc.contains("thresholds")) {
    const auto& t = doc["thresholds"];
    check_keys(t, "thresholds", {"R_PSPS", "R_high", "R_low"});
    c.thresholds.psps = get_field<double>(t, "thresholds", "R_PSPS", c.thresholds.psps);
    c.thresholds.high = get_field<double>(t, "thresholds", "R_high", c.thresholds.high);
    c.thresholds.low = get_field<double>(t, "thresholds", "R_low", c.thresholds.low);
    if (!(c.thresholds.low < c.thresholds.high)) throw ConfigError("thresholds.R_low: must be below R_high");
  }
  if (doc.contains("budgets")) {
    c.budgets = get_field<std::vector<double>>(doc, "", "budgets", {});
    if (c.budgets.empty()) throw ConfigError("budgets: must not be empty");
    for (double b : c.budgets) {
      if (!(b >= 0.0) || !std::isfinite(b)) throw ConfigError("budgets: values must be finite and >= 0");
    }
  }
  if (doc.contains("models")) {
    if (doc["models"].is_string() && doc["models"].get<std::string>() == "all") {
      c.models.clear();
      for (const auto& s : scenario_catalog(0.0)) c.models.push_back(s.model_id);
    } else {
      c.models = get_field<std::vector<std::string>>(doc, "", "models", {});
    }
    if (c.models.empty()) throw ConfigError("models: must not be empty");
    for (const auto& m : c.models) {
      try {
        (void)catalog_entry(m, 0.0);
      } catch (const ConfigError&) {
        throw ConfigError("models: unknown model id '" + m + "'");
      }
    }
  }
  c.groups = get_field<std::vector<std::string>>(doc, "", "groups", {});
  c.indices = get_field<std::vector<std::string>>(doc, "", "indices", {});
  c.inverse_distance = get_field<bool>(doc, "", "inverse_distance", false);
  if (doc.contains("solver")) {
    const auto& s = doc["solver"];
    check_keys(s, "solver", {"backend", "mip_gap", "time_limit", "oracle", "oracle_cap"});
    c.solver.backend = resolve(base_dir, get_field<std::string>(s, "solver", "backend", ""));
    c.solver.mip_gap = get_field<double>(s, "solver", "mip_gap", c.solver.mip_gap);
    c.solver.time_limit = get_field<double>(s, "solver", "time_limit", c.solver.time_limit);
    c.solver.oracle = get_field<bool>(s, "solver", "oracle", false);
    c.solver.oracle_cap = get_field<int>(s, "solver", "oracle_cap", c.solver.oracle_cap);
    if (!(c.solver.mip_gap >= 0.0)) throw ConfigError("solver.mip_gap: must be >= 0");
    if (!(c.solver.time_limit > 0.0)) throw ConfigError("solver.time_limit: must be > 0");
    if (c.solver.oracle_cap < 0 || c.solver.oracle_cap > 30) throw ConfigError("solver.oracle_cap: must be in [0, 30]");
  }
  if (doc.contains("report")) {
    check_keys(doc["report"], "report", {"curves"});
    c.curves = get_field<bool>(doc["report"], "report", "curves", true);
  }
  c.hash = sha256_hex(doc.dump());
  return c;
}

RunConfig load_run_config(const std::string& path) {
  const std::string bytes = read_bytes(path);
  json doc;
  try {
    doc = json::parse(bytes);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  RunConfig c;
  try {
    c = parse_run_config(doc, fs::path(path).parent_path().string());
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  c.source_path = path;
  c.hash = sha256_hex(bytes);
  return c;
}

RunOutcome run_pipeline(const RunConfig& config, const RunOptions& options) {
  const fs::path out(options.out_dir);
  StageCache cache(options.out_dir);
  for (const char* sub : {"models", "solutions"}) fs::create_directories(out / sub);

  json manifest = {{"config_sha256", config.hash}, {"config_path", config.source_path}};
  json inputs = json::object();
  auto note_input = [&](const char* key, const std::string& path) {
    if (!path.empty()) inputs[key] = {{"path", path}, {"sha256", file_sha256(path)}};
  };
  note_input("network", config.inputs.network);
  note_input("raster", config.inputs.raster);
  note_input("raster_meta", config.inputs.raster_meta);
  note_input("risk_profile", config.inputs.risk_profile);
  note_input("tracts", config.inputs.tracts);
  note_input("rules", config.inputs.rules);
  manifest["inputs"] = inputs;

  // Ingest.
  Network network = load_network(config.inputs.network);
  const auto violations = validate_network(network);
  if (has_errors(violations)) {
    for (const auto& v : violations) {
      if (v.severity == Severity::error) throw InputError(config.inputs.network + ": " + v.entity + ": " + v.rule);
    }
  }

  // Risk.
  RiskProfile risk;
  const std::string risk_path = (out / "risk_profile.json").string();
  if (!config.inputs.risk_profile.empty()) {
    risk = risk_profile_from_json(read_json_file(config.inputs.risk_profile));
  } else {
    const std::string digest =
        sha256_hex(inputs["network"]["sha256"].get<std::string>() + inputs["raster"]["sha256"].get<std::string>() +
                   inputs["raster_meta"]["sha256"].get<std::string>() + format_number(config.thresholds.psps) + "," +
                   format_number(config.thresholds.high) + "," + format_number(config.thresholds.low));
    if (cache.fresh("risk", digest, {risk_path})) {
      risk = risk_profile_from_json(read_json_file(risk_path));
      manifest["risk_stage"] = "cached";
    } else {
      const auto grid = load_pixel_grid(config.inputs.raster, config.inputs.raster_meta);
      risk = compute_risk_profile(network, grid, config.thresholds);
      write_json_file(risk_profile_to_json(risk), risk_path);
      cache.record("risk", digest);
      manifest["risk_stage"] = "computed";
    }
  }
  {
    json days = json::array();
    for (int d : psps_days(risk)) days.push_back(d);
    manifest["psps_trigger_days"] = days;
  }

  // Which indices are needed.
  std::vector<std::string> indices = config.indices;
  for (const auto& id : config.models) {
    for (const auto& idx : required_indices(catalog_entry(id, 0.0))) {
      if (std::find(indices.begin(), indices.end(), idx) == indices.end()) indices.push_back(idx);
    }
  }

  // Demographics.
  if (!config.inputs.tracts.empty()) {
    auto tracts = load_tracts(config.inputs.tracts);
    if (!config.inputs.rules.empty()) {
      const auto rules = rules_from_json(read_json_file(config.inputs.rules));
      for (const auto& idx : indices) {
        const auto it = rules.find(idx);
        if (it != rules.end()) flag_vulnerability(tracts, idx, it->second);
      }
    }
    AssignmentOptions ao;
    ao.inverse_distance = config.inverse_distance;
    auto [attached, assignment] = attach_demographics(network, tracts, indices, ao);
    network = std::move(attached);
    write_json_file(assignment_to_json(assignment, tracts), (out / "assignment.json").string());
    manifest["zero_population_buses"] = assignment.zero_population_buses;
  }
  const std::vector<std::string> groups = config.groups.empty() ? network.all_groups() : config.groups;

  // Solver selection.
  BackendConfig backend = config.solver.backend.empty() ? default_backend() : load_backend(config.solver.backend);
  backend = backend_from_environment(backend);
  manifest["backend"] = backend_to_json(backend);
  const bool want_oracle = config.solver.oracle || options.force_oracle;
  const std::string backend_digest = sha256_hex(backend_to_json(backend).dump() + format_number(config.solver.mip_gap) +
                                                "," + format_number(config.solver.time_limit) +
                                                (want_oracle ? ",oracle" : ""));

  // Scenario matrix.
  std::vector<double> budgets = config.budgets;
  std::sort(budgets.begin(), budgets.end());
  budgets.erase(std::unique(budgets.begin(), budgets.end()), budgets.end());
  bool need_baseline = std::find(config.models.begin(), config.models.end(), "BL-M0") != config.models.end();
  for (const auto& id : config.models) {
    if (catalog_entry(id, 0.0).policy == PolicyKind::load_shed_reduction) need_baseline = true;
  }

  struct Task {
    ScenarioSpec spec;
    std::string name;
  };
  std::vector<std::vector<Task>> stages;
  if (need_baseline) stages.push_back({{catalog_entry("BL-M0", 0.0), "BL-M0_B0"}});
  for (double b : budgets) {
    std::vector<Task> stage;
    for (const auto& id : config.models) {
      if (id == "BL-M0") continue;
      auto spec = catalog_entry(id, b);
      stage.push_back({spec, scenario_name(id, b)});
    }
    if (!stage.empty()) stages.push_back(std::move(stage));
  }

  std::optional<BaselineReference> baseline;
  std::optional<SolutionView> baseline_view;
  std::string baseline_error;
  std::map<std::string, ValueMap> warm;  // model id -> previous budget's values
  std::map<std::string, std::string> warm_from;
  std::vector<ScenarioResult> results;
  json scenario_log = json::array();
  std::mutex mu;

  auto run_task = [&](const Task& task, ScenarioResult& result, json& log) {
    ScenarioSpec spec = task.spec;
    spec.mip_gap = config.solver.mip_gap;
    spec.time_limit = config.solver.time_limit;
    result.spec = spec;
    result.scenario_id = task.name;
    log = {{"scenario", task.name}, {"model_id", spec.model_id}, {"budget", spec.budget}};
    try {
      std::optional<BaselineReference> ref;
      if (spec.policy == PolicyKind::load_shed_reduction) {
        if (!baseline) throw BuildError("baseline BL-M0 unavailable" + (baseline_error.empty() ? "" : ": " + baseline_error));
        ref = baseline;
      }
      BuildOptions bo;
      bo.groups = groups;
      const MilpModel model = build_scenario(network, risk, spec, ref, bo);
      const std::string mps = emit_model_file(model);
      const fs::path model_file = out / "models" / (task.name + ".mps");
      write_bytes(model_file, mps);
      log["model_file"] = fs::relative(model_file, out).string();
      log["model_sha256"] = sha256_hex(mps);
      log["free_binaries"] = model.free_integer_columns().size();

      const bool use_oracle =
          want_oracle && static_cast<int>(model.free_integer_columns().size()) <= config.solver.oracle_cap;
      SolveOptions so;
      so.mip_gap = spec.mip_gap;
      so.time_limit = spec.time_limit;
      so.backend = backend;
      {
        std::lock_guard<std::mutex> g(mu);
        const auto it = warm.find(spec.model_id);
        if (it != warm.end() && !use_oracle) {
          so.warm_start = it->second;
          log["warm_start_from"] = warm_from[spec.model_id];
        }
      }
      const Solver solver = use_oracle ? oracle_solver({config.solver.oracle_cap, 0}) : backend_solver(so);
      log["solver"] = use_oracle ? "oracle" : backend.name;

      const fs::path solution_file = out / "solutions" / (task.name + ".json");
      const std::string digest = sha256_hex(log["model_sha256"].get<std::string>() + backend_digest);
      Solution solution;
      if (cache.fresh("solve:" + task.name, digest, {solution_file.string()})) {
        solution = solution_from_json(model, read_json_file(solution_file.string()));
        log["cached"] = true;
      } else {
        solution = solver(model);
        write_json_file(solution_to_json(model, solution), solution_file.string());
        if (solution.status != SolveStatus::error) cache.record("solve:" + task.name, digest);
      }
      result.status = solution.status;
      result.objective = solution.objective;
      result.gap = solution.gap;
      result.diagnostics = solution.diagnostics;
      log["wall_time"] = solution.wall_time;
      if (has_solution(solution.status)) {
        Solution final_solution = solution;
        if (spec.objective == ObjectiveKind::max_group_percent_shed) {
          result.alpha = solution.objective;
          final_solution = postprocess_equity(model, solution, solver);
          log["posthoc_alpha"] = posthoc_alpha(model, final_solution);
        }
        result.shed_fraction = final_solution.objective;
        const auto view = view_solution(model, final_solution, network);
        const bool self_baseline = spec.model_id == "BL-M0";
        result.metrics = compute_group_metrics(network, risk, view, groups,
                                               self_baseline || !baseline_view ? nullptr : &*baseline_view);
        std::lock_guard<std::mutex> g(mu);
        warm[spec.model_id] = solution.value_map(model);
        warm_from[spec.model_id] = task.name;
        if (self_baseline) {
          baseline = baseline_from(model, final_solution, network);
          baseline_view = view;
        }
      } else if (spec.model_id == "BL-M0") {
        std::lock_guard<std::mutex> g(mu);
        baseline_error = "BL-M0 ended " + to_string(solution.status);
      }
    } catch (const std::exception& e) {
      result.status = SolveStatus::error;
      result.diagnostics = e.what();
      if (spec.model_id == "BL-M0") {
        std::lock_guard<std::mutex> g(mu);
        baseline_error = e.what();
      }
    }
    log["status"] = to_string(result.status);
    log["gap"] = result.gap;
    log["objective"] = has_solution(result.status) ? json(result.objective) : json(nullptr);
    if (!result.diagnostics.empty()) log["diagnostics"] = result.diagnostics;
  };

  for (const auto& stage : stages) {
    std::vector<ScenarioResult> stage_results(stage.size());
    std::vector<json> stage_logs(stage.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next.fetch_add(1); i < stage.size(); i = next.fetch_add(1)) {
        run_task(stage[i], stage_results[i], stage_logs[i]);
      }
    };
    const int jobs = std::max(1, std::min<int>(options.jobs, static_cast<int>(stage.size())));
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < stage.size(); ++i) {
      results.push_back(std::move(stage_results[i]));
      scenario_log.push_back(std::move(stage_logs[i]));
    }
  }
  manifest["scenarios"] = scenario_log;

  // Budget-chain monotonicity per model.
  json mono = json::array();
  std::map<std::string, std::vector<const ScenarioResult*>> by_model;
  for (const auto& r : results) by_model[r.spec.model_id].push_back(&r);
  for (auto& [model_id, list] : by_model) {
    if (list.size() < 2) continue;
    json entry = {{"model_id", model_id}};
    if (list.front()->spec.policy == PolicyKind::budget) {
      entry["result"] = "skipped";
      entry["note"] = "budget-policy feasible sets are not nested across budgets";
    } else if (!std::all_of(list.begin(), list.end(),
                            [](const ScenarioResult* r) { return r->status == SolveStatus::optimal; })) {
      entry["result"] = "skipped";
      entry["note"] = "not every solve reached proven optimality";
    } else {
      entry["result"] = "ok";
      for (std::size_t i = 1; i < list.size(); ++i) {
        if (list[i]->objective > list[i - 1]->objective + 1e-6) {
          entry["result"] = "violated";
          entry["note"] = list[i]->scenario_id + " objective exceeds " + list[i - 1]->scenario_id;
        }
      }
    }
    mono.push_back(std::move(entry));
  }
  manifest["monotonicity"] = mono;

  ReportOptions ro;
  ro.curves = config.curves;
  write_report(results, options.out_dir, ro);

  RunOutcome outcome;
  outcome.exit_code = std::any_of(results.begin(), results.end(),
                                  [](const ScenarioResult& r) { return r.status == SolveStatus::error; })
                          ? 1
                          : 0;
  std::map<std::string, int> counts;
  for (const auto& r : results) ++counts[to_string(r.status)];
  manifest["status_counts"] = counts;
  manifest["exit_code"] = outcome.exit_code;
  write_json_file(manifest, (out / "manifest.json").string());
  outcome.manifest = std::move(manifest);
  return outcome;
}

}  // namespace psps
