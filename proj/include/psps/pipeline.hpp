#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "psps/demographics.hpp"
#include "psps/risk.hpp"
#include "psps/solve.hpp"

namespace psps {

/// Run configuration (JSON). Relative input paths resolve against the
/// config file's directory.
struct RunConfig {
  struct Inputs {
    std::string network;
    std::string raster;        // optional when risk_profile is given
    std::string raster_meta;
    std::string risk_profile;  // precomputed profile JSON
    std::string tracts;        // optional; network may already carry demographics
    std::string rules;
  } inputs;
  RiskThresholds thresholds;
  std::vector<double> budgets{0.0};
  std::vector<std::string> models{"BL-M0"};
  std::vector<std::string> groups;   // equity groups, empty = all declared
  std::vector<std::string> indices;  // vulnerability indices to attach
  bool inverse_distance = false;
  struct Solver {
    std::string backend;  // backend JSON path, empty = default
    double mip_gap = 0.01;
    double time_limit = 3600.0;
    bool oracle = false;
    int oracle_cap = 16;
  } solver;
  bool curves = true;
  std::string source_path;
  std::string hash;
};

RunConfig parse_run_config(const nlohmann::json& doc, const std::string& base_dir = ".");
RunConfig load_run_config(const std::string& path);

struct RunOptions {
  std::string out_dir = "out";
  int jobs = 1;
  bool force_oracle = false;
};

struct RunOutcome {
  int exit_code = 0;
  nlohmann::json manifest;
};

/// Full pipeline: ingest, risk, demographics, BL-M0 baseline, then each
/// budget in ascending order with warm starts chained per model, equity
/// post-processing and reports. Scenario failures are recorded, not thrown.
RunOutcome run_pipeline(const RunConfig& config, const RunOptions& options);

/// SHA-256 hex digests.
std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::string& path);

/// Skips work whose input digest matches the recorded one. Keys live in
/// `<dir>/.stage-cache.json`, guarded by an flock on `<dir>/.lock`.
class StageCache {
 public:
  explicit StageCache(std::string dir);
  [[nodiscard]] bool fresh(const std::string& stage, const std::string& digest,
                           const std::vector<std::string>& outputs) const;
  void record(const std::string& stage, const std::string& digest);

 private:
  std::string dir_;
};

}  // namespace psps
