#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "psps/milp.hpp"

namespace psps {

enum class SolveStatus { optimal, feasible_gapped, infeasible, time_limit, error };

std::string to_string(SolveStatus status);
SolveStatus solve_status_from_string(const std::string& text);
inline bool has_solution(SolveStatus s) {
  return s == SolveStatus::optimal || s == SolveStatus::feasible_gapped;
}

/// External solver reached through a process: the model is written as MPS,
/// `command` runs with `args_template` expanded, and the file written to
/// {solution} is parsed with the adapter named by `solution_format`.
///
/// Placeholders: {model} {solution} {gap} {time_limit} {warm_start} {log}.
/// An argument mentioning {warm_start} is dropped when no warm start is
/// given; a template without it means warm starts are not supported.
struct BackendConfig {
  std::string name;
  std::string command;
  std::vector<std::string> args_template;
  std::string solution_format = "plain";  // "plain" or "cbc"

  [[nodiscard]] bool supports_warm_start() const;
};

BackendConfig backend_from_json(const nlohmann::json& doc);
nlohmann::json backend_to_json(const BackendConfig& config);
BackendConfig load_backend(const std::string& path);

/// The bundled HiGHS script backend (python3 tools/milp_backend.py).
BackendConfig default_backend();

/// Backend named by $PSPS_BACKEND (path to a backend JSON) if set,
/// otherwise `fallback`.
BackendConfig backend_from_environment(const BackendConfig& fallback);

using ValueMap = std::map<std::string, double>;

struct SolveOptions {
  double mip_gap = 0.01;
  double time_limit = 3600.0;
  std::optional<ValueMap> warm_start;
  BackendConfig backend = default_backend();
};

struct Solution {
  SolveStatus status = SolveStatus::error;
  double objective = 0.0;
  double gap = 0.0;
  std::vector<double> values;  // aligned with model columns
  double wall_time = 0.0;      // seconds
  std::optional<long> nodes;
  std::string diagnostics;

  [[nodiscard]] double value(const MilpModel& model, const std::string& name) const;
  [[nodiscard]] ValueMap value_map(const MilpModel& model) const;
};

/// What a backend reported, before re-verification.
struct BackendOutput {
  std::string status;  // optimal | feasible | infeasible | time_limit | unbounded | error
  std::optional<double> objective;
  std::optional<double> gap;
  std::optional<long> nodes;
  ValueMap values;
};

/// `@status <s>`, `@objective <v>`, `@gap <v>`, `@nodes <n>` header lines,
/// then one `<variable> <value>` per line. Blank and `#` lines are ignored.
BackendOutput parse_plain_solution(const std::string& text);
std::string format_plain_solution(const BackendOutput& output);
/// CBC `-solu` output: status line, then `index name value [reduced cost]`.
BackendOutput parse_cbc_solution(const std::string& text);
BackendOutput parse_solution(const std::string& format, const std::string& text);

struct VerifyTolerances {
  double row = 1e-6;
  double bound = 1e-9;
  double integrality = 1e-6;
};

/// Every violated row, bound or integrality requirement, one line each.
std::vector<std::string> verify_solution(const MilpModel& model, const std::vector<double>& values,
                                         const VerifyTolerances& tol = {});

/// Rounds integer columns and snaps values within `snap` of a bound onto it.
void clean_values(const MilpModel& model, std::vector<double>& values, double snap = 1e-6);

/// Runs the backend process and re-verifies its answer in-process.
/// Backend failures come back as status error with diagnostics.
Solution solve(const MilpModel& model, const SolveOptions& options);

/// Builds a Solution from backend output: maps names to columns, cleans
/// values, recomputes the objective and re-verifies.
Solution interpret_backend_output(const MilpModel& model, const BackendOutput& output, double mip_gap);

struct OracleOptions {
  int max_free_binaries = 16;
  int threads = 0;  // 0 = hardware concurrency
};

/// Exhaustive enumeration of the free binaries; each restriction is solved
/// with the dense LP. Ties go to the lexicographically smallest assignment.
/// Throws SolverError("oracle cap exceeded") above the cap.
Solution oracle_solve(const MilpModel& model, const OracleOptions& options = {});

/// Solves the continuous restriction with all integer columns fixed at
/// `values` (rounded).
Solution solve_fixed_binaries(const MilpModel& model, const std::vector<double>& values);

/// A callable solving a model; lets callers swap backend and oracle.
using Solver = std::function<Solution(const MilpModel&)>;
Solver backend_solver(SolveOptions options);
Solver oracle_solver(OracleOptions options = {});

nlohmann::json solution_to_json(const MilpModel& model, const Solution& solution);
Solution solution_from_json(const MilpModel& model, const nlohmann::json& doc);

}  // namespace psps
