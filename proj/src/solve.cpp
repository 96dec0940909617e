#include "psps/solve.hpp"

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstring>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "psps/csv.hpp"
#include "psps/dense_lp.hpp"
#include "psps/error.hpp"
#include "psps/mps.hpp"
#include "psps/network_io.hpp"

extern char** environ;

namespace psps {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return {};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SolverError("cannot write " + path.string());
  out << text;
  if (!out) throw SolverError("cannot write " + path.string());
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

std::string tail(const std::string& text, std::size_t max_chars = 2000) {
  return text.size() <= max_chars ? text : text.substr(text.size() - max_chars);
}

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

class TempDir {
 public:
  TempDir() {
    std::string pattern = (fs::temp_directory_path() / "psps-solve-XXXXXX").string();
    if (mkdtemp(pattern.data()) == nullptr) throw SolverError("cannot create temporary directory");
    path_ = pattern;
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct ProcessResult {
  int exit_code = -1;
  bool killed = false;
};

ProcessResult run_process(const std::string& command, const std::vector<std::string>& args, const fs::path& log,
                          double deadline_seconds) {
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_addopen(&actions, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  posix_spawn_file_actions_adddup2(&actions, STDOUT_FILENO, STDERR_FILENO);
  posix_spawn_file_actions_addopen(&actions, STDIN_FILENO, "/dev/null", O_RDONLY, 0);

  std::vector<std::string> argv_store;
  argv_store.push_back(command);
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, command.c_str(), &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  if (rc != 0) throw SolverError("cannot launch backend '" + command + "': " + std::strerror(rc));

  ProcessResult result;
  const auto start = Clock::now();
  int status = 0;
  while (true) {
    const pid_t w = waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0) throw SolverError("waitpid failed for backend");
    if (seconds_since(start) > deadline_seconds) {
      kill(pid, SIGKILL);
      waitpid(pid, &status, 0);
      result.killed = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
  return result;
}

/// Continuous restriction of `model` with bounds `lb`/`ub` as a dense LP.
lp::Problem restriction(const MilpModel& model) {
  lp::Problem p;
  const std::size_t n = model.vars.size();
  p.cost.assign(n, 0.0);
  for (const auto& t : model.objective) p.cost[static_cast<std::size_t>(t.col)] += t.coef;
  p.lb.resize(n);
  p.ub.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    p.lb[j] = model.vars[j].lb;
    p.ub[j] = model.vars[j].ub;
  }
  p.rows = model.rows;
  return p;
}

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::feasible_gapped: return "feasible_gapped";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::time_limit: return "time_limit";
    case SolveStatus::error: return "error";
  }
  return "error";
}

SolveStatus solve_status_from_string(const std::string& text) {
  if (text == "optimal") return SolveStatus::optimal;
  if (text == "feasible_gapped") return SolveStatus::feasible_gapped;
  if (text == "infeasible") return SolveStatus::infeasible;
  if (text == "time_limit") return SolveStatus::time_limit;
  if (text == "error") return SolveStatus::error;
  throw InputError("unknown solve status '" + text + "'");
}

bool BackendConfig::supports_warm_start() const {
  return std::any_of(args_template.begin(), args_template.end(),
                     [](const std::string& a) { return a.find("{warm_start}") != std::string::npos; });
}

BackendConfig backend_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("backend: expected an object");
  BackendConfig c;
  auto need_string = [&](const char* key) -> std::string {
    if (!doc.contains(key) || !doc[key].is_string()) throw ConfigError(std::string("backend.") + key + ": expected a string");
    return doc[key].get<std::string>();
  };
  c.name = need_string("name");
  c.command = need_string("command");
  if (!doc.contains("args_template") || !doc["args_template"].is_array()) {
    throw ConfigError("backend.args_template: expected an array of strings");
  }
  for (std::size_t i = 0; i < doc["args_template"].size(); ++i) {
    const auto& a = doc["args_template"][i];
    if (!a.is_string()) throw ConfigError("backend.args_template[" + std::to_string(i) + "]: expected a string");
    c.args_template.push_back(a.get<std::string>());
  }
  if (doc.contains("solution_format")) {
    c.solution_format = need_string("solution_format");
    if (c.solution_format != "plain" && c.solution_format != "cbc") {
      throw ConfigError("backend.solution_format: unknown format '" + c.solution_format + "'");
    }
  }
  return c;
}

nlohmann::json backend_to_json(const BackendConfig& config) {
  return {{"name", config.name},
          {"command", config.command},
          {"args_template", config.args_template},
          {"solution_format", config.solution_format}};
}

BackendConfig load_backend(const std::string& path) {
  try {
    return backend_from_json(read_json_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

BackendConfig default_backend() {
  BackendConfig c;
  c.name = "highs";
  c.command = "python3";
  c.args_template = {PSPS_BACKEND_SCRIPT, "--model",      "{model}",      "--solution",
                     "{solution}",        "--gap",        "{gap}",        "--time-limit",
                     "{time_limit}",      "--log",        "{log}",        "--warm-start={warm_start}"};
  return c;
}

BackendConfig backend_from_environment(const BackendConfig& fallback) {
  const char* path = std::getenv("PSPS_BACKEND");
  if (path == nullptr || *path == '\0') return fallback;
  return load_backend(path);
}

double Solution::value(const MilpModel& model, const std::string& name) const {
  const int j = model.vars.at(name);
  if (static_cast<std::size_t>(j) >= values.size()) throw SolverError("solution has no values");
  return values[static_cast<std::size_t>(j)];
}

ValueMap Solution::value_map(const MilpModel& model) const {
  ValueMap out;
  for (std::size_t j = 0; j < values.size() && j < model.vars.size(); ++j) out[model.vars[j].name] = values[j];
  return out;
}

BackendOutput parse_plain_solution(const std::string& text) {
  BackendOutput out;
  out.status = "error";
  bool saw_status = false;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0][0] == '#') continue;
    const std::string where = "solution line " + std::to_string(lineno);
    if (tok.size() != 2) throw InputError(where + ": expected '<name> <value>'");
    if (tok[0] == "@status") {
      out.status = tok[1];
      saw_status = true;
    } else if (tok[0] == "@objective") {
      out.objective = csv::parse_double(tok[1], where);
    } else if (tok[0] == "@gap") {
      out.gap = csv::parse_double(tok[1], where);
    } else if (tok[0] == "@nodes") {
      out.nodes = std::stol(tok[1]);
    } else if (tok[0][0] == '@') {
      continue;
    } else {
      out.values[tok[0]] = csv::parse_double(tok[1], where);
    }
  }
  if (!saw_status) throw InputError("solution: missing @status line");
  return out;
}

std::string format_plain_solution(const BackendOutput& output) {
  std::ostringstream out;
  out << "@status " << output.status << '\n';
  if (output.objective) out << "@objective " << format_number(*output.objective) << '\n';
  if (output.gap) out << "@gap " << format_number(*output.gap) << '\n';
  if (output.nodes) out << "@nodes " << *output.nodes << '\n';
  for (const auto& [name, v] : output.values) out << name << ' ' << format_number(v) << '\n';
  return out.str();
}

BackendOutput parse_cbc_solution(const std::string& text) {
  BackendOutput out;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw InputError("cbc solution: empty file");
  auto starts = [&](const char* p) { return line.rfind(p, 0) == 0; };
  if (starts("Optimal")) {
    out.status = "optimal";
  } else if (starts("Infeasible") || starts("Integer infeasible")) {
    out.status = "infeasible";
  } else if (starts("Stopped on time")) {
    out.status = "time_limit";
  } else if (starts("Unbounded")) {
    out.status = "unbounded";
  } else if (starts("Stopped")) {
    out.status = "feasible";
  } else {
    out.status = "error";
  }
  const auto pos = line.find("objective value");
  if (pos != std::string::npos) {
    const auto tok = split_ws(line.substr(pos + 15));
    if (!tok.empty()) out.objective = csv::parse_double(tok[0], "cbc objective");
  }
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto tok = split_ws(line);
    if (!tok.empty() && tok[0] == "**") tok.erase(tok.begin());
    if (tok.empty()) continue;
    if (tok.size() < 3) throw InputError("cbc solution line " + std::to_string(lineno) + ": too few fields");
    out.values[tok[1]] = csv::parse_double(tok[2], "cbc solution line " + std::to_string(lineno));
  }
  return out;
}

BackendOutput parse_solution(const std::string& format, const std::string& text) {
  if (format == "plain") return parse_plain_solution(text);
  if (format == "cbc") return parse_cbc_solution(text);
  throw ConfigError("unknown solution format '" + format + "'");
}

std::vector<std::string> verify_solution(const MilpModel& model, const std::vector<double>& values,
                                         const VerifyTolerances& tol) {
  std::vector<std::string> out;
  if (values.size() != model.vars.size()) {
    out.push_back("value count " + std::to_string(values.size()) + " != column count " +
                  std::to_string(model.vars.size()));
    return out;
  }
  for (std::size_t j = 0; j < values.size(); ++j) {
    const auto& v = model.vars[j];
    const double x = values[j];
    if (!std::isfinite(x)) {
      out.push_back("column " + v.name + " is not finite");
      continue;
    }
    if (x < v.lb - tol.bound || x > v.ub + tol.bound) {
      out.push_back("bound violated: " + v.name + " = " + format_number(x));
    }
    if (v.integer && std::abs(x - std::round(x)) > tol.integrality) {
      out.push_back("integrality violated: " + v.name + " = " + format_number(x));
    }
  }
  for (const auto& row : model.rows) {
    const double viol = row_violation(row, model.activity(row, values));
    if (viol > tol.row) out.push_back("row violated: " + row.name + " by " + format_number(viol));
  }
  return out;
}

void clean_values(const MilpModel& model, std::vector<double>& values, double snap) {
  for (std::size_t j = 0; j < values.size() && j < model.vars.size(); ++j) {
    const auto& v = model.vars[j];
    double& x = values[j];
    if (v.integer && std::abs(x - std::round(x)) <= snap) x = std::round(x);
    if (x < v.lb && x >= v.lb - snap) x = v.lb;
    if (x > v.ub && x <= v.ub + snap) x = v.ub;
    if (x == 0.0) x = 0.0;  // drop negative zero
  }
}

Solution interpret_backend_output(const MilpModel& model, const BackendOutput& output, double mip_gap) {
  Solution s;
  s.nodes = output.nodes;
  const std::string& st = output.status;
  if (st == "infeasible") {
    s.status = SolveStatus::infeasible;
    return s;
  }
  if (st == "unbounded") {
    s.status = SolveStatus::error;
    s.diagnostics = "backend reports unbounded model";
    return s;
  }
  if (st != "optimal" && st != "feasible" && st != "time_limit") {
    s.status = SolveStatus::error;
    s.diagnostics = "backend status '" + st + "'";
    return s;
  }
  if (output.values.empty() && !model.vars.all().empty()) {
    s.status = st == "time_limit" ? SolveStatus::time_limit : SolveStatus::error;
    if (s.status == SolveStatus::error) s.diagnostics = "backend returned no values";
    return s;
  }
  s.values.assign(model.vars.size(), 0.0);
  for (const auto& [name, v] : output.values) {
    const int j = model.vars.find(name);
    if (j < 0) {
      s.status = SolveStatus::error;
      s.diagnostics = "backend returned unknown variable '" + name + "'";
      s.values.clear();
      return s;
    }
    s.values[static_cast<std::size_t>(j)] = v;
  }
  clean_values(model, s.values);
  const auto problems = verify_solution(model, s.values);
  if (!problems.empty()) {
    s.status = SolveStatus::error;
    std::ostringstream d;
    d << "backend solution failed verification (" << problems.size() << " issues)";
    for (std::size_t i = 0; i < problems.size() && i < 10; ++i) d << "\n  " << problems[i];
    s.diagnostics = d.str();
    return s;
  }
  s.objective = model.objective_value(s.values);
  s.gap = std::max(0.0, output.gap.value_or(0.0));
  if (st == "time_limit") {
    s.status = SolveStatus::time_limit;
  } else if (st == "feasible" && !output.gap) {
    s.status = SolveStatus::time_limit;
    s.diagnostics = "backend reported a feasible point without a gap";
  } else if (s.gap <= 1e-9) {
    s.status = SolveStatus::optimal;
  } else if (s.gap <= mip_gap + 1e-12) {
    s.status = SolveStatus::feasible_gapped;
  } else {
    s.status = SolveStatus::time_limit;
  }
  return s;
}

Solution solve(const MilpModel& model, const SolveOptions& options) {
  const auto start = Clock::now();
  Solution s;
  try {
    if (options.mip_gap < 0.0) throw ConfigError("mip_gap must be >= 0");
    if (!(options.time_limit > 0.0)) throw ConfigError("time_limit must be > 0");
    TempDir tmp;
    const fs::path model_path = tmp.path() / "model.mps";
    const fs::path solution_path = tmp.path() / "solution.txt";
    const fs::path warm_path = tmp.path() / "warm.txt";
    const fs::path log_path = tmp.path() / "backend.log";
    write_text(model_path, emit_model_file(model));
    const bool warm = options.warm_start.has_value() && options.backend.supports_warm_start();
    if (warm) {
      BackendOutput w;
      w.status = "feasible";
      for (const auto& [name, v] : *options.warm_start) {
        if (model.vars.contains(name)) w.values[name] = v;
      }
      write_text(warm_path, format_plain_solution(w));
    }
    std::vector<std::string> args;
    for (const auto& a : options.backend.args_template) {
      if (a.find("{warm_start}") != std::string::npos && !warm) continue;
      std::string e = a;
      e = replace_all(e, "{model}", model_path.string());
      e = replace_all(e, "{solution}", solution_path.string());
      e = replace_all(e, "{gap}", format_number(options.mip_gap));
      e = replace_all(e, "{time_limit}", format_number(options.time_limit));
      e = replace_all(e, "{warm_start}", warm_path.string());
      e = replace_all(e, "{log}", log_path.string() + ".solver");
      args.push_back(e);
    }
    const auto proc = run_process(options.backend.command, args, log_path, options.time_limit * 1.5 + 30.0);
    const std::string log = read_text(log_path);
    if (proc.killed) {
      s.status = SolveStatus::time_limit;
      s.diagnostics = "backend killed after exceeding the time limit";
    } else if (!fs::exists(solution_path)) {
      s.status = SolveStatus::error;
      s.diagnostics = "backend '" + options.backend.name + "' exited with code " + std::to_string(proc.exit_code) +
                      " without a solution file\n" + tail(log);
    } else {
      const auto output = parse_solution(options.backend.solution_format, read_text(solution_path));
      s = interpret_backend_output(model, output, options.mip_gap);
      if (s.status == SolveStatus::error && !log.empty()) s.diagnostics += "\n" + tail(log);
    }
  } catch (const std::exception& e) {
    s = Solution{};
    s.status = SolveStatus::error;
    s.diagnostics = e.what();
  }
  s.wall_time = seconds_since(start);
  return s;
}

Solution solve_fixed_binaries(const MilpModel& model, const std::vector<double>& values) {
  const auto start = Clock::now();
  lp::Problem p = restriction(model);
  for (std::size_t j = 0; j < model.vars.size(); ++j) {
    if (model.vars[j].integer) p.lb[j] = p.ub[j] = std::round(values.at(j));
  }
  const auto r = lp::solve(p);
  Solution s;
  s.wall_time = seconds_since(start);
  if (r.status == lp::Status::infeasible) {
    s.status = SolveStatus::infeasible;
    return s;
  }
  if (r.status != lp::Status::optimal) {
    s.status = SolveStatus::error;
    s.diagnostics = std::string("restricted LP: ") + lp::to_string(r.status);
    return s;
  }
  s.status = SolveStatus::optimal;
  s.values = r.x;
  s.objective = model.objective_value(s.values);
  return s;
}

Solution oracle_solve(const MilpModel& model, const OracleOptions& options) {
  const auto start = Clock::now();
  const auto free_cols = model.free_integer_columns();
  if (static_cast<int>(free_cols.size()) > options.max_free_binaries) throw SolverError("oracle cap exceeded");
  for (int j : free_cols) {
    const auto& v = model.vars[static_cast<std::size_t>(j)];
    if (v.lb < -1e-9 || v.ub > 1.0 + 1e-9) throw SolverError("oracle supports binary columns only: " + v.name);
  }
  const std::size_t k = free_cols.size();

  // Rows over integer columns only are checked before any LP is solved.
  std::vector<const Row*> pure_rows;
  for (const auto& row : model.rows) {
    const bool pure = std::all_of(row.terms.begin(), row.terms.end(),
                                  [&](const Term& t) { return model.vars[static_cast<std::size_t>(t.col)].integer; });
    if (pure) pure_rows.push_back(&row);
  }
  const lp::Problem base = restriction(model);
  std::vector<double> fixed_values(model.vars.size(), 0.0);
  for (std::size_t j = 0; j < model.vars.size(); ++j) {
    if (model.vars[j].integer) fixed_values[j] = std::round(std::max(model.vars[j].lb, 0.0));
  }
  for (std::size_t j = 0; j < model.vars.size(); ++j) {
    const auto& v = model.vars[j];
    if (v.integer && std::ceil(v.lb - 1e-9) > std::floor(v.ub + 1e-9)) {
      Solution s;
      s.status = SolveStatus::infeasible;
      s.wall_time = seconds_since(start);
      return s;
    }
    if (v.integer) fixed_values[j] = std::ceil(v.lb - 1e-9);
  }

  struct Best {
    bool found = false;
    double objective = 0.0;
    std::uint64_t mask = 0;
    std::vector<double> x;
    std::string error;
  };
  const std::uint64_t total = std::uint64_t{1} << k;
  // Bit (k-1-i) holds free column i, so ascending masks are lexicographic.
  auto assignment = [&](std::uint64_t mask, std::vector<double>& vals) {
    for (std::size_t i = 0; i < k; ++i) {
      vals[static_cast<std::size_t>(free_cols[i])] = static_cast<double>((mask >> (k - 1 - i)) & 1U);
    }
  };
  auto better = [](double obj, std::uint64_t mask, const Best& b) {
    if (!b.found) return true;
    const double tol = 1e-9 * std::max(1.0, std::abs(b.objective));
    if (obj < b.objective - tol) return true;
    return obj <= b.objective + tol && mask < b.mask;
  };

  int threads = options.threads > 0 ? options.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min<int>(threads, static_cast<int>(std::min<std::uint64_t>(total, 64))));
  std::vector<Best> bests(static_cast<std::size_t>(threads));
  std::atomic<std::uint64_t> next{0};
  auto worker = [&](int id) {
    Best& best = bests[static_cast<std::size_t>(id)];
    std::vector<double> vals = fixed_values;
    lp::Problem p = base;
    while (true) {
      const std::uint64_t mask = next.fetch_add(1);
      if (mask >= total) break;
      assignment(mask, vals);
      bool ok = true;
      for (const Row* row : pure_rows) {
        if (row_violation(*row, model.activity(*row, vals)) > 1e-9) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      for (std::size_t j = 0; j < model.vars.size(); ++j) {
        if (model.vars[j].integer) p.lb[j] = p.ub[j] = vals[j];
      }
      const auto r = lp::solve(p);
      if (r.status == lp::Status::infeasible) continue;
      if (r.status != lp::Status::optimal) {
        if (best.error.empty()) best.error = std::string("restricted LP: ") + lp::to_string(r.status);
        continue;
      }
      const double obj = model.objective_value(r.x);
      if (better(obj, mask, best)) {
        best.found = true;
        best.objective = obj;
        best.mask = mask;
        best.x = r.x;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker, t);
  worker(0);
  for (auto& t : pool) t.join();

  Best winner;
  std::string error;
  for (const auto& b : bests) {
    if (error.empty()) error = b.error;
    if (b.found && better(b.objective, b.mask, winner)) winner = b;
  }
  Solution s;
  s.nodes = static_cast<long>(total);
  s.wall_time = seconds_since(start);
  if (!error.empty()) {
    s.status = SolveStatus::error;
    s.diagnostics = error;
    return s;
  }
  if (!winner.found) {
    s.status = SolveStatus::infeasible;
    return s;
  }
  s.status = SolveStatus::optimal;
  s.values = std::move(winner.x);
  s.objective = model.objective_value(s.values);
  s.gap = 0.0;
  return s;
}

Solver backend_solver(SolveOptions options) {
  return [options = std::move(options)](const MilpModel& model) { return solve(model, options); };
}

Solver oracle_solver(OracleOptions options) {
  return [options](const MilpModel& model) { return oracle_solve(model, options); };
}

nlohmann::json solution_to_json(const MilpModel& model, const Solution& solution) {
  nlohmann::json doc = {{"scenario_id", model.scenario_id},
                        {"status", to_string(solution.status)},
                        {"objective", solution.objective},
                        {"gap", solution.gap},
                        {"wall_time", solution.wall_time},
                        {"diagnostics", solution.diagnostics}};
  doc["nodes"] = solution.nodes ? nlohmann::json(*solution.nodes) : nlohmann::json(nullptr);
  nlohmann::json values = nlohmann::json::object();
  for (std::size_t j = 0; j < solution.values.size() && j < model.vars.size(); ++j) {
    values[model.vars[j].name] = solution.values[j];
  }
  doc["values"] = std::move(values);
  return doc;
}

Solution solution_from_json(const MilpModel& model, const nlohmann::json& doc) {
  Solution s;
  try {
    s.status = solve_status_from_string(doc.at("status").get<std::string>());
    s.objective = doc.value("objective", 0.0);
    s.gap = doc.value("gap", 0.0);
    s.wall_time = doc.value("wall_time", 0.0);
    s.diagnostics = doc.value("diagnostics", std::string{});
    if (doc.contains("nodes") && doc["nodes"].is_number()) s.nodes = doc["nodes"].get<long>();
    const auto& values = doc.at("values");
    if (!values.empty()) {
      s.values.assign(model.vars.size(), 0.0);
      for (const auto& [name, v] : values.items()) {
        const int j = model.vars.find(name);
        if (j < 0) throw InputError("solution.values: unknown variable '" + name + "'");
        s.values[static_cast<std::size_t>(j)] = v.get<double>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("solution: ") + e.what());
  }
  return s;
}

}  // namespace psps
