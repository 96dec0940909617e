#include "psps/milp.hpp"

#include <algorithm>
#include <cmath>

#include "psps/error.hpp"

namespace psps {

using nlohmann::json;

int VariableCatalog::add(Variable variable) {
  if (variable.name.empty() || variable.name.find_first_of(" \t\r\n") != std::string::npos) {
    throw BuildError("invalid variable name '" + variable.name + "'");
  }
  const int idx = static_cast<int>(vars_.size());
  if (!index_.emplace(variable.name, idx).second) throw BuildError("duplicate variable name '" + variable.name + "'");
  vars_.push_back(std::move(variable));
  return idx;
}

int VariableCatalog::find(const std::string& name) const {
  const auto it = index_.find(name);
  return it == index_.end() ? -1 : it->second;
}

int VariableCatalog::at(const std::string& name) const {
  const int idx = find(name);
  if (idx < 0) throw BuildError("unknown variable '" + name + "'");
  return idx;
}

namespace names {

namespace {
std::string join(const char* prefix, const std::string& id, int day, int period) {
  return std::string(prefix) + id + "_" + std::to_string(day) + "_" + std::to_string(period);
}
}  // namespace

std::string gen(const std::string& g, int day, int period) { return join("pg_", g, day, period); }
std::string theta(const std::string& bus, int day, int period) { return join("th_", bus, day, period); }
std::string shed(const std::string& bus, int day, int period) { return join("ps_", bus, day, period); }
std::string flow(const std::string& line, int day, int period) { return join("f_", line, day, period); }
std::string z(const std::string& line, int day) { return "z_" + line + "_" + std::to_string(day); }
std::string y(const std::string& line) { return "y_" + line; }

}  // namespace names

int MilpModel::add_row(Row row) {
  for (const auto& t : row.terms) {
    if (t.col < 0 || static_cast<std::size_t>(t.col) >= vars.size()) {
      throw BuildError("row " + row.name + " references an undeclared column");
    }
  }
  if (row.tag.empty()) throw BuildError("row " + row.name + " has no provenance tag");
  rows.push_back(std::move(row));
  return static_cast<int>(rows.size()) - 1;
}

std::size_t MilpModel::integer_count() const {
  return static_cast<std::size_t>(
      std::count_if(vars.all().begin(), vars.all().end(), [](const Variable& v) { return v.integer; }));
}

std::vector<int> MilpModel::free_integer_columns() const {
  std::vector<int> out;
  for (std::size_t j = 0; j < vars.size(); ++j) {
    const auto& v = vars[j];
    if (v.integer && std::ceil(v.lb - 1e-9) < std::floor(v.ub + 1e-9)) out.push_back(static_cast<int>(j));
  }
  return out;
}

double MilpModel::objective_value(const std::vector<double>& x) const {
  double total = objective_offset;
  for (const auto& t : objective) total += t.coef * x[static_cast<std::size_t>(t.col)];
  return total;
}

double MilpModel::activity(const Row& row, const std::vector<double>& x) const {
  double total = 0.0;
  for (const auto& t : row.terms) total += t.coef * x[static_cast<std::size_t>(t.col)];
  return total;
}

std::vector<const Row*> MilpModel::rows_tagged(const std::string& tag) const {
  std::vector<const Row*> out;
  for (const auto& r : rows) {
    if (r.tag == tag) out.push_back(&r);
  }
  return out;
}

double row_violation(const Row& row, double lhs) {
  switch (row.sense) {
    case RowSense::le: return std::max(0.0, lhs - row.rhs);
    case RowSense::ge: return std::max(0.0, row.rhs - lhs);
    case RowSense::eq: return std::abs(lhs - row.rhs);
  }
  return 0.0;
}

std::string to_string(RowSense sense) {
  switch (sense) {
    case RowSense::le: return "<=";
    case RowSense::ge: return ">=";
    case RowSense::eq: return "=";
  }
  return "<=";
}

namespace {

RowSense sense_from_string(const std::string& s) {
  if (s == "<=") return RowSense::le;
  if (s == ">=") return RowSense::ge;
  if (s == "=") return RowSense::eq;
  throw InputError("model: unknown row sense '" + s + "'");
}

json bound_json(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double bound_from_json(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    throw InputError("model: bad bound '" + s + "'");
  }
  return v.get<double>();
}

json terms_json(const std::vector<Term>& terms) {
  json out = json::array();
  for (const auto& t : terms) out.push_back(json::array({t.col, t.coef}));
  return out;
}

std::vector<Term> terms_from_json(const json& j, std::size_t ncols) {
  std::vector<Term> out;
  for (const auto& t : j) {
    const int col = t.at(0).get<int>();
    if (col < 0 || static_cast<std::size_t>(col) >= ncols) throw InputError("model: column index out of range");
    out.push_back({col, t.at(1).get<double>()});
  }
  return out;
}

}  // namespace

json model_to_json(const MilpModel& model) {
  json doc;
  doc["scenario_id"] = model.scenario_id;
  json vars = json::array();
  for (const auto& v : model.vars.all()) {
    json jv = {{"name", v.name}, {"lb", bound_json(v.lb)}, {"ub", bound_json(v.ub)}, {"integer", v.integer}};
    if (!v.tag.empty()) jv["tag"] = v.tag;
    vars.push_back(std::move(jv));
  }
  doc["variables"] = std::move(vars);
  json rows = json::array();
  for (const auto& r : model.rows) {
    rows.push_back({{"name", r.name},
                    {"tag", r.tag},
                    {"sense", to_string(r.sense)},
                    {"rhs", r.rhs},
                    {"terms", terms_json(r.terms)}});
  }
  doc["rows"] = std::move(rows);
  doc["objective"] = {{"sense", "min"}, {"offset", model.objective_offset}, {"terms", terms_json(model.objective)}};
  doc["metadata"] = model.metadata;
  return doc;
}

MilpModel model_from_json(const json& doc) {
  try {
    MilpModel model;
    model.scenario_id = doc.value("scenario_id", "");
    for (const auto& jv : doc.at("variables")) {
      Variable v;
      v.name = jv.at("name").get<std::string>();
      v.lb = bound_from_json(jv.at("lb"));
      v.ub = bound_from_json(jv.at("ub"));
      v.integer = jv.value("integer", false);
      v.tag = jv.value("tag", "");
      model.vars.add(std::move(v));
    }
    for (const auto& jr : doc.at("rows")) {
      Row r;
      r.name = jr.at("name").get<std::string>();
      r.tag = jr.at("tag").get<std::string>();
      r.sense = sense_from_string(jr.at("sense").get<std::string>());
      r.rhs = jr.at("rhs").get<double>();
      r.terms = terms_from_json(jr.at("terms"), model.vars.size());
      model.add_row(std::move(r));
    }
    const auto& obj = doc.at("objective");
    model.objective_offset = obj.value("offset", 0.0);
    model.objective = terms_from_json(obj.at("terms"), model.vars.size());
    if (doc.contains("metadata")) model.metadata = doc.at("metadata");
    return model;
  } catch (const json::exception& e) {
    throw InputError(std::string("model: ") + e.what());
  } catch (const BuildError& e) {
    throw InputError(std::string("model: ") + e.what());
  }
}

}  // namespace psps
