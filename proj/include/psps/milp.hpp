#pragma once

#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace psps {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowSense { le, ge, eq };

struct Term {
  int col = 0;
  double coef = 0.0;
};

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = kInf;
  bool integer = false;
  std::string tag;  // constraint family encoded by the bounds, may be empty
};

struct Row {
  std::string name;
  std::string tag;  // constraint family, e.g. "2h", "7", "balance"
  RowSense sense = RowSense::le;
  double rhs = 0.0;
  std::vector<Term> terms;
};

/// Columns in creation order with a name index.
class VariableCatalog {
 public:
  int add(Variable variable);
  [[nodiscard]] int find(const std::string& name) const;  // -1 if absent
  [[nodiscard]] int at(const std::string& name) const;    // throws
  [[nodiscard]] bool contains(const std::string& name) const { return find(name) >= 0; }
  [[nodiscard]] std::size_t size() const { return vars_.size(); }
  [[nodiscard]] const Variable& operator[](std::size_t i) const { return vars_[i]; }
  Variable& operator[](std::size_t i) { return vars_[i]; }
  [[nodiscard]] const std::vector<Variable>& all() const { return vars_; }

 private:
  std::vector<Variable> vars_;
  std::unordered_map<std::string, int> index_;
};

/// Variable names. Entity ids must not contain whitespace.
namespace names {
std::string gen(const std::string& gen, int day, int period);
std::string theta(const std::string& bus, int day, int period);
std::string shed(const std::string& bus, int day, int period);
std::string flow(const std::string& line, int day, int period);
std::string z(const std::string& line, int day);
std::string y(const std::string& line);
inline constexpr const char* alpha = "alpha";
}  // namespace names

/// Minimization MILP in row form with provenance tags.
struct MilpModel {
  std::string scenario_id;
  VariableCatalog vars;
  std::vector<Row> rows;
  std::vector<Term> objective;
  double objective_offset = 0.0;
  /// Free-form facts recorded by the builder (total demand, excluded
  /// groups, group demand, ...). Serialized with the model.
  nlohmann::json metadata = nlohmann::json::object();

  int add_row(Row row);
  [[nodiscard]] std::size_t integer_count() const;
  /// Integer columns whose bounds still allow more than one value.
  [[nodiscard]] std::vector<int> free_integer_columns() const;
  [[nodiscard]] double objective_value(const std::vector<double>& x) const;
  [[nodiscard]] double activity(const Row& row, const std::vector<double>& x) const;
  [[nodiscard]] std::vector<const Row*> rows_tagged(const std::string& tag) const;
};

/// Signed violation of a row at activity `lhs` (0 when satisfied).
double row_violation(const Row& row, double lhs);

nlohmann::json model_to_json(const MilpModel& model);
MilpModel model_from_json(const nlohmann::json& doc);

std::string to_string(RowSense sense);

}  // namespace psps
