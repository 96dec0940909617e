#include "psps/mps.hpp"

#include <cmath>
#include <sstream>

#include "psps/csv.hpp"
#include "psps/error.hpp"

namespace psps {

namespace {

constexpr const char* kObjectiveRow = "obj";

char sense_code(RowSense s) {
  switch (s) {
    case RowSense::le: return 'L';
    case RowSense::ge: return 'G';
    case RowSense::eq: return 'E';
  }
  return 'L';
}

}  // namespace

std::string emit_model_file(const MilpModel& model) {
  const std::size_t ncols = model.vars.size();
  // Column-major copy of the row entries, keeping row order within a column.
  std::vector<std::vector<std::pair<std::size_t, double>>> columns(ncols);
  for (std::size_t i = 0; i < model.rows.size(); ++i) {
    for (const auto& t : model.rows[i].terms) {
      if (t.coef != 0.0) columns[static_cast<std::size_t>(t.col)].emplace_back(i, t.coef);
    }
  }
  std::vector<double> obj(ncols, 0.0);
  for (const auto& t : model.objective) obj[static_cast<std::size_t>(t.col)] += t.coef;

  for (std::size_t j = 0; j < ncols; ++j) {
    if (model.vars[j].name.empty()) throw BuildError("internal error: unnamed variable at column " + std::to_string(j));
  }
  for (const auto& r : model.rows) {
    if (r.name.empty()) throw BuildError("internal error: unnamed row");
  }

  std::ostringstream out;
  out << "NAME " << (model.scenario_id.empty() ? "model" : model.scenario_id) << '\n';
  out << "ROWS\n";
  out << " N " << kObjectiveRow << '\n';
  for (const auto& r : model.rows) out << ' ' << sense_code(r.sense) << ' ' << r.name << '\n';
  out << "COLUMNS\n";
  bool in_integer_block = false;
  int marker = 0;
  for (std::size_t j = 0; j < ncols; ++j) {
    const auto& v = model.vars[j];
    if (v.integer != in_integer_block) {
      out << "    MARKER" << marker++ << " 'MARKER' " << (v.integer ? "'INTORG'" : "'INTEND'") << '\n';
      in_integer_block = v.integer;
    }
    out << "    " << v.name << ' ' << kObjectiveRow << ' ' << format_number(obj[j]) << '\n';
    for (const auto& [row, coef] : columns[j]) {
      out << "    " << v.name << ' ' << model.rows[row].name << ' ' << format_number(coef) << '\n';
    }
  }
  if (in_integer_block) out << "    MARKER" << marker++ << " 'MARKER' 'INTEND'\n";
  out << "RHS\n";
  if (model.objective_offset != 0.0) out << "    RHS " << kObjectiveRow << ' ' << format_number(-model.objective_offset) << '\n';
  for (const auto& r : model.rows) {
    if (r.rhs != 0.0) out << "    RHS " << r.name << ' ' << format_number(r.rhs) << '\n';
  }
  out << "BOUNDS\n";
  for (std::size_t j = 0; j < ncols; ++j) {
    const auto& v = model.vars[j];
    const bool lb_inf = std::isinf(v.lb);
    const bool ub_inf = std::isinf(v.ub);
    if (!lb_inf && !ub_inf && v.lb == v.ub) {
      out << " FX BND " << v.name << ' ' << format_number(v.lb) << '\n';
    } else if (lb_inf && ub_inf) {
      out << " FR BND " << v.name << '\n';
    } else {
      if (lb_inf) {
        out << " MI BND " << v.name << '\n';
      } else {
        out << " LO BND " << v.name << ' ' << format_number(v.lb) << '\n';
      }
      if (ub_inf) {
        out << " PL BND " << v.name << '\n';
      } else {
        out << " UP BND " << v.name << ' ' << format_number(v.ub) << '\n';
      }
    }
  }
  out << "ENDATA\n";
  return out.str();
}

}  // namespace psps
