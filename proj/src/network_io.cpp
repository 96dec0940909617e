#include "psps/network_io.hpp"

#include <cmath>
#include <limits>
#include <fstream>
#include <numbers>
#include <regex>
#include <sstream>

#include "psps/csv.hpp"
#include "psps/error.hpp"

namespace psps {

using nlohmann::json;

namespace {

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw InputError(where + ": missing field '" + key + "'");
  return obj.at(key);
}

double number(const json& v, const std::string& where) {
  if (!v.is_number()) throw InputError(where + ": expected a number");
  return v.get<double>();
}

double number_field(const json& obj, const char* key, const std::string& where) {
  return number(require(obj, key, where), where + "." + key);
}

double number_or(const json& obj, const char* key, double fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return number(obj.at(key), where + "." + key);
}

std::string id_field(const json& obj, const char* key, const std::string& where) {
  const auto& v = require(obj, key, where);
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw InputError(where + "." + key + ": expected a string or integer id");
}

LatLon latlon(const json& v, const std::string& where) {
  if (v.is_array() && v.size() == 2) return {number(v[0], where + "[0]"), number(v[1], where + "[1]")};
  if (v.is_object()) return {number_field(v, "lat", where), number_field(v, "lon", where)};
  throw InputError(where + ": expected {lat, lon} or [lat, lon]");
}

std::map<std::string, double> fraction_map(const json& obj, const char* key, const std::string& where) {
  std::map<std::string, double> out;
  if (!obj.contains(key)) return out;
  const auto& m = obj.at(key);
  if (!m.is_object()) throw InputError(where + "." + key + ": expected an object");
  for (const auto& [k, v] : m.items()) out[k] = number(v, where + "." + key + "." + k);
  return out;
}

json latlon_json(const LatLon& p) { return json::array({p.lat, p.lon}); }

}  // namespace

Network network_from_json(const json& doc) {
  if (!doc.is_object()) throw InputError("network: top-level value must be an object");
  Horizon horizon;
  {
    const auto& h = require(doc, "horizon", "network");
    const auto& days = require(h, "days", "horizon");
    if (!days.is_array()) throw InputError("horizon.days: expected an array");
    for (std::size_t i = 0; i < days.size(); ++i) {
      if (!days[i].is_number_integer()) throw InputError("horizon.days[" + std::to_string(i) + "]: expected an integer");
      horizon.days.push_back(days[i].get<int>());
    }
    const auto& periods = require(h, "periods_per_day", "horizon");
    if (!periods.is_number_integer()) throw InputError("horizon.periods_per_day: expected an integer");
    horizon.periods_per_day = periods.get<int>();
    horizon.base_power = number_or(h, "base_power", 100.0, "horizon");
  }

  std::vector<Bus> buses;
  const auto& jbuses = require(doc, "buses", "network");
  if (!jbuses.is_array()) throw InputError("network.buses: expected an array");
  for (std::size_t i = 0; i < jbuses.size(); ++i) {
    const auto& b = jbuses[i];
    const std::string where = "buses[" + std::to_string(i) + "]";
    Bus bus;
    bus.id = id_field(b, "id", where);
    if (b.contains("demand")) {
      const auto& dem = b.at("demand");
      if (!dem.is_array()) throw InputError(where + ".demand: expected [day][period] array");
      for (std::size_t d = 0; d < dem.size(); ++d) {
        if (!dem[d].is_array()) throw InputError(where + ".demand[" + std::to_string(d) + "]: expected an array");
        std::vector<double> row;
        for (std::size_t t = 0; t < dem[d].size(); ++t) {
          row.push_back(number(dem[d][t], where + ".demand[" + std::to_string(d) + "][" + std::to_string(t) + "]"));
        }
        bus.demand.push_back(std::move(row));
      }
    }
    bus.population = number_or(b, "population", 0.0, where);
    bus.group_fractions = fraction_map(b, "group_fractions", where);
    bus.vuln_fraction = fraction_map(b, "vuln_fraction", where);
    if (b.contains("location")) bus.location = latlon(b.at("location"), where + ".location");
    buses.push_back(std::move(bus));
  }

  std::vector<Line> lines;
  const auto& jlines = require(doc, "lines", "network");
  if (!jlines.is_array()) throw InputError("network.lines: expected an array");
  for (std::size_t i = 0; i < jlines.size(); ++i) {
    const auto& l = jlines[i];
    const std::string where = "lines[" + std::to_string(i) + "]";
    Line line;
    line.id = id_field(l, "id", where);
    line.from_bus = id_field(l, "from_bus", where);
    line.to_bus = id_field(l, "to_bus", where);
    line.susceptance = number_field(l, "susceptance", where);
    line.flow_limit = number_field(l, "flow_limit", where);
    line.angle_min = number_or(l, "angle_min", line.angle_min, where);
    line.angle_max = number_or(l, "angle_max", line.angle_max, where);
    line.length = number_or(l, "length", 0.0, where);
    line.underground_cost = number_or(l, "underground_cost", kUndergroundCostPerMile * line.length, where);
    if (l.contains("path")) {
      const auto& p = l.at("path");
      if (!p.is_array()) throw InputError(where + ".path: expected an array of points");
      for (std::size_t k = 0; k < p.size(); ++k) line.path.push_back(latlon(p[k], where + ".path[" + std::to_string(k) + "]"));
    }
    lines.push_back(std::move(line));
  }

  std::vector<Generator> gens;
  const auto& jgens = require(doc, "generators", "network");
  if (!jgens.is_array()) throw InputError("network.generators: expected an array");
  for (std::size_t i = 0; i < jgens.size(); ++i) {
    const auto& g = jgens[i];
    const std::string where = "generators[" + std::to_string(i) + "]";
    Generator gen;
    gen.id = id_field(g, "id", where);
    gen.bus = id_field(g, "bus", where);
    gen.p_min = number_or(g, "p_min", 0.0, where);
    gen.p_max = number_field(g, "p_max", where);
    gens.push_back(std::move(gen));
  }

  std::vector<GroupFamily> families;
  if (doc.contains("group_families")) {
    const auto& jf = doc.at("group_families");
    if (!jf.is_array()) throw InputError("network.group_families: expected an array");
    for (std::size_t i = 0; i < jf.size(); ++i) {
      const std::string where = "group_families[" + std::to_string(i) + "]";
      GroupFamily family;
      family.name = id_field(jf[i], "name", where);
      const auto kind = require(jf[i], "kind", where);
      if (kind == "partition") {
        family.kind = FamilyKind::partition;
      } else if (kind == "overlay") {
        family.kind = FamilyKind::overlay;
      } else {
        throw InputError(where + ".kind: expected \"partition\" or \"overlay\"");
      }
      const auto& groups = require(jf[i], "groups", where);
      if (!groups.is_array()) throw InputError(where + ".groups: expected an array");
      for (const auto& g : groups) {
        if (!g.is_string()) throw InputError(where + ".groups: expected strings");
        family.groups.push_back(g.get<std::string>());
      }
      families.push_back(std::move(family));
    }
  }
  return Network(std::move(horizon), std::move(buses), std::move(lines), std::move(gens), std::move(families));
}

json network_to_json(const Network& network) {
  json doc;
  const auto& h = network.horizon();
  doc["horizon"] = {{"days", h.days}, {"periods_per_day", h.periods_per_day}, {"base_power", h.base_power}};
  json buses = json::array();
  for (const auto& b : network.buses()) {
    json jb;
    jb["id"] = b.id;
    jb["demand"] = b.demand;
    jb["population"] = b.population;
    jb["group_fractions"] = b.group_fractions;
    jb["vuln_fraction"] = b.vuln_fraction;
    jb["location"] = latlon_json(b.location);
    buses.push_back(std::move(jb));
  }
  doc["buses"] = std::move(buses);
  json lines = json::array();
  for (const auto& l : network.lines()) {
    json jl;
    jl["id"] = l.id;
    jl["from_bus"] = l.from_bus;
    jl["to_bus"] = l.to_bus;
    jl["susceptance"] = l.susceptance;
    jl["flow_limit"] = l.flow_limit;
    jl["angle_min"] = l.angle_min;
    jl["angle_max"] = l.angle_max;
    jl["length"] = l.length;
    jl["underground_cost"] = l.underground_cost;
    json path = json::array();
    for (const auto& p : l.path) path.push_back(latlon_json(p));
    jl["path"] = std::move(path);
    lines.push_back(std::move(jl));
  }
  doc["lines"] = std::move(lines);
  json gens = json::array();
  for (const auto& g : network.generators()) {
    gens.push_back({{"id", g.id}, {"bus", g.bus}, {"p_min", g.p_min}, {"p_max", g.p_max}});
  }
  doc["generators"] = std::move(gens);
  json families = json::array();
  for (const auto& f : network.families()) {
    families.push_back({{"name", f.name},
                        {"kind", f.kind == FamilyKind::partition ? "partition" : "overlay"},
                        {"groups", f.groups}});
  }
  doc["group_families"] = std::move(families);
  return doc;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": invalid JSON: " + e.what());
  }
}

void write_json_file(const json& doc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << doc.dump(2) << '\n';
  if (!out) throw InputError("write failed: " + path);
}

Network load_network(const std::string& path) {
  try {
    return network_from_json(read_json_file(path));
  } catch (const InputError& e) {
    const std::string msg = e.what();
    if (msg.rfind(path, 0) == 0) throw;
    throw InputError(path + ": " + msg);
  } catch (const json::exception& e) {
    throw InputError(path + ": " + e.what());
  }
}

void save_network(const Network& network, const std::string& path) { write_json_file(network_to_json(network), path); }

// ---------------------------------------------------------------------------

namespace {

std::string strip_comments(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  bool comment = false;
  for (char c : text) {
    if (c == '%') comment = true;
    if (c == '\n') comment = false;
    if (!comment) out.push_back(c);
  }
  return out;
}

std::vector<std::vector<double>> matrix(const std::string& text, const std::string& name) {
  const std::regex re("mpc\\." + name + "\\s*=\\s*\\[([^\\]]*)\\]");
  std::smatch m;
  if (!std::regex_search(text, m, re)) throw InputError("matpower: missing mpc." + name);
  std::vector<std::vector<double>> rows;
  std::string body = m[1];
  auto flush = [&](const std::string& r) {
    std::stringstream in(r);
    std::vector<double> row;
    std::string tok;
    while (in >> tok) {
      if (tok.back() == ',') tok.pop_back();
      if (tok.empty()) continue;
      if (tok == "Inf" || tok == "inf") {
        row.push_back(std::numeric_limits<double>::infinity());
      } else {
        row.push_back(csv::parse_double(tok, "mpc." + name));
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  };
  std::string current;
  for (char c : body) {
    if (c == ';' || c == '\n') {
      flush(current);
      current.clear();
    } else {
      current.push_back(c == '\t' ? ' ' : c);
    }
  }
  flush(current);
  return rows;
}

constexpr double kUnlimitedFlow = 99.0;

}  // namespace

MatpowerCase parse_matpower(const std::string& raw) {
  const std::string text = strip_comments(raw);
  MatpowerCase out;
  std::smatch m;
  if (std::regex_search(text, m, std::regex("mpc\\.baseMVA\\s*=\\s*([0-9.eE+-]+)"))) {
    out.base_mva = csv::parse_double(m[1], "mpc.baseMVA");
  }
  const auto id = [](double v) { return std::to_string(static_cast<long long>(std::llround(v))); };
  for (const auto& row : matrix(text, "bus")) {
    if (row.size() < 3) throw InputError("matpower: bus row needs at least 3 columns");
    Bus bus;
    bus.id = id(row[0]);
    out.buses.push_back(std::move(bus));
    out.bus_pd.push_back(row[2]);
  }
  for (const auto& row : matrix(text, "gen")) {
    if (row.size() < 10) throw InputError("matpower: gen row needs at least 10 columns");
    if (row[7] <= 0) continue;
    Generator gen;
    gen.id = "G" + std::to_string(out.generators.size() + 1);
    gen.bus = id(row[0]);
    gen.p_max = row[8] / out.base_mva;
    gen.p_min = std::max(0.0, row[9] / out.base_mva);
    out.generators.push_back(std::move(gen));
  }
  for (const auto& row : matrix(text, "branch")) {
    if (row.size() < 11) throw InputError("matpower: branch row needs at least 11 columns");
    if (row[10] <= 0) continue;
    Line line;
    line.id = "L" + std::to_string(out.lines.size() + 1);
    line.from_bus = id(row[0]);
    line.to_bus = id(row[1]);
    const double r = row[2];
    const double x = row[3];
    const double z2 = r * r + x * x;
    line.susceptance = z2 > 0 ? -x / z2 : 0.0;
    const double rate = row[5];
    line.flow_limit = (rate > 0 && std::isfinite(rate)) ? rate / out.base_mva : kUnlimitedFlow;
    if (row.size() >= 13) {
      const double to_rad = std::numbers::pi / 180.0;
      if (row[11] > -360 && row[11] < 360 && row[12] > -360 && row[12] < 360 && row[11] < row[12]) {
        line.angle_min = row[11] * to_rad;
        line.angle_max = row[12] * to_rad;
      }
    }
    out.lines.push_back(std::move(line));
  }
  return out;
}

MatpowerCase load_matpower(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_matpower(ss.str());
  } catch (const InputError& e) {
    throw InputError(path + ": " + e.what());
  }
}

}  // namespace psps
