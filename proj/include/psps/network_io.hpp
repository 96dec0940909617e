#pragma once

#include <string>

#include "json.hpp"
#include "psps/grid.hpp"

namespace psps {

/// Network document: arrays `buses`, `lines`, `generators`, object
/// `horizon`, optional `group_families`. Field names follow the domain
/// types; `underground_cost` defaults to 7 M$/mile x `length`.
/// Throws InputError naming the offending field.
Network network_from_json(const nlohmann::json& doc);
nlohmann::json network_to_json(const Network& network);

Network load_network(const std::string& path);
void save_network(const Network& network, const std::string& path);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const nlohmann::json& doc, const std::string& path);

/// Electrical data from a MATPOWER case (`mpc.baseMVA`, `mpc.bus`,
/// `mpc.gen`, `mpc.branch`). Demand and geometry come separately, so buses
/// get empty demand and lines get zero length; out-of-service branches and
/// generators are skipped. Susceptance is -x/(r^2+x^2), flow limit is
/// rateA/baseMVA (unlimited ratings become 99 p.u.), angle limits come from
/// angmin/angmax in degrees when present.
struct MatpowerCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Line> lines;
  std::vector<Generator> generators;
  std::vector<double> bus_pd;  // MW, per bus, for callers building demand
};
MatpowerCase parse_matpower(const std::string& text);
MatpowerCase load_matpower(const std::string& path);

}  // namespace psps
