#include "psps/risk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "psps/csv.hpp"
#include "psps/error.hpp"
#include "psps/network_io.hpp"

namespace psps {

using nlohmann::json;

double PixelGrid::at(int d, int row, int col) const {
  const auto& v = day(d);
  return v[static_cast<std::size_t>(row) * static_cast<std::size_t>(geometry.cols) + static_cast<std::size_t>(col)];
}

const std::vector<double>& PixelGrid::day(int d) const {
  const auto it = values.find(d);
  if (it == values.end()) throw InputError("raster has no values for day " + std::to_string(d));
  return it->second;
}

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kPieceEps = 1e-12;

struct Projection {
  double km_per_deg_lat;
  double km_per_deg_lon;
};

Projection projection(const GridGeometry& g) {
  const double k = kEarthRadiusKm * kDegToRad;
  return {k, k * std::cos(g.reference_lat() * kDegToRad)};
}

double segment_km(const Projection& p, const LatLon& a, const LatLon& b) {
  return std::hypot((b.lat - a.lat) * p.km_per_deg_lat, (b.lon - a.lon) * p.km_per_deg_lon);
}

void crossings(double g0, double g1, std::vector<double>& ts) {
  if (g0 == g1) return;
  const double lo = std::min(g0, g1);
  const double hi = std::max(g0, g1);
  for (double k = std::ceil(lo); k <= hi; k += 1.0) {
    const double t = (k - g0) / (g1 - g0);
    if (t > 0.0 && t < 1.0) ts.push_back(t);
  }
}

}  // namespace

std::vector<CellCrossing> clip_path(const GridGeometry& geometry, const std::vector<LatLon>& path) {
  std::vector<CellCrossing> out;
  if (path.size() < 2 || geometry.rows <= 0 || geometry.cols <= 0 || !(geometry.cell_size_deg > 0)) return out;
  const auto proj = projection(geometry);
  const double cell = geometry.cell_size_deg;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    const LatLon& a = path[s];
    const LatLon& b = path[s + 1];
    const double length = segment_km(proj, a, b);
    if (length == 0.0) continue;
    const double x0 = (a.lon - geometry.origin_lon) / cell;
    const double x1 = (b.lon - geometry.origin_lon) / cell;
    const double y0 = (a.lat - geometry.origin_lat) / cell;
    const double y1 = (b.lat - geometry.origin_lat) / cell;
    std::vector<double> ts{0.0, 1.0};
    crossings(x0, x1, ts);
    crossings(y0, y1, ts);
    std::sort(ts.begin(), ts.end());
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double dt = ts[i + 1] - ts[i];
      if (dt <= kPieceEps) continue;
      const double tm = 0.5 * (ts[i] + ts[i + 1]);
      const int col = static_cast<int>(std::floor(x0 + tm * (x1 - x0)));
      const int row = static_cast<int>(std::floor(y0 + tm * (y1 - y0)));
      if (row < 0 || row >= geometry.rows || col < 0 || col >= geometry.cols) continue;
      out.push_back({row, col, dt * length});
    }
  }
  return out;
}

double path_length_km(const GridGeometry& geometry, const std::vector<LatLon>& path) {
  const auto proj = projection(geometry);
  double total = 0.0;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) total += segment_km(proj, path[s], path[s + 1]);
  return total;
}

PixelStats compute_pixel_stats(const PixelGrid& grid, const std::vector<std::vector<LatLon>>& paths,
                               const std::vector<int>& days) {
  std::set<std::pair<int, int>> cells;
  for (const auto& path : paths) {
    for (const auto& c : clip_path(grid.geometry, path)) cells.emplace(c.row, c.col);
  }
  std::vector<double> sample;
  for (int d : days) {
    for (const auto& [row, col] : cells) sample.push_back(grid.at(d, row, col));
  }
  if (sample.empty()) throw InputError("no on-line pixels");
  double mean = 0.0;
  for (double v : sample) mean += v;
  mean /= static_cast<double>(sample.size());
  double var = 0.0;
  for (double v : sample) var += (v - mean) * (v - mean);
  var /= static_cast<double>(sample.size());
  return {mean, std::sqrt(var)};
}

PixelGrid threshold_pixels(const PixelGrid& grid, const PixelStats& stats) {
  PixelGrid out = grid;
  const double cut = stats.mean + stats.std_dev;
  for (auto& [day, values] : out.values) {
    for (double& v : values) {
      if (v < cut) v = 0.0;
    }
  }
  return out;
}

double line_day_risk(const std::vector<LatLon>& path, const PixelGrid& thresholded, int day) {
  double total = 0.0;
  for (const auto& c : clip_path(thresholded.geometry, path)) total += thresholded.at(day, c.row, c.col) * c.length_km;
  return total;
}

std::string to_string(RiskCategory category) {
  switch (category) {
    case RiskCategory::low: return "low";
    case RiskCategory::medium: return "medium";
    case RiskCategory::high: return "high";
  }
  return "low";
}

namespace {

RiskCategory category_from_string(const std::string& s) {
  if (s == "low") return RiskCategory::low;
  if (s == "medium") return RiskCategory::medium;
  if (s == "high") return RiskCategory::high;
  throw InputError("unknown risk category '" + s + "'");
}

}  // namespace

std::optional<std::size_t> RiskProfile::line_position(const std::string& id) const {
  const auto it = std::find(line_ids.begin(), line_ids.end(), id);
  if (it == line_ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - line_ids.begin());
}

std::optional<std::size_t> RiskProfile::day_position(int day) const {
  const auto it = std::find(days.begin(), days.end(), day);
  if (it == days.end()) return std::nullopt;
  return static_cast<std::size_t>(it - days.begin());
}

double RiskProfile::value(const std::string& line, int day) const {
  const auto l = line_position(line);
  const auto d = day_position(day);
  if (!l || !d) throw InputError("risk profile has no entry for line " + line + " day " + std::to_string(day));
  return risk[*d][*l];
}

RiskCategory RiskProfile::category_of(const std::string& line, int day) const {
  const auto l = line_position(line);
  const auto d = day_position(day);
  if (!l || !d) throw InputError("risk profile has no category for line " + line + " day " + std::to_string(day));
  return category[*d][*l];
}

std::vector<std::string> RiskProfile::lines_in(RiskCategory cat, int day) const {
  std::vector<std::string> out;
  const auto d = day_position(day);
  if (!d) return out;
  for (std::size_t l = 0; l < line_ids.size(); ++l) {
    if (category[*d][l] == cat) out.push_back(line_ids[l]);
  }
  return out;
}

std::vector<std::string> RiskProfile::harden_set() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < line_ids.size(); ++l) {
    if (harden[l]) out.push_back(line_ids[l]);
  }
  return out;
}

Classification classify(const std::vector<std::vector<double>>& risk, double r_high, double r_low) {
  if (!(r_low < r_high)) throw ConfigError("risk thresholds require R_low < R_high");
  Classification out;
  const std::size_t lines = risk.empty() ? 0 : risk.front().size();
  out.harden.assign(lines, false);
  for (const auto& day : risk) {
    if (day.size() != lines) throw InputError("risk matrix is ragged");
    std::vector<RiskCategory> cats(lines);
    for (std::size_t l = 0; l < lines; ++l) {
      if (day[l] >= r_high) {
        cats[l] = RiskCategory::high;
      } else if (day[l] >= r_low) {
        cats[l] = RiskCategory::medium;
      } else {
        cats[l] = RiskCategory::low;
      }
      if (cats[l] != RiskCategory::low) out.harden[l] = true;
    }
    out.category.push_back(std::move(cats));
  }
  return out;
}

RiskProfile make_risk_profile(std::vector<std::string> line_ids, std::vector<int> days,
                              std::vector<std::vector<double>> risk, RiskThresholds thresholds) {
  if (risk.size() != days.size()) throw InputError("risk matrix has " + std::to_string(risk.size()) + " days, expected " + std::to_string(days.size()));
  for (const auto& row : risk) {
    if (row.size() != line_ids.size()) throw InputError("risk matrix row does not match line count");
    for (double v : row) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("risk values must be finite and >= 0");
    }
  }
  RiskProfile p;
  auto cls = classify(risk, thresholds.high, thresholds.low);
  p.line_ids = std::move(line_ids);
  p.days = std::move(days);
  p.risk = std::move(risk);
  p.thresholds = thresholds;
  p.category = std::move(cls.category);
  p.harden = std::move(cls.harden);
  if (p.harden.empty()) p.harden.assign(p.line_ids.size(), false);
  for (const auto& row : p.risk) {
    double total = 0.0;
    for (double v : row) total += v;
    p.day_total.push_back(total);
  }
  return p;
}

RiskProfile compute_risk_profile(const Network& network, const PixelGrid& grid, const RiskThresholds& thresholds) {
  const auto& days = network.horizon().days;
  std::vector<std::vector<LatLon>> paths;
  std::vector<std::string> ids;
  for (const auto& line : network.lines()) {
    paths.push_back(network.line_path(line));
    ids.push_back(line.id);
  }
  const PixelStats stats = compute_pixel_stats(grid, paths, days);
  const PixelGrid hot = threshold_pixels(grid, stats);
  std::vector<std::vector<double>> risk;
  for (int d : days) {
    std::vector<double> row;
    for (const auto& path : paths) row.push_back(line_day_risk(path, hot, d));
    risk.push_back(std::move(row));
  }
  auto profile = make_risk_profile(std::move(ids), days, std::move(risk), thresholds);
  profile.stats = stats;
  return profile;
}

std::set<int> psps_days(const RiskProfile& profile) {
  std::set<int> out;
  for (std::size_t d = 0; d < profile.days.size(); ++d) {
    if (profile.day_total[d] >= profile.thresholds.psps) out.insert(profile.days[d]);
  }
  return out;
}

json risk_profile_to_json(const RiskProfile& p) {
  json doc;
  doc["line_ids"] = p.line_ids;
  doc["days"] = p.days;
  doc["risk"] = p.risk;
  doc["day_total"] = p.day_total;
  doc["thresholds"] = {{"R_PSPS", p.thresholds.psps}, {"R_high", p.thresholds.high}, {"R_low", p.thresholds.low}};
  json cats = json::array();
  for (const auto& day : p.category) {
    json row = json::array();
    for (auto c : day) row.push_back(to_string(c));
    cats.push_back(std::move(row));
  }
  doc["categories"] = std::move(cats);
  doc["harden"] = p.harden_set();
  doc["pixel_stats"] = {{"mean", p.stats.mean}, {"std_dev", p.stats.std_dev}};
  const auto trig = psps_days(p);
  doc["psps_days"] = std::vector<int>(trig.begin(), trig.end());
  return doc;
}

RiskProfile risk_profile_from_json(const json& doc) {
  try {
    RiskThresholds t;
    if (doc.contains("thresholds")) {
      const auto& jt = doc.at("thresholds");
      t.psps = jt.value("R_PSPS", t.psps);
      t.high = jt.value("R_high", t.high);
      t.low = jt.value("R_low", t.low);
    }
    auto p = make_risk_profile(doc.at("line_ids").get<std::vector<std::string>>(), doc.at("days").get<std::vector<int>>(),
                               doc.at("risk").get<std::vector<std::vector<double>>>(), t);
    if (doc.contains("categories")) {
      const auto& cats = doc.at("categories");
      if (cats.size() != p.days.size()) throw InputError("risk profile: categories do not match days");
      for (std::size_t d = 0; d < cats.size(); ++d) {
        if (cats[d].size() != p.line_ids.size()) throw InputError("risk profile: categories do not match lines");
        for (std::size_t l = 0; l < cats[d].size(); ++l) {
          const auto c = category_from_string(cats[d][l].get<std::string>());
          if (c != p.category[d][l]) {
            throw InputError("risk profile: category of line " + p.line_ids[l] + " on day " + std::to_string(p.days[d]) +
                             " disagrees with its risk value and thresholds");
          }
        }
      }
    }
    if (doc.contains("pixel_stats")) {
      p.stats.mean = doc.at("pixel_stats").value("mean", 0.0);
      p.stats.std_dev = doc.at("pixel_stats").value("std_dev", 0.0);
    }
    return p;
  } catch (const json::exception& e) {
    throw InputError(std::string("risk profile: ") + e.what());
  }
}

GridGeometry geometry_from_json(const json& doc) {
  GridGeometry g;
  try {
    g.origin_lat = doc.at("origin_lat").get<double>();
    g.origin_lon = doc.at("origin_lon").get<double>();
    g.cell_size_deg = doc.at("cell_size_deg").get<double>();
    g.rows = doc.at("rows").get<int>();
    g.cols = doc.at("cols").get<int>();
  } catch (const json::exception& e) {
    throw InputError(std::string("raster metadata: ") + e.what());
  }
  if (!(g.cell_size_deg > 0) || g.rows <= 0 || g.cols <= 0) {
    throw InputError("raster metadata: cell_size_deg, rows and cols must be positive");
  }
  return g;
}

PixelGrid load_pixel_grid(const std::string& csv_path, const std::string& meta_path) {
  PixelGrid grid;
  grid.geometry = geometry_from_json(read_json_file(meta_path));
  const auto table = csv::read_file(csv_path);
  const int cd = table.column("day");
  const int cr = table.column("row");
  const int cc = table.column("col");
  const int cv = table.column("value");
  if (cd < 0 || cr < 0 || cc < 0 || cv < 0) throw InputError(csv_path + ": header must be day,row,col,value");
  const auto cells = static_cast<std::size_t>(grid.geometry.rows) * static_cast<std::size_t>(grid.geometry.cols);
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const std::string where = csv_path + ":" + std::to_string(table.line_numbers[i]);
    const double day = csv::parse_double(r[cd], where + " day");
    const double row = csv::parse_double(r[cr], where + " row");
    const double col = csv::parse_double(r[cc], where + " col");
    const double value = csv::parse_double(r[cv], where + " value");
    if (day != std::floor(day) || row != std::floor(row) || col != std::floor(col)) {
      throw InputError(where + ": day, row and col must be integers");
    }
    if (row < 0 || row >= grid.geometry.rows || col < 0 || col >= grid.geometry.cols) {
      throw InputError(where + ": cell (" + r[cr] + "," + r[cc] + ") outside the grid");
    }
    if (!(value >= 0.0 && value <= kMaxPixelValue)) throw InputError(where + ": value outside [0, 247]");
    auto& values = grid.values[static_cast<int>(day)];
    if (values.empty()) values.assign(cells, 0.0);
    values[static_cast<std::size_t>(row) * static_cast<std::size_t>(grid.geometry.cols) + static_cast<std::size_t>(col)] = value;
  }
  return grid;
}

}  // namespace psps
