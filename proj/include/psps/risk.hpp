#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "psps/grid.hpp"

namespace psps {

inline constexpr double kMaxPixelValue = 247.0;
inline constexpr double kEarthRadiusKm = 6371.0088;

/// Raster layout. Cell (row, col) covers latitudes
/// [origin_lat + row*cell, origin_lat + (row+1)*cell) and the matching
/// longitude band from origin_lon; rows grow northward, cols eastward.
struct GridGeometry {
  double origin_lat = 0.0;
  double origin_lon = 0.0;
  double cell_size_deg = 0.01;
  int rows = 0;
  int cols = 0;

  /// Latitude used for the equirectangular degree-to-km conversion.
  [[nodiscard]] double reference_lat() const { return origin_lat + 0.5 * rows * cell_size_deg; }
};

/// Daily potential values, row-major per day.
struct PixelGrid {
  GridGeometry geometry;
  std::map<int, std::vector<double>> values;

  [[nodiscard]] double at(int day, int row, int col) const;
  [[nodiscard]] const std::vector<double>& day(int day) const;
};

struct PixelStats {
  double mean = 0.0;
  double std_dev = 0.0;
};

/// Portion of a path lying inside one cell.
struct CellCrossing {
  int row = 0;
  int col = 0;
  double length_km = 0.0;
};

/// Exact clipping of a polyline against the grid. Pieces outside the grid
/// are dropped; zero-length touches (corners, edges) produce nothing.
std::vector<CellCrossing> clip_path(const GridGeometry& geometry, const std::vector<LatLon>& path);

/// Length of a polyline in km under the grid's equirectangular projection.
double path_length_km(const GridGeometry& geometry, const std::vector<LatLon>& path);

/// Mean and population standard deviation of the pixel values touched by
/// any path on any of `days`. A pixel crossed by several lines counts once
/// per day. Throws InputError("no on-line pixels") when nothing is touched.
PixelStats compute_pixel_stats(const PixelGrid& grid, const std::vector<std::vector<LatLon>>& paths,
                               const std::vector<int>& days);

/// Keeps values >= mean + std_dev, zeroes the rest.
PixelGrid threshold_pixels(const PixelGrid& grid, const PixelStats& stats);

/// Sum over crossed cells of (value x length inside the cell in km).
double line_day_risk(const std::vector<LatLon>& path, const PixelGrid& thresholded, int day);

struct RiskThresholds {
  double psps = 6e8;
  double high = 1e6;
  double low = 1.0;
};

enum class RiskCategory { low, medium, high };

std::string to_string(RiskCategory category);

/// Per-line, per-day risk with derived categories. Index order follows
/// `line_ids` and `days`.
struct RiskProfile {
  std::vector<std::string> line_ids;
  std::vector<int> days;
  std::vector<std::vector<double>> risk;  // [day pos][line pos]
  std::vector<double> day_total;          // R_d
  RiskThresholds thresholds;
  std::vector<std::vector<RiskCategory>> category;  // [day pos][line pos]
  std::vector<bool> harden;                         // per line pos
  PixelStats stats;

  [[nodiscard]] std::optional<std::size_t> line_position(const std::string& id) const;
  [[nodiscard]] std::optional<std::size_t> day_position(int day) const;
  [[nodiscard]] double value(const std::string& line, int day) const;
  [[nodiscard]] RiskCategory category_of(const std::string& line, int day) const;
  [[nodiscard]] bool is_switchable(std::size_t day_pos, std::size_t line_pos) const {
    return category[day_pos][line_pos] != RiskCategory::low;
  }
  [[nodiscard]] std::vector<std::string> lines_in(RiskCategory category, int day) const;
  [[nodiscard]] std::vector<std::string> harden_set() const;
};

/// Classification of raw risk values. Throws ConfigError if low >= high.
struct Classification {
  std::vector<std::vector<RiskCategory>> category;  // [day][line]
  std::vector<bool> harden;
};
Classification classify(const std::vector<std::vector<double>>& risk, double r_high, double r_low);

/// Assembles a profile from precomputed values (day totals, categories,
/// harden set).
RiskProfile make_risk_profile(std::vector<std::string> line_ids, std::vector<int> days,
                              std::vector<std::vector<double>> risk, RiskThresholds thresholds);

/// Full raster pipeline over the network's horizon: stats over all lines and
/// days, thresholding, path integration, classification.
RiskProfile compute_risk_profile(const Network& network, const PixelGrid& grid,
                                 const RiskThresholds& thresholds);

/// Days whose total risk meets the shutoff trigger (R_d >= R_PSPS).
std::set<int> psps_days(const RiskProfile& profile);

nlohmann::json risk_profile_to_json(const RiskProfile& profile);
RiskProfile risk_profile_from_json(const nlohmann::json& doc);

/// Raster CSV `day,row,col,value` with sidecar geometry JSON
/// `{origin_lat, origin_lon, cell_size_deg, rows, cols}`. Missing cells are
/// zero. Values outside [0, 247] are rejected.
PixelGrid load_pixel_grid(const std::string& csv_path, const std::string& meta_path);
GridGeometry geometry_from_json(const nlohmann::json& doc);

}  // namespace psps
