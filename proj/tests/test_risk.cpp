#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "psps/error.hpp"
#include "psps/risk.hpp"
#include "support/fixtures.hpp"

using namespace psps;
using namespace psps::testing;

namespace {

constexpr double kDegKm = kEarthRadiusKm * std::numbers::pi / 180.0;

GridGeometry geom(int rows, int cols, double cell = 0.01) {
  GridGeometry g;
  g.origin_lat = 37.0;
  g.origin_lon = -122.0;
  g.cell_size_deg = cell;
  g.rows = rows;
  g.cols = cols;
  return g;
}

PixelGrid grid_of(const GridGeometry& g, std::map<int, std::vector<double>> values) {
  PixelGrid p;
  p.geometry = g;
  p.values = std::move(values);
  return p;
}

}  // namespace

TEST(PixelStats, TwoPixels) {
  const auto g = grid_of(geom(1, 2), {{1, {10, 20}}});
  const auto s = compute_pixel_stats(g, {{{37.005, -121.999}, {37.005, -121.981}}}, {1});
  EXPECT_DOUBLE_EQ(s.mean, 15.0);
  EXPECT_DOUBLE_EQ(s.std_dev, 5.0);
}

TEST(PixelStats, ConstantField) {
  const auto g = grid_of(geom(2, 2), {{1, {7, 7, 7, 7}}});
  const auto s = compute_pixel_stats(g, {{{37.001, -121.999}, {37.019, -121.981}}}, {1});
  EXPECT_DOUBLE_EQ(s.mean, 7.0);
  EXPECT_DOUBLE_EQ(s.std_dev, 0.0);
}

TEST(PixelStats, NoIntersectionThrows) {
  const auto g = grid_of(geom(2, 2), {{1, {1, 2, 3, 4}}});
  try {
    compute_pixel_stats(g, {{{40.0, -100.0}, {40.1, -100.1}}}, {1});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_STREQ(e.what(), "no on-line pixels");
  }
}

TEST(PixelStats, MatchesFlatScanOverThreeLinesTwoDays) {
  const auto gm = geom(4, 5);
  std::vector<double> d1(20), d2(20);
  for (int i = 0; i < 20; ++i) {
    d1[static_cast<std::size_t>(i)] = (i * 37) % 50;
    d2[static_cast<std::size_t>(i)] = (i * 11) % 23 + 1;
  }
  const auto g = grid_of(gm, {{1, d1}, {2, d2}});
  const std::vector<std::vector<LatLon>> paths{
      {{37.0013, -121.9987}, {37.0371, -121.9577}},
      {{37.0252, -121.9993}, {37.0217, -121.9532}},
      {{37.0051, -121.9718}, {37.0163, -121.9744}, {37.0392, -121.9702}}};
  // Cells found by dense sampling; pixels shared between lines count once per day.
  std::set<std::pair<int, int>> cells;
  for (const auto& p : paths) {
    for (std::size_t s = 0; s + 1 < p.size(); ++s) {
      for (int k = 0; k <= 20000; ++k) {
        const double u = k / 20000.0;
        const double lat = p[s].lat + u * (p[s + 1].lat - p[s].lat);
        const double lon = p[s].lon + u * (p[s + 1].lon - p[s].lon);
        cells.insert({static_cast<int>(std::floor((lat - 37.0) / 0.01)), static_cast<int>(std::floor((lon + 122.0) / 0.01))});
      }
    }
  }
  std::vector<double> sample;
  for (int day : {1, 2})
    for (const auto& [r, c] : cells) sample.push_back(g.at(day, r, c));
  const double mean = std::accumulate(sample.begin(), sample.end(), 0.0) / static_cast<double>(sample.size());
  double var = 0.0;
  for (double v : sample) var += (v - mean) * (v - mean);
  const double sd = std::sqrt(var / static_cast<double>(sample.size()));
  const auto s = compute_pixel_stats(g, paths, {1, 2});
  EXPECT_NEAR(s.mean, mean, 1e-12);
  EXPECT_NEAR(s.std_dev, sd, 1e-12);
}

TEST(Threshold, BoundaryAndIdempotence) {
  const auto g = grid_of(geom(1, 3), {{1, {16, 14.999, 15}}});
  const PixelStats st{10, 5};
  const auto t = threshold_pixels(g, st);
  EXPECT_EQ(t.day(1), (std::vector<double>{16, 0, 15}));
  EXPECT_EQ(threshold_pixels(t, st).day(1), t.day(1));
}

TEST(LineRisk, SingleCellIntegral) {
  const auto g = grid_of(geom(1, 1, 0.1), {{1, {50}}});
  const double dlat = 2.0 / kDegKm;
  const std::vector<LatLon> path{{37.01, -121.95}, {37.01 + dlat, -121.95}};
  EXPECT_NEAR(path_length_km(g.geometry, path), 2.0, 1e-12);
  EXPECT_NEAR(line_day_risk(path, g, 1), 100.0, 1e-9);
}

TEST(LineRisk, ZeroCellContributesNothing) {
  const auto g = grid_of(geom(2, 1, 0.1), {{1, {0, 30}}});
  const double dlat = 1.0 / kDegKm;
  const std::vector<LatLon> path{{37.1 - dlat, -121.95}, {37.1 + dlat, -121.95}};
  EXPECT_NEAR(line_day_risk(path, g, 1), 30.0, 1e-9);
}

TEST(LineRisk, OutsideGridIsZero) {
  const auto g = grid_of(geom(2, 2), {{1, {5, 5, 5, 5}}});
  EXPECT_EQ(line_day_risk({{10.0, 10.0}, {10.5, 10.5}}, g, 1), 0.0);
}

TEST(LineRisk, ClipLengthsSumToInsideLength) {
  const auto gm = geom(3, 3);
  const std::vector<LatLon> path{{37.0007, -121.9996}, {37.0288, -121.9715}};
  double sum = 0.0;
  for (const auto& c : clip_path(gm, path)) sum += c.length_km;
  EXPECT_NEAR(sum, path_length_km(gm, path), 1e-12);
  EXPECT_EQ(clip_path(gm, path).size(), 5u);
}

TEST(Classify, DefaultThresholds) {
  const auto c = classify({{2e6, 0.5, 1e6, 1.0}}, 1e6, 1.0);
  EXPECT_EQ(c.category[0][0], RiskCategory::high);
  EXPECT_EQ(c.category[0][1], RiskCategory::low);
  EXPECT_EQ(c.category[0][2], RiskCategory::high);
  EXPECT_EQ(c.category[0][3], RiskCategory::medium);
  EXPECT_EQ(c.harden, (std::vector<bool>{true, false, true, true}));
  EXPECT_THROW(classify({{1.0}}, 1.0, 1.0), ConfigError);
  EXPECT_THROW(classify({{1.0}}, 1.0, 2.0), ConfigError);
}

TEST(Classify, HardenIsUnionOverDays) {
  const auto c = classify({{0.0, 5.0, 0.0}, {2e6, 0.0, 0.0}}, 1e6, 1.0);
  EXPECT_EQ(c.harden, (std::vector<bool>{true, true, false}));
}

TEST(Profile, DayTotalsAndPsps) {
  RiskThresholds t;
  const auto p = make_risk_profile({"A", "B"}, {1, 2, 3, 4, 5},
                                   {{3e8, 3e8}, {0, 0}, {5e8, 1e8 - 1}, {6e8, 1}, {1e6, 1e6}}, t);
  std::set<int> want;
  for (std::size_t d = 0; d < p.days.size(); ++d) {
    const double sum = p.risk[d][0] + p.risk[d][1];
    EXPECT_EQ(p.day_total[d], sum);
    if (sum >= t.psps) want.insert(p.days[d]);
  }
  EXPECT_EQ(psps_days(p), want);
  EXPECT_TRUE(psps_days(p).count(1));
  EXPECT_FALSE(psps_days(p).count(3));
}

TEST(Profile, AllZeroHasNoTriggerDays) {
  const auto p = make_risk_profile({"A"}, {1, 2}, {{0}, {0}}, RiskThresholds{});
  EXPECT_TRUE(psps_days(p).empty());
  EXPECT_TRUE(p.harden_set().empty());
}

TEST(Profile, JsonRoundTrip) {
  const auto f = random_fixture(11);
  const auto doc = risk_profile_to_json(f.risk);
  const auto back = risk_profile_from_json(doc);
  EXPECT_EQ(back.risk, f.risk.risk);
  EXPECT_EQ(back.category, f.risk.category);
  EXPECT_EQ(back.harden, f.risk.harden);
  EXPECT_EQ(risk_profile_to_json(back), doc);
}

TEST(Profile, ComputedFromNetwork) {
  const Horizon h = horizon(2, 1);
  Bus a = flat_bus("A", h, 0.0);
  a.location = {37.005, -121.995};
  Bus b = flat_bus("B", h, 1.0);
  b.location = {37.005, -121.975};
  Network net(h, {a, b}, {make_line("L", "A", "B")}, {make_gen("G", "A", 1)});
  const auto g = grid_of(geom(1, 3), {{1, {100, 200, 0}}, {2, {0, 10, 0}}});
  RiskThresholds t;
  t.high = 500;
  t.low = 1;
  const auto p = compute_risk_profile(net, g, t);
  // On-line pixels: all three cells on both days.
  EXPECT_NEAR(p.stats.mean, 310.0 / 6.0, 1e-12);
  const double km = 0.01 * kDegKm * std::cos(37.005 * std::numbers::pi / 180.0);
  EXPECT_NEAR(p.risk[0][0], 200.0 * km, 1e-9);
  EXPECT_EQ(p.risk[1][0], 0.0);
  EXPECT_EQ(p.category[0][0], RiskCategory::medium);
}

TEST(RasterFile, RejectsOutOfRangeValues) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "psps-raster-test";
  fs::create_directories(dir);
  std::ofstream(dir / "meta.json") << R"({"origin_lat": 37, "origin_lon": -122, "cell_size_deg": 0.01, "rows": 1, "cols": 2})";
  std::ofstream(dir / "ok.csv") << "day,row,col,value\n1,0,1,247\n";
  std::ofstream(dir / "bad.csv") << "day,row,col,value\n1,0,0,248\n";
  const auto g = load_pixel_grid((dir / "ok.csv").string(), (dir / "meta.json").string());
  EXPECT_EQ(g.at(1, 0, 0), 0.0);
  EXPECT_EQ(g.at(1, 0, 1), 247.0);
  try {
    load_pixel_grid((dir / "bad.csv").string(), (dir / "meta.json").string());
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
  }
  fs::remove_all(dir);
}
