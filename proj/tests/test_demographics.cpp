#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "psps/demographics.hpp"
#include "psps/error.hpp"
#include "support/fixtures.hpp"

using namespace psps;
using namespace psps::testing;

namespace {

TractRecord tract(const std::string& id, LatLon at, double pop, std::map<std::string, double> extra = {}) {
  TractRecord t;
  t.gidtr = id;
  t.center = at;
  t.features = std::move(extra);
  t.features[kPopulationFeature] = pop;
  return t;
}

// Point `km` due east of `from` on the great circle.
LatLon east(const LatLon& from, double km) {
  const double deg = km / (kEarthRadiusKm * std::numbers::pi / 180.0) / std::cos(from.lat * std::numbers::pi / 180.0);
  LatLon p{from.lat, from.lon + deg};
  // Refine so the haversine distance is exact enough for weight checks.
  for (int i = 0; i < 20; ++i) p.lon = from.lon + (p.lon - from.lon) * km / haversine_km(from, p);
  return p;
}

}  // namespace

TEST(Assign, SingleTractSingleBus) {
  const auto a = assign_tracts({tract("T", {38, -122}, 10)}, {{"N", {39, -121}}});
  EXPECT_DOUBLE_EQ(a.weight(0, 0), 1.0);
}

TEST(Assign, VerbatimDistanceWeights) {
  const LatLon c{38.0, -122.0};
  // Both buses sit inside the radius once pass 2 stretches it to the far bus.
  const auto a = assign_tracts({tract("T", c, 10)}, {{"N1", east(c, 1.0)}, {"N2", east(c, 3.0)}});
  EXPECT_NEAR(a.weight(0, 0), 0.25, 1e-9);
  EXPECT_NEAR(a.weight(0, 1), 0.75, 1e-9);
  EXPECT_NEAR(a.radius_km[0], 3.0, 1e-9);
}

TEST(Assign, InverseDistanceSwitch) {
  const LatLon c{38.0, -122.0};
  AssignmentOptions o;
  o.inverse_distance = true;
  const auto a = assign_tracts({tract("T", c, 10)}, {{"N1", east(c, 1.0)}, {"N2", east(c, 3.0)}}, o);
  EXPECT_NEAR(a.weight(0, 0), 0.75, 1e-9);
  EXPECT_NEAR(a.weight(0, 1), 0.25, 1e-9);
}

TEST(Assign, ZeroDistanceIsFloored) {
  const LatLon c{38.0, -122.0};
  const auto a = assign_tracts({tract("T", c, 10)}, {{"N1", c}, {"N2", east(c, 0.999)}});
  EXPECT_NEAR(a.weight(0, 0), 0.001, 1e-9);
  EXPECT_NEAR(a.weight(0, 0) + a.weight(0, 1), 1.0, 1e-12);
}

TEST(Assign, EveryBusCoveredAndWeightsSumToOne) {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> lat(37.9, 38.1), lon(-122.1, -121.9);
  std::vector<TractRecord> tracts;
  std::vector<BusSite> buses;
  for (int i = 0; i < 12; ++i) tracts.push_back(tract("T" + std::to_string(i), {lat(rng), lon(rng)}, 100 + i));
  for (int i = 0; i < 20; ++i) buses.push_back({"N" + std::to_string(i), {lat(rng), lon(rng)}});
  const auto a = assign_tracts(tracts, buses);
  for (std::size_t n = 0; n < buses.size(); ++n) {
    double w = 0.0;
    for (std::size_t c = 0; c < tracts.size(); ++c) w += a.weight(c, n);
    EXPECT_GT(w, 0.0) << buses[n].id;
  }
  for (std::size_t c = 0; c < tracts.size(); ++c) {
    double s = 0.0;
    for (const auto& [n, w] : a.weights[c]) s += w;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
  EXPECT_TRUE(a.unassigned_tracts.empty());
}

TEST(Assign, EmptyInputsThrow) {
  EXPECT_THROW(assign_tracts({}, {{"N", {0, 0}}}), InputError);
  EXPECT_THROW(assign_tracts({tract("T", {0, 0}, 1)}, {}), InputError);
}

TEST(Features, IdentityAndMixture) {
  const auto one = tract("T", {38, -122}, 100, {{"A", 40}});
  const auto a1 = assign_tracts({one}, {{"N", {38.01, -122}}});
  const auto f1 = bus_features({one}, a1, 1);
  EXPECT_EQ(f1[0].features, one.features);

  AssignmentMatrix half;
  half.weights = {{{0, 0.5}, {1, 0.5}}, {{0, 0.5}, {1, 0.5}}};
  half.radius_km = {1, 1};
  const auto f2 = bus_features({tract("T1", {0, 0}, 100), tract("T2", {0, 0}, 300)}, half, 2);
  EXPECT_DOUBLE_EQ(f2[0].population(), 200.0);
}

TEST(Features, LinearInTracts) {
  const std::vector<TractRecord> a{tract("T1", {38, -122}, 100, {{"G", 10}})};
  const std::vector<TractRecord> b{tract("T2", {38.02, -122.01}, 50, {{"G", 30}})};
  std::vector<TractRecord> both = a;
  both.push_back(b[0]);
  const auto m = assign_tracts(both, {{"N1", {38.0, -122.0}}, {"N2", {38.03, -122.0}}});
  AssignmentMatrix ma = m, mb = m;
  ma.weights = {m.weights[0]};
  mb.weights = {m.weights[1]};
  const auto fa = bus_features(a, ma, 2);
  const auto fb = bus_features(b, mb, 2);
  const auto fab = bus_features(both, m, 2);
  const auto g = [](const BusFeatures& f) { return f.features.count("G") ? f.features.at("G") : 0.0; };
  for (std::size_t n = 0; n < 2; ++n) {
    EXPECT_NEAR(g(fab[n]), g(fa[n]) + g(fb[n]), 1e-12);
    EXPECT_NEAR(fab[n].population(), fa[n].population() + fb[n].population(), 1e-12);
  }
}

TEST(Fractions, VulnerableShares) {
  auto flagged = tract("F", {0, 0}, 100, {{"A", 100}});
  flagged.vuln_flags["CEJST"] = true;
  auto plain = tract("P", {0, 0}, 100, {{"A", 0}});
  plain.vuln_flags["CEJST"] = false;
  AssignmentMatrix m;
  m.weights = {{{0, 1.0}, {1, 0.5}}, {{1, 0.5}}};
  m.radius_km = {1, 1};
  const auto feats = bus_features({flagged, plain}, m, 2);
  const auto fr = group_fractions(feats, {"A"}, {"CEJST"});
  EXPECT_DOUBLE_EQ(fr[0].vuln.at("CEJST"), 1.0);
  EXPECT_DOUBLE_EQ(fr[1].vuln.at("CEJST"), 0.5);
  EXPECT_DOUBLE_EQ(fr[1].group.at("A"), 0.5);
}

TEST(Fractions, ZeroPopulationFlagged) {
  std::vector<BusFeatures> feats(1);
  const auto fr = group_fractions(feats, {"A"}, {"SVI"});
  EXPECT_TRUE(fr[0].zero_population);
  EXPECT_EQ(fr[0].group.at("A"), 0.0);
}

TEST(Fractions, PartitionSumsToOneAndScaleInvariant) {
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<TractRecord> tracts;
  for (int i = 0; i < 8; ++i) {
    const double pop = 100 + 1000 * u(rng);
    const double a = std::floor(pop * u(rng));
    const double b = std::floor((pop - a) * u(rng));
    tracts.push_back(tract("T" + std::to_string(i), {38 + 0.1 * u(rng), -122 + 0.1 * u(rng)}, pop,
                           {{"A", a}, {"B", b}, {"C", pop - a - b}}));
  }
  const std::vector<BusSite> buses{{"N1", {38.02, -121.98}}, {"N2", {38.07, -121.95}}, {"N3", {38.05, -121.92}}};
  const auto m = assign_tracts(tracts, buses);
  const auto fr = group_fractions(bus_features(tracts, m, 3), {"A", "B", "C"}, {});
  auto scaled = tracts;
  for (auto& t : scaled)
    for (auto& [k, v] : t.features) v *= 7.5;
  const auto fs = group_fractions(bus_features(scaled, m, 3), {"A", "B", "C"}, {});
  for (std::size_t n = 0; n < 3; ++n) {
    EXPECT_NEAR(fr[n].group.at("A") + fr[n].group.at("B") + fr[n].group.at("C"), 1.0, 1e-6);
    for (const char* g : {"A", "B", "C"}) EXPECT_NEAR(fr[n].group.at(g), fs[n].group.at(g), 1e-12);
  }
}

TEST(Rules, AnyClauseFlags) {
  TractRecord t;
  t.percentiles = {{"t1", 80}, {"t2", 10}, {"t3", 10}, {"t4", 10}};
  VulnerabilityRule svi;
  for (const char* th : {"t1", "t2", "t3", "t4"}) svi.push_back({{th, 75}});
  EXPECT_TRUE(rule_matches(t, svi));

  TractRecord c;
  c.percentiles = {{"low_income", 49}, {"wildfire", 99}};
  const VulnerabilityRule cejst{{{"low_income", 50}, {"wildfire", 75}}};
  EXPECT_FALSE(rule_matches(c, cejst));
  c.percentiles["low_income"] = 50;
  EXPECT_TRUE(rule_matches(c, cejst));
  EXPECT_FALSE(rule_matches(c, VulnerabilityRule{}));
}

TEST(Rules, MissingIndicatorNamed) {
  std::vector<TractRecord> tracts(1);
  tracts[0].gidtr = "T1";
  tracts[0].percentiles = {{"a", 10}};
  try {
    flag_vulnerability(tracts, "X", {{{"nope", 50}}});
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("nope"), std::string::npos);
  }
}

TEST(Rules, FromJson) {
  const auto rules = rules_from_json(nlohmann::json::parse(
      R"({"SVI": [[{"indicator": "svi", "min_percentile": 75}]], "E": []})"));
  ASSERT_EQ(rules.size(), 2u);
  EXPECT_EQ(rules.at("SVI")[0][0].indicator, "svi");
  EXPECT_TRUE(rules.at("E").empty());
  EXPECT_THROW(rules_from_json(nlohmann::json::parse(R"({"X": [[{"indicator": "a"}]]})")), InputError);
}

TEST(Tracts, LoadCsvAndAttach) {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "psps-tract-test";
  fs::create_directories(dir);
  const auto path = (dir / "tracts.csv").string();
  std::ofstream(path) << "gidtr,lat,lon,population,A,B,pct_x\n"
                         "001,38.00,-122.00,100,30,70,90\n"
                         "002,38.05,-122.05,300,300,0,10\n";
  auto tracts = load_tracts(path);
  ASSERT_EQ(tracts.size(), 2u);
  EXPECT_EQ(tracts[0].gidtr, "001");
  EXPECT_EQ(tracts[0].percentiles.at("x"), 90.0);
  flag_vulnerability(tracts, "V", {{{"x", 50}}});
  EXPECT_TRUE(tracts[0].vuln_flags.at("V"));
  EXPECT_FALSE(tracts[1].vuln_flags.at("V"));

  const Horizon h = horizon(1, 1);
  Bus hub = flat_bus("H", h, 0.0);
  hub.location = {38.02, -122.02};
  Bus b1 = flat_bus("N1", h, 1.0);
  b1.location = {38.0, -122.0};
  Bus b2 = flat_bus("N2", h, 1.0);
  b2.location = {38.05, -122.05};
  Network net(h, {hub, b1, b2}, {make_line("L1", "H", "N1"), make_line("L2", "H", "N2")}, {make_gen("G", "H", 1)},
              {partition("grp", {"A", "B"})});
  const auto [attached, info] = attach_demographics(net, tracts, {"V"});
  EXPECT_EQ(info.load_bus_ids, (std::vector<std::string>{"N1", "N2"}));
  EXPECT_EQ(attached.buses()[0].population, 0.0);
  EXPECT_NEAR(attached.buses()[1].population + attached.buses()[2].population, 400.0, 1e-9);
  EXPECT_TRUE(validate_network(attached).empty());

  std::ofstream(path) << "gidtr,lat,lon,population,A\n001,38,-122,10,11\n";
  EXPECT_THROW(load_tracts(path), InputError);
  fs::remove_all(dir);
}
