#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "oracles.hpp"
#include "vsearch/search_map.hpp"

using namespace vsearch;

namespace {

SearchMap blank(int w, int h, SensorKind k = SensorKind::lidar) {
  GridGeometry g;
  g.width = w;
  g.height = h;
  return SearchMap(g, k);
}

Scan single_beam(double range, bool hit, double max_range = 10.0) {
  Scan s;
  s.ranges = {range};
  s.hit = {static_cast<std::uint8_t>(hit)};
  s.max_range = max_range;
  return s;
}

LineWorld room() {
  LineWorld w;
  w.bounds = {0, 0, 8, 6};
  w.segments = {{{0, 0}, {8, 0}}, {{8, 0}, {8, 6}}, {{8, 6}, {0, 6}}, {{0, 6}, {0, 0}}, {{5, 2}, {5, 6}}};
  w.objects = {{{2, 1}, {3, 1}, {3, 2}, {2, 2}}};
  return w;
}

void expect_same(const std::vector<Frontier>& got, const std::vector<oracle::OracleFrontier>& want) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) {
    ASSERT_EQ(got[i].cells.size(), want[i].cells.size());
    for (std::size_t k = 0; k < got[i].cells.size(); ++k) EXPECT_EQ(got[i].cells[k], want[i].cells[k]);
    EXPECT_NEAR(got[i].centroid.x, want[i].centroid.x, 1e-12);
    EXPECT_NEAR(got[i].centroid.y, want[i].centroid.y, 1e-12);
  }
}

}  // namespace

TEST(UpdateMap, SingleBeamFreeThenOccupied) {
  SearchMap m = blank(40, 5);
  SensorSpec spec;
  spec.n_beams = 1;
  update_map(m, Pose(0.05, 0.25, 0), single_beam(2.0, true), spec);
  EXPECT_TRUE(m.is_free({0, 2}));
  for (int x = 1; x <= 19; ++x) EXPECT_TRUE(m.is_free({x, 2})) << x;
  EXPECT_TRUE(m.is_occupied({20, 2}));
  EXPECT_TRUE(m.is_unknown({21, 2}));
  EXPECT_EQ(m.count(CellState::free), 20u);
  EXPECT_EQ(m.count(CellState::occupied), 1u);
}

TEST(UpdateMap, NoReturnClearsToMaxRange) {
  SearchMap m = blank(40, 5);
  SensorSpec spec;
  spec.n_beams = 1;
  update_map(m, Pose(0.05, 0.25, 0), single_beam(1.0, false, 1.0), spec);
  EXPECT_EQ(m.count(CellState::occupied), 0u);
  EXPECT_TRUE(m.is_free({10, 2}));
  EXPECT_TRUE(m.is_unknown({11, 2}));
}

TEST(UpdateMap, CellStateMachine) {
  SearchMap m = blank(4, 4);
  EXPECT_TRUE(m.is_unknown({1, 1}));
  m.observe_free({1, 1});
  EXPECT_TRUE(m.is_free({1, 1}));
  m.observe_occupied({1, 1});
  EXPECT_TRUE(m.is_occupied({1, 1}));
  m.observe_free({1, 1});
  EXPECT_TRUE(m.is_occupied({1, 1}));
  m.observe_occupied({2, 2});
  EXPECT_TRUE(m.is_occupied({2, 2}));
  m.observe_free({9, 9});
  EXPECT_TRUE(m.is_unknown({9, 9}));
}

TEST(UpdateMap, IdempotentForRepeatedScans) {
  const LineWorld w = room();
  SensorSpec spec;
  const Pose pose(1.0, 4.0, -0.3);
  const Scan s = simulate_scan(w, pose, spec, 5);
  for (auto kind : {SensorKind::lidar, SensorKind::visual}) {
    SearchMap m = SearchMap::covering(w.bounds, 0.1, kind);
    update_map(m, pose, s, spec);
    const SearchMap once = m;
    update_map(m, pose, s, spec);
    EXPECT_EQ(m, once);
  }
}

TEST(UpdateMap, VisualMapStaysInsideCone) {
  const LineWorld w = room();
  SensorSpec spec;
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> ux(0.3, 4.7), uy(2.3, 5.7), ua(-3.1, 3.1);
  for (int i = 0; i < 20; ++i) {
    const Pose pose(ux(rng), uy(rng), ua(rng));
    const Scan s = simulate_scan(w, pose, spec, i);
    SearchMap m = SearchMap::covering(w.bounds, 0.1, SensorKind::visual);
    update_map(m, pose, s, spec);
    const auto& g = m.geometry();
    const double half_diag = 0.5 * std::sqrt(2.0) * g.resolution;
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (m.at(k) == CellState::unknown) continue;
      const Vec2 c = g.center(g.cell_at(k));
      const double r = distance(c, pose.position());
      if (r <= half_diag) continue;
      EXPECT_LE(r, spec.visual_max_range + half_diag);
      const double off = std::abs(normalize_angle(std::atan2(c.y - pose.y, c.x - pose.x) - pose.theta));
      EXPECT_LE(off, 0.5 * spec.visual_fov_angle + std::asin(std::min(1.0, half_diag / r)) + 1e-9);
    }
  }
}

TEST(UpdateMap, LidarMapMarksWallsOccupied) {
  const LineWorld w = room();
  SensorSpec spec;
  spec.lidar_noise_sigma = 0.0;
  SearchMap m = SearchMap::covering(w.bounds, 0.1, SensorKind::lidar);
  update_map(m, Pose(1.0, 4.0, 0.0), simulate_scan(w, Pose(1.0, 4.0, 0.0), spec, 1), spec);
  EXPECT_TRUE(m.is_occupied(m.geometry().cell_of({5.02, 4.0})));
  EXPECT_TRUE(m.is_free(m.geometry().cell_of({3.0, 4.0})));
}

TEST(Frontiers, FullyKnownMapHasNone) {
  SearchMap m = blank(10, 10);
  for (std::size_t i = 0; i < m.geometry().size(); ++i) m.set(m.geometry().cell_at(i), CellState::free);
  EXPECT_TRUE(extract_frontiers(m, 1).empty());
}

TEST(Frontiers, StraightBoundary) {
  SearchMap m = blank(10, 6);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 10; ++x) m.set({x, y}, CellState::free);
  const auto f = extract_frontiers(m, 5);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].cells.size(), 10u);
  EXPECT_NEAR(f[0].centroid.x, 0.5, 1e-12);
  EXPECT_NEAR(f[0].centroid.y, 0.25, 1e-12);
  EXPECT_TRUE(extract_frontiers(m, 11).empty());
}

TEST(Frontiers, MatchFloodFillOracleOnRandomMaps) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 25; ++i) {
    const SearchMap m = oracle::random_map(rng, 40, 40);
    const int min_size = 1 + i % 6;
    expect_same(extract_frontiers(m, min_size), oracle::frontiers(m, min_size));
  }
}

TEST(ClusterFrontiers, SplitsIntoConnectedPieces) {
  SearchMap m = blank(10, 6);
  for (int y = 0; y < 3; ++y)
    for (int x = 0; x < 10; ++x) m.set({x, y}, CellState::free);
  const auto f = extract_frontiers(m, 1);
  const auto& g = m.geometry();
  EXPECT_EQ(cluster_frontiers(f, g, 0, 1).size(), 1u);
  const auto c = cluster_frontiers(f, g, 4, 2);
  ASSERT_EQ(c.size(), 3u);
  EXPECT_EQ(c[0].cells.size(), 4u);
  EXPECT_EQ(c[2].cells.size(), 2u);
  const auto merged = cluster_frontiers(f, g, 4, 3);
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[1].cells.size(), 6u);
  EXPECT_NEAR(merged[0].centroid.x, 0.2, 1e-12);
}

TEST(ClusterFrontiers, PartitionRandomFrontiers) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 10; ++i) {
    const SearchMap m = oracle::random_map(rng, 40, 40);
    const auto& g = m.geometry();
    const auto f = extract_frontiers(m, 3);
    const auto c = cluster_frontiers(f, g, 6, 3);
    std::size_t a = 0, b = 0;
    std::set<std::size_t> seen;
    for (const auto& x : f) a += x.cells.size();
    for (const auto& x : c) {
      EXPECT_LE(x.cells.size(), 6u + 2u);
      b += x.cells.size();
      for (auto cell : x.cells) EXPECT_TRUE(seen.insert(g.index(cell)).second);
    }
    EXPECT_EQ(a, b);
  }
}

TEST(CountUnknownVisible, KnownFreeSurroundingsGiveZero) {
  SearchMap m = blank(100, 100, SensorKind::visual);
  for (std::size_t i = 0; i < m.geometry().size(); ++i) m.set(m.geometry().cell_at(i), CellState::free);
  EXPECT_EQ(count_unknown_visible(m, Pose(5, 5, 0), SensorSpec{}), 0);
}

TEST(CountUnknownVisible, OpenUnknownConeCountsEveryConeCell) {
  SearchMap m = blank(100, 100, SensorKind::visual);
  const SensorSpec s;
  const Pose p(5.02, 5.01, 0.3);
  int cone = 0;
  for (std::size_t i = 0; i < m.geometry().size(); ++i)
    cone += in_visual_cone(p, m.geometry().center(m.geometry().cell_at(i)), s);
  EXPECT_EQ(count_unknown_visible(m, p, s), cone);
  EXPECT_GT(cone, 700);
}

TEST(CountUnknownVisible, MatchesPerCellOracle) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0.2, 3.8), a(-3.1, 3.1);
  const SensorSpec s;
  for (int i = 0; i < 30; ++i) {
    const SearchMap m = oracle::random_map(rng, 40, 40, 0.05);
    const Pose p(u(rng), u(rng), a(rng));
    EXPECT_EQ(count_unknown_visible(m, p, s), oracle::unknown_visible(m, p, s)) << i;
  }
}

TEST(CountUnknownVisible, OccluderMapBlocksSight) {
  SearchMap visual = blank(100, 100, SensorKind::visual), lidar = blank(100, 100);
  const SensorSpec s;
  const Pose p(5.05, 5.05, 0);
  const int open = count_unknown_visible(visual, p, s, &lidar);
  for (int y = 0; y < 100; ++y) lidar.set({55, y}, CellState::occupied);
  EXPECT_LT(count_unknown_visible(visual, p, s, &lidar), open / 2);
  const SearchMap small = blank(10, 10);
  EXPECT_THROW(count_unknown_visible(visual, p, s, &small), std::invalid_argument);
}

TEST(RasterizeWorld, MarksGeometry) {
  LineWorld w = room();
  w.targets = {{{6.55, 1.05}, 0.2}};
  const SearchMap m = rasterize_world(w, 0.1);
  const auto& g = m.geometry();
  EXPECT_TRUE(m.is_occupied(g.cell_of({5.0, 3.0})));
  EXPECT_TRUE(m.is_occupied(g.cell_of({2.5, 1.5})));
  EXPECT_TRUE(m.is_occupied(g.cell_of({6.55, 1.05})));
  EXPECT_TRUE(m.is_free(g.cell_of({1.05, 4.05})));
}

TEST(MapSnapshot, WritesPgmAndYaml) {
  SearchMap m = blank(3, 2);
  m.set({0, 0}, CellState::free);
  m.set({1, 0}, CellState::occupied);
  const auto dir = std::filesystem::temp_directory_path();
  const auto pgm = (dir / "vsearch_snap.pgm").string(), yaml = (dir / "vsearch_snap.yaml").string();
  export_map_snapshot(m, pgm, yaml);
  std::ifstream in(pgm, std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  in.get();
  std::string px(6, '\0');
  in.read(px.data(), 6);
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(w, 3);
  EXPECT_EQ(h, 2);
  // Bottom row is written last.
  EXPECT_EQ(static_cast<unsigned char>(px[3]), 254);
  EXPECT_EQ(static_cast<unsigned char>(px[4]), 0);
  EXPECT_EQ(static_cast<unsigned char>(px[5]), 205);
  std::ifstream y(yaml);
  std::string all((std::istreambuf_iterator<char>(y)), {});
  EXPECT_NE(all.find("image: vsearch_snap.pgm"), std::string::npos);
  std::filesystem::remove(pgm);
  std::filesystem::remove(yaml);
}
