#include <gtest/gtest.h>

#include <sstream>

#include "vsearch/episode.hpp"
#include "vsearch/world_gen.hpp"

using namespace vsearch;

namespace {

LineWorld sealed_room() {
  LineWorld w;
  w.bounds = {0, 0, 6, 4};
  w.segments = {{{0.05, 0.05}, {5.95, 0.05}}, {{5.95, 0.05}, {5.95, 3.95}}, {{5.95, 3.95}, {0.05, 3.95}},
                {{0.05, 3.95}, {0.05, 0.05}}};
  w.start_pose = Pose(1.05, 2.05, 0);
  return w;
}

PlannerConfig small_config() {
  PlannerConfig c;
  c.sensor.n_beams = 360;
  c.budget_s = 90.0;
  return c;
}

LineWorld apartment(std::uint64_t seed) {
  WorldGenParams p;
  p.width = 12;
  p.height = 16;
  p.object_density = 0.01;
  p.seed = seed;
  return generate_world(p, Difficulty::hard);
}

}  // namespace

TEST(Episode, TargetInInitialConeIsFoundImmediately) {
  LineWorld w = sealed_room();
  w.targets = {{{2.05, 2.05}, 0.2}};
  const auto r = search_episode(w, small_config(), LabelMode::ground_truth, 1);
  EXPECT_TRUE(r.found);
  EXPECT_EQ(r.termination, "found");
  EXPECT_DOUBLE_EQ(r.detection_time, 0.0);
}

TEST(Episode, SealedEmptyRoomExhausts) {
  const auto r = search_episode(sealed_room(), small_config(), LabelMode::none, 1);
  EXPECT_FALSE(r.found);
  EXPECT_EQ(r.termination, "exhausted");
  EXPECT_LT(r.detection_time, small_config().budget_s);
  ASSERT_FALSE(r.steps.empty());
  EXPECT_FALSE(r.steps.back().chosen.has_value());
}

TEST(Episode, BudgetEndsTheSearch) {
  PlannerConfig c = small_config();
  c.budget_s = 3.0;
  const auto r = search_episode(apartment(5), c, LabelMode::ground_truth, 2);
  if (!r.found) {
    EXPECT_EQ(r.termination, "budget");
    EXPECT_LE(r.detection_time, 3.0 + 1e-9);
  }
  for (const auto& tp : r.trace) EXPECT_LE(tp.time, 3.0 + 1e-9);
}

TEST(Episode, DeterministicUnderFixedSeed) {
  const LineWorld w = apartment(7);
  const auto a = search_episode(w, small_config(), LabelMode::ground_truth, 3);
  const auto b = search_episode(w, small_config(), LabelMode::ground_truth, 3);
  EXPECT_TRUE(same_trace(a, b));
  std::ostringstream la, lb;
  write_step_log(a, la);
  write_step_log(b, lb);
  EXPECT_EQ(la.str(), lb.str());
}

TEST(Episode, NoLabelsEqualsZeroNonMapWeight) {
  for (std::uint64_t s = 0; s < 3; ++s) {
    const LineWorld w = apartment(20 + s);
    PlannerConfig c = small_config();
    c.weights.w_nonmap = 0.0;
    const auto a = search_episode(w, c, LabelMode::none, s);
    const auto b = search_episode(w, c, LabelMode::ground_truth, s);
    EXPECT_TRUE(same_trace(a, b)) << s;
  }
}

TEST(Episode, RegistrySoundWithoutNoise) {
  // Without noise every registered point lies on an object or target surface.
  PlannerConfig c = small_config();
  c.sensor.lidar_noise_sigma = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const LineWorld w = apartment(30 + s);
    const auto r = search_episode(w, c, LabelMode::ground_truth, s);
    for (const Vec2 p : r.registry_points) {
      double d = 1e300;
      for (const auto& poly : w.objects)
        for (std::size_t i = 0; i < poly.size(); ++i) d = std::min(d, point_segment_distance(p, {poly[i], poly[(i + 1) % poly.size()]}));
      for (const auto& t : w.targets) d = std::min(d, std::abs(distance(p, t.position) - t.radius));
      EXPECT_LT(d, 1e-6);
    }
  }
}

TEST(Episode, LearnedModeNeedsAMatchingModel) {
  EXPECT_THROW(search_episode(sealed_room(), small_config(), LabelMode::learned, 1), std::invalid_argument);
  const TcnModel<float> m(TcnShape{100, 3, 2, true});
  EXPECT_THROW(search_episode(sealed_room(), small_config(), LabelMode::learned, 1, &m), std::invalid_argument);
  const TcnModel<float> ok(TcnShape{360, 3, 2, true});
  const auto r = search_episode(sealed_room(), small_config(), LabelMode::learned, 1, &ok);
  EXPECT_EQ(r.termination, "exhausted");
}

TEST(Episode, StepLogIsJsonLines) {
  const auto r = search_episode(apartment(9), small_config(), LabelMode::ground_truth, 1);
  std::ostringstream o;
  write_step_log(r, o);
  std::istringstream in(o.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.contains("step"));
    EXPECT_TRUE(j.contains("time"));
    ++n;
  }
  EXPECT_EQ(n, r.steps.size());
}

TEST(PlannerConfigFile, ParseFormatRoundTrip) {
  std::istringstream in("# bench\nw_unknown = 0.1\nbudget_s=120  # hard\nmin_frontier_size = 7\n");
  const PlannerConfig c = parse_planner_config(in);
  EXPECT_DOUBLE_EQ(c.weights.w_unknown, 0.1);
  EXPECT_DOUBLE_EQ(c.budget_s, 120.0);
  EXPECT_EQ(c.min_frontier_size, 7);
  std::istringstream again(format_planner_config(c));
  const PlannerConfig d = parse_planner_config(again);
  EXPECT_EQ(format_planner_config(d), format_planner_config(c));
}

TEST(PlannerConfigFile, RejectsBadInput) {
  std::istringstream unknown("nope = 1\n"), bad("w_dist = abc\n"), neg("w_dist = -1\n"), noeq("w_dist 1\n");
  EXPECT_THROW(parse_planner_config(unknown), std::invalid_argument);
  EXPECT_THROW(parse_planner_config(bad), std::invalid_argument);
  EXPECT_THROW(parse_planner_config(neg), std::invalid_argument);
  EXPECT_THROW(parse_planner_config(noeq), std::invalid_argument);
  EXPECT_EQ(parse_label_mode("none"), LabelMode::none);
  EXPECT_THROW(parse_label_mode("oracle"), std::invalid_argument);
}
