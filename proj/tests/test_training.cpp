#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "vsearch/dataset.hpp"
#include "vsearch/training.hpp"
#include "vsearch/world_gen.hpp"

using namespace vsearch;

namespace {

SensorSpec small_sensor() {
  SensorSpec s;
  s.n_beams = 90;
  return s;
}

LineWorld toy_world(std::uint64_t seed) {
  WorldGenParams p;
  p.width = 12;
  p.height = 12;
  p.object_density = 0.1;
  p.seed = seed;
  return generate_world(p, Difficulty::easy);
}

Dataset toy_dataset(std::vector<LineWorld>& worlds, double seconds, std::uint64_t seed) {
  std::vector<std::vector<std::vector<Pose>>> paths;
  for (std::size_t i = 0; i < worlds.size(); ++i)
    paths.push_back({random_tour(worlds[i], seconds, MotionSpec{}, derive_seed(seed, {i}))});
  return generate_dataset(worlds, paths, small_sensor(), MotionSpec{}, ClassifierParams{}, seed);
}

}  // namespace

TEST(Dataset, HundredStepTrajectory) {
  const LineWorld w = toy_world(1);
  const std::vector<Pose> tour = random_tour(w, 30.0, MotionSpec{}, 3);
  // Truncate to exactly 100 scans.
  Trajectory t = move_robot(w, tour, small_sensor(), MotionSpec{}, 4);
  ASSERT_GE(t.samples.size(), 100u);
  t.samples.resize(100);
  const auto tuples = label_trajectory(w, t, ClassifierParams{}, 0, 7);
  ASSERT_EQ(tuples.size(), 100u);
  for (std::size_t i = 0; i < tuples.size(); ++i) {
    EXPECT_EQ(tuples[i].run_id, 7);
    EXPECT_EQ(tuples[i].step, static_cast<int>(i));
  }
  // Replaying the classifier reproduces the stored labels.
  ObservationHistory h(ClassifierParams{}.history_window);
  for (std::size_t i = 0; i < t.samples.size(); ++i)
    EXPECT_EQ(classify_scan_gt(w, t.samples[i].pose, t.samples[i].scan, ClassifierParams{}, h).labels, tuples[i].labels);
}

TEST(Dataset, RandomTourIsDrivable) {
  const LineWorld w = toy_world(2);
  const auto tour = random_tour(w, 60.0, MotionSpec{}, 9);
  EXPECT_NO_THROW(check_path_clear(w, tour));
  EXPECT_GE(path_duration(tour, MotionSpec{}), 60.0);
  EXPECT_EQ(tour, random_tour(w, 60.0, MotionSpec{}, 9));
}

TEST(Dataset, BinaryRoundTripAndFilter) {
  std::vector<LineWorld> worlds{toy_world(3), toy_world(4)};
  const Dataset d = toy_dataset(worlds, 20.0, 5);
  const auto path = (std::filesystem::temp_directory_path() / "vsearch_ds.bin").string();
  save_dataset(d, path);
  const Dataset back = load_dataset(path);
  ASSERT_EQ(back.size(), d.size());
  EXPECT_EQ(back.n_beams, d.n_beams);
  for (std::size_t i = 0; i < d.size(); ++i) {
    EXPECT_EQ(back.tuples[i].pose, d.tuples[i].pose);
    EXPECT_EQ(back.tuples[i].ranges, d.tuples[i].ranges);
    EXPECT_EQ(back.tuples[i].labels, d.tuples[i].labels);
    EXPECT_EQ(back.tuples[i].world_id, d.tuples[i].world_id);
  }
  std::filesystem::remove(path);
  EXPECT_EQ(d.runs().size(), 2u);
  const Dataset only1 = d.filter_worlds({1}, true), rest = d.filter_worlds({1}, false);
  EXPECT_EQ(only1.size() + rest.size(), d.size());
  for (const auto& t : only1.tuples) EXPECT_EQ(t.world_id, 1);
  EXPECT_THROW(load_dataset("/nonexistent/vsearch.bin"), std::runtime_error);
}

TEST(Corruption, FlipsExactCount) {
  for (double rate : {0.0, 0.1, 0.3, 0.5}) {
    std::vector<float> v(8 * 897, 1.0f);
    Rng rng(3);
    const auto flips = corrupt_labels(v, rate, rng);
    EXPECT_EQ(flips, static_cast<std::size_t>(std::llround(rate * v.size())));
    EXPECT_EQ(static_cast<std::size_t>(std::count(v.begin(), v.end(), -1.0f)), flips);
  }
}

TEST(Windows, EndsRespectRunsAndEwaRow) {
  std::vector<LineWorld> worlds{toy_world(3), toy_world(4)};
  const Dataset d = toy_dataset(worlds, 10.0, 5);
  const auto ends = window_ends(d, 4);
  std::size_t expected = 0;
  for (auto [b, e] : d.runs()) expected += e - b >= 4 ? e - b - 3 : 0;
  EXPECT_EQ(ends.size(), expected);
  TcnInput<float> in;
  build_window(d, ends[5], 4, 0.0, 0.5, 1, in);
  const std::size_t n = 90;
  for (std::size_t j = 0; j < n; ++j) {
    float want = 0.0f;
    const double w[3] = {0.25, 0.5, 1.0};
    for (int r = 0; r < 3; ++r) want += static_cast<float>(w[r] / 1.75) * d.tuples[ends[5] - 3 + r].labels[j];
    EXPECT_NEAR(in.labels[3 * n + j], want, 1e-6);
    EXPECT_NEAR(in.ranges[3 * n + j], d.tuples[ends[5]].ranges[j] / 10.0, 1e-6);
  }
}

TEST(Training, LossDecreasesAndIsDeterministic) {
  std::vector<LineWorld> worlds{toy_world(11), toy_world(12)};
  const Dataset d = toy_dataset(worlds, 60.0, 13);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.k = 5;
  cfg.channels = 4;
  const auto a = train(d, Dataset{}, cfg);
  ASSERT_EQ(a.curve.size(), 5u);
  EXPECT_LT(a.curve.back().train_loss, a.curve.front().train_loss);
  const auto b = train(d, Dataset{}, cfg);
  for (std::size_t i = 0; i < a.model.params().size(); ++i) ASSERT_EQ(a.model.params()[i], b.model.params()[i]);
  cfg.batch_size = 100000;
  EXPECT_THROW(train(d, Dataset{}, cfg), std::domain_error);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.corruption_rate = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.epochs = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Inference, BootstrapAndStandstillStability) {
  std::vector<LineWorld> worlds{toy_world(21)};
  const Dataset d = toy_dataset(worlds, 60.0, 2);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.k = 5;
  cfg.channels = 4;
  const auto r = train(d, Dataset{}, cfg);
  HistoryBuffer buf(5, 90);
  SensorSpec s = small_sensor();
  s.lidar_noise_sigma = 0.0;
  const Pose pose = worlds[0].start_pose;
  const Scan scan = simulate_scan(worlds[0], pose, s, 1);
  std::vector<std::int8_t> last;
  bool stable = false;
  for (int step = 0; step < 30; ++step) {
    auto labels = infer_step(r.model, buf, pose, scan, 0.5);
    ASSERT_EQ(labels.size(), 90u);
    if (step >= 5 && labels == last) stable = true;
    last = std::move(labels);
  }
  EXPECT_TRUE(stable);
  HistoryBuffer wrong(4, 90);
  EXPECT_THROW(infer_step(r.model, wrong, pose, scan, 0.5), std::domain_error);
}
