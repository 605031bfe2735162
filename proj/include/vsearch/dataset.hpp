#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsearch/path_planner.hpp"
#include "vsearch/scan_classify_gt.hpp"
#include "vsearch/search_map.hpp"
#include "vsearch/world.hpp"

namespace vsearch {

struct DatasetTuple {
  Pose pose;
  std::vector<float> ranges;
  std::vector<std::int8_t> labels;
  int world_id = 0;
  int run_id = 0;
  int step = 0;
};

struct Dataset {
  int n_beams = 0;
  double scan_rate_hz = 5.0;
  double max_range = 10.0;
  std::vector<DatasetTuple> tuples;

  std::size_t size() const { return tuples.size(); }

  /// [begin, end) index ranges of consecutive tuples sharing a run.
  std::vector<std::pair<std::size_t, std::size_t>> runs() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < tuples.size();) {
      std::size_t j = i + 1;
      while (j < tuples.size() && tuples[j].run_id == tuples[i].run_id && tuples[j].world_id == tuples[i].world_id) ++j;
      out.emplace_back(i, j);
      i = j;
    }
    return out;
  }

  /// Tuples whose world id is (or is not) in `ids`.
  Dataset filter_worlds(const std::vector<int>& ids, bool keep) const {
    Dataset d{n_beams, scan_rate_hz, max_range, {}};
    for (const auto& t : tuples)
      if ((std::find(ids.begin(), ids.end(), t.world_id) != ids.end()) == keep) d.tuples.push_back(t);
    return d;
  }
};

/// Labels every scan of a trajectory with the ground-truth classifier, in temporal order.
inline std::vector<DatasetTuple> label_trajectory(const LineWorld& w, const Trajectory& traj,
                                                  const ClassifierParams& gt, int world_id, int run_id) {
  if (traj.samples.empty()) throw std::domain_error("cannot label an empty trajectory");
  ObservationHistory history(gt.history_window);
  std::vector<DatasetTuple> out;
  out.reserve(traj.samples.size());
  int step = 0;
  for (const auto& s : traj.samples) {
    const ClassifiedScan c = classify_scan_gt(w, s.pose, s.scan, gt, history);
    DatasetTuple t;
    t.pose = s.pose;
    t.ranges.assign(s.scan.ranges.begin(), s.scan.ranges.end());
    t.labels = c.labels;
    t.world_id = world_id;
    t.run_id = run_id;
    t.step = step++;
    out.push_back(std::move(t));
  }
  return out;
}

/// Chains shortest paths on the true map between random reachable goals until the tour lasts
/// at least `duration_s`.
inline std::vector<Pose> random_tour(const LineWorld& w, double duration_s, const MotionSpec& motion,
                                     std::uint64_t seed, int clearance = 2) {
  const SearchMap truth = rasterize_world(w, 0.1);
  const auto& g = truth.geometry();
  Rng rng(seed);
  std::vector<Pose> tour{w.start_pose};
  double elapsed = 0.0;
  int failures = 0;
  while (elapsed < duration_s && failures < 200) {
    const PathPlanner planner(truth, tour.back(), clearance);
    std::vector<std::size_t> goals;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (planner.reachable(g.cell_at(i)) && planner.grid_distance(g.cell_at(i)) > 1.5) goals.push_back(i);
    if (goals.empty()) break;
    const std::size_t pick = goals[std::uniform_int_distribution<std::size_t>(0, goals.size() - 1)(rng)];
    const PlannedPath p = planner.path_to(g.center(g.cell_at(pick)));
    if (!p.reachable || p.poses.size() < 2) {
      ++failures;
      continue;
    }
    std::vector<Pose> leg(p.poses.begin(), p.poses.end());
    leg.front() = tour.back();
    elapsed += path_duration(leg, motion);
    tour.insert(tour.end(), leg.begin() + 1, leg.end());
  }
  return tour;
}

/// Simulates each path at the scan rate and labels it. paths[w] holds the runs in world w.
inline Dataset generate_dataset(const std::vector<LineWorld>& worlds,
                                const std::vector<std::vector<std::vector<Pose>>>& paths, const SensorSpec& spec,
                                const MotionSpec& motion, const ClassifierParams& gt, std::uint64_t seed) {
  if (paths.size() != worlds.size()) throw std::invalid_argument("one path list per world required");
  Dataset d{spec.n_beams, spec.scan_rate_hz, spec.lidar_max_range, {}};
  int run_id = 0;
  for (std::size_t wi = 0; wi < worlds.size(); ++wi) {
    for (const auto& path : paths[wi]) {
      if (path.size() < 2) throw std::domain_error("empty trajectory");
      const Trajectory traj = move_robot(worlds[wi], path, spec, motion,
                                         derive_seed(seed, {wi, static_cast<std::uint64_t>(run_id)}));
      auto tuples = label_trajectory(worlds[wi], traj, gt, static_cast<int>(wi), run_id);
      d.tuples.insert(d.tuples.end(), std::make_move_iterator(tuples.begin()), std::make_move_iterator(tuples.end()));
      ++run_id;
    }
  }
  return d;
}

// --- binary record stream ---
// header: "VSDS", u32 version, i32 n_beams, f64 scan_rate_hz, f64 max_range, u64 count
// record: i32 world_id, i32 run_id, i32 step, f64 x, f64 y, f64 theta, f32 ranges[n], i8 labels[n]
// All fields little-endian.

inline constexpr std::uint32_t kDatasetVersion = 1;

namespace detail {
template <class T>
void put(std::ostream& o, const T& v) {
  o.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& i) {
  T v{};
  if (!i.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("unexpected end of file");
  return v;
}
}  // namespace detail

inline void save_dataset(const Dataset& d, const std::string& path) {
  std::ofstream o(path, std::ios::binary);
  if (!o) throw std::runtime_error("cannot open " + path + " for writing");
  o.write("VSDS", 4);
  detail::put(o, kDatasetVersion);
  detail::put(o, static_cast<std::int32_t>(d.n_beams));
  detail::put(o, d.scan_rate_hz);
  detail::put(o, d.max_range);
  detail::put(o, static_cast<std::uint64_t>(d.tuples.size()));
  for (const auto& t : d.tuples) {
    if (static_cast<int>(t.ranges.size()) != d.n_beams || static_cast<int>(t.labels.size()) != d.n_beams)
      throw std::domain_error("tuple length differs from dataset beam count");
    detail::put(o, static_cast<std::int32_t>(t.world_id));
    detail::put(o, static_cast<std::int32_t>(t.run_id));
    detail::put(o, static_cast<std::int32_t>(t.step));
    detail::put(o, t.pose.x);
    detail::put(o, t.pose.y);
    detail::put(o, t.pose.theta);
    o.write(reinterpret_cast<const char*>(t.ranges.data()), static_cast<std::streamsize>(t.ranges.size() * sizeof(float)));
    o.write(reinterpret_cast<const char*>(t.labels.data()), static_cast<std::streamsize>(t.labels.size()));
  }
  if (!o) throw std::runtime_error("failed writing " + path);
}

inline Dataset load_dataset(const std::string& path) {
  std::ifstream i(path, std::ios::binary);
  if (!i) throw std::runtime_error("cannot open " + path);
  char magic[4];
  if (!i.read(magic, 4) || std::memcmp(magic, "VSDS", 4) != 0) throw std::runtime_error("not a dataset file: " + path);
  if (detail::get<std::uint32_t>(i) != kDatasetVersion) throw std::runtime_error("unsupported dataset version");
  Dataset d;
  d.n_beams = detail::get<std::int32_t>(i);
  d.scan_rate_hz = detail::get<double>(i);
  d.max_range = detail::get<double>(i);
  const auto count = detail::get<std::uint64_t>(i);
  if (d.n_beams <= 0) throw std::runtime_error("invalid beam count in dataset");
  d.tuples.resize(count);
  for (auto& t : d.tuples) {
    t.world_id = detail::get<std::int32_t>(i);
    t.run_id = detail::get<std::int32_t>(i);
    t.step = detail::get<std::int32_t>(i);
    const double x = detail::get<double>(i), y = detail::get<double>(i), th = detail::get<double>(i);
    t.pose = Pose(x, y, th);
    t.ranges.resize(static_cast<std::size_t>(d.n_beams));
    t.labels.resize(static_cast<std::size_t>(d.n_beams));
    if (!i.read(reinterpret_cast<char*>(t.ranges.data()), static_cast<std::streamsize>(t.ranges.size() * sizeof(float))) ||
        !i.read(reinterpret_cast<char*>(t.labels.data()), static_cast<std::streamsize>(t.labels.size())))
      throw std::runtime_error("unexpected end of dataset file");
    for (auto l : t.labels)
      if (l != 1 && l != -1) throw std::runtime_error("dataset label outside {-1,+1}");
  }
  return d;
}

}  // namespace vsearch
