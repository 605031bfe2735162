#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "vsearch/planner.hpp"
#include "vsearch/scan_classify_gt.hpp"
#include "vsearch/search_map.hpp"
#include "vsearch/training.hpp"
#include "vsearch/world.hpp"

namespace vsearch {

enum class LabelMode { ground_truth, learned, none };

inline const char* to_string(LabelMode m) {
  switch (m) {
    case LabelMode::ground_truth: return "ground_truth";
    case LabelMode::learned: return "learned";
    case LabelMode::none: return "none";
  }
  return "?";
}
inline LabelMode parse_label_mode(const std::string& s) {
  if (s == "ground_truth") return LabelMode::ground_truth;
  if (s == "learned") return LabelMode::learned;
  if (s == "none") return LabelMode::none;
  throw std::invalid_argument("unknown label mode '" + s + "'");
}

struct PlannerConfig {
  SensorSpec sensor;
  MotionSpec motion;
  ClassifierParams gt;
  UtilityWeights weights;
  double resolution = 0.1;
  int min_frontier_size = 5;
  int frontier_cluster_cells = 0;
  int clearance_cells = 1;
  double registry_bin = 0.2;
  double budget_s = 180.0;
  double ewa_decay = 0.5;

  void validate() const {
    sensor.validate();
    gt.validate();
    weights.validate();
    if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be positive");
    if (min_frontier_size < 1) throw std::invalid_argument("min_frontier_size must be at least 1");
    if (frontier_cluster_cells < 0) throw std::invalid_argument("frontier_cluster_cells must be non-negative");
    if (clearance_cells < 0) throw std::invalid_argument("clearance_cells must be non-negative");
    if (!(registry_bin > 0.0)) throw std::invalid_argument("registry_bin must be positive");
    if (!(budget_s > 0.0)) throw std::invalid_argument("budget_s must be positive");
    if (!(motion.v_robot > 0.0 && motion.turn_rate > 0.0)) throw std::invalid_argument("robot speeds must be positive");
    if (!(ewa_decay > 0.0 && ewa_decay < 1.0)) throw std::invalid_argument("ewa_decay must lie in (0,1)");
  }
};

namespace detail {

inline std::map<std::string, double*> config_fields(PlannerConfig& c) {
  return {{"resolution", &c.resolution},
          {"registry_bin", &c.registry_bin},
          {"budget_s", &c.budget_s},
          {"ewa_decay", &c.ewa_decay},
          {"w_dist", &c.weights.w_dist},
          {"w_unknown", &c.weights.w_unknown},
          {"w_frontier_path", &c.weights.w_frontier_path},
          {"w_nonmap", &c.weights.w_nonmap},
          {"frontier_path_radius", &c.weights.frontier_path_radius},
          {"lidar_max_range", &c.sensor.lidar_max_range},
          {"lidar_noise_sigma", &c.sensor.lidar_noise_sigma},
          {"visual_fov_angle", &c.sensor.visual_fov_angle},
          {"visual_max_range", &c.sensor.visual_max_range},
          {"scan_rate_hz", &c.sensor.scan_rate_hz},
          {"v_robot", &c.motion.v_robot},
          {"turn_rate", &c.motion.turn_rate},
          {"sigma_s", &c.gt.sigma_s},
          {"tau_ltf", &c.gt.tau_ltf},
          {"tau_stf", &c.gt.tau_stf}};
}
inline std::map<std::string, int*> config_int_fields(PlannerConfig& c) {
  return {{"min_frontier_size", &c.min_frontier_size},
          {"frontier_cluster_cells", &c.frontier_cluster_cells},
          {"clearance_cells", &c.clearance_cells},
          {"n_beams", &c.sensor.n_beams},
          {"history_window", &c.gt.history_window}};
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace detail

/// Flat `key = value` document; `#` starts a comment. Unknown keys are rejected.
inline PlannerConfig parse_planner_config(std::istream& in, PlannerConfig c = {}) {
  auto reals = detail::config_fields(c);
  auto ints = detail::config_int_fields(c);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq)), value = detail::trim(line.substr(eq + 1));
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    auto it = reals.find(key);
    auto jt = ints.find(key);
    if (it == reals.end() && jt == ints.end()) throw std::invalid_argument(where + "unknown key '" + key + "'");
    std::size_t used = 0;
    try {
      if (it != reals.end()) *it->second = std::stod(value, &used);
      else *jt->second = std::stoi(value, &used);
    } catch (const std::logic_error&) {
      throw std::invalid_argument(where + "bad value for '" + key + "'");
    }
    if (used != value.size()) throw std::invalid_argument(where + "bad value for '" + key + "'");
  }
  c.validate();
  return c;
}

inline PlannerConfig load_planner_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_planner_config(in);
}

inline std::string format_planner_config(PlannerConfig c) {
  std::ostringstream o;
  o.precision(17);
  for (const auto& [k, v] : detail::config_fields(c)) o << k << " = " << *v << '\n';
  for (const auto& [k, v] : detail::config_int_fields(c)) o << k << " = " << *v << '\n';
  return o.str();
}

struct StepLog {
  int step = 0;
  double time = 0.0;
  Pose pose;
  std::optional<Viewpoint> chosen;
  std::size_t n_candidates = 0;
  std::size_t registry_size = 0;
  std::size_t registry_uninspected = 0;
};

struct EpisodeResult {
  bool found = false;
  double detection_time = 0.0;  // time of detection, or elapsed time at termination
  std::string termination;      // found | exhausted | budget
  std::vector<TimedPose> trace;  // pose of every scan
  std::vector<StepLog> steps;
  std::size_t registry_size = 0;
  std::vector<Vec2> registry_points;
  std::vector<std::uint8_t> registry_inspected;
  double label_accuracy = 0.0;  // mean per-scan agreement with ground truth (labelled modes)
};

inline nlohmann::json step_log_json(const StepLog& s) {
  nlohmann::json j{{"step", s.step},
                   {"time", s.time},
                   {"pose", {s.pose.x, s.pose.y, s.pose.theta}},
                   {"n_candidates", s.n_candidates},
                   {"registry_size", s.registry_size},
                   {"registry_uninspected", s.registry_uninspected}};
  if (s.chosen) {
    const auto& v = *s.chosen;
    j["chosen"] = {{"pose", {v.pose.x, v.pose.y, v.pose.theta}},
                   {"orientation_index", v.orientation_index},
                   {"source", to_string(v.source)},
                   {"utility", v.utility},
                   {"terms",
                    {{"dist_penalty", v.terms.dist_penalty},
                     {"unknown_reward", v.terms.unknown_reward},
                     {"frontier_path_reward", v.terms.frontier_path_reward},
                     {"nonmap_reward", v.terms.nonmap_reward}}},
                   {"path_length", v.path.length}};
  } else {
    j["chosen"] = nullptr;
  }
  return j;
}

inline void write_step_log(const EpisodeResult& r, std::ostream& out) {
  for (const auto& s : r.steps) out << step_log_json(s).dump() << '\n';
}

/// Map-free informed search loop: scan, classify, update maps, plan on arrival at each
/// viewpoint, check detection at every scan. Failures are results, never exceptions.
inline EpisodeResult search_episode(const LineWorld& world, const PlannerConfig& cfg, LabelMode mode,
                                    std::uint64_t seed, const TcnModel<float>* model = nullptr) {
  cfg.validate();
  if (mode == LabelMode::learned && model == nullptr) throw std::invalid_argument("learned mode needs a model");
  if (mode == LabelMode::learned && model->n_beams() != cfg.sensor.n_beams)
    throw std::invalid_argument("model beam count differs from the sensor");
  const SensorSpec& spec = cfg.sensor;
  EpisodeResult res;
  SearchMap lidar = SearchMap::covering(world.bounds, cfg.resolution, SensorKind::lidar);
  SearchMap visual = SearchMap::covering(world.bounds, cfg.resolution, SensorKind::visual);
  NonMapRegistry registry(cfg.registry_bin);
  ObservationHistory history(cfg.gt.history_window);
  std::optional<HistoryBuffer> buffer;
  if (mode == LabelMode::learned) buffer.emplace(model->k(), model->n_beams());
  std::set<std::pair<std::size_t, int>> visited;
  std::int64_t scan_index = 0;
  double acc_sum = 0.0;
  std::size_t acc_n = 0;

  // One scan at `pose` and time t; returns true on detection.
  const auto observe = [&](const Pose& pose, double t) {
    res.trace.push_back({pose, t});
    const Scan scan = simulate_scan(world, pose, spec, derive_seed(seed, {static_cast<std::uint64_t>(scan_index)}), scan_index);
    ++scan_index;
    if (!check_detection(world, pose, spec).empty()) return true;
    std::vector<std::int8_t> labels;
    if (mode == LabelMode::ground_truth) {
      labels = classify_scan_gt(world, pose, scan, cfg.gt, history).labels;
    } else if (mode == LabelMode::learned) {
      labels = infer_step(*model, *buffer, pose, scan, cfg.ewa_decay);
      const auto truth = classify_scan_gt(world, pose, scan, cfg.gt, history).labels;
      acc_sum += accuracy(labels, truth);
      ++acc_n;
    }
    update_map(lidar, pose, scan, spec);
    update_map(visual, pose, scan, spec);
    if (mode != LabelMode::none) {
      for (std::size_t j = 0; j < scan.size(); ++j)
        if (labels[j] == kNonMapLabel && scan.hit[j]) registry.add(scan.point(pose, spec.beam_offset(static_cast<int>(j)), j));
      registry.inspect(lidar, pose, spec);
    }
    return false;
  };

  const auto finish = [&](const char* why, bool found, double t) {
    res.termination = why;
    res.found = found;
    res.detection_time = t;
    res.registry_size = registry.size();
    for (const auto& e : registry.entries()) {
      res.registry_points.push_back(e.point);
      res.registry_inspected.push_back(e.inspected ? 1 : 0);
    }
    res.label_accuracy = acc_n ? acc_sum / static_cast<double>(acc_n) : 0.0;
    return res;
  };

  Pose pose = world.start_pose;
  double t = 0.0;
  if (observe(pose, t)) return finish("found", true, t);
  const double dt = spec.scan_period();

  for (int step = 0;; ++step) {
    if (t >= cfg.budget_s) return finish("budget", false, t);
    const PathPlanner planner(lidar, pose, cfg.clearance_cells);
    const auto lf = cluster_frontiers(extract_frontiers(lidar, cfg.min_frontier_size), lidar.geometry(),
                                      cfg.frontier_cluster_cells, cfg.min_frontier_size);
    const auto vf = cluster_frontiers(extract_frontiers(visual, cfg.min_frontier_size), visual.geometry(),
                                      cfg.frontier_cluster_cells, cfg.min_frontier_size);
    std::vector<Vec2> centroids;
    for (const auto& f : lf) centroids.push_back(f.centroid);
    for (const auto& f : vf) centroids.push_back(f.centroid);
    auto candidates = generate_candidates(lf, vf, planner);
    const auto& g = lidar.geometry();
    std::erase_if(candidates, [&](const Viewpoint& v) {
      return visited.contains({g.index(g.cell_of(v.pose.position())), v.orientation_index});
    });
    const PlanningContext ctx{lidar, visual, registry, centroids, planner, spec};
    for (auto& v : candidates) v = compute_utility(std::move(v), ctx, cfg.weights);
    const auto pick = select_viewpoint(candidates);

    StepLog log;
    log.step = step;
    log.time = t;
    log.pose = pose;
    log.n_candidates = candidates.size();
    log.registry_size = registry.size();
    log.registry_uninspected = registry.uninspected();
    if (!pick) {
      res.steps.push_back(std::move(log));
      return finish("exhausted", false, t);
    }
    const Viewpoint& chosen = candidates[*pick];
    log.chosen = chosen;
    res.steps.push_back(std::move(log));
    visited.insert({g.index(g.cell_of(chosen.pose.position())), chosen.orientation_index});

    // Bumper: stop short of geometry the map has not resolved and give up on this goal.
    const std::vector<Pose> path = clear_prefix(world, chosen.path.poses);
    if (path.size() < chosen.path.poses.size())
      for (int o = 0; o < 4; ++o) visited.insert({g.index(g.cell_of(chosen.pose.position())), o});
    const auto samples = sample_path(path, cfg.motion, spec.scan_rate_hz);
    if (samples.empty()) {
      t += dt;
      if (t > cfg.budget_s) return finish("budget", false, cfg.budget_s);
      if (observe(pose, t)) return finish("found", true, t);
      continue;
    }
    const double t0 = t;
    for (const auto& s : samples) {
      t = t0 + s.time;
      if (t > cfg.budget_s + 1e-9) return finish("budget", false, cfg.budget_s);
      pose = s.pose;
      if (observe(pose, t)) return finish("found", true, t);
    }
  }
}

/// Executed-behaviour fingerprint: every scan pose and time plus each chosen viewpoint.
inline bool same_trace(const EpisodeResult& a, const EpisodeResult& b) {
  if (a.found != b.found || a.detection_time != b.detection_time || a.termination != b.termination) return false;
  if (a.trace.size() != b.trace.size() || a.steps.size() != b.steps.size()) return false;
  for (std::size_t i = 0; i < a.trace.size(); ++i)
    if (!(a.trace[i].pose == b.trace[i].pose) || a.trace[i].time != b.trace[i].time) return false;
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    const auto& x = a.steps[i].chosen;
    const auto& y = b.steps[i].chosen;
    if (x.has_value() != y.has_value()) return false;
    if (x && (!(x->pose == y->pose) || x->utility != y->utility)) return false;
  }
  return true;
}

}  // namespace vsearch
