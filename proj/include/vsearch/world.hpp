#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsearch/geometry.hpp"
#include "vsearch/grid.hpp"
#include "vsearch/rng.hpp"

namespace vsearch {

struct Bounds {
  double min_x = 0.0;
  double min_y = 0.0;
  double max_x = 0.0;
  double max_y = 0.0;

  bool contains(Vec2 p) const { return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y; }
  bool strictly_contains(Vec2 p) const { return p.x > min_x && p.x < max_x && p.y > min_y && p.y < max_y; }
  Vec2 min_corner() const { return {min_x, min_y}; }
  Vec2 max_corner() const { return {max_x, max_y}; }
  double width() const { return max_x - min_x; }
  double height() const { return max_y - min_y; }
  bool operator==(const Bounds&) const = default;
};

struct Target {
  Vec2 position;
  double radius = 0.2;
  Circle disc() const { return {position, radius}; }
};

/// Ground truth: permanent line map, non-permanent convex objects and search targets.
/// Targets are physical (LiDAR sees them as non-permanent discs).
struct LineWorld {
  Bounds bounds;
  std::vector<Segment> segments;
  std::vector<Polygon> objects;
  std::vector<Target> targets;
  Pose start_pose;
};

inline void validate_world(const LineWorld& w) {
  if (!(w.bounds.max_x > w.bounds.min_x && w.bounds.max_y > w.bounds.min_y))
    throw std::invalid_argument("world bounds are empty");
  for (std::size_t i = 0; i < w.objects.size(); ++i) {
    const auto& poly = w.objects[i];
    if (!is_convex_ccw(poly)) throw std::invalid_argument("object " + std::to_string(i) + " is not convex CCW");
    for (auto v : poly)
      if (!w.bounds.strictly_contains(v))
        throw std::invalid_argument("object " + std::to_string(i) + " leaves world bounds");
  }
  for (std::size_t i = 0; i < w.targets.size(); ++i) {
    const auto& t = w.targets[i];
    if (!(t.radius > 0.0)) throw std::invalid_argument("target radius must be positive");
    const Bounds& b = w.bounds;
    if (!(t.position.x - t.radius > b.min_x && t.position.x + t.radius < b.max_x &&
          t.position.y - t.radius > b.min_y && t.position.y + t.radius < b.max_y))
      throw std::invalid_argument("target " + std::to_string(i) + " leaves world bounds");
  }
}

inline bool point_in_obstacle(const LineWorld& w, Vec2 p) {
  for (const auto& poly : w.objects)
    if (point_in_convex_polygon(p, poly)) return true;
  for (const auto& t : w.targets)
    if (point_in_circle(p, t.disc())) return true;
  return false;
}

struct SensorSpec {
  int n_beams = 897;
  double lidar_max_range = 10.0;
  double lidar_noise_sigma = 0.01;
  double visual_fov_angle = std::numbers::pi / 3.0;
  double visual_max_range = 4.0;
  double scan_rate_hz = 5.0;

  void validate() const {
    if (n_beams <= 0) throw std::invalid_argument("n_beams must be positive");
    if (!(lidar_max_range > 0.0 && visual_max_range > 0.0)) throw std::invalid_argument("sensor ranges must be positive");
    if (!(lidar_noise_sigma >= 0.0)) throw std::invalid_argument("lidar noise must be non-negative");
    if (!(visual_fov_angle > 0.0 && visual_fov_angle < std::numbers::pi))
      throw std::invalid_argument("visual_fov_angle must lie in (0, pi)");
    if (!(scan_rate_hz > 0.0)) throw std::invalid_argument("scan rate must be positive");
  }
  double scan_period() const { return 1.0 / scan_rate_hz; }
  /// Offset of beam j from the robot heading; beam 0 looks forward, beams run counter-clockwise.
  double beam_offset(int j) const { return 2.0 * std::numbers::pi * j / n_beams; }
};

struct MotionSpec {
  double v_robot = 0.5;    // m/s
  double turn_rate = 1.0;  // rad/s, in place or blended with translation
};

enum class HitSource : std::uint8_t { none, segment, object };

struct RayHit {
  double range = 0.0;
  HitSource source = HitSource::none;
  int index = -1;   // segment index or object index
  int target = -1;  // target index when the hit object is a target disc
};

/// Exact ray cast against the line map (and objects/targets when include_objects is set).
/// `angle` is the absolute world-frame bearing of the ray.
inline RayHit ray_cast(const LineWorld& w, const Pose& origin, double angle, double max_range, bool include_objects) {
  const Vec2 o = origin.position();
  if (!w.bounds.contains(o)) throw std::domain_error("ray origin outside world bounds");
  const Vec2 dir = unit_vector(angle);
  RayHit best{max_range, HitSource::none, -1, -1};
  double best_t = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < w.segments.size(); ++i) {
    if (auto t = ray_segment_intersection(o, dir, w.segments[i]); t && *t < best_t) {
      best_t = *t;
      best = {*t, HitSource::segment, static_cast<int>(i), -1};
    }
  }
  if (include_objects) {
    for (std::size_t i = 0; i < w.objects.size(); ++i) {
      if (auto t = ray_polygon_intersection(o, dir, w.objects[i]); t && *t < best_t) {
        best_t = *t;
        best = {*t, HitSource::object, static_cast<int>(i), -1};
      }
    }
    for (std::size_t i = 0; i < w.targets.size(); ++i) {
      if (auto t = ray_circle_intersection(o, dir, w.targets[i].disc()); t && *t < best_t) {
        best_t = *t;
        best = {*t, HitSource::object, static_cast<int>(w.objects.size() + i), static_cast<int>(i)};
      }
    }
  }
  if (best_t > max_range) return {max_range, HitSource::none, -1, -1};
  return best;
}

/// Casts n_beams rays at pose.theta + 2*pi*j/n. Each primitive is only tested against beams inside
/// its angular extent; per beam the result equals ray_cast.
inline std::vector<RayHit> cast_beams(const LineWorld& w, const Pose& origin, int n_beams, double max_range,
                                      bool include_objects) {
  const Vec2 o = origin.position();
  if (!w.bounds.contains(o)) throw std::domain_error("ray origin outside world bounds");
  const int n = n_beams;
  const double step = 2.0 * std::numbers::pi / n;
  std::vector<Vec2> dirs(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    dirs[static_cast<std::size_t>(j)] = unit_vector(origin.theta + 2.0 * std::numbers::pi * j / n);
  std::vector<double> best_t(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<RayHit> out(static_cast<std::size_t>(n), RayHit{max_range, HitSource::none, -1, -1});

  // Visits beams whose bearing lies within [center - half, center + half] (absolute angles), padded.
  const auto for_beams = [&](double center, double half, auto&& test) {
    if (half >= std::numbers::pi) {
      for (int j = 0; j < n; ++j) test(j);
      return;
    }
    double rel = std::fmod(center - half - origin.theta, 2.0 * std::numbers::pi);
    if (rel < 0.0) rel += 2.0 * std::numbers::pi;
    const int first = static_cast<int>(std::floor(rel / step)) - 1;
    const int count = static_cast<int>(std::ceil(2.0 * half / step)) + 3;
    for (int i = 0; i < std::min(count, n); ++i) test(((first + i) % n + n) % n);
  };
  const auto extent = [&](std::span<const Vec2> pts, double& center, double& half) {
    Vec2 c{};
    for (auto p : pts) c += p;
    c = c / static_cast<double>(pts.size());
    const Vec2 d0 = c - o;
    if (squared_norm(d0) < 1e-18) {
      half = std::numbers::pi;
      return;
    }
    center = std::atan2(d0.y, d0.x);
    half = 0.0;
    for (auto p : pts) {
      const Vec2 d = p - o;
      if (squared_norm(d) < 1e-18) {
        half = std::numbers::pi;
        return;
      }
      half = std::max(half, std::abs(normalize_angle(std::atan2(d.y, d.x) - center)));
    }
    if (half > 0.5 * std::numbers::pi - 1e-6) half = std::numbers::pi;
  };

  for (std::size_t i = 0; i < w.segments.size(); ++i) {
    const Segment& s = w.segments[i];
    double center = 0.0, half = 0.0;
    const Vec2 pts[2] = {s.a, s.b};
    extent(pts, center, half);
    for_beams(center, half, [&](int j) {
      const auto u = static_cast<std::size_t>(j);
      if (auto t = ray_segment_intersection(o, dirs[u], s); t && *t < best_t[u]) {
        best_t[u] = *t;
        out[u] = {*t, HitSource::segment, static_cast<int>(i), -1};
      }
    });
  }
  if (include_objects) {
    for (std::size_t i = 0; i < w.objects.size(); ++i) {
      const auto& poly = w.objects[i];
      double center = 0.0, half = 0.0;
      extent(poly, center, half);
      for_beams(center, half, [&](int j) {
        const auto u = static_cast<std::size_t>(j);
        if (auto t = ray_polygon_intersection(o, dirs[u], poly); t && *t < best_t[u]) {
          best_t[u] = *t;
          out[u] = {*t, HitSource::object, static_cast<int>(i), -1};
        }
      });
    }
    for (std::size_t i = 0; i < w.targets.size(); ++i) {
      const Circle c = w.targets[i].disc();
      const Vec2 d = c.center - o;
      const double dist = norm(d);
      const double half = dist <= c.radius * 1.01 ? std::numbers::pi : std::asin(c.radius / dist) * 1.01;
      for_beams(std::atan2(d.y, d.x), half, [&](int j) {
        const auto u = static_cast<std::size_t>(j);
        if (auto t = ray_circle_intersection(o, dirs[u], c); t && *t < best_t[u]) {
          best_t[u] = *t;
          out[u] = {*t, HitSource::object, static_cast<int>(w.objects.size() + i), static_cast<int>(i)};
        }
      });
    }
  }
  for (std::size_t u = 0; u < out.size(); ++u)
    if (best_t[u] > max_range) out[u] = {max_range, HitSource::none, -1, -1};
  return out;
}

struct Scan {
  std::vector<double> ranges;
  std::vector<std::uint8_t> hit;  // 0 for no-return beams (range == max_range)
  double max_range = 0.0;
  std::int64_t timestamp = 0;

  std::size_t size() const { return ranges.size(); }
  /// World-frame point of beam j.
  Vec2 point(const Pose& pose, double beam_offset, std::size_t j) const {
    return pose.position() + unit_vector(pose.theta + beam_offset) * ranges[j];
  }
};

inline Scan simulate_scan(const LineWorld& w, const Pose& pose, const SensorSpec& spec, std::uint64_t rng_seed,
                          std::int64_t timestamp = 0) {
  spec.validate();
  if (point_in_obstacle(w, pose.position())) throw std::domain_error("scan pose lies inside an object");
  Rng rng(rng_seed);
  std::normal_distribution<double> noise(0.0, spec.lidar_noise_sigma);
  Scan s;
  s.max_range = spec.lidar_max_range;
  s.timestamp = timestamp;
  s.ranges.resize(static_cast<std::size_t>(spec.n_beams));
  s.hit.resize(s.ranges.size());
  const auto hits = cast_beams(w, pose, spec.n_beams, spec.lidar_max_range, true);
  for (int j = 0; j < spec.n_beams; ++j) {
    const auto u = static_cast<std::size_t>(j);
    const RayHit& h = hits[u];
    if (h.source == HitSource::none) {
      s.ranges[u] = spec.lidar_max_range;
      s.hit[u] = 0;
      continue;
    }
    double r = h.range;
    if (spec.lidar_noise_sigma > 0.0) r += noise(rng);
    s.ranges[u] = std::clamp(r, 1e-6, spec.lidar_max_range);
    s.hit[u] = 1;
  }
  return s;
}

/// Cone membership; boundary inclusive in both angle and range.
inline bool in_visual_cone(const Pose& pose, Vec2 p, const SensorSpec& spec) {
  constexpr double eps = 1e-9;
  const Vec2 d = p - pose.position();
  const double r = norm(d);
  if (r == 0.0) return true;
  if (r > spec.visual_max_range + eps) return false;
  const double off = normalize_angle(std::atan2(d.y, d.x) - pose.theta);
  return std::abs(off) <= 0.5 * spec.visual_fov_angle + eps;
}

/// True when nothing blocks the segment from -> to. Geometry enclosing `to` does not occlude it,
/// so surfaces and targets can be seen.
inline bool line_of_sight(const LineWorld& w, Vec2 from, Vec2 to) {
  const Vec2 d = to - from;
  const double dist = norm(d);
  if (dist == 0.0) return true;
  const Vec2 dir = d / dist;
  const double limit = dist - 1e-9;
  for (const auto& s : w.segments)
    if (auto t = ray_segment_intersection(from, dir, s, 0.0); t && *t < limit) return false;
  for (const auto& poly : w.objects) {
    if (point_in_convex_polygon(to, poly)) continue;
    if (auto t = ray_polygon_intersection(from, dir, poly); t && *t < limit) return false;
  }
  for (const auto& tg : w.targets) {
    if (squared_norm(to - tg.position) <= tg.radius * tg.radius) continue;
    if (auto t = ray_circle_intersection(from, dir, tg.disc(), 0.0); t && *t < limit) return false;
  }
  return true;
}

inline bool sees_point(const LineWorld& w, const Pose& pose, Vec2 p, const SensorSpec& spec) {
  return in_visual_cone(pose, p, spec) && line_of_sight(w, pose.position(), p);
}

/// Grid cells whose centers lie in the visual cone with unobstructed line of sight.
inline std::vector<Cell> visible_cells(const LineWorld& w, const Pose& pose, const SensorSpec& spec,
                                       const GridGeometry& grid) {
  std::vector<Cell> out;
  const double r = spec.visual_max_range;
  const Cell lo = grid.cell_of({pose.x - r, pose.y - r});
  const Cell hi = grid.cell_of({pose.x + r, pose.y + r});
  for (int y = std::max(lo.y, 0); y <= std::min(hi.y, grid.height - 1); ++y)
    for (int x = std::max(lo.x, 0); x <= std::min(hi.x, grid.width - 1); ++x) {
      const Cell c{x, y};
      if (sees_point(w, pose, grid.center(c), spec)) out.push_back(c);
    }
  return out;
}

inline std::vector<std::size_t> check_detection(const LineWorld& w, const Pose& pose, const SensorSpec& spec) {
  std::vector<std::size_t> found;
  for (std::size_t i = 0; i < w.targets.size(); ++i)
    if (sees_point(w, pose, w.targets[i].position, spec)) found.push_back(i);
  return found;
}

// --- motion ---

struct TimedPose {
  Pose pose;
  double time = 0.0;
};

/// Duration of one path leg: translation at v_robot, heading change at turn_rate, whichever is longer.
inline double leg_duration(const Pose& a, const Pose& b, const MotionSpec& m) {
  const double lin = distance(a.position(), b.position()) / m.v_robot;
  const double ang = std::abs(normalize_angle(b.theta - a.theta)) / m.turn_rate;
  return std::max(lin, ang);
}

inline double path_duration(std::span<const Pose> path, const MotionSpec& m) {
  double t = 0.0;
  for (std::size_t i = 1; i < path.size(); ++i) t += leg_duration(path[i - 1], path[i], m);
  return t;
}

/// Poses along the path at multiples of the scan period; the last sample rests on the final pose.
inline std::vector<TimedPose> sample_path(std::span<const Pose> path, const MotionSpec& m, double scan_rate_hz) {
  std::vector<TimedPose> out;
  if (path.size() < 2) return out;
  const double dt = 1.0 / scan_rate_hz;
  const double total = path_duration(path, m);
  const auto n = static_cast<std::size_t>(std::ceil(total / dt - 1e-9));
  out.reserve(n);
  std::size_t leg = 1;
  double leg_start = 0.0;
  double leg_len = leg_duration(path[0], path[1], m);
  for (std::size_t k = 1; k <= n; ++k) {
    const double t = std::min(static_cast<double>(k) * dt, total);
    while (leg + 1 < path.size() && t > leg_start + leg_len) {
      leg_start += leg_len;
      ++leg;
      leg_len = leg_duration(path[leg - 1], path[leg], m);
    }
    const Pose& a = path[leg - 1];
    const Pose& b = path[leg];
    const double f = leg_len > 0.0 ? std::clamp((t - leg_start) / leg_len, 0.0, 1.0) : 1.0;
    const Vec2 p = a.position() + (b.position() - a.position()) * f;
    const double th = a.theta + normalize_angle(b.theta - a.theta) * f;
    out.push_back({Pose(p, k == n ? path.back().theta : th), static_cast<double>(k) * dt});
  }
  if (!out.empty()) out.back().pose = Pose(path.back().position(), path.back().theta);
  return out;
}

/// True when the straight move a->b stays in bounds and touches no segment, object or target.
inline bool leg_clear(const LineWorld& w, Vec2 a, Vec2 b) {
  if (!w.bounds.contains(a) || !w.bounds.contains(b)) return false;
  if (point_in_obstacle(w, a) || point_in_obstacle(w, b)) return false;
  const Segment leg{a, b};
  for (const auto& s : w.segments)
    if (segments_intersect(leg, s)) return false;
  for (const auto& poly : w.objects)
    if (segment_intersects_polygon(leg, poly)) return false;
  for (const auto& t : w.targets)
    if (segment_intersects_circle(leg, t.disc())) return false;
  return true;
}

/// Throws std::domain_error when a leg of the path crosses world geometry.
inline void check_path_clear(const LineWorld& w, std::span<const Pose> path) {
  for (std::size_t i = 0; i < path.size(); ++i) {
    if (!w.bounds.contains(path[i].position())) throw std::domain_error("path leaves world bounds");
    if (point_in_obstacle(w, path[i].position())) throw std::domain_error("path pose inside an object");
    if (i > 0 && !leg_clear(w, path[i - 1].position(), path[i].position()))
      throw std::domain_error("path crosses world geometry");
  }
}

/// Longest drivable prefix of the path, stopping `margin` short of the first contact. The
/// first pose is kept as is; a path that is clear throughout is returned unchanged.
inline std::vector<Pose> clear_prefix(const LineWorld& w, std::span<const Pose> path, double margin = 0.05) {
  std::vector<Pose> out;
  if (path.empty()) return out;
  out.push_back(path.front());
  for (std::size_t i = 1; i < path.size(); ++i) {
    const Vec2 a = path[i - 1].position(), b = path[i].position();
    if (leg_clear(w, a, b)) {
      out.push_back(path[i]);
      continue;
    }
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 40; ++it) {
      const double mid = 0.5 * (lo + hi);
      (leg_clear(w, a, a + (b - a) * mid) ? lo : hi) = mid;
    }
    const double len = distance(a, b);
    const double f = len > 0.0 ? std::max(0.0, lo - margin / len) : 0.0;
    if (f > 0.0) out.emplace_back(a + (b - a) * f, path[i].theta);
    break;
  }
  return out;
}

struct TrajectorySample {
  Pose pose;
  double time = 0.0;
  Scan scan;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double elapsed = 0.0;
};

/// Drives the path at constant speed, emitting a scan every scan period. Scan i uses the RNG
/// stream derive_seed(seed, {first_scan_index + i}).
inline Trajectory move_robot(const LineWorld& w, std::span<const Pose> path, const SensorSpec& spec,
                             const MotionSpec& motion, std::uint64_t seed, std::int64_t first_scan_index = 0) {
  check_path_clear(w, path);
  Trajectory traj;
  const auto timed = sample_path(path, motion, spec.scan_rate_hz);
  traj.samples.reserve(timed.size());
  for (std::size_t i = 0; i < timed.size(); ++i) {
    const auto idx = first_scan_index + static_cast<std::int64_t>(i);
    traj.samples.push_back(
        {timed[i].pose, timed[i].time,
         simulate_scan(w, timed[i].pose, spec, derive_seed(seed, {static_cast<std::uint64_t>(idx)}), idx)});
  }
  traj.elapsed = timed.empty() ? 0.0 : timed.back().time;
  return traj;
}

}  // namespace vsearch
