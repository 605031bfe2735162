#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "vsearch/path_planner.hpp"
#include "vsearch/search_map.hpp"

namespace vsearch {

inline constexpr std::array<double, 4> kViewpointHeadings = {0.0, std::numbers::pi / 2, std::numbers::pi,
                                                               -std::numbers::pi / 2};

struct UtilityTerms {
  double dist_penalty = 0.0;          // path length, m
  double unknown_reward = 0.0;        // unknown visual-map cells in view
  double frontier_path_reward = 0.0;  // centroids near the path
  double nonmap_reward = 0.0;         // uninspected non-map points in view
  bool operator==(const UtilityTerms&) const = default;
};

struct Viewpoint {
  Pose pose;
  Vec2 source_centroid;
  int orientation_index = 0;
  SensorKind source = SensorKind::lidar;
  UtilityTerms terms;
  double utility = 0.0;
  PlannedPath path;
};

struct UtilityWeights {
  double w_dist = 1.0;
  double w_unknown = 0.5;
  double w_frontier_path = 2.0;
  double w_nonmap = 5.0;
  double frontier_path_radius = 1.5;

  void validate() const {
    if (w_dist < 0 || w_unknown < 0 || w_frontier_path < 0 || w_nonmap < 0)
      throw std::invalid_argument("utility weights must be non-negative");
    if (!(w_dist > 0 || w_unknown > 0 || w_frontier_path > 0 || w_nonmap > 0))
      throw std::invalid_argument("at least one utility weight must be positive");
    if (!(frontier_path_radius >= 0.0)) throw std::invalid_argument("frontier_path_radius must be non-negative");
  }
  UtilityWeights scaled(double c) const {
    return {w_dist * c, w_unknown * c, w_frontier_path * c, w_nonmap * c, frontier_path_radius};
  }
};

/// Camera sight test on the LiDAR map: a disc of radius `margin` around p fits in the cone and
/// no occupied cell lies on the way. Occupied cells next to the point's own cell belong to the
/// surface the point lies on and do not block.
inline bool map_sees_point(const SearchMap& lidar, const Pose& pose, Vec2 p, const SensorSpec& spec,
                           double margin = 0.0) {
  if (!in_visual_cone(pose, p, spec)) return false;
  if (margin > 0.0) {
    const Vec2 d = p - pose.position();
    const double r = norm(d);
    if (r + margin > spec.visual_max_range) return false;
    if (r <= margin) return false;
    const double off = std::abs(normalize_angle(std::atan2(d.y, d.x) - pose.theta));
    if (off + std::asin(margin / r) > 0.5 * spec.visual_fov_angle) return false;
  }
  const auto& g = lidar.geometry();
  const Cell target = g.cell_of(p);
  return grid_line_of_sight(g, pose.position(), target, [&](Cell c) {
    if (std::abs(c.x - target.x) <= 1 && std::abs(c.y - target.y) <= 1) return false;
    return lidar.is_occupied(c);
  });
}

/// Non-map points binned on a grid, one representative per bin, each uninspected until its
/// whole bin has been in view.
class NonMapRegistry {
 public:
  struct Entry {
    Vec2 point;
    bool inspected = false;
  };

  explicit NonMapRegistry(double bin_size = 0.2) : bin_(bin_size) {
    if (!(bin_size > 0.0)) throw std::invalid_argument("registry bin size must be positive");
  }

  double bin_size() const { return bin_; }
  std::size_t size() const { return entries_.size(); }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t uninspected() const {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [](const Entry& e) { return !e.inspected; }));
  }

  /// Adds p unless its bin already holds a representative; returns true when added.
  bool add(Vec2 p) {
    const auto k = key(p);
    if (bins_.contains(k)) return false;
    bins_.emplace(k, entries_.size());
    entries_.push_back({p, false});
    return true;
  }

  /// Marks every uninspected point seen from the pose; returns how many changed.
  int inspect(const SearchMap& lidar, const Pose& pose, const SensorSpec& spec) {
    int n = 0;
    for (auto& e : entries_)
      if (!e.inspected && map_sees_point(lidar, pose, e.point, spec, bin_)) {
        e.inspected = true;
        ++n;
      }
    return n;
  }

  int count_visible_uninspected(const SearchMap& lidar, const Pose& pose, const SensorSpec& spec) const {
    int n = 0;
    for (const auto& e : entries_)
      if (!e.inspected && map_sees_point(lidar, pose, e.point, spec, bin_)) ++n;
    return n;
  }

 private:
  std::uint64_t key(Vec2 p) const {
    const auto x = static_cast<std::int32_t>(std::floor(p.x / bin_));
    const auto y = static_cast<std::int32_t>(std::floor(p.y / bin_));
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
  }

  double bin_;
  std::vector<Entry> entries_;
  std::unordered_map<std::uint64_t, std::size_t> bins_;
};

/// Where a candidate at this frontier stands: the centroid when reachable, otherwise the
/// reachable frontier cell nearest to it.
inline std::optional<Vec2> candidate_position(const Frontier& f, const PathPlanner& planner) {
  const auto& g = planner.geometry();
  if (planner.reachable(g.cell_of(f.centroid))) return f.centroid;
  std::optional<Vec2> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const Cell c : f.cells) {
    if (!planner.reachable(c)) continue;
    const double d = squared_norm(g.center(c) - f.centroid);
    if (d < best_d) {
      best_d = d;
      best = g.center(c);
    }
  }
  return best;
}

/// Four cardinal viewpoints per frontier of either map; positions that are occupied or
/// unreachable are dropped. LiDAR frontiers come first, each in the map's frontier order.
inline std::vector<Viewpoint> generate_candidates(const std::vector<Frontier>& lidar_frontiers,
                                                  const std::vector<Frontier>& visual_frontiers,
                                                  const PathPlanner& planner) {
  std::vector<Viewpoint> out;
  for (const auto* list : {&lidar_frontiers, &visual_frontiers})
    for (const auto& f : *list) {
      const auto pos = candidate_position(f, planner);
      if (!pos) continue;
      for (int o = 0; o < 4; ++o) {
        Viewpoint v;
        v.pose = Pose(*pos, kViewpointHeadings[static_cast<std::size_t>(o)]);
        v.source_centroid = f.centroid;
        v.orientation_index = o;
        v.source = f.source;
        out.push_back(std::move(v));
      }
    }
  return out;
}

/// Read-only planning state shared by all candidates of one step.
struct PlanningContext {
  const SearchMap& lidar;
  const SearchMap& visual;
  const NonMapRegistry& registry;
  const std::vector<Vec2>& centroids;
  const PathPlanner& planner;
  const SensorSpec& spec;
};

inline double weighted_utility(const UtilityTerms& t, const UtilityWeights& w) {
  return -w.w_dist * t.dist_penalty + w.w_unknown * t.unknown_reward + w.w_frontier_path * t.frontier_path_reward +
         w.w_nonmap * t.nonmap_reward;
}

/// Fills terms, path and utility. Throws std::domain_error for an unreachable candidate.
inline Viewpoint compute_utility(Viewpoint v, const PlanningContext& ctx, const UtilityWeights& w) {
  v.path = ctx.planner.path_to(v.pose.position(), v.pose.theta);
  if (!v.path.reachable) throw std::domain_error("candidate viewpoint is unreachable");
  v.terms.dist_penalty = v.path.length;
  v.terms.unknown_reward = count_unknown_visible(ctx.visual, v.pose, ctx.spec, &ctx.lidar);
  int near = 0;
  for (auto c : ctx.centroids)
    if (point_polyline_distance(c, v.path.points) <= w.frontier_path_radius) ++near;
  v.terms.frontier_path_reward = near;
  v.terms.nonmap_reward = ctx.registry.count_visible_uninspected(ctx.lidar, v.pose, ctx.spec);
  v.utility = weighted_utility(v.terms, w);
  return v;
}

/// Index of the best candidate: maximal utility, near-ties (relative 1e-9) broken by shorter
/// path, then lower orientation index, then list order. Empty input yields nullopt.
inline std::optional<std::size_t> select_viewpoint(const std::vector<Viewpoint>& c) {
  if (c.empty()) return std::nullopt;
  double scale = 0.0;
  for (const auto& v : c) scale = std::max(scale, std::abs(v.utility));
  const double tol = 1e-9 * std::max(scale, 1e-300);
  std::size_t best = 0;
  for (std::size_t i = 1; i < c.size(); ++i) {
    const auto& a = c[i];
    const auto& b = c[best];
    if (a.utility > b.utility + tol) {
      best = i;
    } else if (std::abs(a.utility - b.utility) <= tol) {
      if (a.path.length < b.path.length - 1e-12 ||
          (std::abs(a.path.length - b.path.length) <= 1e-12 && a.orientation_index < b.orientation_index))
        best = i;
    }
  }
  return best;
}

}  // namespace vsearch
