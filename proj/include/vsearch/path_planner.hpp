#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <queue>
#include <vector>

#include "vsearch/search_map.hpp"

namespace vsearch {

struct PlannedPath {
  bool reachable = false;
  std::vector<Vec2> points;   // smoothed polyline, robot position first
  std::vector<Pose> poses;    // points with headings along the path
  std::vector<Cell> cells;    // unsmoothed grid path
  double length = 0.0;        // smoothed polyline length
  double grid_length = 0.0;   // 8-connected grid path length
};

/// Single-source shortest paths over known-free cells of a LiDAR search map. A cell is
/// traversable when it is free and no occupied cell lies within `clearance` cells of it;
/// unknown cells are never traversed. Diagonal moves may not cut corners. A robot starting too
/// close to an obstacle may leave through nearby free cells of that band, but never stop in them.
class PathPlanner {
 public:
  PathPlanner(const SearchMap& map, const Pose& from, int clearance = 1)
      : map_(map), from_(from), clearance_(clearance) {
    const auto& g = map.geometry();
    start_ = g.cell_of(from.position());
    traversable_.assign(g.size(), 0);
    for (std::size_t i = 0; i < g.size(); ++i) traversable_[i] = compute_traversable(g.cell_at(i)) ? 1 : 0;
    mark_escape_band();
    run_dijkstra();
  }

  const GridGeometry& geometry() const { return map_.geometry(); }
  Cell start_cell() const { return start_; }

  bool traversable(Cell c) const {
    const auto& g = map_.geometry();
    return g.contains(c) && traversable_[g.index(c)] == 1;
  }
  bool passable(Cell c) const {
    const auto& g = map_.geometry();
    return c == start_ || (g.contains(c) && traversable_[g.index(c)] != 0);
  }

  double grid_distance(Cell c) const {
    const auto& g = map_.geometry();
    if (!g.contains(c)) return std::numeric_limits<double>::infinity();
    return dist_[g.index(c)];
  }
  bool reachable(Cell c) const { return std::isfinite(grid_distance(c)) && (c == start_ || traversable(c)); }

  /// Straight segment a->b crosses only passable cells.
  bool segment_clear(Vec2 a, Vec2 b) const {
    bool ok = true;
    traverse_cells(map_.geometry(), a, b, [&](Cell c) {
      if (!passable(c)) {
        ok = false;
        return false;
      }
      return true;
    }, true);
    return ok;
  }

  /// Shortest path to `goal`, shortcut greedily along lines of sight. When `goal_heading` is set
  /// a final in-place rotation pose is appended.
  PlannedPath path_to(Vec2 goal, std::optional<double> goal_heading = std::nullopt) const {
    PlannedPath out;
    const auto& g = map_.geometry();
    const Cell gc = g.cell_of(goal);
    if (!reachable(gc)) return out;
    out.reachable = true;
    out.grid_length = grid_distance(gc);
    for (Cell c = gc;;) {
      out.cells.push_back(c);
      if (c == start_) break;
      c = g.cell_at(parent_[g.index(c)]);
    }
    std::reverse(out.cells.begin(), out.cells.end());

    std::vector<Vec2> raw;
    raw.push_back(from_.position());
    for (std::size_t i = 1; i + 1 < out.cells.size(); ++i) raw.push_back(g.center(out.cells[i]));
    if (!(gc == start_) || distance(goal, from_.position()) > 0.0) raw.push_back(goal);

    out.points.push_back(raw.front());
    std::size_t i = 0;
    while (i + 1 < raw.size()) {
      std::size_t j = i + 1;
      while (j + 1 < raw.size() && segment_clear(raw[i], raw[j + 1])) ++j;
      out.points.push_back(raw[j]);
      i = j;
    }
    out.length = polyline_length(out.points);

    out.poses.push_back(from_);
    for (std::size_t k = 1; k < out.points.size(); ++k) {
      const Vec2 d = out.points[k] - out.points[k - 1];
      const double heading = squared_norm(d) > 0.0 ? std::atan2(d.y, d.x) : out.poses.back().theta;
      out.poses.emplace_back(out.points[k], heading);
    }
    if (goal_heading) out.poses.emplace_back(out.points.back(), *goal_heading);
    return out;
  }

 private:
  bool compute_traversable(Cell c) const {
    if (!map_.is_free(c)) return false;
    const auto& g = map_.geometry();
    for (int dy = -clearance_; dy <= clearance_; ++dy)
      for (int dx = -clearance_; dx <= clearance_; ++dx) {
        const Cell q{c.x + dx, c.y + dy};
        if (g.contains(q) && map_.is_occupied(q)) return false;
      }
    return true;
  }

  void mark_escape_band() {
    const auto& g = map_.geometry();
    if (!g.contains(start_) || traversable_[g.index(start_)] == 1) return;
    std::vector<std::size_t> queue{g.index(start_)};
    traversable_[queue.front()] = 2;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Cell c = g.cell_at(queue[head]);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Cell q{c.x + dx, c.y + dy};
          if (!g.contains(q) || std::max(std::abs(q.x - start_.x), std::abs(q.y - start_.y)) > clearance_ + 1) continue;
          const auto qi = g.index(q);
          if (traversable_[qi] == 0 && map_.is_free(q)) {
            traversable_[qi] = 2;
            queue.push_back(qi);
          }
        }
    }
  }

  void run_dijkstra() {
    const auto& g = map_.geometry();
    dist_.assign(g.size(), std::numeric_limits<double>::infinity());
    parent_.assign(g.size(), 0);
    if (!g.contains(start_)) return;
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    const auto s = g.index(start_);
    dist_[s] = 0.0;
    parent_[s] = s;
    pq.push({0.0, s});
    const double straight = g.resolution, diag = g.resolution * std::numbers::sqrt2;
    while (!pq.empty()) {
      const auto [d, idx] = pq.top();
      pq.pop();
      if (d > dist_[idx]) continue;
      const Cell c = g.cell_at(idx);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const Cell q{c.x + dx, c.y + dy};
          if (!passable(q)) continue;
          if (dx != 0 && dy != 0 && !(passable({c.x + dx, c.y}) && passable({c.x, c.y + dy}))) continue;
          const double nd = d + ((dx != 0 && dy != 0) ? diag : straight);
          const auto qi = g.index(q);
          if (nd < dist_[qi]) {
            dist_[qi] = nd;
            parent_[qi] = idx;
            pq.push({nd, qi});
          }
        }
    }
  }

  const SearchMap& map_;
  Pose from_;
  int clearance_;
  Cell start_;
  std::vector<std::uint8_t> traversable_;
  std::vector<double> dist_;
  std::vector<std::size_t> parent_;
};

inline PlannedPath plan_path(const SearchMap& map, const Pose& from, Vec2 to, int clearance = 1,
                             std::optional<double> goal_heading = std::nullopt) {
  return PathPlanner(map, from, clearance).path_to(to, goal_heading);
}

}  // namespace vsearch
