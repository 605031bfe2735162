#pragma once

// Brute-force reference implementations and random fixtures shared by the unit tests and the
// acceptance binary. Kept independent of the library's own geometric predicates.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "vsearch/path_planner.hpp"
#include "vsearch/search_map.hpp"
#include "vsearch/world.hpp"

namespace vsearch::oracle {

inline double orient(Vec2 a, Vec2 b, Vec2 c) { return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x); }

// Closed-segment intersection by orientation signs.
inline bool crosses(Vec2 p0, Vec2 p1, Vec2 q0, Vec2 q1) {
  const double d1 = orient(q0, q1, p0), d2 = orient(q0, q1, p1);
  const double d3 = orient(p0, p1, q0), d4 = orient(p0, p1, q1);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  const auto within = [](Vec2 a, Vec2 b, Vec2 c) {
    return std::min(a.x, b.x) <= c.x && c.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= c.y &&
           c.y <= std::max(a.y, b.y);
  };
  return (d1 == 0 && within(q0, q1, p0)) || (d2 == 0 && within(q0, q1, p1)) || (d3 == 0 && within(p0, p1, q0)) ||
         (d4 == 0 && within(p0, p1, q1));
}

inline double step_to_center(Vec2 a, Vec2 b, Vec2 c) {
  const Vec2 d = b - a;
  const double l2 = d.x * d.x + d.y * d.y;
  double t = l2 > 0 ? ((c.x - a.x) * d.x + (c.y - a.y) * d.y) / l2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(a.x + t * d.x - c.x, a.y + t * d.y - c.y);
}

/// Marches the ray in `step` increments and reports the midpoint of the first increment that
/// touches geometry; max_range when nothing is touched.
inline double ray_march(const LineWorld& w, Vec2 o, double angle, double max_range, bool include_objects,
                        double step = 1e-3) {
  const Vec2 dir{std::cos(angle), std::sin(angle)};
  const auto n = static_cast<long>(std::ceil(max_range / step));
  Vec2 prev = o;
  for (long s = 1; s <= n; ++s) {
    const double t1 = std::min(max_range, static_cast<double>(s) * step);
    const Vec2 cur{o.x + dir.x * t1, o.y + dir.y * t1};
    bool hit = false;
    for (const auto& seg : w.segments)
      if (crosses(prev, cur, seg.a, seg.b)) {
        hit = true;
        break;
      }
    if (!hit && include_objects) {
      for (const auto& poly : w.objects) {
        for (std::size_t i = 0; i < poly.size() && !hit; ++i)
          hit = crosses(prev, cur, poly[i], poly[(i + 1) % poly.size()]);
        if (hit) break;
      }
      for (const auto& t : w.targets)
        if (!hit && step_to_center(prev, cur, t.position) <= t.radius) hit = true;
    }
    if (hit) return 0.5 * (static_cast<double>(s - 1) * step + t1);
    prev = cur;
  }
  return max_range;
}

/// Regular convex polygon, counter-clockwise.
inline Polygon regular_polygon(Vec2 c, double r, int sides, double rot) {
  Polygon p;
  for (int i = 0; i < sides; ++i) {
    const double a = rot + 2.0 * std::numbers::pi * i / sides;
    p.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return p;
}

/// Unstructured world in [0, 20]^2: random walls, convex objects and targets.
inline LineWorld random_world(std::mt19937_64& rng, int n_segments = 15, int n_objects = 4, int n_targets = 2) {
  std::uniform_real_distribution<double> u(0.0, 20.0), inner(2.0, 18.0), rad(0.3, 1.0), ang(0.0, 2 * std::numbers::pi);
  std::uniform_int_distribution<int> sides(3, 7);
  LineWorld w;
  w.bounds = {0, 0, 20, 20};
  w.segments.push_back({{0, 0}, {20, 0}});
  w.segments.push_back({{20, 0}, {20, 20}});
  w.segments.push_back({{20, 20}, {0, 20}});
  w.segments.push_back({{0, 20}, {0, 0}});
  for (int i = 0; i < n_segments; ++i) w.segments.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  for (int i = 0; i < n_objects; ++i) w.objects.push_back(regular_polygon({inner(rng), inner(rng)}, rad(rng), sides(rng), ang(rng)));
  for (int i = 0; i < n_targets; ++i) w.targets.push_back({{inner(rng), inner(rng)}, 0.2 + 0.3 * rad(rng) / 1.0});
  return w;
}

/// Random position in the world that is not inside an object or disc.
inline Vec2 free_point(const LineWorld& w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ux(w.bounds.min_x + 0.5, w.bounds.max_x - 0.5);
  std::uniform_real_distribution<double> uy(w.bounds.min_y + 0.5, w.bounds.max_y - 0.5);
  for (;;) {
    const Vec2 p{ux(rng), uy(rng)};
    bool inside = false;
    for (const auto& poly : w.objects) {
      bool in = true;
      for (std::size_t i = 0; i < poly.size(); ++i) in = in && orient(poly[i], poly[(i + 1) % poly.size()], p) > 0;
      inside = inside || in;
    }
    for (const auto& t : w.targets) inside = inside || std::hypot(p.x - t.position.x, p.y - t.position.y) <= t.radius;
    if (!inside) return p;
  }
}

/// Random ternary map: free rectangles carved out of unknown space, speckled with obstacles.
inline SearchMap random_map(std::mt19937_64& rng, int width, int height, double occupied_p = 0.08) {
  GridGeometry g;
  g.resolution = 0.1;
  g.width = width;
  g.height = height;
  SearchMap m(g, SensorKind::lidar);
  std::uniform_int_distribution<int> nrect(4, 10), ux(0, width - 1), uy(0, height - 1), side(3, 15);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  const int rects = nrect(rng);
  for (int r = 0; r < rects; ++r) {
    const int x0 = ux(rng), y0 = uy(rng), w = side(rng), h = side(rng);
    for (int y = y0; y < std::min(height, y0 + h); ++y)
      for (int x = x0; x < std::min(width, x0 + w); ++x) m.set({x, y}, CellState::free);
  }
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (m.is_free({x, y}) && coin(rng) < occupied_p) m.set({x, y}, CellState::occupied);
  return m;
}

struct OracleFrontier {
  std::vector<Cell> cells;  // row-major
  Vec2 centroid;
};

/// Frontier cells by definition, grouped with union-find over 8-neighbourhoods.
inline std::vector<OracleFrontier> frontiers(const SearchMap& m, int min_size) {
  const auto& g = m.geometry();
  const int W = g.width, H = g.height;
  const auto at = [&](int x, int y) { return m.at(Cell{x, y}); };
  std::vector<char> edge(g.size(), 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (at(x, y) != CellState::free) continue;
      const int nb[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
      for (auto& d : nb) {
        const int qx = x + d[0], qy = y + d[1];
        if (qx >= 0 && qy >= 0 && qx < W && qy < H && at(qx, qy) == CellState::unknown) edge[y * W + x] = 1;
      }
    }
  std::vector<int> parent(g.size());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int i) { return parent[i] == i ? i : parent[i] = find(parent[i]); };
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (!edge[y * W + x]) continue;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int qx = x + dx, qy = y + dy;
          if (qx < 0 || qy < 0 || qx >= W || qy >= H || !edge[qy * W + qx]) continue;
          parent[find(y * W + x)] = find(qy * W + qx);
        }
    }
  std::vector<std::vector<int>> groups(g.size());
  for (int i = 0; i < W * H; ++i)
    if (edge[i]) groups[find(i)].push_back(i);
  std::vector<OracleFrontier> out;
  for (auto& grp : groups) {
    if (grp.empty() || static_cast<int>(grp.size()) < min_size) continue;
    std::sort(grp.begin(), grp.end());
    OracleFrontier f;
    double sx = 0, sy = 0;
    for (int i : grp) {
      f.cells.push_back({i % W, i / W});
      sx += g.center(f.cells.back()).x;
      sy += g.center(f.cells.back()).y;
    }
    f.centroid = {sx / grp.size(), sy / grp.size()};
    out.push_back(std::move(f));
  }
  std::sort(out.begin(), out.end(), [&](const auto& a, const auto& b) {
    return g.index(a.cells.front()) < g.index(b.cells.front());
  });
  return out;
}

/// Bellman-Ford over the planner's passable cells with the same move set.
inline std::vector<double> grid_distances(const PathPlanner& p) {
  const auto& g = p.geometry();
  std::vector<double> d(g.size(), std::numeric_limits<double>::infinity());
  d[g.index(p.start_cell())] = 0.0;
  const double diag = g.resolution * std::sqrt(2.0);
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(d[i])) continue;
      const Cell c = g.cell_at(i);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Cell q{c.x + dx, c.y + dy};
          if ((dx == 0 && dy == 0) || !g.contains(q) || !p.passable(q)) continue;
          if (dx && dy && !(p.passable({c.x + dx, c.y}) && p.passable({c.x, c.y + dy}))) continue;
          const double nd = d[i] + (dx && dy ? diag : g.resolution);
          if (nd < d[g.index(q)] - 1e-12) {
            d[g.index(q)] = nd;
            changed = true;
          }
        }
    }
  }
  return d;
}

/// Whether segment a-b passes through the open interior of the cell square.
inline bool crosses_cell_interior(const GridGeometry& g, Cell c, Vec2 a, Vec2 b) {
  const double x0 = g.origin.x + c.x * g.resolution, y0 = g.origin.y + c.y * g.resolution;
  const double lo[2] = {x0, y0}, hi[2] = {x0 + g.resolution, y0 + g.resolution};
  const double p[2] = {a.x, a.y}, d[2] = {b.x - a.x, b.y - a.y};
  double t0 = 0.0, t1 = 1.0;
  for (int k = 0; k < 2; ++k) {
    if (d[k] == 0.0) {
      if (!(p[k] > lo[k] && p[k] < hi[k])) return false;
      continue;
    }
    double ta = (lo[k] - p[k]) / d[k], tb = (hi[k] - p[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
  }
  return t0 < t1;
}

/// Visible unknown cells: in the cone, and no occupied cell other than the pose's own cell has
/// its interior crossed by the sight line.
inline int unknown_visible(const SearchMap& map, const Pose& pose, const SensorSpec& spec) {
  const auto& g = map.geometry();
  const Cell start = g.cell_of(pose.position());
  std::vector<Cell> occupied;
  for (std::size_t i = 0; i < g.size(); ++i)
    if (map.at(i) == CellState::occupied) occupied.push_back(g.cell_at(i));
  int count = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Cell c = g.cell_at(i);
    if (!map.is_unknown(c)) continue;
    const Vec2 t = g.center(c);
    const double r = std::hypot(t.x - pose.x, t.y - pose.y);
    if (r > spec.visual_max_range + 1e-9) continue;
    if (r > 0) {
      const double off = std::remainder(std::atan2(t.y - pose.y, t.x - pose.x) - pose.theta, 2 * std::numbers::pi);
      if (std::abs(off) > 0.5 * spec.visual_fov_angle + 1e-9) continue;
    }
    bool clear = true;
    for (const Cell q : occupied)
      if (!(q == start) && !(q == c) && crosses_cell_interior(g, q, pose.position(), t)) {
        clear = false;
        break;
      }
    if (clear) ++count;
  }
  return count;
}

}  // namespace vsearch::oracle
