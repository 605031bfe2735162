#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "vsearch/grid.hpp"
#include "vsearch/world.hpp"

namespace vsearch {

enum class CellState : std::int8_t { unknown = -1, free = 0, occupied = 1 };
enum class SensorKind : std::uint8_t { lidar, visual };

inline const char* to_string(SensorKind k) { return k == SensorKind::lidar ? "lidar" : "visual"; }

/// Global occupancy grid with ternary cells. Occupied cells stay occupied: the simulated world
/// is static and free-space rays grazing a wall would otherwise erode it.
class SearchMap {
 public:
  SearchMap(GridGeometry geometry, SensorKind kind)
      : geom_(geometry), kind_(kind), cells_(geometry.size(), CellState::unknown) {}

  static SearchMap covering(const Bounds& b, double resolution, SensorKind kind) {
    return SearchMap(GridGeometry::covering(b.min_corner(), b.max_corner(), resolution), kind);
  }

  const GridGeometry& geometry() const { return geom_; }
  SensorKind kind() const { return kind_; }
  double resolution() const { return geom_.resolution; }

  CellState at(Cell c) const { return geom_.contains(c) ? cells_[geom_.index(c)] : CellState::unknown; }
  CellState at(std::size_t idx) const { return cells_[idx]; }
  bool is_free(Cell c) const { return at(c) == CellState::free; }
  bool is_occupied(Cell c) const { return at(c) == CellState::occupied; }
  bool is_unknown(Cell c) const { return at(c) == CellState::unknown; }

  void set(Cell c, CellState s) {
    if (geom_.contains(c)) cells_[geom_.index(c)] = s;
  }

  /// Marks a cell free unless it has been observed occupied.
  void observe_free(Cell c) {
    if (!geom_.contains(c)) return;
    auto& v = cells_[geom_.index(c)];
    if (v != CellState::occupied) v = CellState::free;
  }
  void observe_occupied(Cell c) { set(c, CellState::occupied); }

  const std::vector<CellState>& cells() const { return cells_; }
  std::size_t count(CellState s) const { return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), s)); }

  bool operator==(const SearchMap&) const = default;

 private:
  GridGeometry geom_;
  SensorKind kind_;
  std::vector<CellState> cells_;
};

/// Whether beam j contributes to a map of the given kind, and its usable range and hit flag.
struct BeamObservation {
  bool used = false;
  double range = 0.0;
  bool hit = false;
};

inline BeamObservation beam_for_map(SensorKind kind, const Scan& scan, std::size_t j, double offset,
                                    const SensorSpec& spec) {
  const bool hit = scan.hit[j] != 0;
  if (kind == SensorKind::lidar) return {true, scan.ranges[j], hit};
  if (std::abs(normalize_angle(offset)) > 0.5 * spec.visual_fov_angle + 1e-9) return {};
  if (scan.ranges[j] <= spec.visual_max_range) return {true, scan.ranges[j], hit};
  return {true, spec.visual_max_range, false};
}

/// Ray-traces every beam: cells before the return become free, the return cell occupied.
/// The visual map only integrates beams inside the camera cone, truncated at visual range.
inline void update_map(SearchMap& map, const Pose& pose, const Scan& scan, const SensorSpec& spec) {
  const auto& g = map.geometry();
  const int n = static_cast<int>(scan.size());
  std::vector<Cell> hits;
  for (int j = 0; j < n; ++j) {
    const auto u = static_cast<std::size_t>(j);
    const double offset = 2.0 * std::numbers::pi * j / n;
    const BeamObservation b = beam_for_map(map.kind(), scan, u, offset, spec);
    if (!b.used) continue;
    const Vec2 end = pose.position() + unit_vector(pose.theta + offset) * b.range;
    const Cell end_cell = g.cell_of(end);
    traverse_cells(g, pose.position(), end, [&](Cell c) {
      if (!g.contains(c)) return false;
      if (b.hit && c == end_cell) return false;
      map.observe_free(c);
      return true;
    });
    if (b.hit) hits.push_back(end_cell);
  }
  for (auto c : hits) map.observe_occupied(c);
  // The robot stands in free space.
  map.observe_free(g.cell_of(pose.position()));
}

struct Frontier {
  std::vector<Cell> cells;
  Vec2 centroid;
  SensorKind source = SensorKind::lidar;
};

inline bool is_frontier_cell(const SearchMap& m, Cell c) {
  if (!m.is_free(c)) return false;
  const auto& g = m.geometry();
  const Cell nb[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
  for (auto q : nb)
    if (g.contains(q) && m.is_unknown(q)) return true;
  return false;
}

/// Free/unknown boundary cells grouped into 8-connected components of at least min_size cells.
/// Cells within a frontier are row-major; frontiers are ordered by their first cell.
inline std::vector<Frontier> extract_frontiers(const SearchMap& m, int min_size) {
  const auto& g = m.geometry();
  std::vector<std::uint8_t> edge(g.size(), 0), seen(g.size(), 0);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      if (is_frontier_cell(m, {x, y})) edge[g.index({x, y})] = 1;

  std::vector<Frontier> out;
  std::vector<std::size_t> queue;
  for (std::size_t start = 0; start < g.size(); ++start) {
    if (!edge[start] || seen[start]) continue;
    queue.clear();
    queue.push_back(start);
    seen[start] = 1;
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Cell c = g.cell_at(queue[head]);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Cell q{c.x + dx, c.y + dy};
          if ((dx == 0 && dy == 0) || !g.contains(q)) continue;
          const auto qi = g.index(q);
          if (edge[qi] && !seen[qi]) {
            seen[qi] = 1;
            queue.push_back(qi);
          }
        }
    }
    if (static_cast<int>(queue.size()) < min_size) continue;
    std::sort(queue.begin(), queue.end());
    Frontier f;
    f.source = m.kind();
    Vec2 sum{};
    for (auto i : queue) {
      f.cells.push_back(g.cell_at(i));
      sum += g.center(f.cells.back());
    }
    f.centroid = sum / static_cast<double>(queue.size());
    out.push_back(std::move(f));
  }
  return out;
}

/// Splits each frontier into clusters of at most `max_cells` cells, taken consecutively in
/// breadth-first order from its first cell so each cluster is connected. A short tail joins the
/// cluster before it. max_cells <= 0 leaves the frontiers whole.
inline std::vector<Frontier> cluster_frontiers(const std::vector<Frontier>& frontiers, const GridGeometry& g,
                                               int max_cells, int min_size) {
  if (max_cells <= 0) return frontiers;
  std::vector<Frontier> out;
  std::unordered_map<std::size_t, std::uint8_t> member;
  std::vector<std::size_t> order;
  for (const auto& f : frontiers) {
    member.clear();
    for (auto c : f.cells) member[g.index(c)] = 0;
    order.clear();
    order.push_back(g.index(f.cells.front()));
    member[order.front()] = 1;
    for (std::size_t head = 0; head < order.size(); ++head) {
      const Cell c = g.cell_at(order[head]);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Cell q{c.x + dx, c.y + dy};
          if ((dx == 0 && dy == 0) || !g.contains(q)) continue;
          const auto it = member.find(g.index(q));
          if (it != member.end() && !it->second) {
            it->second = 1;
            order.push_back(it->first);
          }
        }
    }
    const std::size_t first_out = out.size();
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(max_cells)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(max_cells));
      const bool tail = e - b < static_cast<std::size_t>(min_size) && out.size() > first_out;
      if (!tail) {
        out.emplace_back();
        out.back().source = f.source;
      }
      for (std::size_t i = b; i < e; ++i) out.back().cells.push_back(g.cell_at(order[i]));
    }
    for (std::size_t k = first_out; k < out.size(); ++k) {
      auto& c = out[k];
      std::sort(c.cells.begin(), c.cells.end(), [&](Cell a, Cell b) { return g.index(a) < g.index(b); });
      Vec2 sum{};
      for (auto cell : c.cells) sum += g.center(cell);
      c.centroid = sum / static_cast<double>(c.cells.size());
    }
  }
  return out;
}

/// Grid line of sight from `from` to the center of `target`: no occluding cell strictly between
/// the start cell and the target cell.
template <class Occludes>
bool grid_line_of_sight(const GridGeometry& g, Vec2 from, Cell target, Occludes&& occludes) {
  const Cell start = g.cell_of(from);
  bool clear = true;
  traverse_cells(g, from, g.center(target), [&](Cell c) {
    if (c == target) return false;
    if (!(c == start) && occludes(c)) {
      clear = false;
      return false;
    }
    return true;
  });
  return clear;
}

/// Cells visible from the pose on a grid, with `occludes` deciding which cells block sight.
template <class Occludes, class Visit>
void for_each_visible_cell(const GridGeometry& g, const Pose& pose, const SensorSpec& spec, Occludes&& occludes,
                           Visit&& visit) {
  const double r = spec.visual_max_range;
  const Cell lo = g.cell_of({pose.x - r, pose.y - r});
  const Cell hi = g.cell_of({pose.x + r, pose.y + r});
  for (int y = std::max(lo.y, 0); y <= std::min(hi.y, g.height - 1); ++y)
    for (int x = std::max(lo.x, 0); x <= std::min(hi.x, g.width - 1); ++x) {
      const Cell c{x, y};
      if (!in_visual_cone(pose, g.center(c), spec)) continue;
      if (grid_line_of_sight(g, pose.position(), c, occludes)) visit(c);
    }
}

/// Unknown cells of `map` the camera would see from `candidate`. Occupied cells of `map` or of
/// `occluders` block sight; unknown cells are transparent.
inline int count_unknown_visible(const SearchMap& map, const Pose& candidate, const SensorSpec& spec,
                                 const SearchMap* occluders = nullptr) {
  if (occluders && !(occluders->geometry() == map.geometry()))
    throw std::invalid_argument("occluder map geometry differs");
  int count = 0;
  const auto occ = [&](Cell c) { return map.is_occupied(c) || (occluders && occluders->is_occupied(c)); };
  for_each_visible_cell(map.geometry(), candidate, spec, occ, [&](Cell c) {
    if (map.is_unknown(c)) ++count;
  });
  return count;
}

/// Occupancy raster of the true world: cells touched by any segment, object or target are occupied.
inline SearchMap rasterize_world(const LineWorld& w, double resolution) {
  SearchMap m = SearchMap::covering(w.bounds, resolution, SensorKind::lidar);
  const auto& g = m.geometry();
  for (std::size_t i = 0; i < g.size(); ++i) m.set(g.cell_at(i), CellState::free);
  const auto mark_segment = [&](const Segment& s) {
    traverse_cells(g, s.a, s.b, [&](Cell c) {
      m.set(c, CellState::occupied);
      return true;
    }, true);
  };
  for (const auto& s : w.segments) mark_segment(s);
  for (const auto& poly : w.objects) {
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (std::size_t i = 0; i < poly.size(); ++i) {
      mark_segment({poly[i], poly[(i + 1) % poly.size()]});
      x0 = std::min(x0, poly[i].x);
      y0 = std::min(y0, poly[i].y);
      x1 = std::max(x1, poly[i].x);
      y1 = std::max(y1, poly[i].y);
    }
    const Cell lo = g.cell_of({x0, y0}), hi = g.cell_of({x1, y1});
    for (int y = lo.y; y <= hi.y; ++y)
      for (int x = lo.x; x <= hi.x; ++x)
        if (point_in_convex_polygon(g.center({x, y}), poly)) m.set({x, y}, CellState::occupied);
  }
  for (const auto& t : w.targets) {
    const Cell lo = g.cell_of(t.position - Vec2{t.radius, t.radius});
    const Cell hi = g.cell_of(t.position + Vec2{t.radius, t.radius});
    for (int y = lo.y; y <= hi.y; ++y)
      for (int x = lo.x; x <= hi.x; ++x) {
        const Vec2 c = g.center({x, y});
        const double h = 0.5 * resolution;
        const double qx = std::clamp(t.position.x, c.x - h, c.x + h);
        const double qy = std::clamp(t.position.y, c.y - h, c.y + h);
        if (squared_norm(Vec2{qx, qy} - t.position) <= t.radius * t.radius) m.set({x, y}, CellState::occupied);
      }
  }
  return m;
}

/// Writes a grey-map image (P5 PGM; free 254, occupied 0, unknown 205) and a YAML sidecar.
inline void export_map_snapshot(const SearchMap& m, const std::string& pgm_path, const std::string& yaml_path) {
  const auto& g = m.geometry();
  std::ofstream img(pgm_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open " + pgm_path);
  img << "P5\n" << g.width << ' ' << g.height << "\n255\n";
  for (int y = g.height - 1; y >= 0; --y)
    for (int x = 0; x < g.width; ++x) {
      const CellState s = m.at(Cell{x, y});
      const unsigned char v = s == CellState::free ? 254 : (s == CellState::occupied ? 0 : 205);
      img.put(static_cast<char>(v));
    }
  std::ofstream meta(yaml_path);
  if (!meta) throw std::runtime_error("cannot open " + yaml_path);
  std::string image = pgm_path.substr(pgm_path.find_last_of('/') + 1);
  meta << "image: " << image << "\nresolution: " << g.resolution << "\norigin: [" << g.origin.x << ", "
       << g.origin.y << ", 0.0]\nnegate: 0\noccupied_thresh: 0.65\nfree_thresh: 0.196\nsensor: "
       << to_string(m.kind()) << "\n";
}

}  // namespace vsearch
