#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "vsearch/path_planner.hpp"
#include "vsearch/rng.hpp"
#include "vsearch/search_map.hpp"
#include "vsearch/world.hpp"

namespace vsearch {

enum class Archetype { apartment, office, hallway };
enum class Difficulty { easy, hard };

inline const char* to_string(Archetype a) {
  switch (a) {
    case Archetype::apartment: return "apartment";
    case Archetype::office: return "office";
    case Archetype::hallway: return "hallway";
  }
  return "?";
}
inline const char* to_string(Difficulty d) { return d == Difficulty::easy ? "easy" : "hard"; }

inline Archetype parse_archetype(const std::string& s) {
  if (s == "apartment") return Archetype::apartment;
  if (s == "office") return Archetype::office;
  if (s == "hallway") return Archetype::hallway;
  throw std::invalid_argument("unknown archetype '" + s + "'");
}
inline Difficulty parse_difficulty(const std::string& s) {
  if (s == "easy") return Difficulty::easy;
  if (s == "hard") return Difficulty::hard;
  throw std::invalid_argument("unknown difficulty '" + s + "'");
}

struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct WorldGenParams {
  Archetype archetype = Archetype::apartment;
  double width = 20.0;
  double height = 30.0;
  double object_density = 0.04;  // objects per square meter of room floor
  std::uint64_t seed = 0;
  int max_retries = 40;
};

struct Room {
  double x0, y0, x1, y1;  // wall lines
  double area() const { return (x1 - x0) * (y1 - y0); }
};

/// World without targets plus its room decomposition.
struct Layout {
  LineWorld world;
  std::vector<Room> rooms;
  std::vector<Vec2> doors;
};

namespace detail {

inline constexpr double kCell = 0.1;
inline constexpr double kDoorWidth = 1.0;

/// Walls and door edges sit on cell-center coordinates.
inline double snap(double v) { return std::round((v - 0.05) / kCell) * kCell + 0.05; }

struct Builder {
  Rng& rng;
  std::vector<Segment> segments;
  std::vector<Vec2> doors;
  std::vector<Room> rooms;

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); }
  bool chance(double p) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p; }

  /// Wall from a to b along one axis with `n_doors` gaps of door width.
  void wall(Vec2 a, Vec2 b, int n_doors) {
    const bool horizontal = std::abs(a.y - b.y) < 1e-9;
    const double lo = horizontal ? std::min(a.x, b.x) : std::min(a.y, b.y);
    const double hi = horizontal ? std::max(a.x, b.x) : std::max(a.y, b.y);
    const double fixed = horizontal ? a.y : a.x;
    std::vector<double> starts;
    const double usable = hi - lo - 2 * 0.5 - kDoorWidth;
    if (usable <= 0.0) n_doors = 0;
    for (int d = 0; d < n_doors; ++d) {
      for (int tries = 0; tries < 20; ++tries) {
        const double s = snap(lo + 0.5 + uniform(0.0, usable));
        bool ok = s + kDoorWidth <= hi - 0.45;
        for (double o : starts) ok = ok && std::abs(o - s) > kDoorWidth + 1.0;
        if (ok) {
          starts.push_back(s);
          break;
        }
      }
    }
    std::sort(starts.begin(), starts.end());
    double cur = lo;
    const auto emit = [&](double u0, double u1) {
      if (u1 - u0 < 1e-9) return;
      if (horizontal) segments.push_back({{u0, fixed}, {u1, fixed}});
      else segments.push_back({{fixed, u0}, {fixed, u1}});
    };
    for (double s : starts) {
      emit(cur, s);
      const double mid = s + 0.5 * kDoorWidth;
      doors.push_back(horizontal ? Vec2{mid, fixed} : Vec2{fixed, mid});
      cur = s + kDoorWidth;
    }
    emit(cur, hi);
  }

  /// Coordinate along an axis-aligned line keeps clear of doors lying on the perpendicular walls.
  bool clear_of_doors(bool vertical_line, double coord, const Room& r) const {
    for (auto d : doors) {
      const bool on_boundary = vertical_line ? (std::abs(d.y - r.y0) < 1e-6 || std::abs(d.y - r.y1) < 1e-6) &&
                                                   d.x > r.x0 - 1e-6 && d.x < r.x1 + 1e-6
                                             : (std::abs(d.x - r.x0) < 1e-6 || std::abs(d.x - r.x1) < 1e-6) &&
                                                   d.y > r.y0 - 1e-6 && d.y < r.y1 + 1e-6;
      if (!on_boundary) continue;
      const double along = vertical_line ? d.x : d.y;
      if (std::abs(along - coord) < 0.5 * kDoorWidth + 0.6) return false;
    }
    return true;
  }

  /// Binary space partition into rooms; every split wall gets a door, some get two (loops).
  void partition(const Room& r, double min_room, double max_room, double loop_prob) {
    const double w = r.x1 - r.x0, h = r.y1 - r.y0;
    const bool can_x = w >= 2 * min_room, can_y = h >= 2 * min_room;
    const bool must = w > max_room || h > max_room;
    if ((!can_x && !can_y) || (!must && chance(0.35))) {
      rooms.push_back(r);
      return;
    }
    const bool split_x = can_x && (!can_y || w >= h);
    const double len = split_x ? w : h;
    for (int tries = 0; tries < 30; ++tries) {
      const double at = snap((split_x ? r.x0 : r.y0) + uniform(min_room, len - min_room));
      if (!clear_of_doors(split_x, at, r)) continue;
      const int n_doors = chance(loop_prob) ? 2 : 1;
      if (split_x) {
        wall({at, r.y0}, {at, r.y1}, n_doors);
        partition({r.x0, r.y0, at, r.y1}, min_room, max_room, loop_prob);
        partition({at, r.y0, r.x1, r.y1}, min_room, max_room, loop_prob);
      } else {
        wall({r.x0, at}, {r.x1, at}, n_doors);
        partition({r.x0, r.y0, r.x1, at}, min_room, max_room, loop_prob);
        partition({r.x0, at, r.x1, r.y1}, min_room, max_room, loop_prob);
      }
      return;
    }
    rooms.push_back(r);
  }
};

inline void outer_walls(Builder& b, const Room& r) {
  b.wall({r.x0, r.y0}, {r.x1, r.y0}, 0);
  b.wall({r.x1, r.y0}, {r.x1, r.y1}, 0);
  b.wall({r.x0, r.y1}, {r.x1, r.y1}, 0);
  b.wall({r.x0, r.y0}, {r.x0, r.y1}, 0);
}

inline void build_apartment(Builder& b, const Room& outer) {
  outer_walls(b, outer);
  b.partition(outer, 3.5, 7.5, 0.35);
}

/// Central corridor along the long axis with rooms on both sides.
inline void build_office(Builder& b, const Room& outer) {
  outer_walls(b, outer);
  const bool long_y = (outer.y1 - outer.y0) >= (outer.x1 - outer.x0);
  const double across0 = long_y ? outer.x0 : outer.y0, across1 = long_y ? outer.x1 : outer.y1;
  const double along0 = long_y ? outer.y0 : outer.x0, along1 = long_y ? outer.y1 : outer.x1;
  const double mid = 0.5 * (across0 + across1);
  const double c0 = snap(mid - 1.0), c1 = snap(mid + 1.0);
  const auto line = [&](double across, double a0, double a1, int doors) {
    if (long_y) b.wall({across, a0}, {across, a1}, doors);
    else b.wall({a0, across}, {a1, across}, doors);
  };
  const auto cross = [&](double along, double x0, double x1, int doors) {
    if (long_y) b.wall({x0, along}, {x1, along}, doors);
    else b.wall({along, x0}, {along, x1}, doors);
  };
  const auto room = [&](double a0, double a1, double x0, double x1) {
    if (long_y) b.rooms.push_back({x0, a0, x1, a1});
    else b.rooms.push_back({a0, x0, a1, x1});
  };
  b.rooms.push_back(long_y ? Room{c0, along0, c1, along1} : Room{along0, c0, along1, c1});
  for (int side = 0; side < 2; ++side) {
    const double wall_at = side == 0 ? c0 : c1;
    const double far = side == 0 ? across0 : across1;
    const double depth = std::abs(far - wall_at);
    const bool two_rows = depth > 7.5;
    const double split = two_rows ? snap(0.5 * (wall_at + far)) : far;
    double a = along0;
    while (a < along1 - 1e-9) {
      double next = snap(a + b.uniform(3.5, 6.0));
      if (along1 - next < 3.5) next = along1;
      // corridor wall piece for this room, one door
      line(wall_at, a, next, 1);
      if (two_rows) {
        line(split, a, next, 1);
        room(a, next, std::min(wall_at, split), std::max(wall_at, split));
        room(a, next, std::min(split, far), std::max(split, far));
      } else {
        room(a, next, std::min(wall_at, far), std::max(wall_at, far));
      }
      if (next < along1 - 1e-9) {
        const int doors = b.chance(0.3) ? 1 : 0;
        cross(next, std::min(wall_at, far), std::max(wall_at, far), doors);
      }
      a = next;
    }
  }
}

/// Loop corridor around a central block of rooms.
inline void build_hallway(Builder& b, const Room& outer) {
  outer_walls(b, outer);
  const double cw = 2.0;
  const Room block{snap(outer.x0 + cw), snap(outer.y0 + cw), snap(outer.x1 - cw), snap(outer.y1 - cw)};
  b.wall({block.x0, block.y0}, {block.x1, block.y0}, b.chance(0.5) ? 1 : 0);
  b.wall({block.x1, block.y0}, {block.x1, block.y1}, 1);
  b.wall({block.x0, block.y1}, {block.x1, block.y1}, b.chance(0.5) ? 1 : 0);
  b.wall({block.x0, block.y0}, {block.x0, block.y1}, 1);
  b.rooms.push_back({outer.x0, outer.y0, outer.x1, block.y0});
  b.rooms.push_back({outer.x0, block.y1, outer.x1, outer.y1});
  b.rooms.push_back({outer.x0, block.y0, block.x0, block.y1});
  b.rooms.push_back({block.x1, block.y0, outer.x1, block.y1});
  b.partition(block, 3.0, 7.0, 0.3);
}

inline double polygon_distance(const Polygon& a, const Polygon& b) {
  double d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Segment ea{a[i], a[(i + 1) % a.size()]};
    for (std::size_t j = 0; j < b.size(); ++j) {
      const Segment eb{b[j], b[(j + 1) % b.size()]};
      if (segments_intersect(ea, eb)) return 0.0;
      d = std::min({d, point_segment_distance(ea.a, eb), point_segment_distance(eb.a, ea)});
    }
  }
  if (point_in_convex_polygon(a[0], b) || point_in_convex_polygon(b[0], a)) return 0.0;
  return d;
}

inline Polygon rectangle(Vec2 c, double half_w, double half_h, double angle) {
  const Vec2 u = unit_vector(angle), v{-u.y, u.x};
  return {c - u * half_w - v * half_h, c + u * half_w - v * half_h, c + u * half_w + v * half_h,
          c - u * half_w + v * half_h};
}

inline double clearance_to_walls(Vec2 p, const std::vector<Segment>& segs) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& s : segs) d = std::min(d, point_segment_distance(p, s));
  return d;
}

inline bool polygon_clear_of_walls(const Polygon& poly, const std::vector<Segment>& segs, double margin) {
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Segment e{poly[i], poly[(i + 1) % poly.size()]};
    for (const auto& s : segs) {
      if (segments_intersect(e, s)) return false;
      if (point_segment_distance(e.a, s) < margin || point_segment_distance(s.a, e) < margin ||
          point_segment_distance(s.b, e) < margin)
        return false;
    }
  }
  return true;
}

/// Fraction of traversable cells of the true map reachable from the start.
inline double reachable_fraction(const LineWorld& w, int clearance) {
  const SearchMap truth = rasterize_world(w, kCell);
  const PathPlanner planner(truth, w.start_pose, clearance);
  const auto& g = truth.geometry();
  std::size_t total = 0, reached = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Cell c = g.cell_at(i);
    if (!planner.traversable(c)) continue;
    ++total;
    if (planner.reachable(c)) ++reached;
  }
  return total == 0 ? 0.0 : static_cast<double>(reached) / static_cast<double>(total);
}

}  // namespace detail

/// Long axis of the world; halves are split across it.
inline bool long_axis_is_y(const Bounds& b) { return b.height() >= b.width(); }
inline int world_half(const Bounds& b, Vec2 p) {
  return long_axis_is_y(b) ? (p.y < 0.5 * (b.min_y + b.max_y) ? 0 : 1) : (p.x < 0.5 * (b.min_x + b.max_x) ? 0 : 1);
}

/// Rooms, corridors, doorways and furniture; the start pose lies in half 0.
inline Layout generate_layout(const WorldGenParams& p) {
  if (!(p.width >= 10.0 && p.width <= 50.0 && p.height >= 10.0 && p.height <= 50.0))
    throw std::invalid_argument("world size must lie within 10x10 .. 50x50 m");
  if (!(p.object_density >= 0.0)) throw std::invalid_argument("object density must be non-negative");
  Rng rng(derive_seed(p.seed, {0x1a}));
  detail::Builder b{rng, {}, {}, {}};
  const Room outer{0.05, 0.05, detail::snap(p.width - 0.05), detail::snap(p.height - 0.05)};
  switch (p.archetype) {
    case Archetype::apartment: detail::build_apartment(b, outer); break;
    case Archetype::office: detail::build_office(b, outer); break;
    case Archetype::hallway: detail::build_hallway(b, outer); break;
  }

  Layout out;
  out.world.bounds = {0.0, 0.0, p.width, p.height};
  out.world.segments = b.segments;
  out.rooms = b.rooms;
  out.doors = b.doors;

  for (int attempt = 0; attempt < p.max_retries; ++attempt) {
    Rng r(derive_seed(p.seed, {0x2b, static_cast<std::uint64_t>(attempt)}));
    const auto uni = [&](double a, double c) { return std::uniform_real_distribution<double>(a, c)(r); };
    LineWorld w = out.world;

    // start pose in half 0 with room to turn
    std::optional<Pose> start;
    for (int t = 0; t < 500 && !start; ++t) {
      const Vec2 q{detail::snap(uni(0.6, p.width - 0.6)), detail::snap(uni(0.6, p.height - 0.6))};
      if (world_half(w.bounds, q) != 0) continue;
      if (detail::clearance_to_walls(q, w.segments) < 0.6) continue;
      start = Pose(q, uni(-std::numbers::pi, std::numbers::pi));
    }
    if (!start) continue;
    w.start_pose = *start;

    for (const auto& room : out.rooms) {
      const double iw = room.x1 - room.x0, ih = room.y1 - room.y0;
      std::poisson_distribution<int> count(p.object_density * iw * ih);
      const int n = count(r);
      for (int o = 0; o < n; ++o) {
        for (int t = 0; t < 30; ++t) {
          Polygon poly;
          const double kind = uni(0.0, 1.0);
          if (kind < 0.6) {
            // rounded piece (chair, bin, plant, round table): irregular convex polygon
            const double rad = uni(0.15, 0.5);
            if (iw < 2 * rad + 1.0 || ih < 2 * rad + 1.0) continue;
            const Vec2 c{uni(room.x0 + 0.3 + rad, room.x1 - 0.3 - rad), uni(room.y0 + 0.3 + rad, room.y1 - 0.3 - rad)};
            const int m = 7 + static_cast<int>(uni(0.0, 6.0));
            const double phase = uni(0.0, 2.0 * std::numbers::pi), squash = uni(0.6, 1.0);
            for (int v = 0; v < m; ++v) {
              const double a = phase + 2.0 * std::numbers::pi * v / m;
              poly.push_back(c + Vec2{std::cos(a) * rad, std::sin(a) * rad * squash});
            }
          } else if (kind < 0.8) {
            // along a wall
            const double len = uni(0.6, 1.8), depth = uni(0.4, 0.7);
            const int side = static_cast<int>(uni(0.0, 4.0));
            const double gap = 0.2;
            if (side == 0 || side == 2) {
              if (iw < len + 1.0) continue;
              const double cx = uni(room.x0 + 0.3 + 0.5 * len, room.x1 - 0.3 - 0.5 * len);
              const double cy = side == 0 ? room.y0 + gap + 0.5 * depth : room.y1 - gap - 0.5 * depth;
              poly = detail::rectangle({cx, cy}, 0.5 * len, 0.5 * depth, 0.0);
            } else {
              if (ih < len + 1.0) continue;
              const double cy = uni(room.y0 + 0.3 + 0.5 * len, room.y1 - 0.3 - 0.5 * len);
              const double cx = side == 3 ? room.x0 + gap + 0.5 * depth : room.x1 - gap - 0.5 * depth;
              poly = detail::rectangle({cx, cy}, 0.5 * depth, 0.5 * len, 0.0);
            }
          } else {
            const double hw = uni(0.2, 0.6), hh = uni(0.2, 0.45);
            if (iw < 2 * hw + 1.6 || ih < 2 * hw + 1.6) continue;
            const Vec2 c{uni(room.x0 + 0.8 + hw, room.x1 - 0.8 - hw), uni(room.y0 + 0.8 + hw, room.y1 - 0.8 - hw)};
            poly = detail::rectangle(c, hw, hh, uni(0.0, std::numbers::pi));
          }
          if (!detail::polygon_clear_of_walls(poly, w.segments, 0.15)) continue;
          bool ok = true;
          for (auto d : out.doors)
            for (auto v : poly) ok = ok && distance(v, d) > 1.3;
          for (const auto& other : w.objects) ok = ok && detail::polygon_distance(poly, other) > 0.6;
          ok = ok && !point_in_convex_polygon(w.start_pose.position(), poly);
          for (auto v : poly) ok = ok && distance(v, w.start_pose.position()) > 0.8;
          if (!ok) continue;
          w.objects.push_back(std::move(poly));
          break;
        }
      }
    }
    validate_world(w);
    if (detail::reachable_fraction(w, 1) < 0.97) continue;
    out.world = std::move(w);
    return out;
  }
  throw GenerationError("could not place furniture with a connected free space");
}

/// Reachability oracle on the true map: some traversable cell reachable from the start lies
/// within `radius` of the target center with line of sight to it.
inline bool target_reachable(const LineWorld& w, std::size_t target, int clearance = 1, double radius = 1.0) {
  const SearchMap truth = rasterize_world(w, detail::kCell);
  const PathPlanner planner(truth, w.start_pose, clearance);
  const auto& g = truth.geometry();
  const Vec2 t = w.targets.at(target).position;
  const Cell lo = g.cell_of(t - Vec2{radius, radius}), hi = g.cell_of(t + Vec2{radius, radius});
  for (int y = lo.y; y <= hi.y; ++y)
    for (int x = lo.x; x <= hi.x; ++x) {
      const Cell c{x, y};
      if (!g.contains(c) || distance(g.center(c), t) > radius) continue;
      if (planner.reachable(c) && line_of_sight(w, g.center(c), t)) return true;
    }
  return false;
}

/// Places targets at cell centers: easy in the start half, hard in the opposite half.
inline LineWorld place_targets(const LineWorld& base, Difficulty difficulty, std::uint64_t seed, int n_targets = 1,
                               double radius = 0.2, int max_tries = 2000) {
  LineWorld w = base;
  w.targets.clear();
  Rng r(derive_seed(seed, {0x3c}));
  const int want_half = difficulty == Difficulty::easy ? 0 : 1;
  const Bounds& b = w.bounds;
  for (int i = 0; i < n_targets; ++i) {
    bool placed = false;
    for (int t = 0; t < max_tries && !placed; ++t) {
      const Vec2 q{detail::snap(std::uniform_real_distribution<double>(b.min_x + 0.5, b.max_x - 0.5)(r)),
                   detail::snap(std::uniform_real_distribution<double>(b.min_y + 0.5, b.max_y - 0.5)(r))};
      if (world_half(b, q) != want_half) continue;
      if (detail::clearance_to_walls(q, w.segments) < radius + 0.3) continue;
      bool ok = distance(q, w.start_pose.position()) > 1.5;
      for (const auto& poly : w.objects) {
        if (point_in_convex_polygon(q, poly)) ok = false;
        for (std::size_t e = 0; ok && e < poly.size(); ++e)
          ok = point_segment_distance(q, {poly[e], poly[(e + 1) % poly.size()]}) >= radius + 0.3;
      }
      for (const auto& other : w.targets) ok = ok && distance(q, other.position) > 2 * radius + 0.6;
      if (!ok) continue;
      w.targets.push_back({q, radius});
      if (target_reachable(w, w.targets.size() - 1)) {
        placed = true;
      } else {
        w.targets.pop_back();
      }
    }
    if (!placed) throw GenerationError("could not place a reachable target");
  }
  return w;
}

/// Layout from `p.seed`, targets from a seed derived from it.
inline LineWorld generate_world(const WorldGenParams& p, Difficulty difficulty, int n_targets = 1) {
  return place_targets(generate_layout(p).world, difficulty, derive_seed(p.seed, {0x4d}), n_targets);
}

}  // namespace vsearch
