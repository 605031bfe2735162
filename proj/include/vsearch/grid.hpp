#pragma once

#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <limits>
#include <stdexcept>

#include "vsearch/geometry.hpp"

namespace vsearch {

struct Cell {
  int x = 0;
  int y = 0;
  constexpr bool operator==(const Cell&) const = default;
};

/// Placement of a regular grid in the world frame; cell (0,0) has its lower-left corner at origin.
struct GridGeometry {
  double resolution = 0.1;
  Vec2 origin{};
  int width = 0;
  int height = 0;

  static GridGeometry covering(Vec2 min_corner, Vec2 max_corner, double resolution) {
    if (!(resolution > 0.0)) throw std::invalid_argument("grid resolution must be positive");
    GridGeometry g;
    g.resolution = resolution;
    g.origin = min_corner;
    g.width = static_cast<int>(std::ceil((max_corner.x - min_corner.x) / resolution - 1e-9));
    g.height = static_cast<int>(std::ceil((max_corner.y - min_corner.y) / resolution - 1e-9));
    if (g.width <= 0 || g.height <= 0) throw std::invalid_argument("grid extent must be positive");
    return g;
  }

  Cell cell_of(Vec2 p) const {
    return {static_cast<int>(std::floor((p.x - origin.x) / resolution)),
            static_cast<int>(std::floor((p.y - origin.y) / resolution))};
  }
  Vec2 center(Cell c) const {
    return {origin.x + (c.x + 0.5) * resolution, origin.y + (c.y + 0.5) * resolution};
  }
  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * static_cast<std::size_t>(width) + static_cast<std::size_t>(c.x);
  }
  Cell cell_at(std::size_t idx) const {
    return {static_cast<int>(idx % static_cast<std::size_t>(width)),
            static_cast<int>(idx / static_cast<std::size_t>(width))};
  }
  std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  bool operator==(const GridGeometry&) const = default;
};

/// Visits the cells crossed by segment a->b in order, starting with the cell of a and ending
/// with the cell of b (Amanatides-Woo). The callback returns false to stop. With supercover set,
/// both side cells are visited when the segment passes exactly through a cell corner.
template <class Visit>
void traverse_cells(const GridGeometry& g, Vec2 a, Vec2 b, Visit&& visit, bool supercover = false) {
  const double ax = (a.x - g.origin.x) / g.resolution, ay = (a.y - g.origin.y) / g.resolution;
  const double bx = (b.x - g.origin.x) / g.resolution, by = (b.y - g.origin.y) / g.resolution;
  Cell c{static_cast<int>(std::floor(ax)), static_cast<int>(std::floor(ay))};
  const Cell end{static_cast<int>(std::floor(bx)), static_cast<int>(std::floor(by))};
  const double dx = bx - ax, dy = by - ay;
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double tdx = sx != 0 ? std::abs(1.0 / dx) : inf;
  const double tdy = sy != 0 ? std::abs(1.0 / dy) : inf;
  double tmx = sx > 0 ? (std::floor(ax) + 1.0 - ax) * tdx : (sx < 0 ? (ax - std::floor(ax)) * tdx : inf);
  double tmy = sy > 0 ? (std::floor(ay) + 1.0 - ay) * tdy : (sy < 0 ? (ay - std::floor(ay)) * tdy : inf);

  if (!visit(c)) return;
  const int max_steps = std::abs(end.x - c.x) + std::abs(end.y - c.y) + 2;
  for (int step = 0; step < max_steps && !(c == end); ++step) {
    if (tmx > 1.0 && tmy > 1.0) break;
    if (tmx < tmy) {
      c.x += sx;
      tmx += tdx;
    } else if (tmy < tmx) {
      c.y += sy;
      tmy += tdy;
    } else {
      if (supercover) {
        if (!visit(Cell{c.x + sx, c.y})) return;
        if (!visit(Cell{c.x, c.y + sy})) return;
      }
      c.x += sx;
      c.y += sy;
      tmx += tdx;
      tmy += tdy;
    }
    if (!visit(c)) return;
  }
}

}  // namespace vsearch
