#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace vsearch {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2 operator/(double s) const { return {x / s, y / s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
constexpr double squared_norm(Vec2 v) { return dot(v, v); }
inline double distance(Vec2 a, Vec2 b) { return norm(a - b); }
inline Vec2 unit_vector(double angle) { return {std::cos(angle), std::sin(angle)}; }

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose() = default;
  Pose(double x_, double y_, double theta_) : x(x_), y(y_), theta(normalize_angle(theta_)) {}
  Pose(Vec2 p, double theta_) : Pose(p.x, p.y, theta_) {}

  Vec2 position() const { return {x, y}; }

  /// Maps a point from the robot frame into the world frame.
  Vec2 transform(Vec2 local) const {
    const double c = std::cos(theta), s = std::sin(theta);
    return {x + c * local.x - s * local.y, y + s * local.x + c * local.y};
  }

  bool operator==(const Pose&) const = default;
};

struct Segment {
  Vec2 a;
  Vec2 b;
};

struct Circle {
  Vec2 center;
  double radius = 0.0;
};

/// Convex polygon, vertices counter-clockwise.
using Polygon = std::vector<Vec2>;

inline double point_segment_distance(Vec2 p, const Segment& s) {
  const Vec2 ab = s.b - s.a;
  const double len2 = squared_norm(ab);
  if (len2 == 0.0) return distance(p, s.a);
  const double t = std::clamp(dot(p - s.a, ab) / len2, 0.0, 1.0);
  return distance(p, s.a + ab * t);
}

/// Distance along a ray (origin, unit dir) to a segment, if the ray hits it at t > eps.
inline std::optional<double> ray_segment_intersection(Vec2 origin, Vec2 dir, const Segment& s,
                                                      double eps = 1e-12) {
  const Vec2 e = s.b - s.a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-15) return std::nullopt;  // parallel or collinear
  const Vec2 w = s.a - origin;
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t <= eps || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

inline std::optional<double> ray_circle_intersection(Vec2 origin, Vec2 dir, const Circle& c,
                                                     double eps = 1e-12) {
  const Vec2 oc = origin - c.center;
  const double b = dot(oc, dir);
  const double cc = squared_norm(oc) - c.radius * c.radius;
  const double disc = b * b - cc;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);
  const double t0 = -b - sq;
  if (t0 > eps) return t0;
  const double t1 = -b + sq;
  if (t1 > eps) return t1;
  return std::nullopt;
}

inline std::optional<double> ray_polygon_intersection(Vec2 origin, Vec2 dir, std::span<const Vec2> poly) {
  std::optional<double> best;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Segment edge{poly[i], poly[(i + 1) % poly.size()]};
    if (auto t = ray_segment_intersection(origin, dir, edge); t && (!best || *t < *best)) best = t;
  }
  return best;
}

/// Strict interior test for a convex CCW polygon.
inline bool point_in_convex_polygon(Vec2 p, std::span<const Vec2> poly) {
  if (poly.size() < 3) return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (cross(poly[(i + 1) % poly.size()] - poly[i], p - poly[i]) <= 0.0) return false;
  }
  return true;
}

inline bool point_in_circle(Vec2 p, const Circle& c) {
  return squared_norm(p - c.center) < c.radius * c.radius;
}

inline bool is_convex_ccw(std::span<const Vec2> poly) {
  if (poly.size() < 3) return false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i], b = poly[(i + 1) % poly.size()], c = poly[(i + 2) % poly.size()];
    if (cross(b - a, c - b) <= 0.0) return false;
  }
  return true;
}

/// Closed-segment intersection test, including touching endpoints.
inline bool segments_intersect(const Segment& p, const Segment& q) {
  const auto orient = [](Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); };
  const auto on_segment = [](Vec2 a, Vec2 b, Vec2 c) {
    return std::min(a.x, b.x) - 1e-12 <= c.x && c.x <= std::max(a.x, b.x) + 1e-12 &&
           std::min(a.y, b.y) - 1e-12 <= c.y && c.y <= std::max(a.y, b.y) + 1e-12;
  };
  const double d1 = orient(q.a, q.b, p.a), d2 = orient(q.a, q.b, p.b);
  const double d3 = orient(p.a, p.b, q.a), d4 = orient(p.a, p.b, q.b);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) return true;
  if (d1 == 0 && on_segment(q.a, q.b, p.a)) return true;
  if (d2 == 0 && on_segment(q.a, q.b, p.b)) return true;
  if (d3 == 0 && on_segment(p.a, p.b, q.a)) return true;
  if (d4 == 0 && on_segment(p.a, p.b, q.b)) return true;
  return false;
}

inline bool segment_intersects_polygon(const Segment& s, std::span<const Vec2> poly) {
  if (point_in_convex_polygon(s.a, poly) || point_in_convex_polygon(s.b, poly)) return true;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    if (segments_intersect(s, {poly[i], poly[(i + 1) % poly.size()]})) return true;
  }
  return false;
}

inline bool segment_intersects_circle(const Segment& s, const Circle& c) {
  return point_segment_distance(c.center, s) <= c.radius;
}

/// Polyline length of a sequence of points.
inline double polyline_length(std::span<const Vec2> pts) {
  double len = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
  return len;
}

inline double point_polyline_distance(Vec2 p, std::span<const Vec2> pts) {
  if (pts.empty()) return std::numeric_limits<double>::infinity();
  if (pts.size() == 1) return distance(p, pts[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < pts.size(); ++i) best = std::min(best, point_segment_distance(p, {pts[i - 1], pts[i]}));
  return best;
}

}  // namespace vsearch
