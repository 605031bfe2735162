#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "vsearch/world.hpp"

namespace vsearch {

/// Map label convention: +1 permanent (map), -1 non-permanent (non-map).
inline constexpr std::int8_t kMapLabel = 1;
inline constexpr std::int8_t kNonMapLabel = -1;

enum class FineLabel : std::uint8_t { ltf, stf, df, no_hit };

struct ClassifiedScan {
  Scan scan;
  std::vector<std::int8_t> labels;
  std::vector<FineLabel> fine_labels;
};

struct ClassifierParams {
  double sigma_s = 0.0025;  // m^2
  double tau_ltf = 0.5;
  double tau_stf = 0.5;
  int history_window = 10;

  void validate() const {
    if (!(sigma_s > 0.0)) throw std::invalid_argument("sigma_s must be positive");
    if (!(tau_ltf > 0.0 && tau_ltf < 1.0 && tau_stf > 0.0 && tau_stf < 1.0))
      throw std::invalid_argument("classifier thresholds must lie in (0,1)");
    if (history_window < 1) throw std::invalid_argument("history_window must be at least 1");
  }
};

/// Sliding window of world-frame points that were not LTF at their own step, with an exact
/// nearest-neighbour query over a uniform hash grid.
class ObservationHistory {
 public:
  struct Entry {
    std::int64_t step = 0;
    std::vector<Vec2> points;
  };

  explicit ObservationHistory(int window = 10, double cell_size = 0.1) : window_(window), cell_(cell_size) {
    if (window < 1) throw std::invalid_argument("history window must be at least 1");
    if (!(cell_size > 0.0)) throw std::invalid_argument("history cell size must be positive");
  }

  int window() const { return window_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::deque<Entry>& entries() const { return entries_; }
  int n_beams() const { return n_beams_; }

  /// Fixes the beam count on first use; later scans must match.
  void bind_beams(int n) {
    if (n_beams_ == 0) n_beams_ = n;
    else if (n_beams_ != n) throw std::domain_error("scan beam count does not match observation history");
  }

  void push(std::int64_t step, std::vector<Vec2> points) {
    entries_.push_back({step, std::move(points)});
    while (static_cast<int>(entries_.size()) > window_) entries_.pop_front();
    rebuild();
  }

  struct Match {
    Vec2 point;
    double squared_distance = 0.0;
  };

  std::optional<Match> nearest(Vec2 p) const {
    if (total_points_ == 0) return std::nullopt;
    const int cx = coord(p.x), cy = coord(p.y);
    const int max_ring = std::max({std::abs(cx - min_x_), std::abs(cx - max_x_), std::abs(cy - min_y_),
                                   std::abs(cy - max_y_)});
    std::optional<Match> best;
    for (int r = 0; r <= max_ring; ++r) {
      for (int y = cy - r; y <= cy + r; ++y) {
        const bool edge_row = (y == cy - r || y == cy + r);
        for (int x = cx - r; x <= cx + r; x += (edge_row || r == 0) ? 1 : 2 * r) {
          auto it = buckets_.find(key(x, y));
          if (it == buckets_.end()) continue;
          for (auto q : it->second) {
            const double d2 = squared_norm(q - p);
            if (!best || d2 < best->squared_distance) best = Match{q, d2};
          }
        }
      }
      // Cells at ring r+1 or beyond are at least r cell widths away.
      if (best && best->squared_distance <= (r * cell_) * (r * cell_)) break;
    }
    return best;
  }

 private:
  int coord(double v) const { return static_cast<int>(std::floor(v / cell_)); }
  static std::uint64_t key(int x, int y) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x)) << 32) | static_cast<std::uint32_t>(y);
  }

  void rebuild() {
    buckets_.clear();
    total_points_ = 0;
    min_x_ = min_y_ = std::numeric_limits<int>::max();
    max_x_ = max_y_ = std::numeric_limits<int>::min();
    for (const auto& e : entries_)
      for (auto q : e.points) {
        const int x = coord(q.x), y = coord(q.y);
        buckets_[key(x, y)].push_back(q);
        min_x_ = std::min(min_x_, x);
        max_x_ = std::max(max_x_, x);
        min_y_ = std::min(min_y_, y);
        max_y_ = std::max(max_y_, y);
        ++total_points_;
      }
  }

  int window_;
  double cell_;
  int n_beams_ = 0;
  std::deque<Entry> entries_;
  std::unordered_map<std::uint64_t, std::vector<Vec2>> buckets_;
  std::size_t total_points_ = 0;
  int min_x_ = 0, max_x_ = 0, min_y_ = 0, max_y_ = 0;
};

/// Likelihood that a world-frame point lies on its expected map line.
inline double ltf_probability(Vec2 point_world, const Segment& expected_line, double sigma_s) {
  const double d = point_segment_distance(point_world, expected_line);
  return std::exp(-(d * d) / sigma_s);
}

struct StfMatch {
  double probability = 0.0;
  std::optional<Vec2> match;
};

/// Correspondence likelihood against the nearest prior non-LTF point; zero for an empty history.
inline StfMatch stf_likelihood(Vec2 point_world, const ObservationHistory& history, double sigma_s) {
  const auto m = history.nearest(point_world);
  if (!m) return {};
  return {std::exp(-m->squared_distance / sigma_s), m->point};
}

/// Labels each beam LTF / STF / DF against the map using the true pose, then records the
/// scan's non-LTF points in the history.
inline ClassifiedScan classify_scan_gt(const LineWorld& w, const Pose& pose, const Scan& scan,
                                       const ClassifierParams& params, ObservationHistory& history) {
  params.validate();
  const int n = static_cast<int>(scan.size());
  history.bind_beams(n);
  ClassifiedScan out;
  out.scan = scan;
  out.labels.assign(scan.size(), kMapLabel);
  out.fine_labels.assign(scan.size(), FineLabel::no_hit);
  std::vector<Vec2> non_ltf;
  const auto expected_hits = cast_beams(w, pose, n, std::numeric_limits<double>::infinity(), false);
  for (int j = 0; j < n; ++j) {
    const auto u = static_cast<std::size_t>(j);
    if (!scan.hit[u]) continue;
    const double angle = pose.theta + 2.0 * std::numbers::pi * j / n;
    const Vec2 p = pose.position() + unit_vector(angle) * scan.ranges[u];
    const RayHit& expected = expected_hits[u];
    double p_ltf = 0.0;
    if (expected.source == HitSource::segment)
      p_ltf = ltf_probability(p, w.segments[static_cast<std::size_t>(expected.index)], params.sigma_s);
    if (p_ltf >= params.tau_ltf) {
      out.fine_labels[u] = FineLabel::ltf;
      continue;
    }
    out.labels[u] = kNonMapLabel;
    out.fine_labels[u] = stf_likelihood(p, history, params.sigma_s).probability >= params.tau_stf ? FineLabel::stf
                                                                                                  : FineLabel::df;
    non_ltf.push_back(p);
  }
  history.push(scan.timestamp, std::move(non_ltf));
  return out;
}

}  // namespace vsearch
