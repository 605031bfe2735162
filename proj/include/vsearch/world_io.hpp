#pragma once

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "json.hpp"
#include "vsearch/world.hpp"

namespace vsearch {

inline constexpr int kWorldFormatVersion = 1;

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline double json_number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw FormatError(std::string("expected a number in ") + what);
  return j.get<double>();
}

inline std::vector<double> json_numbers(const nlohmann::json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n)
    throw FormatError(std::string(what) + " must be an array of " + std::to_string(n) + " numbers");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(json_number(v, what));
  return out;
}

}  // namespace detail

/// World document: {"version", "bounds", "segments", "objects", "targets", "start_pose"}.
inline nlohmann::json world_to_json(const LineWorld& w) {
  nlohmann::json j;
  j["version"] = kWorldFormatVersion;
  j["bounds"] = {w.bounds.min_x, w.bounds.min_y, w.bounds.max_x, w.bounds.max_y};
  j["segments"] = nlohmann::json::array();
  for (const auto& s : w.segments) j["segments"].push_back({s.a.x, s.a.y, s.b.x, s.b.y});
  j["objects"] = nlohmann::json::array();
  for (const auto& poly : w.objects) {
    nlohmann::json verts = nlohmann::json::array();
    for (auto v : poly) verts.push_back({v.x, v.y});
    j["objects"].push_back(std::move(verts));
  }
  j["targets"] = nlohmann::json::array();
  for (const auto& t : w.targets) j["targets"].push_back({t.position.x, t.position.y, t.radius});
  j["start_pose"] = {w.start_pose.x, w.start_pose.y, w.start_pose.theta};
  return j;
}

inline LineWorld world_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw FormatError("world document must be a JSON object");
  static const std::set<std::string> allowed{"version", "bounds", "segments", "objects", "targets", "start_pose"};
  for (const auto& [key, _] : j.items())
    if (!allowed.contains(key)) throw FormatError("unexpected field '" + key + "' in world document");
  for (const auto& key : allowed)
    if (!j.contains(key)) throw FormatError("missing field '" + key + "' in world document");
  if (!j["version"].is_number_integer() || j["version"].get<int>() != kWorldFormatVersion)
    throw FormatError("unsupported world format version");

  LineWorld w;
  const auto b = detail::json_numbers(j["bounds"], 4, "bounds");
  w.bounds = {b[0], b[1], b[2], b[3]};
  if (!j["segments"].is_array()) throw FormatError("segments must be an array");
  for (const auto& s : j["segments"]) {
    const auto v = detail::json_numbers(s, 4, "segment");
    w.segments.push_back({{v[0], v[1]}, {v[2], v[3]}});
  }
  if (!j["objects"].is_array()) throw FormatError("objects must be an array");
  for (const auto& o : j["objects"]) {
    if (!o.is_array()) throw FormatError("object must be an array of vertices");
    Polygon poly;
    for (const auto& v : o) {
      const auto p = detail::json_numbers(v, 2, "object vertex");
      poly.push_back({p[0], p[1]});
    }
    w.objects.push_back(std::move(poly));
  }
  if (!j["targets"].is_array()) throw FormatError("targets must be an array");
  for (const auto& t : j["targets"]) {
    const auto v = detail::json_numbers(t, 3, "target");
    w.targets.push_back({{v[0], v[1]}, v[2]});
  }
  const auto sp = detail::json_numbers(j["start_pose"], 3, "start_pose");
  w.start_pose = Pose(sp[0], sp[1], sp[2]);
  try {
    validate_world(w);
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  return w;
}

inline void save_world(const LineWorld& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << world_to_json(w).dump(1) << '\n';
}

inline LineWorld load_world(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("world file is not valid JSON: ") + e.what());
  }
  return world_from_json(j);
}

}  // namespace vsearch
