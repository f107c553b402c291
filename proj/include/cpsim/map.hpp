#pragma once

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "cpsim/config.hpp"
#include "cpsim/geometry.hpp"

namespace cpsim {

// A directed lane: vehicles travel from a to b. Straight segments only;
// roads run the full map extent and cross at the interior intersections.
struct Lane {
  int id = 0;
  int road = 0;
  bool vertical = false;
  int direction = +1;  // +1 towards +x/+y, -1 towards -x/-y
  int index = 0;       // 0 = innermost lane of this direction
  Vec2 a, b;
  double length = 0.0;
  double heading_deg = 0.0;

  Vec2 point_at(double s) const {
    const double t = s / length;
    return {a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
  }
};

struct Road {
  int id = 0;
  bool vertical = false;
  double center = 0.0;  // x for vertical roads, y for horizontal
};

class GridMap {
 public:
  MapConfig cfg;
  double spacing = 0.0;
  double road_halfwidth = 0.0;
  std::vector<Road> roads;
  std::vector<Lane> lanes;
  std::vector<double> grid_coords;  // intersection coordinates per axis
  std::vector<Rect> buildings;

  double extent() const { return cfg.extent_m; }
  int intersections() const { return cfg.grid_n * cfg.grid_n; }
  double total_road_length_m() const {
    return 2.0 * cfg.grid_n * cfg.extent_m;  // both axes, directions pooled
  }
  double total_lane_length_m() const {
    return total_road_length_m() * 2.0 * cfg.lanes_per_direction;
  }

  int wall_count(const Vec2& from, const Vec2& to) const {
    int n = 0;
    for (const auto& b : buildings)
      if (segment_crosses_rect(from, to, b)) ++n;
    return n;
  }
  bool line_of_sight(const Vec2& from, const Vec2& to) const {
    for (const auto& b : buildings)
      if (segment_crosses_rect(from, to, b)) return false;
    return true;
  }

  // Lanes whose entry point lies on the map boundary (every lane here).
  const std::vector<int>& entry_lanes() const { return entry_lanes_; }

  // Grid coordinates a lane crosses, ascending along travel direction.
  std::vector<double> crossings_along(const Lane& lane) const {
    std::vector<double> s;
    for (double g : grid_coords) {
      const double along = lane.direction > 0 ? g : cfg.extent_m - g;
      s.push_back(along);
    }
    std::sort(s.begin(), s.end());
    return s;
  }

  std::string geometry_json() const;

  std::vector<int> entry_lanes_;
};

// Lateral offset of a lane center from the road center line under right-hand
// traffic, innermost lane first. Horizontal roads keep eastbound lanes south
// of the center; vertical roads keep northbound lanes east of it.
inline double lane_offset(const MapConfig& cfg, bool vertical, int direction, int index) {
  const double off = cfg.lane_width_m * (0.5 + index);
  if (vertical) return direction > 0 ? off : -off;
  return direction > 0 ? -off : off;
}

inline GridMap build_map(const MapConfig& cfg) {
  if (cfg.grid_n < 1) throw ConfigError("map.grid_n must be >= 1");
  if (cfg.extent_m <= 0.0) throw ConfigError("map.extent_m must be > 0");
  const double spacing =
      cfg.spacing_m > 0.0 ? cfg.spacing_m : cfg.extent_m / (cfg.grid_n + 1);
  if (std::fabs(spacing * (cfg.grid_n + 1) - cfg.extent_m) > 1.0)
    throw ConfigError("map.spacing_m * (grid_n + 1) must match map.extent_m within 1 m");
  const double road_half = cfg.lanes_per_direction * cfg.lane_width_m;
  if (spacing <= 2.0 * (road_half + cfg.building_setback_m))
    throw ConfigError("map geometry inconsistent: road spacing leaves no room between roads");

  GridMap m;
  m.cfg = cfg;
  m.spacing = spacing;
  m.road_halfwidth = road_half;
  for (int i = 0; i < cfg.grid_n; ++i) m.grid_coords.push_back(spacing * (i + 1));

  int lane_id = 0;
  for (int axis = 0; axis < 2; ++axis) {
    const bool vertical = axis == 1;
    for (int i = 0; i < cfg.grid_n; ++i) {
      Road rd;
      rd.id = static_cast<int>(m.roads.size());
      rd.vertical = vertical;
      rd.center = m.grid_coords[i];
      m.roads.push_back(rd);
      for (int dir : {+1, -1}) {
        for (int k = 0; k < cfg.lanes_per_direction; ++k) {
          Lane ln;
          ln.id = lane_id++;
          ln.road = rd.id;
          ln.vertical = vertical;
          ln.direction = dir;
          ln.index = k;
          const double off = lane_offset(cfg, vertical, dir, k);
          if (vertical) {
            const double cx = rd.center + off;
            ln.a = {cx, dir > 0 ? 0.0 : cfg.extent_m};
            ln.b = {cx, dir > 0 ? cfg.extent_m : 0.0};
            ln.heading_deg = dir > 0 ? 90.0 : 270.0;
          } else {
            const double cy = rd.center + off;
            ln.a = {dir > 0 ? 0.0 : cfg.extent_m, cy};
            ln.b = {dir > 0 ? cfg.extent_m : 0.0, cy};
            ln.heading_deg = dir > 0 ? 0.0 : 180.0;
          }
          ln.length = cfg.extent_m;
          m.entry_lanes_.push_back(ln.id);
          m.lanes.push_back(ln);
        }
      }
    }
  }

  // One square building per intersection quadrant, set back from the road
  // edges and sized to reach half-way into the block so neighbours abut
  // without overlapping.
  const double near = road_half + cfg.building_setback_m;
  double side = (spacing - 2.0 * near) / 2.0;
  if (side <= 0.0) side = 0.0;
  for (double gx : m.grid_coords) {
    for (double gy : m.grid_coords) {
      for (int sx : {-1, +1}) {
        for (int sy : {-1, +1}) {
          if (side <= 0.0) continue;
          const double x0 = gx + (sx > 0 ? near : -near - side);
          const double y0 = gy + (sy > 0 ? near : -near - side);
          Rect b{x0, y0, x0 + side, y0 + side};
          b.x0 = std::max(b.x0, 0.0);
          b.y0 = std::max(b.y0, 0.0);
          b.x1 = std::min(b.x1, cfg.extent_m);
          b.y1 = std::min(b.y1, cfg.extent_m);
          if (b.width() > 0.0 && b.height() > 0.0) m.buildings.push_back(b);
        }
      }
    }
  }
  return m;
}

// Road polygons as rectangles (for overlap checks and plotting).
inline std::vector<Rect> road_rects(const GridMap& m) {
  std::vector<Rect> rs;
  for (const auto& rd : m.roads) {
    if (rd.vertical)
      rs.push_back({rd.center - m.road_halfwidth, 0.0, rd.center + m.road_halfwidth,
                    m.cfg.extent_m});
    else
      rs.push_back({0.0, rd.center - m.road_halfwidth, m.cfg.extent_m,
                    rd.center + m.road_halfwidth});
  }
  return rs;
}

inline std::string GridMap::geometry_json() const {
  std::ostringstream os;
  os.precision(10);
  os << "{\n  \"extent_m\": " << cfg.extent_m << ",\n  \"grid_n\": " << cfg.grid_n
     << ",\n  \"road_halfwidth_m\": " << road_halfwidth << ",\n  \"roads\": [";
  for (std::size_t i = 0; i < roads.size(); ++i) {
    const auto& rd = roads[i];
    os << (i ? "," : "") << "\n    {\"vertical\": " << (rd.vertical ? "true" : "false")
       << ", \"center_m\": " << rd.center << "}";
  }
  os << "\n  ],\n  \"lanes\": [";
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const auto& ln = lanes[i];
    os << (i ? "," : "") << "\n    {\"id\": " << ln.id << ", \"a\": [" << ln.a.x << ", "
       << ln.a.y << "], \"b\": [" << ln.b.x << ", " << ln.b.y << "]}";
  }
  os << "\n  ],\n  \"buildings\": [";
  for (std::size_t i = 0; i < buildings.size(); ++i) {
    const auto& b = buildings[i];
    os << (i ? "," : "") << "\n    [" << b.x0 << ", " << b.y0 << ", " << b.x1 << ", "
       << b.y1 << "]";
  }
  os << "\n  ]\n}\n";
  return os.str();
}

}  // namespace cpsim
