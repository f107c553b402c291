#pragma once

#include <algorithm>
#include <cmath>

namespace cpsim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double k) const { return {x * k, y * k}; }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }
};

inline double dist_sq(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}
inline double dist(const Vec2& a, const Vec2& b) { return std::sqrt(dist_sq(a, b)); }

// Axis-aligned rectangle, [x0,x1] x [y0,y1].
struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  bool contains(const Vec2& p) const {
    return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1;
  }
  bool overlaps(const Rect& o) const {
    return x0 < o.x1 && o.x0 < x1 && y0 < o.y1 && o.y0 < y1;
  }
};

// Liang-Barsky clip of segment a->b against the rectangle interior. Returns
// true when the segment crosses the interior for a non-degenerate stretch;
// grazing a corner or running exactly along an edge does not count as
// obstruction (the rectangle is shrunk by a nanometer to that end).
inline bool segment_crosses_rect(const Vec2& a, const Vec2& b, const Rect& r) {
  constexpr double eps = 1e-9;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - (r.x0 + eps), (r.x1 - eps) - a.x, a.y - (r.y0 + eps),
                       (r.y1 - eps) - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;  // parallel and outside
    } else {
      const double t = q[i] / p[i];
      if (p[i] < 0.0) {
        if (t > t1) return false;
        if (t > t0) t0 = t;
      } else {
        if (t < t0) return false;
        if (t < t1) t1 = t;
      }
    }
  }
  return (t1 - t0) > 1e-9;
}

inline double circular_diff_deg(double a, double b) {
  double d = std::fabs(a - b);
  d = std::fmod(d, 360.0);
  return std::min(d, 360.0 - d);
}

inline double normalize_deg(double a) {
  double d = std::fmod(a, 360.0);
  if (d < 0.0) d += 360.0;
  return d;
}

}  // namespace cpsim
