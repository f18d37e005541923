// Fixtures and brute-force oracles shared by the unit and acceptance tests.
// The oracles deliberately avoid the library's own geometry routines.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sonarnav/geometry.hpp"
#include "sonarnav/planning.hpp"
#include "sonarnav/rng.hpp"

#ifndef SONARNAV_SOURCE_DIR
#define SONARNAV_SOURCE_DIR "."
#endif

namespace sonarnav::testing {

inline std::string source_path(const std::string& rel) {
  return std::string(SONARNAV_SOURCE_DIR) + "/" + rel;
}

inline ArenaMap square_map(double side = 100.0) {
  return ArenaMap({{0, 0}, {side, 0}, {side, side}, {0, side}});
}

inline ArenaMap l_map() {
  return ArenaMap({{0, 0}, {100, 0}, {100, 40}, {40, 40}, {40, 100}, {0, 100}});
}

/// 100x100 square with a 20x20 pillar in the middle.
inline ArenaMap pillar_map() {
  return ArenaMap({{0, 0}, {100, 0}, {100, 100}, {0, 100}},
                  {{{40, 40}, {60, 40}, {60, 60}, {40, 60}}});
}

// ---------------------------------------------------------------------------
// Winding number (Sunday's crossing-direction formulation).

inline int winding_number(Point2 p, const Polygon& poly) {
  int wn = 0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a = poly[i];
    const Point2 b = poly[(i + 1) % n];
    const double side = (b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y);
    if (a.y <= p.y) {
      if (b.y > p.y && side > 0) ++wn;
    } else {
      if (b.y <= p.y && side < 0) --wn;
    }
  }
  return wn;
}

inline bool oracle_free(Point2 p, const ArenaMap& map) {
  if (winding_number(p, map.boundary()) == 0) return false;
  for (const Polygon& obs : map.obstacles()) {
    if (winding_number(p, obs) != 0) return false;
  }
  return true;
}

inline double oracle_point_segment(Point2 p, Point2 a, Point2 b) {
  const double vx = b.x - a.x, vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(a.x + t * vx - p.x, a.y + t * vy - p.y);
}

/// Distance from p to the nearest edge of any polygon of the map.
inline double oracle_clearance(Point2 p, const ArenaMap& map) {
  double best = std::numeric_limits<double>::infinity();
  auto scan = [&](const Polygon& poly) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
      best = std::min(best, oracle_point_segment(p, poly[i], poly[(i + 1) % poly.size()]));
    }
  };
  scan(map.boundary());
  for (const Polygon& obs : map.obstacles()) scan(obs);
  return best;
}

/// Ray marching at `step` cm until the winding-number test reports a wall.
inline double oracle_ray_march(Point2 o, double angle, const ArenaMap& map, double step = 0.01,
                               double limit = 1000.0) {
  const double c = std::cos(angle), s = std::sin(angle);
  for (long k = 1; k * step <= limit; ++k) {
    const double d = static_cast<double>(k) * step;
    if (!oracle_free({o.x + d * c, o.y + d * s}, map)) return d;
  }
  return limit;
}

/// Uniform free point by rejection, using only the winding oracle.
inline Point2 oracle_sample_free(const ArenaMap& map, Rng& rng) {
  const Point2 lo = map.min_corner(), hi = map.max_corner();
  for (;;) {
    const Point2 p{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
    if (oracle_free(p, map)) return p;
  }
}

/// Dense sampling of the open segment at `step` cm.
inline bool oracle_segment_clear(Point2 a, Point2 b, const ArenaMap& map, double step = 0.05) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const int n = std::max(2, static_cast<int>(std::ceil(len / step)));
  for (int k = 1; k < n; ++k) {
    const double t = static_cast<double>(k) / n;
    if (!oracle_free({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}, map)) return false;
  }
  return true;
}

/// Smallest distance between segment a-b and any map edge, sampled densely.
inline double oracle_segment_margin(Point2 a, Point2 b, const ArenaMap& map, double step = 0.01) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  const int n = std::max(2, static_cast<int>(std::ceil(len / step)));
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) / n;
    best = std::min(best, oracle_clearance({a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)}, map));
  }
  return best;
}

struct Best {
  int intermediates = -1;
  double length = std::numeric_limits<double>::infinity();
};

/// Brute-force minimum over 0, 1 and 2 intermediates.
inline Best enumerate_upto_two(Point2 s, Point2 g, const std::vector<Point2>& pool, const ArenaMap& c) {
  Best b;
  if (segment_clear(s, g, c)) return {0, distance(s, g)};
  for (const Point2& p : pool) {
    if (segment_clear(s, p, c) && segment_clear(p, g, c)) {
      b.intermediates = 1;
      b.length = std::min(b.length, distance(s, p) + distance(p, g));
    }
  }
  if (b.intermediates == 1) return b;
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = 0; j < pool.size(); ++j) {
      if (i == j) continue;
      const Point2 a = pool[i], q = pool[j];
      if (segment_clear(s, a, c) && segment_clear(a, q, c) && segment_clear(q, g, c)) {
        b.intermediates = 2;
        b.length = std::min(b.length, distance(s, a) + distance(a, q) + distance(q, g));
      }
    }
  }
  return b;
}

}  // namespace sonarnav::testing
