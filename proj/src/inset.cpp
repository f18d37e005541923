// Configuration-space construction by edge offsetting with miter joins.
//
// Each loop is stored with free space on the left of every edge, so pushing
// every edge left by the offset shrinks the boundary and grows obstacles in
// one rule. Edges that collapse (their offset segment flips direction) are
// removed and their neighbours re-joined; the remaining raw loop is split at
// self-intersections and only loops with the original orientation and full
// clearance survive.

#include <algorithm>
#include <cmath>
#include <limits>

#include "sonarnav/error.hpp"
#include "sonarnav/geometry.hpp"

namespace sonarnav {
namespace {

struct OffsetLine {
  Point2 anchor;  // offset copy of the original edge's start vertex
  Point2 dir;     // unit direction of the original edge
};

Polygon drop_degenerate_vertices(const Polygon& in) {
  Polygon out;
  for (Point2 p : in) {
    if (out.empty() || distance(out.back(), p) > 1e-9) out.push_back(p);
  }
  while (out.size() > 1 && distance(out.front(), out.back()) <= 1e-9) out.pop_back();

  bool changed = true;
  while (changed && out.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Point2 prev = out[(i + out.size() - 1) % out.size()];
      const Point2 next = out[(i + 1) % out.size()];
      const Point2 u = out[i] - prev, v = next - out[i];
      if (std::abs(cross(u, v)) <= 1e-12 * norm(u) * norm(v) && dot(u, v) > 0.0) {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return out;
}

Point2 join(const OffsetLine& prev, const OffsetLine& cur) {
  const double denom = cross(prev.dir, cur.dir);
  if (std::abs(denom) < 1e-12) return cur.anchor;
  const double s = cross(cur.anchor - prev.anchor, cur.dir) / denom;
  return prev.anchor + s * prev.dir;
}

Polygon raw_offset(const Polygon& input, double offset) {
  const Polygon loop = drop_degenerate_vertices(input);
  std::vector<OffsetLine> lines;
  lines.reserve(loop.size());
  for (std::size_t i = 0; i < loop.size(); ++i) {
    const Point2 a = loop[i];
    const Point2 b = loop[(i + 1) % loop.size()];
    const double len = distance(a, b);
    const Point2 d = (1.0 / len) * (b - a);
    const Point2 n{-d.y, d.x};
    lines.push_back({a + offset * n, d});
  }

  Polygon verts;
  while (lines.size() >= 3) {
    const std::size_t m = lines.size();
    verts.assign(m, {});
    for (std::size_t i = 0; i < m; ++i) verts[i] = join(lines[(i + m - 1) % m], lines[i]);

    std::size_t worst = m;
    double worst_len = -1e-12;
    for (std::size_t i = 0; i < m; ++i) {
      const double signed_len = dot(verts[(i + 1) % m] - verts[i], lines[i].dir);
      if (signed_len < worst_len) {
        worst_len = signed_len;
        worst = i;
      }
    }
    if (worst == m) return verts;
    lines.erase(lines.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  return {};
}

std::vector<Polygon> split_self_intersections(const Polygon& loop) {
  std::vector<Polygon> pending{drop_degenerate_vertices(loop)};
  std::vector<Polygon> simple;
  int budget = 10000;
  while (!pending.empty() && budget-- > 0) {
    Polygon poly = std::move(pending.back());
    pending.pop_back();
    const std::size_t n = poly.size();
    if (n < 3 || std::abs(signed_area(poly)) <= 1e-9) continue;

    bool split = false;
    for (std::size_t i = 0; i < n && !split; ++i) {
      for (std::size_t j = i + 2; j < n && !split; ++j) {
        if (i == 0 && j == n - 1) continue;
        const auto x = segment_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]);
        if (!x) continue;
        Polygon first{*x};
        for (std::size_t k = i + 1; k <= j; ++k) first.push_back(poly[k]);
        Polygon second{*x};
        for (std::size_t k = j + 1; k < n; ++k) second.push_back(poly[k]);
        for (std::size_t k = 0; k <= i; ++k) second.push_back(poly[k]);
        first = drop_degenerate_vertices(first);
        second = drop_degenerate_vertices(second);
        // A touch at a shared vertex yields no real split.
        if (first.size() == n || second.size() == n) continue;
        pending.push_back(std::move(first));
        pending.push_back(std::move(second));
        split = true;
      }
    }
    if (!split) simple.push_back(std::move(poly));
  }
  return simple;
}

std::optional<Point2> interior_point(const Polygon& poly) {
  const double sign = signed_area(poly) > 0.0 ? 1.0 : -1.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point2 a = poly[i], b = poly[(i + 1) % poly.size()];
    const double len = distance(a, b);
    if (len <= 1e-9) continue;
    const Point2 d = (1.0 / len) * (b - a);
    const Point2 inward = sign * Point2{-d.y, d.x};
    const double step = std::min(1e-4, 1e-3 * len);
    const Point2 p = 0.5 * (a + b) + step * inward;
    if (point_in_polygon(p, poly)) return p;
  }
  return std::nullopt;
}

double clearance(Point2 p, const ArenaMap& map) {
  double best = std::numeric_limits<double>::infinity();
  for (const Segment& e : map.edges()) best = std::min(best, point_segment_distance(p, e.a, e.b));
  return best;
}

}  // namespace

ArenaMap inset_polygon(const ArenaMap& map, double offset) {
  if (!(offset > 0.0) || !std::isfinite(offset)) {
    throw Error(ErrorCode::InvalidArgument, "inset offset must be positive");
  }

  // Boundary: keep the largest correctly oriented loop whose inside has clearance.
  Polygon best_boundary;
  double best_area = 0.0;
  for (Polygon& loop : split_self_intersections(raw_offset(map.boundary(), offset))) {
    const double area = signed_area(loop);
    if (area <= best_area) continue;
    const auto probe = interior_point(loop);
    if (!probe || !point_in_polygon(*probe, map.boundary())) continue;
    if (clearance(*probe, map) < offset - 1e-6) continue;
    best_area = area;
    best_boundary = std::move(loop);
  }
  if (best_boundary.empty()) {
    throw Error(ErrorCode::InsetDegenerate, "configuration space is empty at this offset");
  }

  // Obstacles grow; the outer envelope is the largest clockwise loop.
  std::vector<Polygon> grown;
  for (const Polygon& obs : map.obstacles()) {
    Polygon envelope;
    double envelope_area = 0.0;
    for (Polygon& loop : split_self_intersections(raw_offset(obs, offset))) {
      const double area = -signed_area(loop);
      if (area > envelope_area) {
        envelope_area = area;
        envelope = std::move(loop);
      }
    }
    if (!envelope.empty()) grown.push_back(std::move(envelope));
  }

  ArenaMap cspace = ArenaMap::unchecked(std::move(best_boundary), std::move(grown));
  if (cspace.free_area() <= 0.0) {
    throw Error(ErrorCode::InsetDegenerate, "obstacles cover the configuration space");
  }
  return cspace;
}

}  // namespace sonarnav
