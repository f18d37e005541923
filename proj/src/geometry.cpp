#include "sonarnav/geometry.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "sonarnav/error.hpp"

namespace sonarnav {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidMap: return "InvalidMap";
    case ErrorCode::OriginOutsideFreeSpace: return "OriginOutsideFreeSpace";
    case ErrorCode::InsetDegenerate: return "InsetDegenerate";
    case ErrorCode::TooFewWaypoints: return "TooFewWaypoints";
    case ErrorCode::NegativeTime: return "NegativeTime";
    case ErrorCode::EmptyScan: return "EmptyScan";
    case ErrorCode::EmptyFreeSpace: return "EmptyFreeSpace";
    case ErrorCode::NonpositiveSigma: return "NonpositiveSigma";
    case ErrorCode::AllWeightsZero: return "AllWeightsZero";
    case ErrorCode::DegenerateWeights: return "DegenerateWeights";
    case ErrorCode::LocalizationFailed: return "LocalizationFailed";
    case ErrorCode::NoPathFound: return "NoPathFound";
    case ErrorCode::MissionFailed: return "MissionFailed";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

double normalize_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2pi
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double wrap_to_pi(double a) {
  double r = normalize_angle(a);
  return r > std::numbers::pi ? r - kTwoPi : r;
}

double signed_area(const Polygon& poly) {
  double twice = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    twice += cross(poly[i], poly[(i + 1) % n]);
  }
  return 0.5 * twice;
}

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const Point2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + t * ab);
}

double segment_segment_distance(Point2 a1, Point2 a2, Point2 b1, Point2 b2) {
  if (segment_intersect(a1, a2, b1, b2)) return 0.0;
  return std::min({point_segment_distance(a1, b1, b2), point_segment_distance(a2, b1, b2),
                   point_segment_distance(b1, a1, a2), point_segment_distance(b2, a1, a2)});
}

std::optional<Point2> segment_intersect(Point2 a1, Point2 a2, Point2 b1, Point2 b2) {
  const Point2 r = a2 - a1;
  const Point2 s = b2 - b1;
  const double rlen = norm(r);
  const double slen = norm(s);

  if (rlen <= kGeomEps && slen <= kGeomEps) {
    if (distance(a1, b1) <= kGeomEps) return a1;
    return std::nullopt;
  }
  if (rlen <= kGeomEps) {
    if (point_segment_distance(a1, b1, b2) <= kGeomEps) return a1;
    return std::nullopt;
  }
  if (slen <= kGeomEps) {
    if (point_segment_distance(b1, a1, a2) <= kGeomEps) return b1;
    return std::nullopt;
  }

  const Point2 ab = b1 - a1;
  const double denom = cross(r, s);
  if (std::abs(denom) > 1e-12 * rlen * slen) {
    const double t = cross(ab, s) / denom;
    const double u = cross(ab, r) / denom;
    const double te = kGeomEps / rlen;
    const double ue = kGeomEps / slen;
    if (t < -te || t > 1.0 + te || u < -ue || u > 1.0 + ue) return std::nullopt;
    return a1 + std::clamp(t, 0.0, 1.0) * r;
  }

  // Parallel: only collinear overlap counts.
  if (std::abs(cross(ab, r)) / rlen > kGeomEps) return std::nullopt;
  const double rr = dot(r, r);
  const double t0 = dot(b1 - a1, r) / rr;
  const double t1 = dot(b2 - a1, r) / rr;
  const double lo = std::max(0.0, std::min(t0, t1));
  const double hi = std::min(1.0, std::max(t0, t1));
  if (lo > hi + kGeomEps / rlen) return std::nullopt;
  return a1 + std::min(lo, 1.0) * r;
}

bool point_in_polygon(Point2 p, const Polygon& poly) {
  bool inside = false;
  for (std::size_t i = 0, n = poly.size(), j = n - 1; i < n; j = i++) {
    const Point2 a = poly[i];
    const Point2 b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) inside = !inside;
    }
  }
  return inside;
}

bool point_on_edges(Point2 p, const ArenaMap& map, double tol) {
  for (const Segment& e : map.edges()) {
    if (point_segment_distance(p, e.a, e.b) <= tol) return true;
  }
  return false;
}

bool point_in_free_space(Point2 p, const ArenaMap& map) {
  if (!is_finite(p)) return false;
  const Point2 lo = map.min_corner();
  const Point2 hi = map.max_corner();
  if (p.x <= lo.x || p.x >= hi.x || p.y <= lo.y || p.y >= hi.y) return false;
  if (point_on_edges(p, map)) return false;
  if (!point_in_polygon(p, map.boundary())) return false;
  for (const Polygon& obs : map.obstacles()) {
    if (point_in_polygon(p, obs)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// ArenaMap

namespace {

void add_loop_violations(const Polygon& poly, const std::string& name,
                         std::vector<MapViolation>& out) {
  const std::size_t n = poly.size();
  if (n < 3) {
    out.push_back({name + ": needs at least 3 vertices, has " + std::to_string(n)});
    return;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_finite(poly[i])) {
      out.push_back({name + ": vertex " + std::to_string(i) + " is not finite"});
      return;
    }
  }
  auto edge_name = [&](std::size_t i) {
    std::ostringstream os;
    os << "edge " << i << " (v" << i << "-v" << (i + 1) % n << ")";
    return os.str();
  };
  for (std::size_t i = 0; i < n; ++i) {
    if (distance(poly[i], poly[(i + 1) % n]) <= kGeomEps) {
      out.push_back({name + ": " + edge_name(i) + " has zero length"});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 a1 = poly[i], a2 = poly[(i + 1) % n];
    for (std::size_t j = i + 1; j < n; ++j) {
      const Point2 b1 = poly[j], b2 = poly[(j + 1) % n];
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      if (adjacent) {
        // Adjacent edges share one vertex; they must not fold back onto each other.
        const Point2 shared = (j == i + 1) ? a2 : a1;
        const Point2 pa = (j == i + 1) ? a1 : a2;
        const Point2 pb = (j == i + 1) ? b2 : b1;
        const Point2 u = pa - shared, v = pb - shared;
        if (norm(u) > kGeomEps && norm(v) > kGeomEps &&
            std::abs(cross(u, v)) <= kGeomEps * norm(u) * norm(v) && dot(u, v) > 0.0) {
          out.push_back({name + ": " + edge_name(i) + " overlaps " + edge_name(j)});
        }
        continue;
      }
      if (segment_intersect(a1, a2, b1, b2)) {
        out.push_back({name + ": " + edge_name(i) + " crosses " + edge_name(j)});
      }
    }
  }
  if (std::abs(signed_area(poly)) <= kGeomEps) {
    out.push_back({name + ": zero area"});
  }
}

bool loops_touch(const Polygon& a, const Polygon& b) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (segment_intersect(a[i], a[(i + 1) % a.size()], b[j], b[(j + 1) % b.size()])) {
        return true;
      }
    }
  }
  return false;
}

}  // namespace

std::vector<MapViolation> validate_map(const Polygon& boundary,
                                       const std::vector<Polygon>& obstacles) {
  std::vector<MapViolation> out;
  add_loop_violations(boundary, "boundary", out);
  const bool boundary_ok = out.empty();
  std::vector<bool> obstacle_ok(obstacles.size());
  for (std::size_t k = 0; k < obstacles.size(); ++k) {
    const std::size_t before = out.size();
    add_loop_violations(obstacles[k], "obstacle " + std::to_string(k), out);
    obstacle_ok[k] = out.size() == before;
  }
  for (std::size_t k = 0; k < obstacles.size(); ++k) {
    if (!boundary_ok || !obstacle_ok[k]) continue;
    const std::string name = "obstacle " + std::to_string(k);
    if (loops_touch(obstacles[k], boundary)) {
      out.push_back({name + ": touches or crosses the boundary"});
      continue;
    }
    if (!point_in_polygon(obstacles[k][0], boundary)) {
      out.push_back({name + ": vertex 0 lies outside the boundary"});
    }
  }
  for (std::size_t k = 0; k < obstacles.size(); ++k) {
    for (std::size_t m = k + 1; m < obstacles.size(); ++m) {
      if (!obstacle_ok[k] || !obstacle_ok[m]) continue;
      if (loops_touch(obstacles[k], obstacles[m]) ||
          point_in_polygon(obstacles[k][0], obstacles[m]) ||
          point_in_polygon(obstacles[m][0], obstacles[k])) {
        out.push_back({"obstacles " + std::to_string(k) + " and " + std::to_string(m) +
                       " overlap"});
      }
    }
  }
  return out;
}

ArenaMap::ArenaMap(Polygon boundary, std::vector<Polygon> obstacles) {
  const auto violations = validate_map(boundary, obstacles);
  if (!violations.empty()) {
    std::string msg = "invalid map:";
    for (const auto& v : violations) msg += "\n  " + v.message;
    throw Error(ErrorCode::InvalidMap, msg);
  }
  boundary_ = std::move(boundary);
  obstacles_ = std::move(obstacles);
  finalize();
}

ArenaMap ArenaMap::unchecked(Polygon boundary, std::vector<Polygon> obstacles) {
  ArenaMap m;
  m.boundary_ = std::move(boundary);
  m.obstacles_ = std::move(obstacles);
  m.finalize();
  return m;
}

void ArenaMap::finalize() {
  if (signed_area(boundary_) < 0.0) std::reverse(boundary_.begin(), boundary_.end());
  for (Polygon& obs : obstacles_) {
    if (signed_area(obs) > 0.0) std::reverse(obs.begin(), obs.end());
  }
  edges_.clear();
  auto push_loop = [this](const Polygon& poly) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
      edges_.push_back({poly[i], poly[(i + 1) % poly.size()]});
    }
  };
  push_loop(boundary_);
  for (const Polygon& obs : obstacles_) push_loop(obs);

  min_ = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  max_ = {-min_.x, -min_.y};
  for (Point2 p : boundary_) {
    min_ = {std::min(min_.x, p.x), std::min(min_.y, p.y)};
    max_ = {std::max(max_.x, p.x), std::max(max_.y, p.y)};
  }
}

double ArenaMap::free_area() const {
  double area = std::abs(signed_area(boundary_));
  for (const Polygon& obs : obstacles_) area -= std::abs(signed_area(obs));
  return area;
}

// ---------------------------------------------------------------------------
// Rays and segments

RayHit ray_hit_unchecked(Point2 origin, double angle, const ArenaMap& map) {
  const Point2 d{std::cos(angle), std::sin(angle)};
  RayHit best{std::numeric_limits<double>::infinity(), 0.0};
  for (const Segment& e : map.edges()) {
    const Point2 s = e.b - e.a;
    const double slen = norm(s);
    if (slen <= kGeomEps) continue;
    const Point2 ao = e.a - origin;
    const double denom = cross(d, s);
    double t;
    if (std::abs(denom) > 1e-12 * slen) {
      t = cross(ao, s) / denom;
      const double u = cross(ao, d) / denom;
      const double ue = kGeomEps / slen;
      if (t < -kGeomEps || u < -ue || u > 1.0 + ue) continue;
    } else {
      // Ray parallel to the edge: a hit only when running along it.
      if (std::abs(cross(ao, d)) > kGeomEps) continue;
      const double t0 = dot(ao, d);
      const double t1 = dot(e.b - origin, d);
      if (t0 < 0.0 && t1 < 0.0) continue;
      t = std::max(0.0, std::min(t0, t1));
    }
    t = std::max(t, 0.0);
    if (t < best.distance) {
      const Point2 n{-s.y / slen, s.x / slen};
      best.distance = t;
      best.incidence = std::acos(std::min(1.0, std::abs(dot(d, n))));
    }
  }
  return best;
}

double ray_cast(Point2 origin, double angle, const ArenaMap& map) {
  if (!point_in_free_space(origin, map)) {
    throw Error(ErrorCode::OriginOutsideFreeSpace, "ray origin is not in free space");
  }
  return ray_hit_unchecked(origin, angle, map).distance;
}

bool segment_clear(Point2 p1, Point2 p2, const ArenaMap& cspace) {
  const Point2 r = p2 - p1;
  const double rlen = norm(r);
  if (rlen <= kGeomEps) return point_in_free_space(p1, cspace);
  const double te = kGeomEps / rlen;
  const double rr = rlen * rlen;

  for (const Segment& e : cspace.edges()) {
    const Point2 s = e.b - e.a;
    const double slen = norm(s);
    const Point2 ap = e.a - p1;
    if (slen <= kGeomEps) {
      const double t = dot(ap, r) / rr;
      if (t > te && t < 1.0 - te && point_segment_distance(e.a, p1, p2) <= kGeomEps) {
        return false;
      }
      continue;
    }
    const double denom = cross(r, s);
    if (std::abs(denom) > 1e-12 * rlen * slen) {
      const double t = cross(ap, s) / denom;
      const double u = cross(ap, r) / denom;
      const double ue = kGeomEps / slen;
      if (u >= -ue && u <= 1.0 + ue && t > te && t < 1.0 - te) return false;
      continue;
    }
    if (std::abs(cross(ap, r)) / rlen > kGeomEps) continue;
    const double t0 = dot(e.a - p1, r) / rr;
    const double t1 = dot(e.b - p1, r) / rr;
    const double lo = std::max(std::min(t0, t1), te);
    const double hi = std::min(std::max(t0, t1), 1.0 - te);
    if (lo < hi) return false;
  }
  // No wall touches the open segment, so it is entirely free or entirely not.
  return point_in_free_space(p1 + 0.5 * r, cspace);
}

double path_length(std::span<const Point2> waypoints) {
  if (waypoints.size() < 2) {
    throw Error(ErrorCode::TooFewWaypoints, "path needs at least two waypoints");
  }
  double total = 0.0;
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    total += distance(waypoints[i - 1], waypoints[i]);
  }
  return total;
}

}  // namespace sonarnav
