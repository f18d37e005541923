#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sonarnav {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
/// Absolute tolerance for intersection and on-edge tests, in cm.
inline constexpr double kGeomEps = 1e-9;

struct Point2 {
  double x = 0.0;
  double y = 0.0;

  friend Point2 operator+(Point2 a, Point2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Point2 operator-(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Point2 operator*(double s, Point2 p) { return {s * p.x, s * p.y}; }
  friend bool operator==(Point2, Point2) = default;
};

inline double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point2 a, Point2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point2 p) { return std::hypot(p.x, p.y); }
inline double distance(Point2 a, Point2 b) { return norm(b - a); }
inline bool is_finite(Point2 p) { return std::isfinite(p.x) && std::isfinite(p.y); }

/// Wraps into [0, 2pi).
double normalize_angle(double a);
/// Wraps into (-pi, pi].
double wrap_to_pi(double a);

struct Pose {
  Point2 position;
  double heading = 0.0;  // radians, [0, 2pi)

  Pose() = default;
  Pose(Point2 p, double h) : position(p), heading(normalize_angle(h)) {}
  Pose(double x, double y, double h) : Pose(Point2{x, y}, h) {}
};

struct Segment {
  Point2 a;
  Point2 b;
};

using Polygon = std::vector<Point2>;

double signed_area(const Polygon& poly);
double point_segment_distance(Point2 p, Point2 a, Point2 b);
double segment_segment_distance(Point2 a1, Point2 a2, Point2 b1, Point2 b2);

/// A validation finding for a candidate map, with the vertex indices involved.
struct MapViolation {
  std::string message;
};

/// Closed polygonal arena in cm. Boundary is stored counter-clockwise and
/// obstacles clockwise, so free space is always on the left of every edge.
class ArenaMap {
 public:
  ArenaMap() = default;

  /// Validates and normalizes orientation; throws Error(InvalidMap).
  ArenaMap(Polygon boundary, std::vector<Polygon> obstacles = {});

  /// Orientation-normalized map without the simplicity/containment checks.
  /// Configuration spaces built by inset_polygon use this, since grown
  /// obstacles may touch the shrunken boundary.
  static ArenaMap unchecked(Polygon boundary, std::vector<Polygon> obstacles);

  const Polygon& boundary() const { return boundary_; }
  const std::vector<Polygon>& obstacles() const { return obstacles_; }
  /// All edges, boundary first then each obstacle, in stored orientation.
  const std::vector<Segment>& edges() const { return edges_; }

  /// Axis-aligned bounding box of the boundary.
  Point2 min_corner() const { return min_; }
  Point2 max_corner() const { return max_; }

  /// Boundary area minus obstacle areas (obstacles assumed disjoint).
  double free_area() const;

 private:
  void finalize();

  Polygon boundary_;
  std::vector<Polygon> obstacles_;
  std::vector<Segment> edges_;
  Point2 min_;
  Point2 max_;
};

/// Every invariant violation of a candidate map; empty means valid.
std::vector<MapViolation> validate_map(const Polygon& boundary,
                                       const std::vector<Polygon>& obstacles);

/// Intersection of closed segments nearest a1, or nullopt when disjoint.
std::optional<Point2> segment_intersect(Point2 a1, Point2 a2, Point2 b1, Point2 b2);

bool point_in_polygon(Point2 p, const Polygon& poly);
bool point_on_edges(Point2 p, const ArenaMap& map, double tol = kGeomEps);

/// Strictly inside the boundary and strictly outside every obstacle.
bool point_in_free_space(Point2 p, const ArenaMap& map);

struct RayHit {
  double distance = 0.0;
  /// Angle between the ray and the hit wall's normal, in [0, pi/2].
  double incidence = 0.0;
};

/// First wall hit along a ray. The origin is not checked; callers that
/// already know the origin is free use this in inner loops.
RayHit ray_hit_unchecked(Point2 origin, double angle, const ArenaMap& map);

/// Distance to the nearest wall along the ray. Throws
/// Error(OriginOutsideFreeSpace) when the origin is not in free space.
double ray_cast(Point2 origin, double angle, const ArenaMap& map);

/// Configuration space: the map with every edge pushed into free space by
/// `offset` (miter joins). Throws Error(InsetDegenerate) when nothing remains.
ArenaMap inset_polygon(const ArenaMap& map, double offset);

/// True iff the open segment p1-p2 lies in the free space of `cspace`.
bool segment_clear(Point2 p1, Point2 p2, const ArenaMap& cspace);

/// Sum of segment lengths; throws Error(TooFewWaypoints) below two points.
double path_length(std::span<const Point2> waypoints);

}  // namespace sonarnav
