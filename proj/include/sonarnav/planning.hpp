#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "sonarnav/geometry.hpp"
#include "sonarnav/rng.hpp"

namespace sonarnav {

struct PlanConfig {
  int sample_count = 30;
  int max_intermediates = 4;
  /// Fresh-sample retries (each doubling sample_count) after NoPathFound.
  int retries = 3;
  /// Robot length; the configuration space is inset by half of it.
  double robot_length = 30.0;
  double astar_resolution = 5.0;

  double cspace_offset() const { return robot_length / 2.0; }
};

struct Path {
  std::vector<Point2> waypoints;  // start, intermediates..., goal
  int intermediates = 0;
  double length = 0.0;
};

struct GridCell {
  int ix = 0;
  int iy = 0;
  friend bool operator==(GridCell, GridCell) = default;
};

/// 8-connected lattice path. Lattice node (ix, iy) sits at
/// origin + resolution * (ix, iy); start and goal attach to the first and
/// last nodes by straight connectors.
struct GridPath {
  std::vector<GridCell> cells;
  double resolution = 0.0;
  Point2 origin;
  Point2 start;
  Point2 goal;
  double lattice_cost = 0.0;  // sum of node-to-node steps

  Point2 node(GridCell c) const {
    return {origin.x + resolution * c.ix, origin.y + resolution * c.iy};
  }
  /// start, lattice nodes, goal (duplicates dropped).
  std::vector<Point2> points() const;
  double length() const;
};

/// Uniform samples over the free space of `cspace`.
std::vector<Point2> sample_free_points(const ArenaMap& cspace, int count, Rng& rng);

/// visibility[i][j] == segment_clear(nodes[i], nodes[j]); OpenMP-parallel.
std::vector<std::vector<bool>> visibility_matrix(std::span<const Point2> nodes,
                                                 const ArenaMap& cspace);
/// Single-threaded reference for visibility_matrix.
std::vector<std::vector<bool>> visibility_matrix_serial(std::span<const Point2> nodes,
                                                        const ArenaMap& cspace);

/// Fewest-intermediates, then shortest, path through a fixed sample pool.
/// Throws Error(NoPathFound).
Path plan_through_samples(Point2 start, Point2 goal, std::span<const Point2> samples,
                          const ArenaMap& cspace, int max_intermediates);

/// Sampling-based planner: draws sample_count points in free C-space and
/// links start, as few of them as possible, and goal with straight lines.
Path plan_path(Point2 start, Point2 goal, const ArenaMap& cspace, const PlanConfig& config,
               Rng& rng);

/// Grid A* baseline over an 8-connected lattice. Throws Error(NoPathFound).
GridPath astar_plan(Point2 start, Point2 goal, const ArenaMap& cspace, double resolution);

/// Interior waypoints where the heading changes (collinear runs merged).
int turn_count(std::span<const Point2> points);
inline int turn_count(const Path& path) { return turn_count(path.waypoints); }
inline int turn_count(const GridPath& path) { return turn_count(path.points()); }

void write_path_json(std::ostream& out, const Path& path);
Path read_path_json(std::istream& in);

}  // namespace sonarnav
