#include "sonarnav/planning.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include <json.hpp>

#include "sonarnav/error.hpp"

namespace sonarnav {

std::vector<Point2> sample_free_points(const ArenaMap& cspace, int count, Rng& rng) {
  const Point2 lo = cspace.min_corner();
  const Point2 hi = cspace.max_corner();
  std::vector<Point2> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  long budget = 10000L * std::max(count, 1) + 100000L;
  while (static_cast<int>(out.size()) < count) {
    if (budget-- == 0) throw Error(ErrorCode::EmptyFreeSpace, "could not sample C-space");
    const Point2 p{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
    if (point_in_free_space(p, cspace)) out.push_back(p);
  }
  return out;
}

std::vector<std::vector<bool>> visibility_matrix(std::span<const Point2> nodes,
                                                 const ArenaMap& cspace) {
  const auto n = static_cast<std::ptrdiff_t>(nodes.size());
  // vector<bool> packs bits, so rows are filled through a byte buffer.
  std::vector<unsigned char> flat(nodes.size() * nodes.size(), 0);
#pragma omp parallel for schedule(dynamic, 4)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    for (std::ptrdiff_t j = i + 1; j < n; ++j) {
      const bool clear = segment_clear(nodes[static_cast<std::size_t>(i)],
                                       nodes[static_cast<std::size_t>(j)], cspace);
      flat[static_cast<std::size_t>(i * n + j)] = clear;
      flat[static_cast<std::size_t>(j * n + i)] = clear;
    }
  }
  std::vector<std::vector<bool>> vis(nodes.size(), std::vector<bool>(nodes.size(), false));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = 0; j < nodes.size(); ++j) vis[i][j] = flat[i * nodes.size() + j] != 0;
  }
  return vis;
}

std::vector<std::vector<bool>> visibility_matrix_serial(std::span<const Point2> nodes,
                                                        const ArenaMap& cspace) {
  std::vector<std::vector<bool>> vis(nodes.size(), std::vector<bool>(nodes.size(), false));
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    for (std::size_t j = i + 1; j < nodes.size(); ++j) {
      vis[i][j] = vis[j][i] = segment_clear(nodes[i], nodes[j], cspace);
    }
  }
  return vis;
}

Path plan_through_samples(Point2 start, Point2 goal, std::span<const Point2> samples,
                          const ArenaMap& cspace, int max_intermediates) {
  // Node 0 is the start, 1..n the samples, n+1 the goal.
  const std::size_t n = samples.size();
  std::vector<Point2> nodes;
  nodes.reserve(n + 2);
  nodes.push_back(start);
  nodes.insert(nodes.end(), samples.begin(), samples.end());
  nodes.push_back(goal);
  const std::size_t g = n + 1;

  if (segment_clear(start, goal, cspace)) {
    return {{start, goal}, 0, distance(start, goal)};
  }
  if (max_intermediates < 1 || n == 0) {
    throw Error(ErrorCode::NoPathFound, "goal not visible and no intermediates allowed");
  }
  const auto vis = visibility_matrix(nodes, cspace);

  // best[v]: shortest start..v walk with exactly k intermediates ending at
  // sample v. At the smallest feasible k such walks are simple paths, since
  // a repeated node would leave a feasible walk with fewer intermediates.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<std::size_t>> parent;
  std::vector<double> best(n + 2, kInf);
  for (std::size_t v = 1; v <= n; ++v) {
    if (vis[0][v]) best[v] = distance(start, nodes[v]);
  }
  parent.push_back(std::vector<std::size_t>(n + 2, 0));

  for (int k = 1; k <= max_intermediates; ++k) {
    double total = kInf;
    std::size_t last = 0;
    for (std::size_t v = 1; v <= n; ++v) {
      if (best[v] == kInf || !vis[v][g]) continue;
      const double len = best[v] + distance(nodes[v], goal);
      if (len < total) {
        total = len;
        last = v;
      }
    }
    if (last != 0) {
      Path path;
      path.intermediates = k;
      std::vector<std::size_t> chain{last};
      for (int level = k - 1; level >= 1; --level) {
        chain.push_back(parent[static_cast<std::size_t>(level)][chain.back()]);
      }
      path.waypoints.push_back(start);
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) path.waypoints.push_back(nodes[*it]);
      path.waypoints.push_back(goal);
      path.length = path_length(path.waypoints);
      return path;
    }
    if (k == max_intermediates) break;

    std::vector<double> next(n + 2, kInf);
    std::vector<std::size_t> from(n + 2, 0);
    for (std::size_t v = 1; v <= n; ++v) {
      for (std::size_t u = 1; u <= n; ++u) {
        if (u == v || best[u] == kInf || !vis[u][v]) continue;
        const double len = best[u] + distance(nodes[u], nodes[v]);
        if (len < next[v]) {
          next[v] = len;
          from[v] = u;
        }
      }
    }
    best = std::move(next);
    parent.push_back(std::move(from));
  }
  throw Error(ErrorCode::NoPathFound, "no collision-free path with at most " +
                                          std::to_string(max_intermediates) + " intermediates");
}

Path plan_path(Point2 start, Point2 goal, const ArenaMap& cspace, const PlanConfig& config,
               Rng& rng) {
  if (config.sample_count < 1 || config.max_intermediates < 0) {
    throw Error(ErrorCode::InvalidArgument, "sample_count >= 1 and max_intermediates >= 0");
  }
  if (!point_in_free_space(start, cspace) || !point_in_free_space(goal, cspace)) {
    throw Error(ErrorCode::InvalidArgument, "start and goal must lie in free C-space");
  }
  // Samples are drawn up front even when the goal turns out to be visible,
  // so the random stream advances identically on every call.
  const auto samples = sample_free_points(cspace, config.sample_count, rng);
  return plan_through_samples(start, goal, samples, cspace, config.max_intermediates);
}

// ---------------------------------------------------------------------------
// Grid A*

std::vector<Point2> GridPath::points() const {
  std::vector<Point2> pts{start};
  auto push = [&](Point2 p) {
    if (distance(pts.back(), p) > kGeomEps) pts.push_back(p);
  };
  for (GridCell c : cells) push(node(c));
  push(goal);
  if (pts.size() == 1) pts.push_back(goal);
  return pts;
}

double GridPath::length() const { return path_length(points()); }

namespace {

struct Lattice {
  Point2 origin;
  double res = 0.0;
  int nx = 0;
  int ny = 0;
  std::vector<unsigned char> free;

  int index(GridCell c) const { return c.iy * nx + c.ix; }
  GridCell cell(int idx) const { return {idx % nx, idx / nx}; }
  bool inside(GridCell c) const { return c.ix >= 0 && c.iy >= 0 && c.ix < nx && c.iy < ny; }
  Point2 node(GridCell c) const { return {origin.x + res * c.ix, origin.y + res * c.iy}; }
};

std::optional<GridCell> attach(const Lattice& lat, Point2 p, const ArenaMap& cspace) {
  const int cx = static_cast<int>(std::lround((p.x - lat.origin.x) / lat.res));
  const int cy = static_cast<int>(std::lround((p.y - lat.origin.y) / lat.res));
  std::optional<GridCell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int dy = -1; dy <= 1; ++dy) {
    for (int dx = -1; dx <= 1; ++dx) {
      const GridCell c{cx + dx, cy + dy};
      if (!lat.inside(c) || !lat.free[static_cast<std::size_t>(lat.index(c))]) continue;
      const double d = distance(p, lat.node(c));
      if (d < best_d && (d <= kGeomEps || segment_clear(p, lat.node(c), cspace))) {
        best_d = d;
        best = c;
      }
    }
  }
  return best;
}

}  // namespace

GridPath astar_plan(Point2 start, Point2 goal, const ArenaMap& cspace, double resolution) {
  if (!(resolution > 0.0)) throw Error(ErrorCode::InvalidArgument, "resolution must be > 0");
  Lattice lat;
  lat.origin = cspace.min_corner();
  lat.res = resolution;
  lat.nx = static_cast<int>(std::floor((cspace.max_corner().x - lat.origin.x) / resolution)) + 1;
  lat.ny = static_cast<int>(std::floor((cspace.max_corner().y - lat.origin.y) / resolution)) + 1;
  lat.free.assign(static_cast<std::size_t>(lat.nx) * static_cast<std::size_t>(lat.ny), 0);
  for (int i = 0; i < lat.nx * lat.ny; ++i) {
    lat.free[static_cast<std::size_t>(i)] = point_in_free_space(lat.node(lat.cell(i)), cspace);
  }

  const auto s = attach(lat, start, cspace);
  const auto t = attach(lat, goal, cspace);
  if (!s || !t) throw Error(ErrorCode::NoPathFound, "start or goal has no free lattice node");

  const int total = lat.nx * lat.ny;
  const int target = lat.index(*t);
  const Point2 goal_node = lat.node(*t);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> gcost(static_cast<std::size_t>(total), kInf);
  std::vector<int> came_from(static_cast<std::size_t>(total), -1);
  std::vector<unsigned char> closed(static_cast<std::size_t>(total), 0);

  struct Entry {
    double f;
    double h;
    int idx;
    bool operator>(const Entry& o) const {
      if (f != o.f) return f > o.f;
      if (h != o.h) return h > o.h;
      return idx > o.idx;
    }
  };
  std::vector<Entry> open;
  auto push = [&](Entry e) {
    open.push_back(e);
    std::push_heap(open.begin(), open.end(), std::greater<>{});
  };

  const int source = lat.index(*s);
  gcost[static_cast<std::size_t>(source)] = 0.0;
  const double h0 = distance(lat.node(*s), goal_node);
  push({h0, h0, source});

  static constexpr int kDx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
  static constexpr int kDy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
  while (!open.empty()) {
    std::pop_heap(open.begin(), open.end(), std::greater<>{});
    const Entry cur = open.back();
    open.pop_back();
    const auto ci = static_cast<std::size_t>(cur.idx);
    if (closed[ci]) continue;
    closed[ci] = 1;
    if (cur.idx == target) break;

    const GridCell c = lat.cell(cur.idx);
    for (int k = 0; k < 8; ++k) {
      const GridCell nb{c.ix + kDx[k], c.iy + kDy[k]};
      if (!lat.inside(nb)) continue;
      const auto ni = static_cast<std::size_t>(lat.index(nb));
      if (!lat.free[ni] || closed[ni]) continue;
      if (!segment_clear(lat.node(c), lat.node(nb), cspace)) continue;
      const double step = (kDx[k] != 0 && kDy[k] != 0) ? std::sqrt(2.0) * resolution : resolution;
      const double g = gcost[ci] + step;
      if (g < gcost[ni]) {
        gcost[ni] = g;
        came_from[ni] = cur.idx;
        const double h = distance(lat.node(nb), goal_node);
        push({g + h, h, static_cast<int>(ni)});
      }
    }
  }

  if (gcost[static_cast<std::size_t>(target)] == kInf) {
    throw Error(ErrorCode::NoPathFound, "A* found no lattice path");
  }
  GridPath path;
  path.resolution = resolution;
  path.origin = lat.origin;
  path.start = start;
  path.goal = goal;
  path.lattice_cost = gcost[static_cast<std::size_t>(target)];
  for (int idx = target; idx != -1; idx = came_from[static_cast<std::size_t>(idx)]) {
    path.cells.push_back(lat.cell(idx));
  }
  std::reverse(path.cells.begin(), path.cells.end());
  return path;
}

int turn_count(std::span<const Point2> points) {
  int turns = 0;
  bool have_dir = false;
  double last = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const Point2 d = points[i] - points[i - 1];
    if (norm(d) <= kGeomEps) continue;
    const double heading = std::atan2(d.y, d.x);
    if (have_dir && std::abs(wrap_to_pi(heading - last)) > 1e-6) ++turns;
    last = heading;
    have_dir = true;
  }
  return turns;
}

void write_path_json(std::ostream& out, const Path& path) {
  nlohmann::ordered_json j;
  auto pts = nlohmann::ordered_json::array();
  for (Point2 p : path.waypoints) pts.push_back({p.x, p.y});
  j["waypoints"] = pts;
  j["intermediates"] = path.intermediates;
  j["length"] = path.length;
  j["turns"] = turn_count(path);
  out << j.dump(2) << '\n';
}

Path read_path_json(std::istream& in) {
  try {
    const auto j = nlohmann::json::parse(in);
    Path path;
    for (const auto& p : j.at("waypoints")) {
      path.waypoints.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    path.intermediates = static_cast<int>(path.waypoints.size()) - 2;
    path.length = path_length(path.waypoints);
    return path;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("path JSON: ") + e.what());
  }
}

}  // namespace sonarnav
