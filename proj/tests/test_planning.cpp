#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>
#include <queue>
#include <sstream>

#include "sonarnav/error.hpp"
#include "sonarnav/planning.hpp"
#include "support.hpp"

using namespace sonarnav;
using namespace sonarnav::testing;
using doctest::Approx;

namespace {

/// 100x100 room with a slab from (55,40) to (85,55).
ArenaMap occluded_map() {
  return ArenaMap({{0, 0}, {100, 0}, {100, 100}, {0, 100}},
                  {{{55, 40}, {85, 40}, {85, 55}, {55, 55}}});
}

/// Dijkstra over the same 8-connected lattice A* searches.
double dijkstra_cost(const GridPath& path, const ArenaMap& cspace) {
  const double res = path.resolution;
  const Point2 o = path.origin;
  const int nx = static_cast<int>(std::floor((cspace.max_corner().x - o.x) / res)) + 1;
  const int ny = static_cast<int>(std::floor((cspace.max_corner().y - o.y) / res)) + 1;
  auto at = [&](int ix, int iy) { return Point2{o.x + res * ix, o.y + res * iy}; };
  auto id = [&](int ix, int iy) { return iy * nx + ix; };
  std::vector<double> dist(static_cast<std::size_t>(nx * ny), std::numeric_limits<double>::infinity());
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  const GridCell src = path.cells.front(), dst = path.cells.back();
  dist[static_cast<std::size_t>(id(src.ix, src.iy))] = 0;
  pq.push({0.0, id(src.ix, src.iy)});
  while (!pq.empty()) {
    const auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[static_cast<std::size_t>(u)]) continue;
    const int ux = u % nx, uy = u / nx;
    if (ux == dst.ix && uy == dst.iy) return d;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        if (dx == 0 && dy == 0) continue;
        const int vx = ux + dx, vy = uy + dy;
        if (vx < 0 || vy < 0 || vx >= nx || vy >= ny) continue;
        if (!point_in_free_space(at(vx, vy), cspace)) continue;
        if (!segment_clear(at(ux, uy), at(vx, vy), cspace)) continue;
        const double nd = d + res * std::hypot(dx, dy);
        if (nd < dist[static_cast<std::size_t>(id(vx, vy))]) {
          dist[static_cast<std::size_t>(id(vx, vy))] = nd;
          pq.push({nd, id(vx, vy)});
        }
      }
    }
  }
  return std::numeric_limits<double>::infinity();
}

/// Heading changes walked point by point, skipping zero-length hops.
int oracle_turns(const std::vector<Point2>& pts) {
  std::vector<double> headings;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const double dx = pts[i].x - pts[i - 1].x, dy = pts[i].y - pts[i - 1].y;
    if (std::hypot(dx, dy) < 1e-12) continue;
    headings.push_back(std::atan2(dy, dx));
  }
  int turns = 0;
  for (std::size_t i = 1; i < headings.size(); ++i) {
    turns += std::abs(wrap_to_pi(headings[i] - headings[i - 1])) > 1e-6;
  }
  return turns;
}

ArenaMap random_obstacle_map(Rng& rng) {
  std::vector<Polygon> obs;
  for (int k = 0; k < 4; ++k) {
    const double x = rng.uniform(15, 70), y = rng.uniform(15, 70);
    const double w = rng.uniform(5, 20), h = rng.uniform(5, 20);
    const Polygon box{{x, y}, {x + w, y}, {x + w, y + h}, {x, y + h}};
    bool overlap = false;
    for (const Polygon& o : obs) {
      overlap |= !(x + w + 1 < o[0].x || o[1].x + 1 < x || y + h + 1 < o[0].y || o[2].y + 1 < y);
    }
    if (!overlap) obs.push_back(box);
  }
  return ArenaMap({{0, 0}, {100, 0}, {100, 100}, {0, 100}}, obs);
}

}  // namespace

TEST_CASE("plan_path examples") {
  PlanConfig cfg;
  Rng rng(1);
  SUBCASE("visible goal is a straight segment") {
    const Path p = plan_path({20, 20}, {80, 80}, square_map(), cfg, rng);
    CHECK(p.intermediates == 0);
    REQUIRE(p.waypoints.size() == 2);
    CHECK(p.length == Approx(84.8528).epsilon(1e-5));
  }
  SUBCASE("occluded goal needs one intermediate") {
    const ArenaMap c = occluded_map();
    REQUIRE_FALSE(segment_clear({50, 10}, {90, 90}, c));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng r(seed);
      const Path p = plan_path({50, 10}, {90, 90}, c, cfg, r);
      CHECK(p.intermediates == 1);
      CHECK(p.waypoints.size() == 3);
      CHECK(p.length >= std::hypot(40.0, 80.0));
      CHECK(p.length == Approx(path_length(p.waypoints)));
    }
  }
}

TEST_CASE("plan_through_samples matches exhaustive enumeration") {
  Rng rng(2);
  int checked_one = 0, checked_two = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const ArenaMap c = trial % 2 ? pillar_map() : l_map();
    const Point2 s = oracle_sample_free(c, rng);
    const Point2 g = oracle_sample_free(c, rng);
    const std::vector<Point2> pool = sample_free_points(c, 30, rng);
    const Best want = enumerate_upto_two(s, g, pool, c);
    if (want.intermediates < 0) {
      CHECK_THROWS_AS(plan_through_samples(s, g, pool, c, 2), Error);
      continue;
    }
    const Path got = plan_through_samples(s, g, pool, c, 4);
    CHECK(got.intermediates == want.intermediates);
    CHECK(got.length == Approx(want.length).epsilon(1e-12));
    CHECK(got.waypoints.front() == s);
    CHECK(got.waypoints.back() == g);
    for (std::size_t k = 0; k + 1 < got.waypoints.size(); ++k) {
      CHECK(segment_clear(got.waypoints[k], got.waypoints[k + 1], c));
    }
    checked_one += want.intermediates == 1;
    checked_two += want.intermediates == 2;
  }
  CHECK(checked_one > 5);
  CHECK(checked_two + checked_one > 10);
}

TEST_CASE("plan_path properties") {
  PlanConfig cfg;
  SUBCASE("deterministic") {
    Rng a(9), b(9);
    const Path p = plan_path({10, 10}, {90, 90}, pillar_map(), cfg, a);
    const Path q = plan_path({10, 10}, {90, 90}, pillar_map(), cfg, b);
    CHECK(p.waypoints == q.waypoints);
  }
  SUBCASE("straight segments are never beaten by the grid") {
    Rng rng(3);
    const ArenaMap c = square_map();
    for (int k = 0; k < 50; ++k) {
      const Point2 s = oracle_sample_free(c, rng), g = oracle_sample_free(c, rng);
      const Path p = plan_path(s, g, c, cfg, rng);
      REQUIRE(p.intermediates == 0);
      CHECK(p.length <= astar_plan(s, g, c, 5.0).length() + 1e-9);
    }
  }
  SUBCASE("bad inputs") {
    Rng rng(4);
    CHECK_THROWS_AS(plan_path({-5, 5}, {50, 50}, square_map(), cfg, rng), Error);
    PlanConfig zero = cfg;
    zero.sample_count = 0;
    CHECK_THROWS_AS(plan_path({5, 5}, {50, 50}, square_map(), zero, rng), Error);
  }
  SUBCASE("unreachable goal") {
    Rng rng(5);
    const ArenaMap split({{0, 0}, {100, 0}, {100, 45}, {0, 45}});
    CHECK_THROWS_AS(plan_path({10, 10}, {10, 60}, split, cfg, rng), Error);
  }
}

TEST_CASE("visibility matrix") {
  Rng rng(6);
  const ArenaMap c = pillar_map();
  const std::vector<Point2> pts = sample_free_points(c, 40, rng);
  for (const Point2& p : pts) CHECK(oracle_free(p, c));
  const auto par = visibility_matrix(pts, c);
  const auto ser = visibility_matrix_serial(pts, c);
  CHECK(par == ser);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts.size(); ++j) CHECK(par[i][j] == par[j][i]);
  }
}

TEST_CASE("astar_plan") {
  SUBCASE("pure diagonal") {
    const GridPath p = astar_plan({20, 20}, {80, 80}, square_map(), 10.0);
    CHECK(p.cells.size() == 7);
    CHECK(p.lattice_cost == Approx(60 * std::sqrt(2.0)));
    CHECK(p.length() == Approx(84.8528).epsilon(1e-5));
    CHECK(turn_count(p) == 0);
  }
  SUBCASE("blocked corridor") {
    const ArenaMap c({{0, 0}, {100, 0}, {100, 100}, {0, 100}},
                     {{{1, 45}, {99, 45}, {99, 55}, {1, 55}}});
    // The 1 cm gaps at the walls are narrower than the lattice.
    CHECK_THROWS_AS(astar_plan({50, 20}, {50, 80}, c, 5.0), Error);
  }
  SUBCASE("cells are 8-adjacent and free") {
    const GridPath p = astar_plan({10, 10}, {90, 90}, pillar_map(), 5.0);
    for (std::size_t k = 0; k + 1 < p.cells.size(); ++k) {
      CHECK(std::abs(p.cells[k].ix - p.cells[k + 1].ix) <= 1);
      CHECK(std::abs(p.cells[k].iy - p.cells[k + 1].iy) <= 1);
      CHECK_FALSE(p.cells[k] == p.cells[k + 1]);
    }
    for (const GridCell& cell : p.cells) CHECK(oracle_free(p.node(cell), pillar_map()));
  }
  SUBCASE("cost equals Dijkstra on random maps") {
    Rng rng(7);
    for (int m = 0; m < 20; ++m) {
      const ArenaMap c = random_obstacle_map(rng);
      const Point2 s = oracle_sample_free(c, rng), g = oracle_sample_free(c, rng);
      GridPath p;
      try {
        p = astar_plan(s, g, c, 5.0);
      } catch (const Error&) {
        continue;
      }
      CHECK(p.lattice_cost == Approx(dijkstra_cost(p, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("turn_count") {
  const std::vector<Point2> straight{{0, 0}, {10, 0}};
  CHECK(turn_count(straight) == 0);
  const std::vector<Point2> corner{{0, 0}, {10, 0}, {10, 10}};
  CHECK(turn_count(corner) == 1);
  const std::vector<Point2> collinear{{0, 0}, {5, 0}, {10, 0}, {10, 10}};
  CHECK(turn_count(collinear) == 1);
  const std::vector<Point2> stairs{{0, 0}, {1, 1}, {2, 1}, {3, 2}, {4, 2}, {5, 3}};
  CHECK(turn_count(stairs) == 4);
  CHECK(turn_count(stairs) == oracle_turns(stairs));

  Rng rng(8);
  for (int k = 0; k < 200; ++k) {
    std::vector<Point2> walk{{0, 0}};
    for (int s = 0; s < 12; ++s) {
      const int dx = static_cast<int>(rng.uniform(0, 3)) - 1;
      const int dy = static_cast<int>(rng.uniform(0, 3)) - 1;
      if (dx == 0 && dy == 0) continue;
      walk.push_back({walk.back().x + dx, walk.back().y + dy});
    }
    if (walk.size() < 2) continue;
    CHECK(turn_count(walk) == oracle_turns(walk));
  }
}

TEST_CASE("path JSON round trip") {
  Rng rng(10);
  const Path p = plan_path({50, 10}, {90, 90}, occluded_map(), PlanConfig{}, rng);
  std::stringstream buf;
  write_path_json(buf, p);
  const Path back = read_path_json(buf);
  CHECK(back.intermediates == p.intermediates);
  REQUIRE(back.waypoints.size() == p.waypoints.size());
  for (std::size_t k = 0; k < p.waypoints.size(); ++k) {
    CHECK(back.waypoints[k].x == Approx(p.waypoints[k].x));
    CHECK(back.waypoints[k].y == Approx(p.waypoints[k].y));
  }
  CHECK(back.length == Approx(p.length));
  std::stringstream bad("{\"waypoints\": 3}");
  CHECK_THROWS_AS(read_path_json(bad), Error);
}
