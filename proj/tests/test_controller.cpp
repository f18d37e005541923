#include <doctest.h>

#include <cmath>
#include <numbers>

#include "sonarnav/controller.hpp"
#include "sonarnav/error.hpp"
#include "sonarnav/io.hpp"
#include "support.hpp"

using namespace sonarnav;
using namespace sonarnav::testing;
using doctest::Approx;

namespace {

/// Records commands and answers from a fixed pose; never moves.
class ScriptedRobot final : public RobotInterface {
 public:
  Scan scan() override { return {}; }
  void turn(double dtheta) override { turns.push_back(dtheta); }
  MoveOutcome move(double d) override {
    moves.push_back(d);
    return {d, false};
  }
  bool turnback() override { return false; }
  double odometer() const override { return 0.0; }

  std::vector<double> turns;
  std::vector<double> moves;
};

/// Forwards to a simulated robot and counts every call made through the seam.
class AuditRobot final : public RobotInterface {
 public:
  explicit AuditRobot(SimulatedRobot& inner) : inner_(inner) {}
  Scan scan() override {
    ++scans;
    return inner_.scan();
  }
  void turn(double dtheta) override {
    ++turns;
    inner_.turn(dtheta);
  }
  MoveOutcome move(double d) override {
    ++moves;
    return inner_.move(d);
  }
  bool turnback() override {
    ++turnbacks;
    return inner_.turnback();
  }
  double odometer() const override { return inner_.odometer(); }

  int scans = 0, turns = 0, moves = 0, turnbacks = 0;

 private:
  SimulatedRobot& inner_;
};

MissionConfig noiseless() { return load_config(source_path("configs/noiseless.conf")).mission; }
MissionConfig paper() { return load_config(source_path("configs/paper.conf")).mission; }
NamedMap bundled(const std::string& name) {
  NamedMap nm = load_map(source_path("maps/" + name + ".json"));
  nm.name = name;
  return nm;
}

int count_events(const std::vector<TraceRow>& rows, const std::string& what) {
  int n = 0;
  for (const TraceRow& r : rows) n += r.command == "event" && r.event == what;
  return n;
}

}  // namespace

TEST_CASE("waypoint_follow") {
  ScriptedRobot robot;
  const FollowResult r = waypoint_follow(robot, Pose(0, 0, 0), {3, 4});
  REQUIRE(robot.turns.size() == 1);
  REQUIRE(robot.moves.size() == 1);
  CHECK(robot.turns[0] == Approx(std::atan2(4.0, 3.0)));
  CHECK(robot.moves[0] == Approx(5.0));
  CHECK(r.pose.position.x == Approx(3.0));
  CHECK(r.pose.position.y == Approx(4.0));

  SUBCASE("turns take the short way round") {
    ScriptedRobot b;
    waypoint_follow(b, Pose(0, 0, std::numbers::pi / 2), {-1, -1e-9});
    CHECK(std::abs(b.turns[0]) <= std::numbers::pi);
    CHECK(b.turns[0] == Approx(std::numbers::pi / 2));
  }
  SUBCASE("inverse kinematics oracle") {
    Rng rng(1);
    for (int k = 0; k < 500; ++k) {
      ScriptedRobot s;
      const Pose from(rng.uniform(0, 100), rng.uniform(0, 100), rng.uniform(0, kTwoPi));
      const Point2 to{rng.uniform(0, 100), rng.uniform(0, 100)};
      const FollowResult f = waypoint_follow(s, from, to);
      // Replaying the issued commands exactly must land on the waypoint.
      Pose p = apply_motion(from, MotionCommand::turn(s.turns[0]));
      p = apply_motion(p, MotionCommand::move(s.moves[0]));
      CHECK(p.position.x == Approx(to.x));
      CHECK(p.position.y == Approx(to.y));
      CHECK(f.pose.position.x == Approx(p.position.x));
      CHECK(s.moves[0] == Approx(distance(from.position, to)));
    }
  }
}

TEST_CASE("noiseless missions land on the goal") {
  SUBCASE("empty square, goal at the centre") {
    // The room looks the same after any quarter turn about its centre, so the
    // filter may settle on a rotated twin of the true pose; from every twin the
    // plan still ends at the centre.
    MissionConfig cfg = noiseless();
    cfg.goal = {50, 50};
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      cfg.seed = seed;
      const Pose start = batch_start_pose(square_map(), cfg, seed);
      const MissionReport r = run_mission(square_map(), start, cfg);
      CHECK(r.reached);
      CHECK(r.final_error < 0.1);
      CHECK(r.replans == 0);
      CHECK(r.collisions_detected == 0);
    }
  }
  SUBCASE("bundled map A") {
    const NamedMap a = bundled("map_a");
    MissionConfig cfg = noiseless();
    cfg.goal = a.goal;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      cfg.seed = seed;
      const MissionReport r = run_mission(a.map, batch_start_pose(a.map, cfg, seed), cfg);
      CHECK(r.reached);
      CHECK(r.final_error < 0.1);
      CHECK(r.replans == 0);
      CHECK(r.unrecovered_collisions == 0);
    }
  }
}

TEST_CASE("start facing a nearby wall") {
  const NamedMap a = bundled("map_a");
  MissionConfig cfg = paper();
  cfg.goal = a.goal;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    cfg.seed = seed;
    MissionArtifacts art;
    const MissionReport r = run_mission(a.map, Pose(60, 8, -std::numbers::pi / 2), cfg, &art);
    CHECK(count_events(art.trace.rows(), "turnback") >= 1);
    CHECK(r.collisions_detected >= 1);
    CHECK(r.reached);
    CHECK(r.unrecovered_collisions == 0);
    CHECK(r.final_error < 5.0);
  }
}

TEST_CASE("every replan follows a triggering event") {
  // Heavy heading drift pushes moves into walls and forces replans.
  MissionConfig cfg = paper();
  cfg.noise.drift_sigma = 0.4;
  cfg.noise.move_sigma = 3.0;
  const std::vector<NamedMap> maps{bundled("map_b"), bundled("map_c")};
  const BatchSummary s = run_batch(maps, cfg, {0, 1, 2, 3, 4, 5, 6, 7}, true);
  int replans = 0;
  for (const BatchRun& run : s.runs) {
    bool triggered = false;
    for (const TraceRow& row : run.trace) {
      if (row.command != "event") continue;
      if (row.event == "turnback" || row.event == "near_wall" || row.event == "no_path") {
        triggered = true;
      } else if (row.event == "replan") {
        CHECK(triggered);
        triggered = false;
        ++replans;
      }
    }
    CHECK(run.report.replans == count_events(run.trace, "replan"));
    CHECK(run.report.unrecovered_collisions == 0);
  }
  CHECK(replans > 0);
}

TEST_CASE("controller sees only the robot interface") {
  const NamedMap a = bundled("map_a");
  MissionConfig cfg = paper();
  cfg.goal = a.goal;
  cfg.seed = 4;
  const Pose start = batch_start_pose(a.map, cfg, cfg.seed);

  SimulatedRobot sim(a.map, start, cfg.plant(), cfg.seed);
  AuditRobot audit(sim);
  MissionTrace log;
  const MissionReport via_shim = execute_mission(audit, a.map, cfg, log);
  const MissionReport via_harness = run_mission(a.map, start, cfg);

  CHECK(audit.scans >= 2);
  CHECK(audit.moves >= 1);
  CHECK(audit.turnbacks >= 1);
  CHECK(via_shim.reached == via_harness.reached);
  CHECK(via_shim.replans == via_harness.replans);
  CHECK(distance(sim.world().truth.position, a.goal) == via_harness.final_error);
}

TEST_CASE("run_batch") {
  const NamedMap a = bundled("map_a");
  MissionConfig cfg = paper();

  SUBCASE("one seed equals the single run") {
    const BatchSummary s = run_batch({a}, cfg, {3});
    MissionConfig one = cfg;
    one.seed = 3;
    one.goal = a.goal;
    const MissionReport r = run_mission(a.map, batch_start_pose(a.map, one, 3), one);
    REQUIRE(s.maps.size() == 1);
    CHECK(s.maps[0].runs == 1);
    CHECK(s.maps[0].mean_final_error == r.final_error);
    CHECK(s.maps[0].median_final_error == r.final_error);
    CHECK(s.maps[0].max_final_error == r.final_error);
    CHECK(s.maps[0].mean_path_length == r.path_length_executed);
    CHECK(s.maps[0].successes == (r.reached ? 1 : 0));
  }
  SUBCASE("parallel equals serial, and reruns repeat") {
    const std::vector<std::uint64_t> seeds{5, 1, 9, 1};
    const BatchSummary p = run_batch({a}, cfg, seeds, false, true);
    const BatchSummary q = run_batch({a}, cfg, seeds, false, false);
    REQUIRE(p.runs.size() == 3);  // duplicates dropped, sorted
    CHECK(p.runs[0].seed == 1);
    for (std::size_t k = 0; k < p.runs.size(); ++k) {
      CHECK(p.runs[k].report.final_error == q.runs[k].report.final_error);
      CHECK(p.runs[k].report.sim_steps == q.runs[k].report.sim_steps);
      CHECK(p.runs[k].start.position.x == q.runs[k].start.position.x);
    }
  }
  SUBCASE("aggregates match the runs") {
    const BatchSummary s = run_batch({a}, cfg, {0, 1, 2, 3, 4, 5});
    double sum = 0, worst = 0;
    int ok = 0;
    for (const BatchRun& r : s.runs) {
      sum += r.report.final_error;
      worst = std::max(worst, r.report.final_error);
      ok += r.report.reached;
    }
    CHECK(s.maps[0].mean_final_error == Approx(sum / 6));
    CHECK(s.maps[0].max_final_error == worst);
    CHECK(s.maps[0].successes == ok);
    CHECK(s.maps[0].success_rate == Approx(ok / 6.0));
  }
  SUBCASE("empty seed list") {
    try {
      run_batch({a}, cfg, {});
      FAIL("expected InvalidArgument");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidArgument);
    }
  }
}

TEST_CASE("summarize") {
  MissionReport r1, r2, r3;
  r1.final_error = 1.0;
  r2.final_error = 5.0;
  r3.final_error = 2.0;
  r1.reached = r3.reached = true;
  r2.collisions_detected = 2;
  const MapSummary s = summarize("m", {r1, r2, r3});
  CHECK(s.median_final_error == 2.0);
  CHECK(s.mean_final_error == Approx(8.0 / 3));
  CHECK(s.max_final_error == 5.0);
  CHECK(s.successes == 2);
  CHECK(s.total_collisions == 2);
  CHECK(s.collisions_flagged);
  CHECK(summarize("m", {r1, r2}).median_final_error == 3.0);
}
