#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sonarnav/geometry.hpp"
#include "sonarnav/localization.hpp"
#include "sonarnav/planning.hpp"
#include "sonarnav/plant.hpp"
#include "sonarnav/sensor.hpp"

namespace sonarnav {

struct MissionConfig {
  FilterConfig filter;
  PlanConfig plan;
  SensorModel sensor;
  double scan_resolution = kDegree;
  MotionNoise noise;
  SafetyConfig safety;
  Point2 goal;
  int max_replans = 5;
  std::uint64_t seed = 0;

  PlantConfig plant() const { return {sensor, scan_resolution, noise, safety}; }
};

struct MissionReport {
  bool reached = false;
  double final_error = 0.0;           // truth distance to goal, cm
  double path_length_executed = 0.0;  // odometer, cm
  double path_length_planned = 0.0;   // first plan, cm
  int collisions_detected = 0;        // near-wall stops and turnback events
  int replans = 0;
  int localization_iterations = 0;
  long sim_steps = 0;
  int unrecovered_collisions = 0;     // truth pose left free space
  double max_weight_sum_error = 0.0;  // worst |sum w - 1| over all generations
  std::string failure;                // empty when the mission completed
};

/// Optional byproducts for rendering and traces.
struct MissionArtifacts {
  MissionTrace trace;
  ParticleSet last_particles;
  Scan last_scan;
  Pose last_estimate;
  std::vector<Path> plans;
  /// Counters at the moment a mission failed.
  MissionReport partial;
};

struct FollowResult {
  Pose pose;  // dead-reckoned from the commanded turn and move
  double turn = 0.0;
  double distance = 0.0;
  MoveOutcome outcome;
};

/// One turn to face `waypoint`, then one straight move to it.
FollowResult waypoint_follow(RobotInterface& robot, const Pose& dead_reckoned, Point2 waypoint);

/// Nearest point of free C-space reachable from `p` by a straight clear move,
/// for estimates that fall inside the C-space margin.
std::optional<Point2> escape_point(Point2 p, const ArenaMap& map, const ArenaMap& cspace);

/// plan_path, retrying with fresh samples and doubled sample_count.
Path plan_with_retries(Point2 start, Point2 goal, const ArenaMap& cspace, PlanConfig config,
                       Rng& rng);

/// Closed-loop mission against any robot: localise, plan, follow, re-localise
/// and re-plan on safety events, final re-localisation and correction at the
/// goal. Sees only the robot interface. Throws Error(MissionFailed).
MissionReport execute_mission(RobotInterface& robot, const ArenaMap& map,
                              const MissionConfig& config, MissionLog& log,
                              MissionArtifacts* artifacts = nullptr);

/// Simulation harness around execute_mission: builds the hidden world,
/// runs the controller, and scores the outcome against ground truth.
/// Mission failures are recorded in the report, not thrown.
MissionReport run_mission(const ArenaMap& map, const Pose& start_truth,
                          const MissionConfig& config, MissionArtifacts* artifacts = nullptr);

struct NamedMap {
  std::string name;
  ArenaMap map;
  Point2 goal;
};

/// Deterministic random start pose for a batch run, in free C-space.
Pose batch_start_pose(const ArenaMap& map, const MissionConfig& config, std::uint64_t seed);

struct BatchRun {
  std::string map;
  std::uint64_t seed = 0;
  Pose start;
  MissionReport report;
  std::vector<TraceRow> trace;
};

struct MapSummary {
  std::string map;
  int runs = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_final_error = 0.0;
  double median_final_error = 0.0;
  double max_final_error = 0.0;
  double mean_path_length = 0.0;
  int total_collisions = 0;
  int unrecovered_collisions = 0;
  bool collisions_flagged = false;
};

struct BatchSummary {
  std::vector<MapSummary> maps;
  std::vector<BatchRun> runs;  // sorted by (map order, seed)
};

MapSummary summarize(const std::string& map, const std::vector<MissionReport>& reports);

/// Runs every (map, seed) mission; OpenMP-parallel across runs unless
/// `parallel` is false. Output does not depend on thread count.
BatchSummary run_batch(const std::vector<NamedMap>& maps, const MissionConfig& config,
                       const std::vector<std::uint64_t>& seeds, bool keep_traces = false,
                       bool parallel = true);

}  // namespace sonarnav
