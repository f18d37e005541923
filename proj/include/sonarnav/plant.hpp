#pragma once

#include <string>
#include <vector>

#include "sonarnav/geometry.hpp"
#include "sonarnav/rng.hpp"
#include "sonarnav/sensor.hpp"

namespace sonarnav {

/// Actuation noise std-devs, applied once per command.
struct MotionNoise {
  double move_sigma = 0.1;    // cm
  double turn_sigma = 0.005;  // rad
  double drift_sigma = 0.0;   // rad of heading drift per move
};

struct MotionCommand {
  enum class Kind { Move, Turn, Backup };

  Kind kind = Kind::Move;
  double value = 0.0;  // cm for Move/Backup (>= 0), rad for Turn

  static MotionCommand move(double d) { return {Kind::Move, d}; }
  static MotionCommand turn(double dtheta) { return {Kind::Turn, dtheta}; }
  static MotionCommand backup(double d) { return {Kind::Backup, d}; }

  MotionCommand inverse() const {
    switch (kind) {
      case Kind::Move: return backup(value);
      case Kind::Backup: return move(value);
      case Kind::Turn: break;
    }
    return turn(-value);
  }
};

/// Applies a command to a pose exactly (no noise, no walls).
Pose apply_motion(const Pose& pose, const MotionCommand& cmd);

struct SafetyConfig {
  double stop_threshold = 10.0;  // cm
  double backup_distance = 5.0;  // cm
};

struct MoveOutcome {
  double moved = 0.0;
  bool near_wall = false;
};

struct WorldState {
  Pose truth;
  ArenaMap map;
  bool collision_flag = false;  // truth left free space; never expected
  double odometer = 0.0;
  double turn_odometer = 0.0;
  long sim_steps = 0;
};

/// Forward clearance along the heading.
double forward_clearance(const WorldState& world);
/// Minimum clearance over the forward +-90 degree arc, sampled every degree.
double arc_clearance(const WorldState& world);

MoveOutcome move(WorldState& world, double d, const MotionNoise& noise,
                 const SafetyConfig& safety, Rng& rng);
/// Returns the angle actually turned.
double turn(WorldState& world, double dtheta, const MotionNoise& noise, Rng& rng);
/// Backs away from a wall closer than the stop threshold; returns whether it fired.
bool turnback(WorldState& world, const SafetyConfig& safety);
Scan ultrascan(WorldState& world, const SensorModel& model, double resolution, Rng& rng);

/// What a controller may do with a robot. Ground truth never crosses this seam.
class RobotInterface {
 public:
  virtual ~RobotInterface() = default;

  virtual Scan scan() = 0;
  virtual void turn(double dtheta) = 0;
  virtual MoveOutcome move(double d) = 0;
  virtual bool turnback() = 0;
  /// Total distance driven so far, as reported by wheel odometry.
  virtual double odometer() const = 0;
};

/// Side channel for the controller to annotate the trace; write-only.
class MissionLog {
 public:
  virtual ~MissionLog() = default;
  virtual void set_estimate(const Pose& estimate) = 0;
  virtual void event(const std::string& what) = 0;
};

struct TraceRow {
  long step = 0;
  std::string command;
  double commanded = 0.0;
  double realized = 0.0;
  Pose truth;
  Pose estimate;
  std::string event;
};

/// Per-command record kept by the harness. Holds ground truth, so only the
/// simulation side writes truth into it.
class MissionTrace : public MissionLog {
 public:
  void set_estimate(const Pose& estimate) override { estimate_ = estimate; }
  void event(const std::string& what) override;
  void record(const std::string& command, double commanded, double realized, const Pose& truth);

  const std::vector<TraceRow>& rows() const { return rows_; }

 private:
  std::vector<TraceRow> rows_;
  Pose estimate_;
  Pose last_truth_;
};

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows);

struct PlantConfig {
  SensorModel sensor;
  double scan_resolution = kDegree;
  MotionNoise noise;
  SafetyConfig safety;
};

/// Simulated robot over a hidden WorldState.
class SimulatedRobot final : public RobotInterface {
 public:
  SimulatedRobot(ArenaMap map, const Pose& start, const PlantConfig& config, std::uint64_t seed,
                 MissionTrace* trace = nullptr);

  Scan scan() override;
  void turn(double dtheta) override;
  MoveOutcome move(double d) override;
  bool turnback() override;
  double odometer() const override { return world_.odometer; }

  /// Harness-only view of the hidden state.
  const WorldState& world() const { return world_; }

 private:
  void check_free();

  WorldState world_;
  PlantConfig config_;
  Rng motion_rng_;
  Rng sensor_rng_;
  MissionTrace* trace_;
};

}  // namespace sonarnav
