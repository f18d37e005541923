#include "sonarnav/plant.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace sonarnav {

namespace {

constexpr double kSubStep = 1.0;  // cm

void advance(Pose& pose, double d) {
  pose.position = pose.position + d * Point2{std::cos(pose.heading), std::sin(pose.heading)};
}

}  // namespace

Pose apply_motion(const Pose& pose, const MotionCommand& cmd) {
  Pose out = pose;
  switch (cmd.kind) {
    case MotionCommand::Kind::Move: advance(out, cmd.value); break;
    case MotionCommand::Kind::Backup: advance(out, -cmd.value); break;
    case MotionCommand::Kind::Turn: out.heading = normalize_angle(out.heading + cmd.value); break;
  }
  return out;
}

double forward_clearance(const WorldState& world) {
  return ray_hit_unchecked(world.truth.position, world.truth.heading, world.map).distance;
}

double arc_clearance(const WorldState& world) {
  double best = std::numeric_limits<double>::infinity();
  for (int deg = -90; deg <= 90; ++deg) {
    const double a = world.truth.heading + deg * kDegree;
    best = std::min(best, ray_hit_unchecked(world.truth.position, a, world.map).distance);
  }
  return best;
}

MoveOutcome move(WorldState& world, double d, const MotionNoise& noise,
                 const SafetyConfig& safety, Rng& rng) {
  const double target = std::max(0.0, d + rng.normal(noise.move_sigma));
  MoveOutcome out;
  double remaining = target;
  while (remaining > 0.0) {
    const double step = std::min(kSubStep, remaining);
    const double clear = forward_clearance(world);
    ++world.sim_steps;
    if (clear - step < safety.stop_threshold) {
      const double allowed = std::clamp(clear - safety.stop_threshold, 0.0, step);
      advance(world.truth, allowed);
      out.moved += allowed;
      out.near_wall = true;
      break;
    }
    advance(world.truth, step);
    out.moved += step;
    remaining -= step;
  }
  world.truth.heading = normalize_angle(world.truth.heading + rng.normal(noise.drift_sigma));
  world.odometer += out.moved;
  return out;
}

double turn(WorldState& world, double dtheta, const MotionNoise& noise, Rng& rng) {
  const double realized = dtheta + rng.normal(noise.turn_sigma);
  world.truth.heading = normalize_angle(world.truth.heading + realized);
  world.turn_odometer += std::abs(realized);
  ++world.sim_steps;
  return realized;
}

bool turnback(WorldState& world, const SafetyConfig& safety) {
  ++world.sim_steps;
  if (arc_clearance(world) >= safety.stop_threshold) return false;

  const double ahead = forward_clearance(world);
  const double behind =
      ray_hit_unchecked(world.truth.position, world.truth.heading + std::numbers::pi, world.map)
          .distance;
  double backup = std::max(safety.backup_distance, safety.stop_threshold - ahead);
  backup = std::clamp(backup, 0.0, std::max(0.0, behind - safety.stop_threshold / 2.0));
  advance(world.truth, -backup);
  world.odometer += backup;
  return true;
}

Scan ultrascan(WorldState& world, const SensorModel& model, double resolution, Rng& rng) {
  ++world.sim_steps;
  const Scan ideal = ideal_scan(world.truth, world.map, resolution, model.max_range);
  return corrupt_scan(ideal, world.truth, world.map, model, rng);
}

// ---------------------------------------------------------------------------

void MissionTrace::event(const std::string& what) {
  TraceRow row;
  row.step = static_cast<long>(rows_.size());
  row.command = "event";
  row.truth = last_truth_;
  row.estimate = estimate_;
  row.event = what;
  rows_.push_back(std::move(row));
}

void MissionTrace::record(const std::string& command, double commanded, double realized,
                          const Pose& truth) {
  last_truth_ = truth;
  TraceRow row;
  row.step = static_cast<long>(rows_.size());
  row.command = command;
  row.commanded = commanded;
  row.realized = realized;
  row.truth = truth;
  row.estimate = estimate_;
  rows_.push_back(std::move(row));
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRow>& rows) {
  out << "step,command,commanded,realized,truth_x,truth_y,truth_theta,est_x,est_y,est_theta,"
         "event\n";
  char buf[256];
  for (const TraceRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%ld,%s,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,", r.step,
                  r.command.c_str(), r.commanded, r.realized, r.truth.position.x,
                  r.truth.position.y, r.truth.heading, r.estimate.position.x,
                  r.estimate.position.y, r.estimate.heading);
    out << buf << r.event << '\n';
  }
}

// ---------------------------------------------------------------------------

SimulatedRobot::SimulatedRobot(ArenaMap map, const Pose& start, const PlantConfig& config,
                               std::uint64_t seed, MissionTrace* trace)
    : config_(config),
      motion_rng_(Rng::derive(seed, 0x6d6f74)),
      sensor_rng_(Rng::derive(seed, 0x736e73)),
      trace_(trace) {
  world_.map = std::move(map);
  world_.truth = start;
  check_free();
  if (trace_) trace_->record("start", 0.0, 0.0, world_.truth);
}

void SimulatedRobot::check_free() {
  if (!point_in_free_space(world_.truth.position, world_.map)) world_.collision_flag = true;
}

Scan SimulatedRobot::scan() {
  Scan s = ultrascan(world_, config_.sensor, config_.scan_resolution, sensor_rng_);
  if (trace_) {
    trace_->record("scan", 0.0, static_cast<double>(s.readings.size()), world_.truth);
  }
  return s;
}

void SimulatedRobot::turn(double dtheta) {
  const double realized = sonarnav::turn(world_, dtheta, config_.noise, motion_rng_);
  if (trace_) trace_->record("turn", dtheta, realized, world_.truth);
}

MoveOutcome SimulatedRobot::move(double d) {
  const MoveOutcome out = sonarnav::move(world_, d, config_.noise, config_.safety, motion_rng_);
  check_free();
  if (trace_) trace_->record(out.near_wall ? "move_stopped" : "move", d, out.moved, world_.truth);
  return out;
}

bool SimulatedRobot::turnback() {
  const double before = world_.odometer;
  const bool fired = sonarnav::turnback(world_, config_.safety);
  check_free();
  if (trace_ && fired) {
    trace_->record("turnback", config_.safety.backup_distance, world_.odometer - before,
                   world_.truth);
  }
  return fired;
}

}  // namespace sonarnav
