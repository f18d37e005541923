#include "sonarnav/controller.hpp"

#include <algorithm>
#include <cmath>

#include "sonarnav/error.hpp"

namespace sonarnav {

namespace {
constexpr std::uint64_t kFilterStream = 0x66696c74;
constexpr std::uint64_t kPlanStream = 0x706c616e;
constexpr std::uint64_t kStartStream = 0x73747274;
constexpr int kLocalizeAttempts = 3;
}  // namespace

FollowResult waypoint_follow(RobotInterface& robot, const Pose& dead_reckoned, Point2 waypoint) {
  FollowResult r;
  const Point2 delta = waypoint - dead_reckoned.position;
  r.distance = norm(delta);
  const double bearing =
      r.distance > kGeomEps ? std::atan2(delta.y, delta.x) : dead_reckoned.heading;
  r.turn = wrap_to_pi(bearing - dead_reckoned.heading);
  robot.turn(r.turn);
  r.outcome = robot.move(r.distance);
  r.pose = apply_motion(apply_motion(dead_reckoned, MotionCommand::turn(r.turn)),
                        MotionCommand::move(r.distance));
  return r;
}

std::optional<Point2> escape_point(Point2 p, const ArenaMap& map, const ArenaMap& cspace) {
  const bool origin_free = point_in_free_space(p, map);
  for (int radius = 1; radius <= 100; ++radius) {
    for (int deg = 0; deg < 360; deg += 5) {
      const double a = deg * kDegree;
      const Point2 q = p + static_cast<double>(radius) * Point2{std::cos(a), std::sin(a)};
      if (!point_in_free_space(q, cspace)) continue;
      if (origin_free && !segment_clear(p, q, map)) continue;
      return q;
    }
  }
  return std::nullopt;
}

Path plan_with_retries(Point2 start, Point2 goal, const ArenaMap& cspace, PlanConfig config,
                       Rng& rng) {
  for (int attempt = 0;; ++attempt) {
    try {
      return plan_path(start, goal, cspace, config, rng);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoPathFound || attempt >= config.retries) throw;
      config.sample_count *= 2;
    }
  }
}

MissionReport execute_mission(RobotInterface& robot, const ArenaMap& map,
                              const MissionConfig& config, MissionLog& log,
                              MissionArtifacts* artifacts) {
  MissionReport report;
  Rng filter_rng = Rng::derive(config.seed, kFilterStream);
  Rng plan_rng = Rng::derive(config.seed, kPlanStream);
  const ArenaMap cspace = inset_polygon(map, config.plan.cspace_offset());
  if (!point_in_free_space(config.goal, cspace)) {
    throw Error(ErrorCode::InvalidArgument, "goal is not in free C-space");
  }

  auto fail = [&](const std::string& why) -> Error {
    log.event("mission_failed");
    if (artifacts) artifacts->partial = report;
    return Error(ErrorCode::MissionFailed, why);
  };

  const GenerationObserver observer = [&](const ParticleSet& set) {
    double sum = 0.0;
    for (const Particle& p : set.particles) sum += p.weight;
    report.max_weight_sum_error = std::max(report.max_weight_sum_error, std::abs(sum - 1.0));
    if (artifacts) artifacts->last_particles = set;
  };

  auto relocalize = [&]() -> Pose {
    for (int attempt = 1; attempt <= kLocalizeAttempts; ++attempt) {
      try {
        const LocalizationResult res = localize(robot, map, config.filter, filter_rng, observer);
        report.localization_iterations += res.iterations;
        log.set_estimate(res.estimate.pose);
        log.event("localized");
        return res.estimate.pose;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::LocalizationFailed) throw;
        report.localization_iterations += config.filter.max_iterations;
        log.event("localization_failed");
      }
    }
    throw fail("localisation did not converge");
  };

  auto safety_event = [&](bool near_wall) {
    const bool fired = robot.turnback();
    if (fired) log.event("turnback");
    if (near_wall) log.event("near_wall");
    if (near_wall || fired) ++report.collisions_detected;
    return near_wall || fired;
  };

  auto plan_from = [&](Point2 from) -> std::optional<Path> {
    std::vector<Point2> prefix;
    if (!point_in_free_space(from, cspace)) {
      const auto esc = escape_point(from, map, cspace);
      if (!esc) return std::nullopt;
      prefix.push_back(from);
      from = *esc;
    }
    try {
      Path path = plan_with_retries(from, config.goal, cspace, config.plan, plan_rng);
      if (!prefix.empty()) {
        path.waypoints.insert(path.waypoints.begin(), prefix.begin(), prefix.end());
        path.intermediates = static_cast<int>(path.waypoints.size()) - 2;
        path.length = path_length(path.waypoints);
      }
      return path;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoPathFound) throw;
      return std::nullopt;
    }
  };

  // Turnback is always armed, including before the first move.
  safety_event(false);

  for (;;) {
    Pose pose = relocalize();
    const auto path = plan_from(pose.position);
    bool interrupted = !path.has_value();
    if (path) {
      log.event("planned " + std::to_string(path->intermediates) + " intermediates");
      if (report.path_length_planned == 0.0) report.path_length_planned = path->length;
      if (artifacts) artifacts->plans.push_back(*path);
      for (std::size_t i = 1; i < path->waypoints.size(); ++i) {
        const FollowResult step = waypoint_follow(robot, pose, path->waypoints[i]);
        pose = step.pose;
        log.set_estimate(pose);
        if (safety_event(step.outcome.near_wall)) {
          interrupted = true;
          break;
        }
      }
    } else {
      log.event("no_path");
    }
    if (!interrupted) break;
    if (++report.replans > config.max_replans) throw fail("replan budget exhausted");
    log.event("replan");
  }

  // Final re-localisation and a single correction toward the goal.
  const Pose at_goal = relocalize();
  if (artifacts) artifacts->last_estimate = at_goal;
  const FollowResult last = waypoint_follow(robot, at_goal, config.goal);
  log.set_estimate(last.pose);
  safety_event(last.outcome.near_wall);
  report.reached = true;
  return report;
}

MissionReport run_mission(const ArenaMap& map, const Pose& start_truth,
                          const MissionConfig& config, MissionArtifacts* artifacts) {
  MissionArtifacts local;
  MissionArtifacts& art = artifacts ? *artifacts : local;
  SimulatedRobot robot(map, start_truth, config.plant(), config.seed, &art.trace);

  MissionReport report;
  try {
    report = execute_mission(robot, map, config, art.trace, &art);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::MissionFailed) throw;
    report = art.partial;
    report.reached = false;
    report.failure = e.what();
  }
  const WorldState& world = robot.world();
  report.final_error = distance(world.truth.position, config.goal);
  report.path_length_executed = world.odometer;
  report.sim_steps = world.sim_steps;
  report.unrecovered_collisions = world.collision_flag ? 1 : 0;
  if (artifacts) {
    art.last_scan = ideal_scan(world.truth, world.map, config.scan_resolution,
                               config.sensor.max_range);
  }
  return report;
}

Pose batch_start_pose(const ArenaMap& map, const MissionConfig& config, std::uint64_t seed) {
  const ArenaMap cspace = inset_polygon(map, config.plan.cspace_offset());
  Rng rng = Rng::derive(seed, kStartStream);
  const Point2 p = sample_free_points(cspace, 1, rng).front();
  return Pose(p, rng.uniform(0.0, kTwoPi));
}

MapSummary summarize(const std::string& map, const std::vector<MissionReport>& reports) {
  MapSummary s;
  s.map = map;
  s.runs = static_cast<int>(reports.size());
  if (reports.empty()) return s;
  std::vector<double> errors;
  double path_sum = 0.0;
  for (const MissionReport& r : reports) {
    errors.push_back(r.final_error);
    path_sum += r.path_length_executed;
    s.successes += r.reached ? 1 : 0;
    s.total_collisions += r.collisions_detected;
    s.unrecovered_collisions += r.unrecovered_collisions;
  }
  const double n = static_cast<double>(reports.size());
  double err_sum = 0.0;
  for (double e : errors) err_sum += e;
  s.mean_final_error = err_sum / n;
  s.max_final_error = *std::max_element(errors.begin(), errors.end());
  std::sort(errors.begin(), errors.end());
  const std::size_t mid = errors.size() / 2;
  s.median_final_error =
      errors.size() % 2 ? errors[mid] : 0.5 * (errors[mid - 1] + errors[mid]);
  s.mean_path_length = path_sum / n;
  s.success_rate = static_cast<double>(s.successes) / n;
  s.collisions_flagged = s.total_collisions > 0;
  return s;
}

BatchSummary run_batch(const std::vector<NamedMap>& maps, const MissionConfig& config,
                       const std::vector<std::uint64_t>& seeds, bool keep_traces,
                       bool parallel) {
  if (seeds.empty()) throw Error(ErrorCode::InvalidArgument, "batch needs at least one seed");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  BatchSummary summary;
  summary.runs.resize(maps.size() * sorted.size());
  for (std::size_t m = 0; m < maps.size(); ++m) {
    for (std::size_t k = 0; k < sorted.size(); ++k) {
      BatchRun& run = summary.runs[m * sorted.size() + k];
      run.map = maps[m].name;
      run.seed = sorted[k];
    }
  }

  const auto total = static_cast<std::ptrdiff_t>(summary.runs.size());
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::ptrdiff_t i = 0; i < total; ++i) {
    BatchRun& run = summary.runs[static_cast<std::size_t>(i)];
    const NamedMap& nm = maps[static_cast<std::size_t>(i) / sorted.size()];
    MissionConfig cfg = config;
    cfg.seed = run.seed;
    cfg.goal = nm.goal;
    MissionArtifacts art;
    try {
      run.start = batch_start_pose(nm.map, cfg, run.seed);
      run.report = run_mission(nm.map, run.start, cfg, &art);
    } catch (const Error& e) {
      run.report.reached = false;
      run.report.failure = e.what();
    }
    if (keep_traces) run.trace = art.trace.rows();
  }

  for (const NamedMap& nm : maps) {
    std::vector<MissionReport> reports;
    for (const BatchRun& run : summary.runs) {
      if (run.map == nm.name) reports.push_back(run.report);
    }
    summary.maps.push_back(summarize(nm.name, reports));
  }
  return summary;
}

}  // namespace sonarnav
