#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <vector>

#include "sonarnav/geometry.hpp"
#include "sonarnav/plant.hpp"
#include "sonarnav/rng.hpp"
#include "sonarnav/sensor.hpp"

namespace sonarnav {

struct Particle {
  Pose pose;
  double weight = 0.0;
};

struct ParticleSet {
  std::vector<Particle> particles;
  int generation = 0;
  /// Index into the jitter schedule; localize resets it to re-widen the
  /// jitter while the cloud still disagrees with the scan.
  int anneal = 0;
  /// RMS range residual of the best particle at the last weighing, in cm.
  double best_residual_rms = 0.0;
};

struct FilterConfig {
  std::size_t particle_count = 1000;
  double sigma = 2.0;  // cm, Gaussian likelihood std-dev
  double jitter_xy = 2.0;
  double jitter_theta = 0.05;
  double jitter_xy_floor = 0.25;
  double jitter_theta_floor = 0.005;
  double convergence_radius = 2.0;
  int max_iterations = 10;
  /// Rotation commanded between iterations to break heading ambiguity.
  double disambiguation_turn = std::numbers::pi / 6.0;
  double window_half_width = kDefaultWindowHalfWidth;
  /// RMS range residual (cm) required, with the spread test, to declare
  /// convergence. Measured at the refined pose when refine_estimate is set,
  /// else at the best particle.
  double converged_rms = 1.5;
  /// Best-particle RMS residual (cm) above which the jitter schedule
  /// restarts from jitter_xy / jitter_theta.
  double divergence_rms = 6.0;
  /// Consecutive unconverged generations without a 10% residual improvement
  /// after which the cloud is redrawn uniformly; 0 disables.
  int stall_generations = 3;
  /// Share of each fresh draw whose headings point at the particle's own
  /// nearest wall, mirroring the robot's alignment turn; the rest stay uniform.
  double aligned_fraction = 0.9;
  /// Heading spread around the nearest-wall direction for those particles.
  double aligned_heading_sigma = 10.0 * kDegree;
  /// Polish a converged estimate by least-squares scan matching.
  bool refine_estimate = true;
  /// Motion model used to propagate particles through robot commands.
  MotionNoise motion;
};

struct PoseEstimate {
  Pose pose;
  double spread_xy = 0.0;
  double spread_theta = 0.0;
  bool converged = false;
};

/// Gaussian sensor model: N(b; r, sigma^2).
double likelihood(double b, double r, double sigma);
double log_likelihood(double b, double r, double sigma);

/// Jitter std-devs for offspring of the given generation (halved each
/// generation, floored).
double jitter_xy_at(const FilterConfig& config, int generation);
double jitter_theta_at(const FilterConfig& config, int generation);

ParticleSet init_particles(const ArenaMap& map, const FilterConfig& config, Rng& rng);

/// Sum of per-reading log-likelihoods for one pose; -inf outside free space.
double scan_log_likelihood(const Pose& pose, const CleanScan& observed, const ArenaMap& map,
                           double sigma);

/// Bayes update: multiplies each weight by the scan likelihood and
/// normalizes. OpenMP-parallel over particles.
ParticleSet weigh_particles(const ParticleSet& set, const CleanScan& observed,
                            const ArenaMap& map, const FilterConfig& config);
/// Single-threaded reference for weigh_particles; results are bit-identical.
ParticleSet weigh_particles_serial(const ParticleSet& set, const CleanScan& observed,
                                   const ArenaMap& map, const FilterConfig& config);

/// Systematic resampling plus Gaussian jitter; weights reset to 1/N.
ParticleSet resample(const ParticleSet& set, const FilterConfig& config, const ArenaMap& map,
                     Rng& rng);

/// Ancestor index of each offspring under systematic resampling with offset u0 in [0, 1).
std::vector<std::size_t> systematic_indices(const std::vector<double>& weights, double u0);

ParticleSet propagate(const ParticleSet& set, const MotionCommand& command,
                      const MotionNoise& noise, Rng& rng);

PoseEstimate estimate(const ParticleSet& set, double convergence_radius = 2.0);

double effective_sample_size(const ParticleSet& set);

/// Direction of the nearest wall from `p`, searched at 1 degree steps.
double nearest_wall_heading(Point2 p, const ArenaMap& map);

/// Points the first aligned_fraction of the particles at their nearest wall,
/// with aligned_heading_sigma noise. Used right after the robot has turned
/// to face its own nearest wall.
void aim_at_nearest_wall(ParticleSet& set, const ArenaMap& map, const FilterConfig& config,
                         Rng& rng);

struct RefinedPose {
  Pose pose;
  double rms = 0.0;  // RMS range residual at `pose`, cm
  int iterations = 0;
};

/// Levenberg-Marquardt fit of (x, y, theta) to the informative readings of
/// `observed`, starting at `initial` and staying within `max_shift` cm of it.
/// Never returns a pose with a larger residual than `initial`.
RefinedPose refine_pose(const Pose& initial, const CleanScan& observed, const ArenaMap& map,
                        double max_shift);

struct LocalizationResult {
  PoseEstimate estimate;
  int iterations = 0;
  int restarts = 0;
  double total_rotation = 0.0;
};

/// Called after every weighing with the normalized set.
using GenerationObserver = std::function<void(const ParticleSet&)>;

/// Align to the nearest wall, scan, weigh, and resample until the particle
/// cloud converges. Throws Error(LocalizationFailed) after max_iterations.
LocalizationResult localize(RobotInterface& robot, const ArenaMap& map,
                            const FilterConfig& config, Rng& rng,
                            const GenerationObserver& observer = {});

void write_particles_csv(std::ostream& out, const ParticleSet& set);
ParticleSet read_particles_csv(std::istream& in);

}  // namespace sonarnav
