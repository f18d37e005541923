#include "sonarnav/localization.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>

#include "sonarnav/error.hpp"

namespace sonarnav {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
const double kLogSqrtTwoPi = 0.5 * std::log(kTwoPi);
}  // namespace

double likelihood(double b, double r, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::NonpositiveSigma, "likelihood sigma must be > 0");
  const double z = (b - r) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(kTwoPi));
}

double log_likelihood(double b, double r, double sigma) {
  if (!(sigma > 0.0)) throw Error(ErrorCode::NonpositiveSigma, "likelihood sigma must be > 0");
  const double z = (b - r) / sigma;
  return -0.5 * z * z - std::log(sigma) - kLogSqrtTwoPi;
}

double jitter_xy_at(const FilterConfig& config, int generation) {
  return std::max(config.jitter_xy_floor, config.jitter_xy * std::ldexp(1.0, -generation));
}

double jitter_theta_at(const FilterConfig& config, int generation) {
  return std::max(config.jitter_theta_floor, config.jitter_theta * std::ldexp(1.0, -generation));
}

ParticleSet init_particles(const ArenaMap& map, const FilterConfig& config, Rng& rng) {
  if (config.particle_count < 1) {
    throw Error(ErrorCode::InvalidArgument, "particle_count must be at least 1");
  }
  if (!(map.free_area() > 0.0)) throw Error(ErrorCode::EmptyFreeSpace, "map has no free area");

  const Point2 lo = map.min_corner();
  const Point2 hi = map.max_corner();
  const std::size_t n = config.particle_count;
  const double w = 1.0 / static_cast<double>(n);
  ParticleSet set;
  set.particles.reserve(n);
  std::size_t budget = 1000 * n + 100000;
  while (set.particles.size() < n) {
    if (budget-- == 0) throw Error(ErrorCode::EmptyFreeSpace, "could not sample free space");
    const Point2 p{rng.uniform(lo.x, hi.x), rng.uniform(lo.y, hi.y)};
    if (!point_in_free_space(p, map)) continue;
    set.particles.push_back({Pose(p, rng.uniform(0.0, kTwoPi)), w});
  }
  return set;
}

double scan_log_likelihood(const Pose& pose, const CleanScan& observed, const ArenaMap& map,
                           double sigma) {
  if (!point_in_free_space(pose.position, map)) return kNegInf;
  double total = 0.0;
  for (const WindowReading& r : observed.readings) {
    if (r.range >= observed.max_range) continue;  // no echo, no information
    const double b = std::min(
        ray_hit_unchecked(pose.position, pose.heading + r.angle, map).distance, observed.max_range);
    total += log_likelihood(b, r.range, sigma);
  }
  return total;
}

namespace {

std::size_t informative_readings(const CleanScan& observed) {
  return static_cast<std::size_t>(
      std::count_if(observed.readings.begin(), observed.readings.end(),
                    [&](const WindowReading& r) { return r.range < observed.max_range; }));
}

// Shared normalization step; `loglik` holds the per-particle scan terms.
ParticleSet normalize_weights(const ParticleSet& set, const std::vector<double>& loglik,
                              const CleanScan& observed, double sigma) {
  const std::size_t n = set.particles.size();
  std::vector<double> logw(n);
  double top = kNegInf;
  double best_ll = kNegInf;
  for (std::size_t i = 0; i < n; ++i) {
    const double prior = set.particles[i].weight;
    logw[i] = prior > 0.0 ? std::log(prior) + loglik[i] : kNegInf;
    top = std::max(top, logw[i]);
    best_ll = std::max(best_ll, loglik[i]);
  }
  if (!std::isfinite(top)) {
    throw Error(ErrorCode::AllWeightsZero, "every particle has zero likelihood");
  }

  ParticleSet out = set;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = std::isfinite(logw[i]) ? std::exp(logw[i] - top) : 0.0;
    out.particles[i].weight = w;
    sum += w;
  }
  for (Particle& p : out.particles) p.weight /= sum;

  const std::size_t m = informative_readings(observed);
  if (m > 0) {
    const double sq = -2.0 * sigma * sigma *
                      (best_ll + static_cast<double>(m) * (std::log(sigma) + kLogSqrtTwoPi));
    out.best_residual_rms = std::sqrt(std::max(0.0, sq) / static_cast<double>(m));
  } else {
    out.best_residual_rms = 0.0;
  }
  return out;
}

void check_weigh_inputs(const ParticleSet& set, const CleanScan& observed,
                        const FilterConfig& config) {
  if (!(config.sigma > 0.0)) throw Error(ErrorCode::NonpositiveSigma, "filter sigma must be > 0");
  if (observed.readings.empty()) throw Error(ErrorCode::EmptyScan, "observed scan is empty");
  if (set.particles.empty()) throw Error(ErrorCode::InvalidArgument, "particle set is empty");
}

}  // namespace

ParticleSet weigh_particles(const ParticleSet& set, const CleanScan& observed,
                            const ArenaMap& map, const FilterConfig& config) {
  check_weigh_inputs(set, observed, config);
  const auto n = static_cast<std::ptrdiff_t>(set.particles.size());
  std::vector<double> loglik(set.particles.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    loglik[static_cast<std::size_t>(i)] =
        scan_log_likelihood(set.particles[static_cast<std::size_t>(i)].pose, observed, map,
                            config.sigma);
  }
  return normalize_weights(set, loglik, observed, config.sigma);
}

ParticleSet weigh_particles_serial(const ParticleSet& set, const CleanScan& observed,
                                   const ArenaMap& map, const FilterConfig& config) {
  check_weigh_inputs(set, observed, config);
  std::vector<double> loglik;
  loglik.reserve(set.particles.size());
  for (const Particle& p : set.particles) {
    loglik.push_back(scan_log_likelihood(p.pose, observed, map, config.sigma));
  }
  return normalize_weights(set, loglik, observed, config.sigma);
}

std::vector<std::size_t> systematic_indices(const std::vector<double>& weights, double u0) {
  const std::size_t n = weights.size();
  std::vector<std::size_t> out;
  out.reserve(n);
  double cumulative = weights.empty() ? 0.0 : weights[0];
  std::size_t j = 0;
  for (std::size_t k = 0; k < n; ++k) {
    const double u = (u0 + static_cast<double>(k)) / static_cast<double>(n);
    while (u > cumulative && j + 1 < n) cumulative += weights[++j];
    out.push_back(j);
  }
  return out;
}

ParticleSet resample(const ParticleSet& set, const FilterConfig& config, const ArenaMap& map,
                     Rng& rng) {
  const std::size_t n = set.particles.size();
  if (n == 0) throw Error(ErrorCode::DegenerateWeights, "cannot resample an empty set");
  std::vector<double> weights;
  weights.reserve(n);
  double sum = 0.0;
  for (const Particle& p : set.particles) {
    if (!std::isfinite(p.weight) || p.weight < 0.0) {
      throw Error(ErrorCode::DegenerateWeights, "particle weight is negative or not finite");
    }
    weights.push_back(p.weight);
    sum += p.weight;
  }
  if (!(sum > 0.0) || std::abs(sum - 1.0) > 1e-6) {
    throw Error(ErrorCode::DegenerateWeights, "weights are not normalized");
  }

  const double sxy = jitter_xy_at(config, set.anneal);
  const double sth = jitter_theta_at(config, set.anneal);
  const double w = 1.0 / static_cast<double>(n);

  ParticleSet out;
  out.generation = set.generation + 1;
  out.anneal = set.anneal + 1;
  out.particles.reserve(n);
  for (std::size_t idx : systematic_indices(weights, rng.uniform())) {
    const Pose& parent = set.particles[idx].pose;
    Pose child = parent;
    for (int attempt = 0; attempt < 10; ++attempt) {
      const Pose candidate(parent.position + Point2{rng.normal(sxy), rng.normal(sxy)},
                           parent.heading + rng.normal(sth));
      if (point_in_free_space(candidate.position, map)) {
        child = candidate;
        break;
      }
    }
    out.particles.push_back({child, w});
  }
  return out;
}

ParticleSet propagate(const ParticleSet& set, const MotionCommand& command,
                      const MotionNoise& noise, Rng& rng) {
  ParticleSet out = set;
  for (Particle& p : out.particles) {
    MotionCommand noisy = command;
    if (command.kind == MotionCommand::Kind::Turn) {
      noisy.value += rng.normal(noise.turn_sigma);
      p.pose = apply_motion(p.pose, noisy);
    } else {
      noisy.value += rng.normal(noise.move_sigma);
      p.pose = apply_motion(p.pose, noisy);
      p.pose.heading = normalize_angle(p.pose.heading + rng.normal(noise.drift_sigma));
    }
  }
  return out;
}

PoseEstimate estimate(const ParticleSet& set, double convergence_radius) {
  PoseEstimate est;
  double wsum = 0.0, mx = 0.0, my = 0.0, sc = 0.0, ss = 0.0;
  for (const Particle& p : set.particles) {
    wsum += p.weight;
    mx += p.weight * p.pose.position.x;
    my += p.weight * p.pose.position.y;
    sc += p.weight * std::cos(p.pose.heading);
    ss += p.weight * std::sin(p.pose.heading);
  }
  if (!(wsum > 0.0)) return est;
  mx /= wsum;
  my /= wsum;
  est.pose = Pose({mx, my}, std::atan2(ss, sc));

  double vxy = 0.0, vth = 0.0;
  for (const Particle& p : set.particles) {
    const Point2 d = p.pose.position - est.pose.position;
    const double dth = wrap_to_pi(p.pose.heading - est.pose.heading);
    vxy += p.weight * dot(d, d);
    vth += p.weight * dth * dth;
  }
  est.spread_xy = std::sqrt(vxy / wsum);
  est.spread_theta = std::sqrt(vth / wsum);
  est.converged = est.spread_xy <= convergence_radius;
  return est;
}

double nearest_wall_heading(Point2 p, const ArenaMap& map) {
  double best = std::numeric_limits<double>::infinity();
  double heading = 0.0;
  for (int deg = 0; deg < 360; ++deg) {
    const double a = deg * kDegree;
    const double d = ray_hit_unchecked(p, a, map).distance;
    if (d < best) {
      best = d;
      heading = a;
    }
  }
  return heading;
}

void aim_at_nearest_wall(ParticleSet& set, const ArenaMap& map, const FilterConfig& config,
                         Rng& rng) {
  const std::size_t n = set.particles.size();
  const auto aimed = static_cast<std::size_t>(
      std::llround(std::clamp(config.aligned_fraction, 0.0, 1.0) * static_cast<double>(n)));
  std::vector<double> heading(aimed);
  const auto sa = static_cast<std::ptrdiff_t>(aimed);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < sa; ++i) {
    const auto k = static_cast<std::size_t>(i);
    heading[k] = nearest_wall_heading(set.particles[k].pose.position, map);
  }
  for (std::size_t k = 0; k < aimed; ++k) {
    set.particles[k].pose.heading =
        normalize_angle(heading[k] + rng.normal(config.aligned_heading_sigma));
  }
}

double effective_sample_size(const ParticleSet& set) {
  double s = 0.0, s2 = 0.0;
  for (const Particle& p : set.particles) {
    s += p.weight;
    s2 += p.weight * p.weight;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

namespace {

// Residuals of the informative readings; false if `pose` is not in free space.
bool scan_residuals(const Pose& pose, const CleanScan& observed, const ArenaMap& map,
                    Eigen::VectorXd& out) {
  if (!point_in_free_space(pose.position, map)) return false;
  Eigen::Index k = 0;
  for (const WindowReading& r : observed.readings) {
    if (r.range >= observed.max_range) continue;
    const double b = std::min(
        ray_hit_unchecked(pose.position, pose.heading + r.angle, map).distance, observed.max_range);
    out[k++] = b - r.range;
  }
  return true;
}

}  // namespace

RefinedPose refine_pose(const Pose& initial, const CleanScan& observed, const ArenaMap& map,
                        double max_shift) {
  const auto m = static_cast<Eigen::Index>(informative_readings(observed));
  RefinedPose best{initial, std::numeric_limits<double>::infinity(), 0};
  Eigen::VectorXd r(m);
  if (m < 3 || !scan_residuals(initial, observed, map, r)) return best;
  double cost = r.squaredNorm();
  best.rms = std::sqrt(cost / static_cast<double>(m));

  auto shifted = [](const Pose& p, const Eigen::Vector3d& d) {
    return Pose(p.position + Point2{d[0], d[1]}, p.heading + d[2]);
  };
  const Eigen::Vector3d step_size(1e-5, 1e-5, 1e-6);
  Eigen::MatrixXd jac(m, 3);
  Eigen::VectorXd rp(m), rm(m), trial(m);
  double lambda = 1e-3;

  for (int it = 0; it < 50; ++it) {
    best.iterations = it + 1;
    bool ok = true;
    for (int c = 0; c < 3 && ok; ++c) {
      Eigen::Vector3d d = Eigen::Vector3d::Zero();
      d[c] = step_size[c];
      ok = scan_residuals(shifted(best.pose, d), observed, map, rp) &&
           scan_residuals(shifted(best.pose, -d), observed, map, rm);
      jac.col(c) = (rp - rm) / (2.0 * step_size[c]);
    }
    if (!ok) break;

    const Eigen::Matrix3d jtj = jac.transpose() * jac;
    const Eigen::Vector3d g = jac.transpose() * r;
    bool improved = false;
    while (lambda < 1e8) {
      Eigen::Matrix3d a = jtj;
      a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::Vector3d delta = a.ldlt().solve(-g);
      const Pose cand = shifted(best.pose, delta);
      if (distance(cand.position, initial.position) <= max_shift &&
          scan_residuals(cand, observed, map, trial) && trial.squaredNorm() < cost) {
        best.pose = cand;
        r = trial;
        const double previous = cost;
        cost = trial.squaredNorm();
        lambda = std::max(lambda / 3.0, 1e-9);
        improved = previous - cost > 1e-12 * previous && delta.norm() > 1e-10;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) break;
  }
  best.rms = std::sqrt(cost / static_cast<double>(m));
  return best;
}

LocalizationResult localize(RobotInterface& robot, const ArenaMap& map,
                            const FilterConfig& config, Rng& rng,
                            const GenerationObserver& observer) {
  LocalizationResult result;
  if (config.max_iterations <= 0) {
    throw Error(ErrorCode::LocalizationFailed, "max_iterations must be positive");
  }
  ParticleSet set = init_particles(map, config, rng);
  bool fresh = true;  // headings not yet tied to the alignment turn
  int stalled = 0;
  double best_seen = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= config.max_iterations; ++it) {
    result.iterations = it;

    // Face the nearest wall so the cardinal windows see near-perpendicular echoes.
    const double align = wrap_to_pi(min_reading_heading(robot.scan()));
    robot.turn(align);
    result.total_rotation += align;
    if (fresh) {
      aim_at_nearest_wall(set, map, config, rng);
      fresh = false;
    } else {
      set = propagate(set, MotionCommand::turn(align), config.motion, rng);
    }

    const CleanScan clean = extract_windows(robot.scan(), config.window_half_width);
    try {
      set = weigh_particles(set, clean, map, config);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::AllWeightsZero) throw;
      ParticleSet redraw = init_particles(map, config, rng);
      aim_at_nearest_wall(redraw, map, config, rng);
      set = weigh_particles(redraw, clean, map, config);
      ++result.restarts;
    }
    const double rms = set.best_residual_rms;
    if (rms > config.divergence_rms) set.anneal = 0;
    // Stalled: still unconverged and no real progress since the last draw.
    if (rms > config.converged_rms && rms > 0.9 * best_seen) {
      ++stalled;
    } else {
      stalled = 0;
    }
    best_seen = std::min(best_seen, rms);
    if (observer) observer(set);

    result.estimate = estimate(set, config.convergence_radius);
    if (result.estimate.converged) {
      double fit = set.best_residual_rms;
      if (config.refine_estimate) {
        // The cloud mean may sit up to a spread away from the best fit.
        const double max_shift = 3.0 * config.convergence_radius;
        const RefinedPose refined = refine_pose(result.estimate.pose, clean, map, max_shift);
        // A fit pinned at the shift limit is not a local minimum; ignore it.
        const bool interior =
            distance(refined.pose.position, result.estimate.pose.position) < 0.99 * max_shift;
        if (interior && refined.rms <= config.converged_rms) {
          result.estimate.pose = refined.pose;
          fit = refined.rms;
        }
      }
      result.estimate.converged = fit <= config.converged_rms;
      if (result.estimate.converged) return result;
    }
    if (it == config.max_iterations) break;

    if (config.stall_generations > 0 && stalled >= config.stall_generations) {
      set = init_particles(map, config, rng);
      fresh = true;
      ++result.restarts;
      stalled = 0;
      best_seen = std::numeric_limits<double>::infinity();
    } else {
      set = resample(set, config, map, rng);
    }
    robot.turn(config.disambiguation_turn);
    result.total_rotation += config.disambiguation_turn;
    set = propagate(set, MotionCommand::turn(config.disambiguation_turn), config.motion, rng);
  }
  throw Error(ErrorCode::LocalizationFailed,
              "particle filter did not converge within " + std::to_string(config.max_iterations) +
                  " iterations");
}

void write_particles_csv(std::ostream& out, const ParticleSet& set) {
  out << "generation,x,y,theta,weight\n";
  char buf[160];
  for (const Particle& p : set.particles) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.17g\n", set.generation,
                  p.pose.position.x, p.pose.position.y, p.pose.heading, p.weight);
    out << buf;
  }
}

ParticleSet read_particles_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("generation,x,y,theta,weight", 0) != 0) {
    throw Error(ErrorCode::ParseError, "particle CSV must start with generation,x,y,theta,weight");
  }
  // Keep only the last generation present in the file.
  ParticleSet set;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    int gen = 0;
    double x = 0, y = 0, th = 0, w = 0;
    if (!(ls >> gen >> x >> y >> th >> w)) {
      throw Error(ErrorCode::ParseError, "bad particle CSV row " + std::to_string(row));
    }
    if (set.particles.empty() || gen != set.generation) {
      set.particles.clear();
      set.generation = gen;
    }
    set.particles.push_back({Pose(x, y, th), w});
  }
  return set;
}

}  // namespace sonarnav
