#include "sonarnav/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sonarnav/error.hpp"

namespace sonarnav {

namespace {
constexpr double kMaxIncidence = 80.0 * kDegree;
constexpr std::array<Window, 4> kWindows{Window::Front, Window::Left, Window::Back,
                                         Window::Right};
}  // namespace

double tof_to_distance(double seconds, double speed_cm_per_s) {
  if (seconds < 0.0) throw Error(ErrorCode::NegativeTime, "time of flight is negative");
  if (!(speed_cm_per_s > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "propagation speed must be positive");
  }
  return speed_cm_per_s * seconds / 2.0;
}

std::size_t readings_per_sweep(double resolution) {
  if (!(resolution > 0.0) || resolution > kTwoPi) {
    throw Error(ErrorCode::InvalidArgument, "scan resolution must be in (0, 2pi]");
  }
  const double count = std::round(kTwoPi / resolution);
  if (std::abs(count * resolution - kTwoPi) > 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "scan resolution must divide 2pi");
  }
  return static_cast<std::size_t>(count);
}

Scan ideal_scan(const Pose& pose, const ArenaMap& map, double resolution, double max_range) {
  if (!point_in_free_space(pose.position, map)) {
    throw Error(ErrorCode::OriginOutsideFreeSpace, "scan origin is not in free space");
  }
  const std::size_t n = readings_per_sweep(resolution);
  Scan scan;
  scan.resolution = resolution;
  scan.max_range = max_range;
  scan.readings.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double rel = static_cast<double>(k) * resolution;
    const double d = ray_hit_unchecked(pose.position, pose.heading + rel, map).distance;
    scan.readings.push_back({rel, std::min(d, max_range)});
  }
  return scan;
}

double effective_sigma(const SensorModel& model, double incidence) {
  const double phi = std::min(std::abs(incidence), kMaxIncidence);
  const double t = std::tan(phi);
  return model.sigma * (1.0 + model.incidence_gain * t * t);
}

Scan corrupt_scan(const Scan& scan, const Pose& truth, const ArenaMap& map,
                  const SensorModel& model, Rng& rng) {
  Scan out = scan;
  out.max_range = model.max_range;
  for (Reading& r : out.readings) {
    double incidence = 0.0;
    if (model.incidence_gain != 0.0) {
      incidence = ray_hit_unchecked(truth.position, truth.heading + r.angle, map).incidence;
    }
    const double noise = rng.normal(effective_sigma(model, incidence));
    // A reading already at max_range is a missing echo and carries no noise.
    if (r.range < model.max_range) {
      r.range = std::clamp(r.range + noise, 0.0, model.max_range);
    }
    if (model.dropout_prob > 0.0 && rng.uniform() < model.dropout_prob) {
      r.range = model.max_range;
    }
  }
  return out;
}

double min_reading_heading(const Scan& scan) {
  if (scan.readings.empty()) throw Error(ErrorCode::EmptyScan, "scan has no readings");
  const Reading* best = &scan.readings.front();
  for (const Reading& r : scan.readings) {
    if (r.range < best->range || (r.range == best->range && r.angle < best->angle)) best = &r;
  }
  return best->angle;
}

double window_offset(double angle, Window w) {
  const double centre = static_cast<int>(w) * (std::numbers::pi / 2.0);
  return std::abs(wrap_to_pi(angle - centre));
}

namespace {

template <typename Emit>
void filter_windows(double angle, double half_width, Emit&& emit) {
  for (Window w : kWindows) {
    if (window_offset(angle, w) <= half_width + 1e-9) {
      emit(w);
      return;
    }
  }
}

void sort_by_window(CleanScan& clean) {
  std::stable_sort(clean.readings.begin(), clean.readings.end(),
                   [](const WindowReading& a, const WindowReading& b) {
                     return static_cast<int>(a.window) < static_cast<int>(b.window);
                   });
}

}  // namespace

CleanScan extract_windows(const Scan& scan, double half_width) {
  if (!(half_width > 0.0) || half_width >= std::numbers::pi / 4.0) {
    throw Error(ErrorCode::InvalidArgument, "window half-width must be in (0, 45deg)");
  }
  CleanScan clean;
  clean.half_width = half_width;
  clean.max_range = scan.max_range;
  for (const Reading& r : scan.readings) {
    filter_windows(r.angle, half_width,
                   [&](Window w) { clean.readings.push_back({w, r.angle, r.range}); });
  }
  sort_by_window(clean);
  return clean;
}

CleanScan extract_windows(const CleanScan& in, double half_width) {
  CleanScan clean;
  clean.half_width = half_width;
  clean.max_range = in.max_range;
  for (const WindowReading& r : in.readings) {
    filter_windows(r.angle, half_width,
                   [&](Window w) { clean.readings.push_back({w, r.angle, r.range}); });
  }
  sort_by_window(clean);
  return clean;
}

void write_scan_csv(std::ostream& out, const Scan& scan) {
  out << "angle_deg,range_cm\n";
  char buf[64];
  for (const Reading& r : scan.readings) {
    std::snprintf(buf, sizeof buf, "%.6f,%.6f\n", r.angle / kDegree, r.range);
    out << buf;
  }
}

Scan read_scan_csv(std::istream& in) {
  Scan scan;
  std::string line;
  if (!std::getline(in, line) || line.rfind("angle_deg", 0) != 0) {
    throw Error(ErrorCode::ParseError, "scan CSV must start with header angle_deg,range_cm");
  }
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::istringstream ls(line);
    double deg = 0.0, range = 0.0;
    char comma = 0;
    if (!(ls >> deg >> comma >> range) || comma != ',') {
      throw Error(ErrorCode::ParseError, "bad scan CSV row " + std::to_string(row));
    }
    scan.readings.push_back({deg * kDegree, range});
  }
  if (scan.readings.size() >= 2) {
    scan.resolution = scan.readings[1].angle - scan.readings[0].angle;
  }
  for (const Reading& r : scan.readings) scan.max_range = std::max(scan.max_range, r.range);
  return scan;
}

}  // namespace sonarnav
