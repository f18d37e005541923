#pragma once

#include <array>
#include <iosfwd>
#include <numbers>
#include <vector>

#include "sonarnav/geometry.hpp"
#include "sonarnav/rng.hpp"

namespace sonarnav {

inline constexpr double kDegree = std::numbers::pi / 180.0;
/// Documented ceiling of the LEGO ultrasonic sensor.
inline constexpr double kDefaultMaxRange = 255.0;
inline constexpr double kDefaultWindowHalfWidth = 15.0 * kDegree;

struct Reading {
  double angle = 0.0;  // relative to the robot heading, [0, 2pi)
  double range = 0.0;  // cm; max_range means no return
};

/// One 360-degree sweep at uniform angular resolution.
struct Scan {
  std::vector<Reading> readings;
  double resolution = kDegree;
  double max_range = kDefaultMaxRange;
};

struct SensorModel {
  double sigma = 1.0;           // cm
  double max_range = kDefaultMaxRange;
  double incidence_gain = 0.0;  // extra error scaling with tan^2 of incidence
  double dropout_prob = 0.0;
};

enum class Window : int { Front = 0, Left = 1, Back = 2, Right = 3 };

struct WindowReading {
  Window window = Window::Front;
  double angle = 0.0;  // relative angle, same frame as Scan
  double range = 0.0;
};

/// Readings kept after window extraction, grouped by window in scan order.
struct CleanScan {
  std::vector<WindowReading> readings;
  double half_width = kDefaultWindowHalfWidth;
  double max_range = kDefaultMaxRange;
};

/// Range from an echo's round-trip time: d = c * t / 2.
double tof_to_distance(double seconds, double speed_cm_per_s);

/// Number of readings in a sweep; throws unless `resolution` divides 2pi.
std::size_t readings_per_sweep(double resolution);

Scan ideal_scan(const Pose& pose, const ArenaMap& map, double resolution,
                double max_range = kDefaultMaxRange);

/// Adds range noise that grows with incidence angle, plus random dropouts.
/// `scan` must come from ideal_scan at `truth`.
Scan corrupt_scan(const Scan& scan, const Pose& truth, const ArenaMap& map,
                  const SensorModel& model, Rng& rng);

/// Effective noise std-dev for a hit at the given incidence angle.
double effective_sigma(const SensorModel& model, double incidence);

/// Relative angle of the shortest reading; ties go to the smallest angle.
double min_reading_heading(const Scan& scan);

/// Angular distance from `angle` to the centre of `w`, in [0, pi].
double window_offset(double angle, Window w);

CleanScan extract_windows(const Scan& scan, double half_width = kDefaultWindowHalfWidth);
/// Re-filters an already cleaned scan (idempotent on its own output).
CleanScan extract_windows(const CleanScan& clean, double half_width);

void write_scan_csv(std::ostream& out, const Scan& scan);
Scan read_scan_csv(std::istream& in);

}  // namespace sonarnav
