#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sonarnav/geometry.hpp"
#include "sonarnav/localization.hpp"
#include "sonarnav/sensor.hpp"

namespace sonarnav {

enum class Layer { Map, Cspace, Scan, Particles, PlannedPath, ExecutedPath };

std::string_view layer_name(Layer layer);
/// Accepts the names returned by layer_name; throws Error(InvalidArgument).
Layer parse_layer(std::string_view name);

struct RenderSpec {
  std::vector<Layer> layers;
  double scale = 4.0;    // px per cm
  double margin = 10.0;  // cm around the map bounding box
};

/// Data for each layer. A requested layer whose input is absent is an error.
struct RenderInputs {
  std::optional<ArenaMap> map;
  std::optional<ArenaMap> cspace;
  std::optional<Scan> scan;
  std::optional<Pose> scan_pose;
  std::optional<ParticleSet> particles;
  std::optional<std::vector<Point2>> planned_path;
  std::optional<std::vector<Point2>> executed_path;
};

/// SVG document with one <g> per layer, drawn in world centimetres with a
/// y-up flip. Throws Error(InvalidArgument) on an empty layer list or a
/// missing input.
std::string render_svg(const RenderSpec& spec, const RenderInputs& inputs);

}  // namespace sonarnav
