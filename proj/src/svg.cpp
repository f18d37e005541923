#include "sonarnav/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "sonarnav/error.hpp"

namespace sonarnav {

namespace {

constexpr struct {
  Layer layer;
  std::string_view name;
} kLayerNames[] = {
    {Layer::Map, "map"},
    {Layer::Cspace, "cspace"},
    {Layer::Scan, "scan"},
    {Layer::Particles, "particles"},
    {Layer::PlannedPath, "planned-path"},
    {Layer::ExecutedPath, "executed-path"},
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s = buf;
  if (s == "-0.000") s = "0.000";
  return s;
}

std::string points_attr(const std::vector<Point2>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ' ';
    s += num(pts[i].x) + ',' + num(pts[i].y);
  }
  return s;
}

[[noreturn]] void missing(Layer layer, const char* what) {
  throw Error(ErrorCode::InvalidArgument,
              "layer " + std::string(layer_name(layer)) + " needs " + what);
}

}  // namespace

std::string_view layer_name(Layer layer) {
  for (const auto& e : kLayerNames) {
    if (e.layer == layer) return e.name;
  }
  return "?";
}

Layer parse_layer(std::string_view name) {
  for (const auto& e : kLayerNames) {
    if (e.name == name) return e.layer;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown layer: " + std::string(name));
}

std::string render_svg(const RenderSpec& spec, const RenderInputs& in) {
  if (spec.layers.empty()) throw Error(ErrorCode::InvalidArgument, "render needs a layer");
  if (!(spec.scale > 0.0) || !(spec.margin >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "scale must be positive and margin non-negative");
  }
  for (Layer layer : spec.layers) {
    switch (layer) {
      case Layer::Map: if (!in.map) missing(layer, "a map"); break;
      case Layer::Cspace: if (!in.cspace) missing(layer, "a configuration space"); break;
      case Layer::Scan:
        if (!in.scan) missing(layer, "a scan");
        if (!in.scan_pose) missing(layer, "a scan pose");
        break;
      case Layer::Particles: if (!in.particles) missing(layer, "particles"); break;
      case Layer::PlannedPath: if (!in.planned_path) missing(layer, "a path"); break;
      case Layer::ExecutedPath: if (!in.executed_path) missing(layer, "a trace"); break;
    }
  }

  // Frame: the map if present, otherwise everything drawn.
  Point2 lo{1e300, 1e300}, hi{-1e300, -1e300};
  auto grow = [&](Point2 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  };
  if (in.map) {
    grow(in.map->min_corner());
    grow(in.map->max_corner());
  } else {
    if (in.cspace) { grow(in.cspace->min_corner()); grow(in.cspace->max_corner()); }
    if (in.scan_pose) grow(in.scan_pose->position);
    if (in.particles) for (const Particle& p : in.particles->particles) grow(p.pose.position);
    if (in.planned_path) for (Point2 p : *in.planned_path) grow(p);
    if (in.executed_path) for (Point2 p : *in.executed_path) grow(p);
  }
  if (lo.x > hi.x) lo = hi = Point2{0.0, 0.0};
  const double w = hi.x - lo.x + 2.0 * spec.margin;
  const double h = hi.y - lo.y + 2.0 * spec.margin;
  const double vx = lo.x - spec.margin;
  const double vy = -(hi.y + spec.margin);

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w * spec.scale)
     << "\" height=\"" << num(h * spec.scale) << "\" viewBox=\"" << num(vx) << ' ' << num(vy)
     << ' ' << num(w) << ' ' << num(h) << "\">\n";

  auto open = [&](Layer layer, const char* style) {
    os << "  <g id=\"" << layer_name(layer) << "\" transform=\"scale(1,-1)\" " << style << ">\n";
  };

  for (Layer layer : spec.layers) {
    switch (layer) {
      case Layer::Map: {
        open(layer, "fill=\"none\" stroke=\"black\" stroke-width=\"0.8\"");
        os << "    <polygon points=\"" << points_attr(in.map->boundary()) << "\"/>\n";
        for (const Polygon& obs : in.map->obstacles()) {
          os << "    <polygon points=\"" << points_attr(obs) << "\" fill=\"#999999\"/>\n";
        }
        break;
      }
      case Layer::Cspace: {
        open(layer, "fill=\"none\" stroke=\"#3a7d44\" stroke-width=\"0.4\" stroke-dasharray=\"2,1\"");
        os << "    <polygon points=\"" << points_attr(in.cspace->boundary()) << "\"/>\n";
        for (const Polygon& obs : in.cspace->obstacles()) {
          os << "    <polygon points=\"" << points_attr(obs) << "\"/>\n";
        }
        break;
      }
      case Layer::Scan: {
        open(layer, "stroke=\"#d08000\" stroke-width=\"0.2\"");
        const Pose& pose = *in.scan_pose;
        for (const Reading& r : in.scan->readings) {
          if (r.range >= in.scan->max_range) continue;
          const double a = pose.heading + r.angle;
          const Point2 end = pose.position + r.range * Point2{std::cos(a), std::sin(a)};
          os << "    <line x1=\"" << num(pose.position.x) << "\" y1=\"" << num(pose.position.y)
             << "\" x2=\"" << num(end.x) << "\" y2=\"" << num(end.y) << "\"/>\n";
        }
        break;
      }
      case Layer::Particles: {
        open(layer, "fill=\"#c03030\" fill-opacity=\"0.5\" stroke=\"none\"");
        for (const Particle& p : in.particles->particles) {
          os << "    <circle cx=\"" << num(p.pose.position.x) << "\" cy=\"" << num(p.pose.position.y)
             << "\" r=\"0.6\"/>\n";
        }
        break;
      }
      case Layer::PlannedPath: {
        open(layer, "fill=\"none\" stroke=\"#c02020\" stroke-width=\"0.8\"");
        os << "    <polyline points=\"" << points_attr(*in.planned_path) << "\"/>\n";
        break;
      }
      case Layer::ExecutedPath: {
        open(layer, "fill=\"none\" stroke=\"#2040c0\" stroke-width=\"0.5\"");
        os << "    <polyline points=\"" << points_attr(*in.executed_path) << "\"/>\n";
        break;
      }
    }
    os << "  </g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sonarnav
