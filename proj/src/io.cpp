#include "sonarnav/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include "sonarnav/error.hpp"

namespace sonarnav {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

Point2 parse_point(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw Error(ErrorCode::ParseError, where + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

Polygon parse_polygon(const json& j, const std::string& where) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, where + ": expected a vertex list");
  Polygon poly;
  for (std::size_t i = 0; i < j.size(); ++i) {
    poly.push_back(parse_point(j[i], where + " vertex " + std::to_string(i)));
  }
  return poly;
}

}  // namespace

MapDocument parse_map_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("map JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("boundary")) {
    throw Error(ErrorCode::ParseError, "map JSON: missing \"boundary\"");
  }
  MapDocument doc;
  doc.boundary = parse_polygon(j["boundary"], "boundary");
  if (j.contains("obstacles")) {
    const json& obs = j["obstacles"];
    if (!obs.is_array()) throw Error(ErrorCode::ParseError, "obstacles: expected a list");
    for (std::size_t k = 0; k < obs.size(); ++k) {
      doc.obstacles.push_back(parse_polygon(obs[k], "obstacle " + std::to_string(k)));
    }
  }
  if (j.contains("goal")) doc.goal = parse_point(j["goal"], "goal");
  return doc;
}

MapDocument load_map_document(const std::filesystem::path& path) {
  return parse_map_json(read_text_file(path));
}

NamedMap load_map(const std::filesystem::path& path) {
  MapDocument doc = load_map_document(path);
  NamedMap nm;
  nm.name = path.stem().string();
  nm.map = ArenaMap(std::move(doc.boundary), std::move(doc.obstacles));
  nm.goal = doc.goal.value_or(Point2{std::nan(""), std::nan("")});
  return nm;
}

void write_map_json(std::ostream& out, const ArenaMap& map, std::optional<Point2> goal) {
  auto poly_json = [](const Polygon& poly) {
    ordered_json a = ordered_json::array();
    for (Point2 p : poly) a.push_back({p.x, p.y});
    return a;
  };
  ordered_json j;
  j["boundary"] = poly_json(map.boundary());
  j["obstacles"] = ordered_json::array();
  for (const Polygon& obs : map.obstacles()) j["obstacles"].push_back(poly_json(obs));
  if (goal) j["goal"] = {goal->x, goal->y};
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Config

namespace {

struct KeySpec {
  const char* key;
  const char* default_value;
  const char* meaning;
  std::function<void(RunConfig&, double)> apply;
};

int as_int(double v, const char* key) {
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw Error(ErrorCode::ParseError, std::string(key) + " must be an integer");
  }
  return static_cast<int>(v);
}

struct StartParts {
  std::optional<double> x, y, heading;
};

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> k;
    auto add = [&](const char* key, const char* def, const char* meaning,
                   std::function<void(RunConfig&, double)> fn) {
      k.push_back({key, def, meaning, std::move(fn)});
    };
    add("filter.particle_count", "1000", "particles in the localiser",
        [](RunConfig& c, double v) {
          c.mission.filter.particle_count =
              static_cast<std::size_t>(std::max(0, as_int(v, "filter.particle_count")));
        });
    add("filter.sigma", "2", "likelihood std-dev (cm)",
        [](RunConfig& c, double v) { c.mission.filter.sigma = v; });
    add("filter.jitter_xy", "2", "initial resampling position jitter (cm)",
        [](RunConfig& c, double v) { c.mission.filter.jitter_xy = v; });
    add("filter.jitter_theta", "0.05", "initial resampling heading jitter (rad)",
        [](RunConfig& c, double v) { c.mission.filter.jitter_theta = v; });
    add("filter.jitter_xy_floor", "0.25", "position jitter floor (cm)",
        [](RunConfig& c, double v) { c.mission.filter.jitter_xy_floor = v; });
    add("filter.jitter_theta_floor", "0.005", "heading jitter floor (rad)",
        [](RunConfig& c, double v) { c.mission.filter.jitter_theta_floor = v; });
    add("filter.convergence_radius", "2", "spread at which the cloud counts as converged (cm)",
        [](RunConfig& c, double v) { c.mission.filter.convergence_radius = v; });
    add("filter.max_iterations", "10", "scan/weigh/resample rounds per localisation",
        [](RunConfig& c, double v) {
          c.mission.filter.max_iterations = as_int(v, "filter.max_iterations");
        });
    add("filter.disambiguation_turn_deg", "30", "rotation between rounds (deg)",
        [](RunConfig& c, double v) { c.mission.filter.disambiguation_turn = v * kDegree; });
    add("filter.window_half_width_deg", "15", "half-width of each scan window (deg)",
        [](RunConfig& c, double v) { c.mission.filter.window_half_width = v * kDegree; });
    add("filter.converged_rms", "1.5", "RMS range residual needed to converge (cm)",
        [](RunConfig& c, double v) { c.mission.filter.converged_rms = v; });
    add("filter.divergence_rms", "6", "best-particle RMS residual that re-widens the jitter (cm)",
        [](RunConfig& c, double v) { c.mission.filter.divergence_rms = v; });
    add("filter.stall_generations", "3", "stalled generations in a row before a uniform redraw",
        [](RunConfig& c, double v) {
          c.mission.filter.stall_generations = as_int(v, "filter.stall_generations");
        });
    add("filter.aligned_fraction", "0.9",
        "share of fresh particles aimed at their nearest wall (0 to 1)",
        [](RunConfig& c, double v) { c.mission.filter.aligned_fraction = v; });
    add("filter.aligned_heading_sigma_deg", "10", "heading spread of aimed particles (deg)",
        [](RunConfig& c, double v) { c.mission.filter.aligned_heading_sigma = v * kDegree; });
    add("filter.refine_estimate", "1", "least-squares polish of a converged estimate (0 or 1)",
        [](RunConfig& c, double v) { c.mission.filter.refine_estimate = v != 0.0; });
    add("plan.sample_count", "30", "random intermediate candidates",
        [](RunConfig& c, double v) { c.mission.plan.sample_count = as_int(v, "plan.sample_count"); });
    add("plan.max_intermediates", "4", "most intermediate waypoints per path",
        [](RunConfig& c, double v) {
          c.mission.plan.max_intermediates = as_int(v, "plan.max_intermediates");
        });
    add("plan.retries", "3", "fresh-sample retries after no path is found",
        [](RunConfig& c, double v) { c.mission.plan.retries = as_int(v, "plan.retries"); });
    add("plan.robot_length", "30", "robot length; C-space inset is half of it (cm)",
        [](RunConfig& c, double v) { c.mission.plan.robot_length = v; });
    add("plan.astar_resolution", "5", "A* lattice spacing for bench-planner (cm)",
        [](RunConfig& c, double v) { c.mission.plan.astar_resolution = v; });
    add("sensor.sigma", "1", "range noise std-dev (cm)",
        [](RunConfig& c, double v) { c.mission.sensor.sigma = v; });
    add("sensor.max_range", "255", "no-return range (cm)",
        [](RunConfig& c, double v) { c.mission.sensor.max_range = v; });
    add("sensor.incidence_gain", "0", "extra noise growth with incidence angle",
        [](RunConfig& c, double v) { c.mission.sensor.incidence_gain = v; });
    add("sensor.dropout_prob", "0", "probability a reading is lost",
        [](RunConfig& c, double v) { c.mission.sensor.dropout_prob = v; });
    add("sensor.resolution_deg", "1", "angular step of a sweep (deg)",
        [](RunConfig& c, double v) { c.mission.scan_resolution = v * kDegree; });
    add("noise.move_sigma", "0.1", "translation noise per move (cm)",
        [](RunConfig& c, double v) { c.mission.noise.move_sigma = v; });
    add("noise.turn_sigma", "0.005", "rotation noise per turn (rad)",
        [](RunConfig& c, double v) { c.mission.noise.turn_sigma = v; });
    add("noise.drift_sigma", "0", "heading drift per move (rad)",
        [](RunConfig& c, double v) { c.mission.noise.drift_sigma = v; });
    add("safety.stop_threshold", "10", "wall clearance that stops a move (cm)",
        [](RunConfig& c, double v) { c.mission.safety.stop_threshold = v; });
    add("safety.backup_distance", "5", "turnback reverse distance (cm)",
        [](RunConfig& c, double v) { c.mission.safety.backup_distance = v; });
    add("mission.goal_x", "map goal", "goal x (cm); needs mission.goal_y",
        [](RunConfig& c, double v) { c.mission.goal.x = v; });
    add("mission.goal_y", "map goal", "goal y (cm); needs mission.goal_x",
        [](RunConfig& c, double v) { c.mission.goal.y = v; });
    add("mission.max_replans", "5", "re-localise/re-plan budget",
        [](RunConfig& c, double v) { c.mission.max_replans = as_int(v, "mission.max_replans"); });
    add("mission.seed", "0", "random seed (overridden by --seed)",
        [](RunConfig& c, double v) {
          if (v < 0) throw Error(ErrorCode::ParseError, "mission.seed must be >= 0");
          c.mission.seed = static_cast<std::uint64_t>(as_int(v, "mission.seed"));
        });
    add("mission.start_x", "seeded", "start x for run (cm)", nullptr);
    add("mission.start_y", "seeded", "start y for run (cm)", nullptr);
    add("mission.start_heading_deg", "seeded", "start heading for run (deg)", nullptr);
    return k;
  }();
  return specs;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::vector<ConfigKey> config_keys() {
  std::vector<ConfigKey> out;
  for (const KeySpec& k : key_specs()) out.push_back({k.key, k.default_value, k.meaning});
  return out;
}

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  StartParts start;
  bool goal_x = false, goal_y = false;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "config line " + std::to_string(lineno);
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, where + ": expected key = value");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    const std::string value = trim(std::string_view(body).substr(eq + 1));

    double v = 0.0;
    std::size_t used = 0;
    try {
      v = std::stod(value, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != value.size() || !std::isfinite(v)) {
      throw Error(ErrorCode::ParseError, where + ": value for " + key + " is not a number");
    }

    if (key == "mission.start_x") { start.x = v; continue; }
    if (key == "mission.start_y") { start.y = v; continue; }
    if (key == "mission.start_heading_deg") { start.heading = v; continue; }
    const auto& specs = key_specs();
    const auto it = std::find_if(specs.begin(), specs.end(),
                                 [&](const KeySpec& k) { return key == k.key; });
    if (it == specs.end()) throw Error(ErrorCode::ParseError, where + ": unknown key " + key);
    it->apply(cfg, v);
    goal_x |= key == "mission.goal_x";
    goal_y |= key == "mission.goal_y";
  }
  if (goal_x != goal_y) {
    throw Error(ErrorCode::ParseError, "mission.goal_x and mission.goal_y must be set together");
  }
  cfg.goal_set = goal_x;
  if (start.x || start.y || start.heading) {
    if (!(start.x && start.y && start.heading)) {
      throw Error(ErrorCode::ParseError, "mission.start_x/_y/_heading_deg must be set together");
    }
    cfg.start = Pose(*start.x, *start.y, *start.heading * kDegree);
  }
  // The filter predicts with the same motion model the plant uses.
  cfg.mission.filter.motion = cfg.mission.noise;
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(read_text_file(path)); }

// ---------------------------------------------------------------------------
// Reports

ordered_json report_json(const MissionReport& r) {
  ordered_json j;
  j["reached"] = r.reached;
  j["final_error"] = r.final_error;
  j["path_length_executed"] = r.path_length_executed;
  j["path_length_planned"] = r.path_length_planned;
  j["collisions_detected"] = r.collisions_detected;
  j["replans"] = r.replans;
  j["localization_iterations"] = r.localization_iterations;
  j["sim_steps"] = r.sim_steps;
  j["unrecovered_collisions"] = r.unrecovered_collisions;
  j["max_weight_sum_error"] = r.max_weight_sum_error;
  if (!r.failure.empty()) j["failure"] = r.failure;
  return j;
}

ordered_json batch_summary_json(const BatchSummary& summary) {
  ordered_json j;
  j["runs"] = summary.runs.size();
  ordered_json maps = ordered_json::array();
  for (const MapSummary& s : summary.maps) {
    ordered_json m;
    m["map"] = s.map;
    m["runs"] = s.runs;
    m["successes"] = s.successes;
    m["success_rate"] = s.success_rate;
    m["mean_final_error"] = s.mean_final_error;
    m["median_final_error"] = s.median_final_error;
    m["max_final_error"] = s.max_final_error;
    m["mean_path_length"] = s.mean_path_length;
    m["total_collisions"] = s.total_collisions;
    m["unrecovered_collisions"] = s.unrecovered_collisions;
    m["collisions_flagged"] = s.collisions_flagged;
    maps.push_back(std::move(m));
  }
  j["maps"] = std::move(maps);
  return j;
}

void write_batch_runs_csv(std::ostream& out, const BatchSummary& summary) {
  out << "map,seed,start_x,start_y,start_theta,reached,final_error,path_length_executed,"
         "collisions_detected,replans,localization_iterations,sim_steps,unrecovered_collisions\n";
  char buf[320];
  for (const BatchRun& run : summary.runs) {
    const MissionReport& r = run.report;
    std::snprintf(buf, sizeof buf, ",%llu,%.6f,%.6f,%.6f,%d,%.17g,%.17g,%d,%d,%d,%ld,%d\n",
                  static_cast<unsigned long long>(run.seed), run.start.position.x,
                  run.start.position.y, run.start.heading, r.reached ? 1 : 0, r.final_error,
                  r.path_length_executed, r.collisions_detected, r.replans,
                  r.localization_iterations, r.sim_steps, r.unrecovered_collisions);
    out << run.map << buf;
  }
}

std::vector<Point2> read_trace_truth(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "trace CSV: empty");
  auto split = [](const std::string& row) {
    std::vector<std::string> cells;
    std::stringstream ss(row);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    return cells;
  };
  const auto header = split(line);
  const auto col = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error(ErrorCode::ParseError, std::string("trace CSV: no ") + name);
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t cx = col("truth_x"), cy = col("truth_y");
  std::vector<Point2> pts;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() <= std::max(cx, cy)) throw Error(ErrorCode::ParseError, "trace CSV: short row");
    try {
      pts.push_back({std::stod(cells[cx]), std::stod(cells[cy])});
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, "trace CSV: bad number");
    }
  }
  return pts;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::ParseError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::InvalidArgument, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::InvalidArgument, "write failed for " + path.string());
}

}  // namespace sonarnav
