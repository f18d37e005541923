#include "sonarnav/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "sonarnav/controller.hpp"
#include "sonarnav/error.hpp"
#include "sonarnav/io.hpp"
#include "sonarnav/svg.hpp"

namespace sonarnav {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kBenchStream = 0x62656e63;
constexpr std::uint64_t kPlanStream = 0x706c616e;

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string config;
  std::vector<std::string> maps;
};

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

RunConfig load_run_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? parse_config("") : load_config(g.config);
  if (g.seed) cfg.mission.seed = *g.seed;
  return cfg;
}

Point2 resolve_goal(const RunConfig& cfg, const NamedMap& nm) {
  if (cfg.goal_set) return cfg.mission.goal;
  if (std::isnan(nm.goal.x)) {
    throw InputError("no goal: set mission.goal_x/goal_y or add \"goal\" to " + nm.name);
  }
  return nm.goal;
}

fs::path prepare_out_dir(const std::string& out) {
  const fs::path dir = out.empty() ? fs::path(".") : fs::path(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".sonarnav_probe";
  {
    std::ofstream f(probe);
    if (!f) throw InputError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
  return dir;
}

template <class Fn>
std::string to_text(Fn&& fn) {
  std::ostringstream os;
  fn(os);
  return os.str();
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream ss(text);
  std::string item;
  auto number = [](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw InputError("bad seed: '" + s + "'");
    }
    return std::stoull(s);
  };
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    if (dash == std::string::npos) {
      seeds.push_back(number(item));
      continue;
    }
    const std::uint64_t a = number(item.substr(0, dash));
    const std::uint64_t b = number(item.substr(dash + 1));
    if (b < a || b - a > 1000000) throw InputError("bad seed range: '" + item + "'");
    for (std::uint64_t s = a; s <= b; ++s) seeds.push_back(s);
  }
  return seeds;
}

// ---------------------------------------------------------------------------

int cmd_validate(const Globals& g, std::ostream& out) {
  if (g.maps.empty()) throw InputError("validate needs --map");
  int status = kExitOk;
  for (const std::string& path : g.maps) {
    const MapDocument doc = load_map_document(path);
    const auto violations = validate_map(doc.boundary, doc.obstacles);
    if (violations.empty()) {
      out << path << ": OK\n";
      continue;
    }
    status = kExitValidation;
    for (const MapViolation& v : violations) out << path << ": " << v.message << '\n';
  }
  return status;
}

int cmd_run(const Globals& g, std::ostream& out) {
  if (g.maps.size() != 1) throw InputError("run needs exactly one --map");
  const NamedMap nm = load_map(g.maps.front());
  RunConfig cfg = load_run_config(g);
  cfg.mission.goal = resolve_goal(cfg, nm);
  const fs::path dir = prepare_out_dir(g.out);
  const Pose start = cfg.start ? *cfg.start : batch_start_pose(nm.map, cfg.mission, cfg.mission.seed);

  MissionArtifacts art;
  const MissionReport report = run_mission(nm.map, start, cfg.mission, &art);

  const std::string report_text = report_json(report).dump(2) + "\n";
  write_text_file(dir / "report.json", report_text);
  write_text_file(dir / "trace.csv", to_text([&](std::ostream& os) { write_trace_csv(os, art.trace.rows()); }));
  write_text_file(dir / "scan.csv", to_text([&](std::ostream& os) { write_scan_csv(os, art.last_scan); }));
  write_text_file(dir / "particles.csv",
                  to_text([&](std::ostream& os) { write_particles_csv(os, art.last_particles); }));
  if (!art.plans.empty()) {
    write_text_file(dir / "path.json",
                    to_text([&](std::ostream& os) { write_path_json(os, art.plans.back()); }));
  }
  out << report_text;
  return report.reached ? kExitOk : kExitMission;
}

int cmd_batch(const Globals& g, const std::string& seed_text, bool serial, bool traces,
              std::ostream& out) {
  if (g.maps.empty()) throw InputError("batch needs at least one --map");
  std::vector<std::uint64_t> seeds;
  if (!seed_text.empty()) {
    seeds = parse_seeds(seed_text);
  } else if (g.seed) {
    seeds.push_back(*g.seed);
  }
  if (seeds.empty()) throw InputError("batch needs at least one seed (--seeds or --seed)");

  const RunConfig cfg = load_run_config(g);
  std::vector<NamedMap> maps;
  for (const std::string& path : g.maps) {
    NamedMap nm = load_map(path);
    nm.goal = resolve_goal(cfg, nm);
    maps.push_back(std::move(nm));
  }
  const fs::path dir = prepare_out_dir(g.out);

  const BatchSummary summary = run_batch(maps, cfg.mission, seeds, traces, !serial);
  const std::string summary_text = batch_summary_json(summary).dump(2) + "\n";
  write_text_file(dir / "summary.json", summary_text);
  write_text_file(dir / "runs.csv",
                  to_text([&](std::ostream& os) { write_batch_runs_csv(os, summary); }));
  if (traces) {
    const fs::path tdir = dir / "traces";
    fs::create_directories(tdir);
    for (const BatchRun& run : summary.runs) {
      write_text_file(tdir / (run.map + "_seed" + std::to_string(run.seed) + ".csv"),
                      to_text([&](std::ostream& os) { write_trace_csv(os, run.trace); }));
    }
  }
  out << summary_text;
  return kExitOk;
}

int cmd_bench_planner(const Globals& g, int trials, std::ostream& out) {
  if (g.maps.empty()) throw InputError("bench-planner needs at least one --map");
  if (trials < 1) throw InputError("--trials must be at least 1");
  const RunConfig cfg = load_run_config(g);
  const std::uint64_t seed = cfg.mission.seed;
  const PlanConfig& plan = cfg.mission.plan;

  std::ostringstream table;
  table << "map,trial,start_x,start_y,goal_x,goal_y,direct,sampling_status,sampling_length,"
           "sampling_turns,sampling_intermediates,astar_status,astar_length,astar_turns\n";
  std::ostringstream agg;
  agg << "map,trials,sampling_found,astar_found,both_found,sampling_shorter_or_equal,"
         "sampling_fewer_or_equal_turns,direct_trials,direct_sampling_shorter_or_equal\n";

  char buf[256];
  for (const std::string& path : g.maps) {
    const NamedMap nm = load_map(path);
    const ArenaMap cspace = inset_polygon(nm.map, plan.cspace_offset());
    int s_found = 0, a_found = 0, both = 0, shorter = 0, fewer = 0, direct_n = 0, direct_ok = 0;
    for (int t = 0; t < trials; ++t) {
      Rng inst = Rng::derive(seed + static_cast<std::uint64_t>(t), kBenchStream);
      const auto pts = sample_free_points(cspace, 2, inst);
      const Point2 s = pts[0], q = pts[1];
      const bool direct = segment_clear(s, q, cspace);

      std::optional<Path> sp;
      std::optional<GridPath> ap;
      Rng prng = Rng::derive(seed + static_cast<std::uint64_t>(t), kPlanStream);
      try {
        sp = plan_path(s, q, cspace, plan, prng);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoPathFound) throw;
      }
      try {
        ap = astar_plan(s, q, cspace, plan.astar_resolution);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::NoPathFound) throw;
      }
      const double sl = sp ? sp->length : std::nan("");
      const double al = ap ? ap->length() : std::nan("");
      const int st = sp ? turn_count(*sp) : -1;
      const int at = ap ? turn_count(*ap) : -1;
      std::snprintf(buf, sizeof buf, ",%d,%.6f,%.6f,%.6f,%.6f,%d,%s,%.6f,%d,%d,%s,%.6f,%d\n", t,
                    s.x, s.y, q.x, q.y, direct ? 1 : 0, sp ? "ok" : "no_path", sl, st,
                    sp ? sp->intermediates : -1, ap ? "ok" : "no_path", al, at);
      table << nm.name << buf;

      s_found += sp ? 1 : 0;
      a_found += ap ? 1 : 0;
      if (sp && ap) {
        ++both;
        shorter += sl <= al + 1e-9 ? 1 : 0;
        fewer += st <= at ? 1 : 0;
        if (direct) {
          ++direct_n;
          direct_ok += sl <= al + 1e-9 ? 1 : 0;
        }
      }
    }
    auto rate = [](int k, int n) { return n ? static_cast<double>(k) / n : std::nan(""); };
    std::snprintf(buf, sizeof buf, ",%d,%d,%d,%d,%.4f,%.4f,%d,%.4f\n", trials, s_found, a_found,
                  both, rate(shorter, both), rate(fewer, both), direct_n, rate(direct_ok, direct_n));
    agg << nm.name << buf;
  }

  if (!g.out.empty()) {
    const fs::path dir = prepare_out_dir(g.out);
    write_text_file(dir / "bench_planner.csv", table.str());
    write_text_file(dir / "bench_planner_summary.csv", agg.str());
  }
  out << agg.str();
  return kExitOk;
}

struct RenderArgs {
  std::string layers = "map";
  double scale = 4.0;
  double margin = 10.0;
  std::string scan, pose, particles, path, trace;
};

Pose parse_pose(const std::string& text) {
  std::stringstream ss(text);
  std::string cell;
  std::vector<double> v;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(cell, &used));
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw InputError("bad --pose '" + text + "' (expected x,y,heading_deg)");
    }
  }
  if (v.size() != 3) throw InputError("bad --pose '" + text + "' (expected x,y,heading_deg)");
  return Pose(v[0], v[1], v[2] * kDegree);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path);
  return in;
}

int cmd_render(const Globals& g, const RenderArgs& a, std::ostream& out) {
  RenderSpec spec;
  spec.scale = a.scale;
  spec.margin = a.margin;
  std::stringstream ls(a.layers);
  std::string name;
  while (std::getline(ls, name, ',')) {
    if (!name.empty()) spec.layers.push_back(parse_layer(name));
  }

  std::vector<std::string> inputs;
  RenderInputs in;
  if (g.maps.size() > 1) throw InputError("render takes one --map");
  if (!g.maps.empty()) {
    in.map = load_map(g.maps.front()).map;
    inputs.push_back(g.maps.front());
    if (std::find(spec.layers.begin(), spec.layers.end(), Layer::Cspace) != spec.layers.end()) {
      const RunConfig cfg = load_run_config(g);
      in.cspace = inset_polygon(*in.map, cfg.mission.plan.cspace_offset());
    }
  }
  if (!a.scan.empty()) {
    auto f = open_input(a.scan);
    in.scan = read_scan_csv(f);
    inputs.push_back(a.scan);
  }
  if (!a.pose.empty()) in.scan_pose = parse_pose(a.pose);
  if (!a.particles.empty()) {
    auto f = open_input(a.particles);
    in.particles = read_particles_csv(f);
    inputs.push_back(a.particles);
  }
  if (!a.path.empty()) {
    auto f = open_input(a.path);
    in.planned_path = read_path_json(f).waypoints;
    inputs.push_back(a.path);
  }
  if (!a.trace.empty()) {
    auto f = open_input(a.trace);
    in.executed_path = read_trace_truth(f);
    inputs.push_back(a.trace);
  }

  const std::string svg = render_svg(spec, in);
  if (g.out.empty() || g.out == "-") {
    out << svg;
    return kExitOk;
  }
  const fs::path target(g.out);
  std::error_code ec;
  for (const std::string& input : inputs) {
    if (fs::exists(target) && fs::equivalent(target, input, ec)) {
      throw InputError("refusing to overwrite input " + input);
    }
  }
  if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
  write_text_file(target, svg);
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ultrasonic-only robot localisation and navigation simulator", "sonarnav"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "Random seed");
  app.add_option("--out", g.out, "Output directory (file for render)");
  app.add_option("--config", g.config, "Key-value config file");
  app.add_option("--map", g.maps, "Map JSON file (repeatable)");

  auto* validate = app.add_subcommand("validate", "Check map invariants");
  auto* run = app.add_subcommand("run", "Run one seeded mission");
  auto* batch = app.add_subcommand("batch", "Run a seeded batch of missions");
  std::string seeds;
  bool serial = false;
  bool no_traces = false;
  batch->add_option("--seeds", seeds, "Seed list, e.g. 0-19 or 1,2,5");
  batch->add_flag("--serial", serial, "Run missions on one thread");
  batch->add_flag("--no-traces", no_traces, "Skip per-run trace CSVs");
  auto* bench = app.add_subcommand("bench-planner", "Compare sampling planner and grid A*");
  int trials = 50;
  bench->add_option("--trials", trials, "Instances per map");
  auto* render = app.add_subcommand("render", "Render an SVG");
  RenderArgs ra;
  render->add_option("--layers", ra.layers,
                     "Comma list of map,cspace,scan,particles,planned-path,executed-path");
  render->add_option("--scale", ra.scale, "Pixels per cm");
  render->add_option("--margin", ra.margin, "Margin in cm");
  render->add_option("--scan", ra.scan, "Scan CSV");
  render->add_option("--pose", ra.pose, "Scan pose x,y,heading_deg");
  render->add_option("--particles", ra.particles, "Particles CSV");
  render->add_option("--path", ra.path, "Path JSON");
  render->add_option("--trace", ra.trace, "Trace CSV (executed path)");
  for (CLI::App* sub : {validate, run, batch, bench, render}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }
  if (seed_opt->count() > 0) g.seed = seed_value;

  try {
    if (*validate) return cmd_validate(g, out);
    if (*run) return cmd_run(g, out);
    if (*batch) return cmd_batch(g, seeds, serial, !no_traces, out);
    if (*bench) return cmd_bench_planner(g, trials, out);
    if (*render) return cmd_render(g, ra, out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == ErrorCode::MissionFailed ? kExitMission : kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace sonarnav
