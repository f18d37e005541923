#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sonarnav/controller.hpp"
#include "sonarnav/geometry.hpp"

namespace sonarnav {

/// Map JSON as written on disk, before invariant checks.
struct MapDocument {
  Polygon boundary;
  std::vector<Polygon> obstacles;
  std::optional<Point2> goal;  // optional default mission goal
};

/// Parses {"boundary": [[x,y],...], "obstacles": [[[x,y],...],...], "goal": [x,y]}.
/// Throws Error(ParseError) on malformed JSON or schema.
MapDocument parse_map_json(std::string_view text);
MapDocument load_map_document(const std::filesystem::path& path);
/// Parsed and validated; throws Error(ParseError) or Error(InvalidMap).
NamedMap load_map(const std::filesystem::path& path);
void write_map_json(std::ostream& out, const ArenaMap& map, std::optional<Point2> goal = {});

/// Flat "dotted.key = value" config. Blank lines and '#' comments are
/// ignored; unknown keys and malformed values throw Error(ParseError).
struct RunConfig {
  MissionConfig mission;
  bool goal_set = false;
  std::optional<Pose> start;  // run only; batch draws starts from seeds
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

struct ConfigKey {
  std::string key;
  std::string default_value;
  std::string meaning;
};
/// Every recognised key with its default, for help text and docs.
std::vector<ConfigKey> config_keys();

nlohmann::ordered_json report_json(const MissionReport& report);
nlohmann::ordered_json batch_summary_json(const BatchSummary& summary);
void write_batch_runs_csv(std::ostream& out, const BatchSummary& summary);

/// Truth positions from a trace CSV, in row order, for the executed-path
/// layer. Throws Error(ParseError).
std::vector<Point2> read_trace_truth(std::istream& in);

std::string read_text_file(const std::filesystem::path& path);
/// Throws Error(InvalidArgument) when the file cannot be written.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace sonarnav
