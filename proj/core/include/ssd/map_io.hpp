#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ssd/grid.hpp"

namespace ssd {

// Text map format, first line "ssdmap v1", optional "name: <id>" line, then one
// character per cell:
//   '#' Wall   '.' Floor   '~' River   '=' Stream   'o' Orchard
//   'A' apple spawn     '0'-'9' ordered agent spawn     'P' agent spawn
// 'A' and agent spawns sit on Orchard in maps that contain any of '~', '=',
// 'o', and on Floor otherwise. 'P' spawns follow the digit spawns in
// row-major order.
GridMap parse_map(std::string_view text, std::string default_name = "unnamed");
std::string format_map(const GridMap& map);
GridMap load_map_file(const std::string& path);

// Built-in maps: "gathering_default" (38x16) and "cleanup_default" (30x18).
GridMap builtin_map(std::string_view name);
std::vector<std::string> builtin_map_names();

// Accepts a builtin name or a path to a map file.
GridMap resolve_map(const std::string& name_or_path);

}  // namespace ssd
