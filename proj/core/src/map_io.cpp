#include "ssd/map_io.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ssd {
namespace {

constexpr std::string_view kHeader = "ssdmap v1";

constexpr std::string_view kGatheringDefault = R"(ssdmap v1
name: gathering_default
######################################
#...A.A.A.A.A.A.A.A.A.A.A..A.A.A.A.A.#
####################################A#
#A..A.A.A.A.A.A.A.A.A.A.A..A.A.A.A.A.#
#.####################################
#A.A.A.A.A.A.A.A.A.A.A..A.A.A.A.A.A.A#
####################################.#
#.A.A..A.A.A.A.A.A.A.A.A.A.A..A.A.A.A#
#A####################################
#.A.A.A.A.A.A.A.A..A.A.A.A.A.A.A.A.A.#
####################################A#
#A.A.A.A..A.A.A.A.A.A.A.A.A.A.A..A.A.#
#.####################################
#A.A.A.A.A.A.A..A.A.A.A.A.A.012345678#
####################################9#
######################################)";

constexpr std::string_view kCleanupDefault = R"(ssdmap v1
name: cleanup_default
##############################
#~~~~~~~~=ooooooooooooooooooo#
#~~~~~~~~=ooooooooooooooooooo#
#~~~~~~~~=oooo0ooooo1ooooo8oo#
#~~~~~~~~=ooooooooooooooooooo#
#~~~~~~~~=ooooooAAAAAAAAAAooo#
#~~~~~~~~=ooooooAAAAAAAAAAooo#
#~~~~~~~~=ooooooAAAAAAAAAAooo#
#~~~~~~~~=ooo4ooAAAAAAAAAAo6o#
#~~~~~~~~=ooo5ooAAAAAAAAAAo7o#
#~~~~~~~~=ooooooAAAAAAAAAAooo#
#~~~~~~~~=ooooooAAAAAAAAAAooo#
#~~~~~~~~=ooooooAAAAAAAAAAooo#
#~~~~~~~~=ooooooooooooooooooo#
#~~~~~~~~=oo9oooo2ooooo3ooooo#
#~~~~~~~~=ooooooooooooooooooo#
#~~~~~~~~=ooooooooooooooooooo#
##############################)";

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) lines.push_back(cur);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

GridMap parse_map(std::string_view text, std::string default_name) {
  auto lines = split_lines(text);
  if (lines.empty() || lines.front() != kHeader) {
    throw ConfigError("map: missing '" + std::string(kHeader) + "' header line");
  }
  GridMap map;
  map.name = std::move(default_name);
  std::size_t first = 1;
  if (lines.size() > 1 && lines[1].rfind("name:", 0) == 0) {
    std::string n = lines[1].substr(5);
    n.erase(0, n.find_first_not_of(' '));
    map.name = n;
    first = 2;
  }
  if (first >= lines.size()) throw ConfigError("map '" + map.name + "': no rows");

  const int height = static_cast<int>(lines.size() - first);
  const int width = static_cast<int>(lines[first].size());
  bool cleanup = false;
  for (std::size_t i = first; i < lines.size(); ++i) {
    if (static_cast<int>(lines[i].size()) != width) {
      throw ConfigError("map '" + map.name + "': row " + std::to_string(i - first) +
                        " has length " + std::to_string(lines[i].size()) + ", expected " +
                        std::to_string(width));
    }
    if (lines[i].find_first_of("~=o") != std::string::npos) cleanup = true;
  }
  const CellKind open = cleanup ? CellKind::Orchard : CellKind::Floor;

  map.height = height;
  map.width = width;
  map.cells = Grid2D<CellKind>(height, width, CellKind::Floor);
  std::vector<std::pair<int, Cell>> numbered;
  std::vector<Cell> unnumbered;
  for (int r = 0; r < height; ++r) {
    const std::string& row = lines[first + static_cast<std::size_t>(r)];
    for (int c = 0; c < width; ++c) {
      const char ch = row[static_cast<std::size_t>(c)];
      const Cell cell{r, c};
      switch (ch) {
        case '#': map.cells[cell] = CellKind::Wall; break;
        case '.': map.cells[cell] = CellKind::Floor; break;
        case '~': map.cells[cell] = CellKind::River; break;
        case '=': map.cells[cell] = CellKind::Stream; break;
        case 'o': map.cells[cell] = CellKind::Orchard; break;
        case 'A':
          map.cells[cell] = open;
          map.apple_spawns.push_back(cell);
          break;
        case 'P':
          map.cells[cell] = open;
          unnumbered.push_back(cell);
          break;
        default:
          if (ch >= '0' && ch <= '9') {
            map.cells[cell] = open;
            numbered.emplace_back(ch - '0', cell);
            break;
          }
          throw ConfigError("map '" + map.name + "': unknown cell character '" +
                            std::string(1, ch) + "' at (" + std::to_string(r) + "," +
                            std::to_string(c) + ")");
      }
    }
  }
  std::stable_sort(numbered.begin(), numbered.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 0; i < numbered.size(); ++i) {
    if (i > 0 && numbered[i].first == numbered[i - 1].first) {
      throw ConfigError("map '" + map.name + "': agent spawn digit " +
                        std::to_string(numbered[i].first) + " appears twice");
    }
    map.agent_spawns.push_back(numbered[i].second);
  }
  map.agent_spawns.insert(map.agent_spawns.end(), unnumbered.begin(), unnumbered.end());
  map.validate();
  return map;
}

std::string format_map(const GridMap& map) {
  Grid2D<char> chars(map.height, map.width, '.');
  for (std::size_t i = 0; i < map.cells.data().size(); ++i) {
    char ch = '.';
    switch (map.cells.data()[i]) {
      case CellKind::Floor: ch = '.'; break;
      case CellKind::Wall: ch = '#'; break;
      case CellKind::River: ch = '~'; break;
      case CellKind::Stream: ch = '='; break;
      case CellKind::Orchard: ch = 'o'; break;
    }
    chars.data()[i] = ch;
  }
  for (const Cell& c : map.apple_spawns) chars[c] = 'A';
  for (std::size_t i = 0; i < map.agent_spawns.size(); ++i) {
    chars[map.agent_spawns[i]] = i < 10 ? static_cast<char>('0' + i) : 'P';
  }
  std::ostringstream out;
  out << kHeader << '\n' << "name: " << map.name << '\n';
  for (int r = 0; r < map.height; ++r) {
    for (int c = 0; c < map.width; ++c) out << chars[{r, c}];
    out << '\n';
  }
  return out.str();
}

GridMap load_map_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("map: cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_map(buf.str(), std::filesystem::path(path).stem().string());
}

GridMap builtin_map(std::string_view name) {
  if (name == "gathering_default") return parse_map(kGatheringDefault);
  if (name == "cleanup_default") return parse_map(kCleanupDefault);
  throw ConfigError("unknown builtin map '" + std::string(name) + "'");
}

std::vector<std::string> builtin_map_names() { return {"gathering_default", "cleanup_default"}; }

GridMap resolve_map(const std::string& name_or_path) {
  const auto names = builtin_map_names();
  if (std::find(names.begin(), names.end(), name_or_path) != names.end()) {
    return builtin_map(name_or_path);
  }
  return load_map_file(name_or_path);
}

}  // namespace ssd
