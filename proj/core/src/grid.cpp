#include "ssd/grid.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>

namespace ssd {

const char* to_string(Orientation o) {
  switch (o) {
    case Orientation::N: return "N";
    case Orientation::E: return "E";
    case Orientation::S: return "S";
    case Orientation::W: return "W";
  }
  return "?";
}

const char* to_string(Action a) {
  switch (a) {
    case Action::Forward: return "FORWARD";
    case Action::Backward: return "BACKWARD";
    case Action::StepLeft: return "STEP_LEFT";
    case Action::StepRight: return "STEP_RIGHT";
    case Action::RotateLeft: return "ROTATE_LEFT";
    case Action::RotateRight: return "ROTATE_RIGHT";
    case Action::Beam: return "BEAM";
    case Action::Stand: return "STAND";
    case Action::Clean: return "CLEAN";
  }
  return "?";
}

bool GridMap::has_water() const {
  return std::any_of(cells.data().begin(), cells.data().end(), [](CellKind k) {
    return k == CellKind::River || k == CellKind::Stream || k == CellKind::Orchard;
  });
}

Grid2D<std::uint8_t> GridMap::wall_mask() const {
  Grid2D<std::uint8_t> mask(height, width, 0);
  for (std::size_t i = 0; i < cells.data().size(); ++i) {
    mask.data()[i] = cells.data()[i] == CellKind::Wall ? 1 : 0;
  }
  return mask;
}

std::vector<Cell> GridMap::cells_of(CellKind kind) const {
  std::vector<Cell> out;
  for (std::size_t i = 0; i < cells.data().size(); ++i) {
    if (cells.data()[i] == kind) out.push_back(cells.cell_at(i));
  }
  return out;
}

void GridMap::validate() const {
  if (height <= 0 || width <= 0 || cells.rows() != height || cells.cols() != width) {
    throw ConfigError("map '" + name + "': inconsistent dimensions");
  }
  const bool cleanup = has_water();
  const CellKind apple_kind = cleanup ? CellKind::Orchard : CellKind::Floor;
  for (const Cell& c : apple_spawns) {
    if (!in_bounds(c) || cells[c] != apple_kind) {
      throw ConfigError("map '" + name + "': apple spawn (" + std::to_string(c.row) + "," +
                        std::to_string(c.col) + ") is not on a " +
                        (cleanup ? "Orchard" : "Floor") + " cell");
    }
  }
  std::set<Cell> seen;
  for (const Cell& c : agent_spawns) {
    if (!in_bounds(c) || cells[c] == CellKind::Wall) {
      throw ConfigError("map '" + name + "': agent spawn (" + std::to_string(c.row) + "," +
                        std::to_string(c.col) + ") is out of bounds or on a wall");
    }
    if (!seen.insert(c).second) throw ConfigError("map '" + name + "': duplicate agent spawn");
  }
}

void BeamSpec::validate() const {
  if (length < 1) throw ConfigError("beam length must be >= 1");
  if (width < 1 || width % 2 == 0) throw ConfigError("beam width must be odd and >= 1");
  if (hits_to_tag < 1) throw ConfigError("beam hits_to_tag must be >= 1");
  if (timeout_steps < 0) throw ConfigError("beam timeout_steps must be >= 0");
}

std::vector<Cell> beam_footprint(Cell origin, Orientation orient, int length, int width,
                                 const Grid2D<std::uint8_t>& walls) {
  if (!walls.in_bounds(origin)) throw PreconditionError("beam_footprint: origin out of bounds");
  const Cell fwd = heading(orient);
  const Cell right = heading(rotate_right(orient));
  const int half = width / 2;

  // Per-lane reach: number of cells before the first wall or edge.
  std::vector<int> reach(static_cast<std::size_t>(width), 0);
  for (int lane = -half; lane <= half; ++lane) {
    int r = 0;
    for (int d = 1; d <= length; ++d) {
      const Cell c{origin.row + d * fwd.row + lane * right.row,
                   origin.col + d * fwd.col + lane * right.col};
      if (!walls.in_bounds(c) || walls[c]) break;
      r = d;
    }
    reach[static_cast<std::size_t>(lane + half)] = r;
  }

  std::vector<Cell> out;
  out.reserve(static_cast<std::size_t>(length) * width);
  for (int d = 1; d <= length; ++d) {
    for (int lane = -half; lane <= half; ++lane) {
      if (d > reach[static_cast<std::size_t>(lane + half)]) continue;
      out.push_back({origin.row + d * fwd.row + lane * right.row,
                     origin.col + d * fwd.col + lane * right.col});
    }
  }
  return out;
}

std::vector<Cell> beam_footprint(Cell origin, Orientation orient, const BeamSpec& spec,
                                 const Grid2D<std::uint8_t>& walls) {
  return beam_footprint(origin, orient, spec.length, spec.width, walls);
}

std::optional<FirstStep> bfs_first_step(Cell start, std::span<const Cell> targets,
                                        const Grid2D<std::uint8_t>& walls) {
  if (targets.empty()) {
    if (!walls.in_bounds(start)) throw PreconditionError("bfs_first_step: start out of bounds");
    return std::nullopt;
  }
  Grid2D<std::uint8_t> mask(walls.rows(), walls.cols(), 0);
  for (const Cell& t : targets) {
    if (mask.in_bounds(t)) mask[t] = 1;
  }
  return bfs_first_step(
      walls.rows(), walls.cols(), start, [&](Cell c) { return mask[c] != 0; },
      [&](Cell c) { return walls[c] == 0; });
}

Action direction_to_action(int dr, int dc, Orientation orient) {
  if (dr == 0 && dc == 0) return Action::Stand;
  if (std::abs(dr) + std::abs(dc) != 1) {
    throw PreconditionError("direction_to_action: (" + std::to_string(dr) + "," +
                            std::to_string(dc) + ") is not a unit step");
  }
  const Cell step{dr, dc};
  if (step == heading(orient)) return Action::Forward;
  if (step == heading(rotate_right(rotate_right(orient)))) return Action::Backward;
  if (step == heading(rotate_left(orient))) return Action::StepLeft;
  return Action::StepRight;
}

int rotation_distance(Orientation cur, Orientation target) {
  const int diff = (static_cast<int>(target) - static_cast<int>(cur) + 4) % 4;
  return diff == 3 ? 1 : diff;
}

}  // namespace ssd
