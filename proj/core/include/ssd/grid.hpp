#pragma once

#include <array>
#include <compare>
#include <concepts>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssd/errors.hpp"

namespace ssd {

// Row 0 is the top of the map; N decreases the row, E increases the column.
enum class Orientation : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };

enum class Action : std::uint8_t {
  Forward = 0,
  Backward = 1,
  StepLeft = 2,
  StepRight = 3,
  RotateLeft = 4,
  RotateRight = 5,
  Beam = 6,
  Stand = 7,
  Clean = 8,
};

inline constexpr int kNumGatheringActions = 8;
inline constexpr int kNumCleanupActions = 9;

enum class CellKind : std::uint8_t { Floor, Wall, River, Stream, Orchard };

struct Cell {
  int row = 0;
  int col = 0;

  friend constexpr auto operator<=>(const Cell&, const Cell&) = default;
  constexpr Cell operator+(const Cell& o) const { return {row + o.row, col + o.col}; }
};

// Position of agents that are currently removed from the grid.
inline constexpr Cell kOffGrid{-1, -1};

constexpr Orientation rotate_left(Orientation o) {
  return static_cast<Orientation>((static_cast<int>(o) + 3) % 4);
}
constexpr Orientation rotate_right(Orientation o) {
  return static_cast<Orientation>((static_cast<int>(o) + 1) % 4);
}

// Unit (dr, dc) of a heading.
constexpr Cell heading(Orientation o) {
  constexpr std::array<Cell, 4> kSteps{{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};
  return kSteps[static_cast<int>(o)];
}

// BFS expansion order used by every pathfinding helper.
inline constexpr std::array<Cell, 4> kNeighborOrder{{{-1, 0}, {0, 1}, {1, 0}, {0, -1}}};

const char* to_string(Orientation o);
const char* to_string(Action a);

template <class T>
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(int rows, int cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool in_bounds(Cell c) const { return c.row >= 0 && c.row < rows_ && c.col >= 0 && c.col < cols_; }

  decltype(auto) operator[](Cell c) { return data_[index(c)]; }
  decltype(auto) operator[](Cell c) const { return data_[index(c)]; }
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.row) * cols_ + c.col; }
  Cell cell_at(std::size_t i) const {
    return {static_cast<int>(i / cols_), static_cast<int>(i % cols_)};
  }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

struct GridMap {
  std::string name;
  int height = 0;
  int width = 0;
  Grid2D<CellKind> cells;
  std::vector<Cell> apple_spawns;
  std::vector<Cell> agent_spawns;

  bool in_bounds(Cell c) const { return cells.in_bounds(c); }
  bool is_wall(Cell c) const { return !in_bounds(c) || cells[c] == CellKind::Wall; }
  bool has_water() const;  // any River/Stream/Orchard cell, i.e. a Cleanup map
  Grid2D<std::uint8_t> wall_mask() const;
  std::vector<Cell> cells_of(CellKind kind) const;

  // Throws ConfigError when a spawn is out of bounds, on a wall, on the wrong
  // cell kind, or when agent spawns repeat.
  void validate() const;
};

struct BeamSpec {
  int length = 1;
  int width = 1;
  double fire_cost = 0.0;
  double hit_penalty = 0.0;
  int hits_to_tag = 1;
  int timeout_steps = 25;

  void validate() const;
  friend bool operator==(const BeamSpec&, const BeamSpec&) = default;
};

// Cells swept by a beam fired from `origin` facing `orient`. Lanes are
// truncated independently at the first wall or map edge. Ordered by distance,
// then lane from the shooter's left to right.
std::vector<Cell> beam_footprint(Cell origin, Orientation orient, const BeamSpec& spec,
                                 const Grid2D<std::uint8_t>& walls);
// Same geometry with explicit length/width.
std::vector<Cell> beam_footprint(Cell origin, Orientation orient, int length, int width,
                                 const Grid2D<std::uint8_t>& walls);

struct FirstStep {
  int dr = 0;
  int dc = 0;
  int dist = 0;
  Cell target{};  // the target the path leads to
  friend bool operator==(const FirstStep&, const FirstStep&) = default;
};

// Breadth-first search from `start` over cells accepted by `passable`.
// Neighbors expand in N,E,S,W order; the first target dequeued wins, and the
// returned step is the first move of the BFS-tree path to it.
template <class IsTarget, class Passable>
  requires std::predicate<IsTarget, Cell> && std::predicate<Passable, Cell>
std::optional<FirstStep> bfs_first_step(int rows, int cols, Cell start, IsTarget&& is_target,
                                        Passable&& passable) {
  if (start.row < 0 || start.row >= rows || start.col < 0 || start.col >= cols) {
    throw PreconditionError("bfs_first_step: start out of bounds");
  }
  if (is_target(start)) return FirstStep{0, 0, 0, start};

  const std::size_t n = static_cast<std::size_t>(rows) * cols;
  // first_dir holds 1 + index into kNeighborOrder of the root move; 0 = unvisited.
  std::vector<std::uint8_t> first_dir(n, 0);
  std::vector<int> dist(n, 0);
  auto idx = [cols](Cell c) { return static_cast<std::size_t>(c.row) * cols + c.col; };

  std::deque<Cell> queue;
  const std::size_t start_idx = idx(start);
  first_dir[start_idx] = 0xFF;
  for (std::size_t k = 0; k < kNeighborOrder.size(); ++k) {
    const Cell next = start + kNeighborOrder[k];
    if (next.row < 0 || next.row >= rows || next.col < 0 || next.col >= cols) continue;
    if (!passable(next)) continue;
    first_dir[idx(next)] = static_cast<std::uint8_t>(k + 1);
    dist[idx(next)] = 1;
    queue.push_back(next);
  }
  while (!queue.empty()) {
    const Cell cur = queue.front();
    queue.pop_front();
    const std::size_t ci = idx(cur);
    if (is_target(cur)) {
      const Cell step = kNeighborOrder[first_dir[ci] - 1];
      return FirstStep{step.row, step.col, dist[ci], cur};
    }
    for (const Cell& d : kNeighborOrder) {
      const Cell next = cur + d;
      if (next.row < 0 || next.row >= rows || next.col < 0 || next.col >= cols) continue;
      const std::size_t ni = idx(next);
      if (first_dir[ni] != 0 || !passable(next)) continue;
      first_dir[ni] = first_dir[ci];
      dist[ni] = dist[ci] + 1;
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

// Convenience overload: targets given as a list, walls as the only obstacle.
std::optional<FirstStep> bfs_first_step(Cell start, std::span<const Cell> targets,
                                        const Grid2D<std::uint8_t>& walls);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct SourceField {
  Grid2D<int> dist;
  Grid2D<int> owner;  // -1 where unreachable
};

struct Source {
  int id = 0;
  Cell cell;
};

// Multi-source flood fill: each reachable cell gets the shortest distance to
// any source and, among equidistant sources, the smallest id.
template <class Passable>
  requires std::predicate<Passable, Cell>
SourceField multi_source_bfs(int rows, int cols, std::span<const Source> sources,
                             Passable&& passable) {
  SourceField f{Grid2D<int>(rows, cols, kUnreachable), Grid2D<int>(rows, cols, -1)};
  struct Item {
    Cell cell;
    int dist;
    int owner;
  };
  std::deque<Item> queue;
  for (const Source& s : sources) {
    if (!f.dist.in_bounds(s.cell)) throw PreconditionError("multi_source_bfs: source out of bounds");
    if (f.dist[s.cell] == 0) throw PreconditionError("multi_source_bfs: duplicate source cell");
    f.dist[s.cell] = 0;
    f.owner[s.cell] = s.id;
    queue.push_back({s.cell, 0, s.id});
  }
  // Neighbor order follows the territory listing: N, S, W, E.
  constexpr std::array<Cell, 4> kOrder{{{-1, 0}, {1, 0}, {0, -1}, {0, 1}}};
  while (!queue.empty()) {
    const Item it = queue.front();
    queue.pop_front();
    if (it.dist > f.dist[it.cell] || (it.dist == f.dist[it.cell] && it.owner > f.owner[it.cell])) {
      continue;
    }
    for (const Cell& d : kOrder) {
      const Cell next = it.cell + d;
      if (!f.dist.in_bounds(next) || !passable(next)) continue;
      const int nd = it.dist + 1;
      const int pd = f.dist[next];
      if (nd < pd || (nd == pd && it.owner < f.owner[next])) {
        f.dist[next] = nd;
        f.owner[next] = it.owner;
        queue.push_back({next, nd, it.owner});
      }
    }
  }
  return f;
}

// Movement action that displaces the agent by (dr, dc) given its heading.
// (0,0) maps to Stand; diagonals throw PreconditionError.
Action direction_to_action(int dr, int dc, Orientation orient);

// Fewest single rotations from `cur` to `target` (0..2).
int rotation_distance(Orientation cur, Orientation target);

}  // namespace ssd
