#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ssd/grid.hpp"
#include "ssd/map_io.hpp"
#include "ssd/rng.hpp"

namespace ssd {

enum class Game { Gathering, Cleanup };

const char* to_string(Game g);
Game parse_game(std::string_view s);

struct GatheringConfig {
  int n_agents = 10;
  int horizon = 1000;
  int apple_respawn = 25;
  BeamSpec beam{.length = 20, .width = 1, .fire_cost = 0.0, .hit_penalty = 0.0,
                .hits_to_tag = 2, .timeout_steps = 25};
  GridMap map = builtin_map("gathering_default");
};

struct CleanupConfig {
  int n_agents = 10;
  int horizon = 1000;
  BeamSpec penalty_beam{.length = 5, .width = 3, .fire_cost = -1.0, .hit_penalty = -50.0,
                        .hits_to_tag = 1, .timeout_steps = 25};
  BeamSpec clean_beam{.length = 5, .width = 3, .fire_cost = -1.0, .hit_penalty = 0.0,
                      .hits_to_tag = 1, .timeout_steps = 0};
  double initial_waste_fraction = 0.5;
  // Per clean river cell per step, only while the waste fraction is below
  // waste_saturation.
  double waste_spawn_rate = 0.02;
  double waste_saturation = 0.4;
  // A dead spawn revives with apple_base_rate * max(0, 1 - waste/depletion).
  double apple_base_rate = 0.05;
  double depletion_threshold = 0.4;
  GridMap map = builtin_map("cleanup_default");
};

using GameConfig = std::variant<GatheringConfig, CleanupConfig>;

Game game_of(const GameConfig& cfg);
GameConfig default_config(Game game);

// Timeout that outlasts any episode; used by the disable-rivals attack.
inline constexpr int kDisabledTimeout = 1'000'000'000;

struct EnvState {
  int step = 0;
  std::vector<Cell> agent_pos;  // kOffGrid while timed out
  std::vector<Orientation> agent_orient;
  std::vector<int> agent_timeout;
  std::vector<int> agent_beam_hits;
  std::vector<std::uint8_t> apple_alive;
  // Gathering: steps until a dead spawn is due. A dead spawn with timer 0 is
  // due and revives as soon as its cell is free. Always 0 in Cleanup.
  std::vector<int> apple_timer;
  Grid2D<std::uint8_t> waste;  // Cleanup only; empty for Gathering
  Rng rng;

  bool active(int agent) const { return agent_timeout[static_cast<std::size_t>(agent)] == 0; }
  int active_count() const;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

enum class EventKind {
  AppleCollected,
  BeamFired,
  BeamHit,
  TaggedOut,
  Cleaned,
  WasteSpawned,
  AppleRespawned,
  AgentRespawned,
};

const char* to_string(EventKind k);

struct Event {
  EventKind kind{};
  int agent = -1;   // collector, shooter, tagged or respawned agent
  int target = -1;  // beam_hit target
  int spawn = -1;   // apple spawn index
  Cell cell{-1, -1};
  std::vector<Cell> cells;  // cleaned cells

  friend bool operator==(const Event&, const Event&) = default;
};

struct StepOutcome {
  std::vector<double> rewards;
  std::vector<Event> events;
  std::vector<std::uint8_t> active;  // per agent, after the step
};

// Privileged state edits. Only bindings with the Mutating privilege may
// submit them; the engine applies them between the policy queries and step().
struct SetAgentPos {
  int agent;
  Cell cell;
  friend bool operator==(const SetAgentPos&, const SetAgentPos&) = default;
};
struct SetAgentOrient {
  int agent;
  Orientation orient;
  friend bool operator==(const SetAgentOrient&, const SetAgentOrient&) = default;
};
struct SetAgentTimeout {
  int agent;
  int steps;
  friend bool operator==(const SetAgentTimeout&, const SetAgentTimeout&) = default;
};
struct SetAgentBeamHits {
  int agent;
  int hits;
  friend bool operator==(const SetAgentBeamHits&, const SetAgentBeamHits&) = default;
};
struct SetAppleAlive {
  int spawn;
  bool alive;
  friend bool operator==(const SetAppleAlive&, const SetAppleAlive&) = default;
};
struct SetWaste {
  Cell cell;
  bool present;
  friend bool operator==(const SetWaste&, const SetWaste&) = default;
};
using Mutation =
    std::variant<SetAgentPos, SetAgentOrient, SetAgentTimeout, SetAgentBeamHits, SetAppleAlive, SetWaste>;

enum class Privilege { ReadOnly, Mutating };

class Environment {
 public:
  explicit Environment(GameConfig config);

  Game game() const { return game_; }
  const GameConfig& config() const { return config_; }
  const GridMap& map() const { return map_; }
  const Grid2D<std::uint8_t>& walls() const { return walls_; }
  int n_agents() const { return n_agents_; }
  int horizon() const { return horizon_; }
  int num_actions() const { return game_ == Game::Gathering ? kNumGatheringActions : kNumCleanupActions; }
  const BeamSpec& penalty_beam() const;
  const std::vector<Cell>& river_cells() const { return river_cells_; }
  const std::vector<Cell>& stream_cells() const { return stream_cells_; }
  // Spawn index at a cell, or -1.
  int apple_at(Cell c) const { return apple_index_[c]; }
  const CleanupConfig& cleanup() const;
  const GatheringConfig& gathering() const;

  EnvState reset(std::uint64_t seed) const;

  // Advances one step in place. Throws LifecycleError once the horizon is
  // reached and PreconditionError on a malformed joint action.
  StepOutcome step(EnvState& state, std::span<const Action> actions) const;

  // Applies privileged edits in order. Throws SecurityViolation when
  // `privilege` is ReadOnly and the list is nonempty, PreconditionError when
  // an edit would break a state invariant.
  void apply_mutations(EnvState& state, std::span<const Mutation> mutations,
                       Privilege privilege) const;

  double waste_fraction(const EnvState& state) const;
  int alive_apples(const EnvState& state) const;
  std::vector<Cell> alive_apple_cells(const EnvState& state) const;
  // Index of the active agent at `c`, or -1.
  int agent_at(const EnvState& state, Cell c) const;
  // Occupancy grid of active agents (agent index, or -1).
  Grid2D<int> occupancy(const EnvState& state) const;

  // One line per row: digits for agents, 'a' alive apples, 'w' waste, '#'
  // walls, map glyphs elsewhere.
  std::string render_ascii(const EnvState& state) const;

 private:
  Cell respawn_cell(const EnvState& state, int agent) const;
  void respawn_agent(EnvState& state, int agent) const;

  GameConfig config_;
  Game game_;
  GridMap map_;
  int n_agents_;
  int horizon_;
  Grid2D<std::uint8_t> walls_;
  Grid2D<int> apple_index_;
  std::vector<Cell> river_cells_;
  std::vector<Cell> stream_cells_;
};

}  // namespace ssd
