#include "ssd/env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace ssd {
namespace {

Cell move_delta(Action a, Orientation o) {
  switch (a) {
    case Action::Forward: return heading(o);
    case Action::Backward: return heading(rotate_right(rotate_right(o)));
    case Action::StepLeft: return heading(rotate_left(o));
    case Action::StepRight: return heading(rotate_right(o));
    default: return {0, 0};
  }
}

bool is_move(Action a) {
  return a == Action::Forward || a == Action::Backward || a == Action::StepLeft ||
         a == Action::StepRight;
}

}  // namespace

const char* to_string(Game g) { return g == Game::Gathering ? "gathering" : "cleanup"; }

Game parse_game(std::string_view s) {
  if (s == "gathering") return Game::Gathering;
  if (s == "cleanup") return Game::Cleanup;
  throw ConfigError("game: expected 'gathering' or 'cleanup', got '" + std::string(s) + "'");
}

Game game_of(const GameConfig& cfg) {
  return std::holds_alternative<GatheringConfig>(cfg) ? Game::Gathering : Game::Cleanup;
}

GameConfig default_config(Game game) {
  if (game == Game::Gathering) return GatheringConfig{};
  return CleanupConfig{};
}

const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::AppleCollected: return "apple_collected";
    case EventKind::BeamFired: return "beam_fired";
    case EventKind::BeamHit: return "beam_hit";
    case EventKind::TaggedOut: return "tagged_out";
    case EventKind::Cleaned: return "cleaned";
    case EventKind::WasteSpawned: return "waste_spawned";
    case EventKind::AppleRespawned: return "apple_respawned";
    case EventKind::AgentRespawned: return "agent_respawned";
  }
  return "?";
}

int EnvState::active_count() const {
  return static_cast<int>(std::count(agent_timeout.begin(), agent_timeout.end(), 0));
}

Environment::Environment(GameConfig config) : config_(std::move(config)), game_(game_of(config_)) {
  std::visit(
      [this](const auto& c) {
        map_ = c.map;
        n_agents_ = c.n_agents;
        horizon_ = c.horizon;
      },
      config_);
  map_.validate();
  if (n_agents_ < 1) throw ConfigError("n_agents must be >= 1");
  if (horizon_ < 1) throw ConfigError("horizon must be >= 1");
  if (static_cast<int>(map_.agent_spawns.size()) < n_agents_) {
    throw ConfigError("map '" + map_.name + "' has " + std::to_string(map_.agent_spawns.size()) +
                      " agent spawns, need " + std::to_string(n_agents_));
  }
  if (game_ == Game::Gathering) {
    if (map_.has_water()) throw ConfigError("gathering map '" + map_.name + "' contains river/orchard cells");
    const auto& g = gathering();
    g.beam.validate();
    if (g.apple_respawn < 1) throw ConfigError("apple_respawn must be >= 1");
  } else {
    const auto& c = cleanup();
    c.penalty_beam.validate();
    c.clean_beam.validate();
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(std::string(name) + " must lie in [0, 1]");
    };
    unit(c.initial_waste_fraction, "initial_waste_fraction");
    unit(c.waste_spawn_rate, "waste_spawn_rate");
    unit(c.waste_saturation, "waste_saturation");
    unit(c.apple_base_rate, "apple_base_rate");
    if (!(c.depletion_threshold > 0.0)) throw ConfigError("depletion_threshold must be > 0");
  }
  walls_ = map_.wall_mask();
  apple_index_ = Grid2D<int>(map_.height, map_.width, -1);
  for (std::size_t i = 0; i < map_.apple_spawns.size(); ++i) {
    apple_index_[map_.apple_spawns[i]] = static_cast<int>(i);
  }
  river_cells_ = map_.cells_of(CellKind::River);
  stream_cells_ = map_.cells_of(CellKind::Stream);
}

const CleanupConfig& Environment::cleanup() const {
  if (game_ != Game::Cleanup) throw UsageError("not a cleanup environment");
  return std::get<CleanupConfig>(config_);
}

const GatheringConfig& Environment::gathering() const {
  if (game_ != Game::Gathering) throw UsageError("not a gathering environment");
  return std::get<GatheringConfig>(config_);
}

const BeamSpec& Environment::penalty_beam() const {
  return game_ == Game::Gathering ? gathering().beam : cleanup().penalty_beam;
}

EnvState Environment::reset(std::uint64_t seed) const {
  EnvState s;
  s.rng = Rng(seed);
  const auto n = static_cast<std::size_t>(n_agents_);
  s.agent_pos.assign(map_.agent_spawns.begin(), map_.agent_spawns.begin() + n_agents_);
  s.agent_orient.assign(n, Orientation::N);
  s.agent_timeout.assign(n, 0);
  s.agent_beam_hits.assign(n, 0);
  s.apple_alive.assign(map_.apple_spawns.size(), 1);
  s.apple_timer.assign(map_.apple_spawns.size(), 0);
  if (game_ == Game::Cleanup) {
    s.waste = Grid2D<std::uint8_t>(map_.height, map_.width, 0);
    const auto target = static_cast<std::size_t>(
        std::llround(cleanup().initial_waste_fraction * static_cast<double>(river_cells_.size())));
    // Partial Fisher-Yates over the river cells.
    std::vector<Cell> pool = river_cells_;
    for (std::size_t i = 0; i < target && i < pool.size(); ++i) {
      const std::size_t j = i + static_cast<std::size_t>(s.rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      s.waste[pool[i]] = 1;
    }
  }
  return s;
}

int Environment::agent_at(const EnvState& state, Cell c) const {
  for (int i = 0; i < n_agents_; ++i) {
    if (state.active(i) && state.agent_pos[static_cast<std::size_t>(i)] == c) return i;
  }
  return -1;
}

Grid2D<int> Environment::occupancy(const EnvState& state) const {
  Grid2D<int> occ(map_.height, map_.width, -1);
  for (int i = 0; i < n_agents_; ++i) {
    const Cell p = state.agent_pos[static_cast<std::size_t>(i)];
    if (state.active(i) && occ.in_bounds(p)) occ[p] = i;
  }
  return occ;
}

Cell Environment::respawn_cell(const EnvState& state, int agent) const {
  const Grid2D<int> occ = occupancy(state);
  const Cell home = map_.agent_spawns[static_cast<std::size_t>(agent)];
  if (occ[home] < 0) return home;
  Cell best = kOffGrid;
  int best_d = kUnreachable;
  for (const Cell& s : map_.agent_spawns) {
    if (occ[s] >= 0) continue;
    const int d = std::abs(s.row - home.row) + std::abs(s.col - home.col);
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  if (best != kOffGrid) return best;
  // Every spawn is occupied: nearest free open cell.
  auto step = bfs_first_step(
      map_.height, map_.width, home, [&](Cell c) { return occ[c] < 0; },
      [&](Cell c) { return walls_[c] == 0; });
  if (!step) throw LifecycleError("no free cell to respawn agent " + std::to_string(agent));
  return step->target;
}

void Environment::respawn_agent(EnvState& state, int agent) const {
  const auto a = static_cast<std::size_t>(agent);
  state.agent_pos[a] = respawn_cell(state, agent);
  state.agent_orient[a] = Orientation::N;
  state.agent_beam_hits[a] = 0;
  state.agent_timeout[a] = 0;
}

StepOutcome Environment::step(EnvState& state, std::span<const Action> actions) const {
  if (state.step >= horizon_) {
    throw LifecycleError("episode finished at step " + std::to_string(state.step));
  }
  if (static_cast<int>(actions.size()) != n_agents_) {
    throw PreconditionError("step: expected " + std::to_string(n_agents_) + " actions, got " +
                            std::to_string(actions.size()));
  }
  const int n_actions = num_actions();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    if (static_cast<int>(actions[i]) >= n_actions) {
      throw PreconditionError("step: action " + std::to_string(static_cast<int>(actions[i])) +
                              " out of range for agent " + std::to_string(i));
    }
  }

  const auto n = static_cast<std::size_t>(n_agents_);
  StepOutcome out;
  out.rewards.assign(n, 0.0);

  // 1. Timeouts and agent respawn.
  for (int i = 0; i < n_agents_; ++i) {
    int& t = state.agent_timeout[static_cast<std::size_t>(i)];
    if (t <= 0) continue;
    if (--t == 0) {
      respawn_agent(state, i);
      out.events.push_back({.kind = EventKind::AgentRespawned, .agent = i,
                            .cell = state.agent_pos[static_cast<std::size_t>(i)]});
    }
  }
  std::vector<std::uint8_t> acting(n, 0);
  for (std::size_t i = 0; i < n; ++i) acting[i] = state.agent_timeout[i] == 0;

  // 2. Rotations.
  for (std::size_t i = 0; i < n; ++i) {
    if (!acting[i]) continue;
    if (actions[i] == Action::RotateLeft) state.agent_orient[i] = rotate_left(state.agent_orient[i]);
    if (actions[i] == Action::RotateRight) state.agent_orient[i] = rotate_right(state.agent_orient[i]);
  }

  // 3. Simultaneous movement. Targets must be open and unoccupied before the
  // move; the lowest index wins a contested cell.
  {
    Grid2D<int> occ = occupancy(state);
    Grid2D<std::uint8_t> claimed(map_.height, map_.width, 0);
    std::vector<Cell> dest = state.agent_pos;
    for (std::size_t i = 0; i < n; ++i) {
      if (!acting[i] || !is_move(actions[i])) continue;
      const Cell target = state.agent_pos[i] + move_delta(actions[i], state.agent_orient[i]);
      if (!map_.in_bounds(target) || walls_[target] || occ[target] >= 0 || claimed[target]) continue;
      claimed[target] = 1;
      dest[i] = target;
    }
    state.agent_pos = std::move(dest);
  }

  // 4. Apple collection by any agent standing on an alive apple.
  const int respawn_delay = game_ == Game::Gathering ? gathering().apple_respawn : 0;
  for (int i = 0; i < n_agents_; ++i) {
    if (!acting[static_cast<std::size_t>(i)]) continue;
    const int spawn = apple_index_[state.agent_pos[static_cast<std::size_t>(i)]];
    if (spawn < 0 || !state.apple_alive[static_cast<std::size_t>(spawn)]) continue;
    state.apple_alive[static_cast<std::size_t>(spawn)] = 0;
    state.apple_timer[static_cast<std::size_t>(spawn)] = respawn_delay;
    out.rewards[static_cast<std::size_t>(i)] += 1.0;
    out.events.push_back({.kind = EventKind::AppleCollected, .agent = i, .spawn = spawn,
                          .cell = state.agent_pos[static_cast<std::size_t>(i)]});
  }

  // 5. Beams, all resolved against post-movement positions.
  {
    const BeamSpec& beam = penalty_beam();
    const Grid2D<int> occ = occupancy(state);
    std::vector<int> hits_now(n, 0);
    for (int i = 0; i < n_agents_; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      if (!acting[ii]) continue;
      if (actions[ii] == Action::Beam) {
        out.rewards[ii] += beam.fire_cost;
        out.events.push_back({.kind = EventKind::BeamFired, .agent = i, .cell = state.agent_pos[ii]});
        for (const Cell& c : beam_footprint(state.agent_pos[ii], state.agent_orient[ii], beam, walls_)) {
          const int j = occ[c];
          if (j < 0 || j == i) continue;
          hits_now[static_cast<std::size_t>(j)] += 1;
          out.rewards[static_cast<std::size_t>(j)] += beam.hit_penalty;
          out.events.push_back({.kind = EventKind::BeamHit, .agent = i, .target = j, .cell = c});
        }
      } else if (actions[ii] == Action::Clean && game_ == Game::Cleanup) {
        const BeamSpec& clean = cleanup().clean_beam;
        out.rewards[ii] += clean.fire_cost;
        Event ev{.kind = EventKind::Cleaned, .agent = i, .cell = state.agent_pos[ii]};
        for (const Cell& c : beam_footprint(state.agent_pos[ii], state.agent_orient[ii], clean, walls_)) {
          if (state.waste[c]) {
            state.waste[c] = 0;
            ev.cells.push_back(c);
          }
        }
        out.events.push_back(std::move(ev));
      }
    }
    for (int j = 0; j < n_agents_; ++j) {
      const auto jj = static_cast<std::size_t>(j);
      if (hits_now[jj] == 0) continue;
      state.agent_beam_hits[jj] += hits_now[jj];
      if (state.agent_beam_hits[jj] >= beam.hits_to_tag && beam.timeout_steps > 0) {
        state.agent_timeout[jj] = beam.timeout_steps;
        state.agent_pos[jj] = kOffGrid;
        out.events.push_back({.kind = EventKind::TaggedOut, .agent = j});
      }
    }
  }

  // 6. Resource dynamics.
  const Grid2D<int> occ = occupancy(state);
  if (game_ == Game::Gathering) {
    for (std::size_t k = 0; k < state.apple_alive.size(); ++k) {
      if (state.apple_alive[k]) continue;
      int& timer = state.apple_timer[k];
      if (timer > 0) --timer;
      if (timer == 0 && occ[map_.apple_spawns[k]] < 0) {
        state.apple_alive[k] = 1;
        out.events.push_back({.kind = EventKind::AppleRespawned, .spawn = static_cast<int>(k),
                              .cell = map_.apple_spawns[k]});
      }
    }
  } else {
    const CleanupConfig& c = cleanup();
    const auto river = static_cast<double>(river_cells_.size());
    std::size_t waste_count = 0;
    for (const Cell& rc : river_cells_) waste_count += state.waste[rc];
    const auto cap = static_cast<std::size_t>(std::floor(c.waste_saturation * river + 1e-9));
    for (const Cell& rc : river_cells_) {
      if (waste_count >= cap) break;
      if (state.waste[rc]) continue;
      if (state.rng.bernoulli(c.waste_spawn_rate)) {
        state.waste[rc] = 1;
        ++waste_count;
        out.events.push_back({.kind = EventKind::WasteSpawned, .cell = rc});
      }
    }
    const double wf = river > 0 ? static_cast<double>(waste_count) / river : 0.0;
    const double p = c.apple_base_rate * std::max(0.0, 1.0 - wf / c.depletion_threshold);
    if (p > 0.0) {
      for (std::size_t k = 0; k < state.apple_alive.size(); ++k) {
        if (state.apple_alive[k]) continue;
        if (state.rng.bernoulli(p) && occ[map_.apple_spawns[k]] < 0) {
          state.apple_alive[k] = 1;
          out.events.push_back({.kind = EventKind::AppleRespawned, .spawn = static_cast<int>(k),
                                .cell = map_.apple_spawns[k]});
        }
      }
    }
  }

  // 7.
  ++state.step;
  out.active.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.active[i] = state.agent_timeout[i] == 0;
  return out;
}

void Environment::apply_mutations(EnvState& state, std::span<const Mutation> mutations,
                                  Privilege privilege) const {
  if (mutations.empty()) return;
  if (privilege != Privilege::Mutating) {
    throw SecurityViolation("state mutation attempted by a read-only policy binding");
  }
  auto check_agent = [this](int a) {
    if (a < 0 || a >= n_agents_) throw PreconditionError("mutation: agent " + std::to_string(a) + " out of range");
    return static_cast<std::size_t>(a);
  };
  for (const Mutation& m : mutations) {
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, SetAgentPos>) {
            const auto a = check_agent(op.agent);
            if (!state.active(op.agent)) throw PreconditionError("mutation: cannot place a removed agent");
            if (map_.is_wall(op.cell)) throw PreconditionError("mutation: target cell is a wall or off the map");
            const int other = agent_at(state, op.cell);
            if (other >= 0 && other != op.agent) throw PreconditionError("mutation: target cell is occupied");
            state.agent_pos[a] = op.cell;
          } else if constexpr (std::is_same_v<T, SetAgentOrient>) {
            state.agent_orient[check_agent(op.agent)] = op.orient;
          } else if constexpr (std::is_same_v<T, SetAgentTimeout>) {
            const auto a = check_agent(op.agent);
            if (op.steps < 0) throw PreconditionError("mutation: negative timeout");
            const bool was_active = state.active(op.agent);
            if (op.steps > 0) {
              state.agent_timeout[a] = op.steps;
              state.agent_pos[a] = kOffGrid;
            } else if (!was_active) {
              respawn_agent(state, op.agent);
            }
          } else if constexpr (std::is_same_v<T, SetAgentBeamHits>) {
            if (op.hits < 0) throw PreconditionError("mutation: negative beam hits");
            state.agent_beam_hits[check_agent(op.agent)] = op.hits;
          } else if constexpr (std::is_same_v<T, SetAppleAlive>) {
            if (op.spawn < 0 || op.spawn >= static_cast<int>(state.apple_alive.size())) {
              throw PreconditionError("mutation: apple spawn " + std::to_string(op.spawn) + " out of range");
            }
            const auto k = static_cast<std::size_t>(op.spawn);
            state.apple_alive[k] = op.alive ? 1 : 0;
            state.apple_timer[k] =
                op.alive || game_ != Game::Gathering ? 0 : gathering().apple_respawn;
          } else if constexpr (std::is_same_v<T, SetWaste>) {
            if (game_ != Game::Cleanup) throw PreconditionError("mutation: no waste in gathering");
            if (!map_.in_bounds(op.cell) || map_.cells[op.cell] != CellKind::River) {
              throw PreconditionError("mutation: waste only exists on river cells");
            }
            state.waste[op.cell] = op.present ? 1 : 0;
          }
        },
        m);
  }
}

double Environment::waste_fraction(const EnvState& state) const {
  if (game_ != Game::Cleanup || river_cells_.empty()) return 0.0;
  std::size_t count = 0;
  for (const Cell& c : river_cells_) count += state.waste[c];
  return static_cast<double>(count) / static_cast<double>(river_cells_.size());
}

int Environment::alive_apples(const EnvState& state) const {
  return static_cast<int>(std::count(state.apple_alive.begin(), state.apple_alive.end(), 1));
}

std::vector<Cell> Environment::alive_apple_cells(const EnvState& state) const {
  std::vector<Cell> out;
  for (std::size_t k = 0; k < state.apple_alive.size(); ++k) {
    if (state.apple_alive[k]) out.push_back(map_.apple_spawns[k]);
  }
  return out;
}

std::string Environment::render_ascii(const EnvState& state) const {
  std::string out;
  out.reserve(static_cast<std::size_t>(map_.height) * (map_.width + 1));
  const Grid2D<int> occ = occupancy(state);
  for (int r = 0; r < map_.height; ++r) {
    if (r > 0) out.push_back('\n');
    for (int c = 0; c < map_.width; ++c) {
      const Cell cell{r, c};
      char ch = '.';
      switch (map_.cells[cell]) {
        case CellKind::Floor: ch = '.'; break;
        case CellKind::Wall: ch = '#'; break;
        case CellKind::River: ch = '~'; break;
        case CellKind::Stream: ch = '='; break;
        case CellKind::Orchard: ch = 'o'; break;
      }
      if (game_ == Game::Cleanup && state.waste[cell]) ch = 'w';
      const int spawn = apple_index_[cell];
      if (spawn >= 0 && state.apple_alive[static_cast<std::size_t>(spawn)]) ch = 'a';
      if (occ[cell] >= 0) ch = occ[cell] < 10 ? static_cast<char>('0' + occ[cell]) : '*';
      out.push_back(ch);
    }
  }
  return out;
}

}  // namespace ssd
