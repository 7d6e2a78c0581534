#include "ssd/agents.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <map>

namespace ssd {
namespace {

int manhattan(Cell a, Cell b) { return std::abs(a.row - b.row) + std::abs(a.col - b.col); }

Cell pos_of(const EnvState& s, int agent) { return s.agent_pos[static_cast<std::size_t>(agent)]; }
Orientation orient_of(const EnvState& s, int agent) {
  return s.agent_orient[static_cast<std::size_t>(agent)];
}

template <class IsTarget>
std::optional<FirstStep> bfs_from(const Environment& env, const EnvState& state, int agent,
                                  IsTarget&& is_target) {
  if (!state.active(agent)) return std::nullopt;
  const auto& walls = env.walls();
  return bfs_first_step(env.map().height, env.map().width, pos_of(state, agent),
                        std::forward<IsTarget>(is_target), [&walls](Cell c) { return walls[c] == 0; });
}

Action move_or_stand(const std::optional<FirstStep>& step, Orientation o) {
  if (!step) return Action::Stand;
  return direction_to_action(step->dr, step->dc, o);
}

class FunctionPolicy final : public Policy {
 public:
  explicit FunctionPolicy(std::function<Action(const Environment&, const EnvState&, int)> fn)
      : fn_(std::move(fn)) {}
  PolicyDecision decide(const Environment& env, const EnvState& state, int agent) override {
    return {fn_(env, state, agent), {}};
  }

 private:
  std::function<Action(const Environment&, const EnvState&, int)> fn_;
};

}  // namespace

std::optional<FirstStep> bfs_nearest_apple(const Environment& env, const EnvState& state, int agent) {
  return bfs_from(env, state, agent, [&](Cell c) {
    const int k = env.apple_at(c);
    return k >= 0 && state.apple_alive[static_cast<std::size_t>(k)] != 0;
  });
}

std::optional<FirstStep> bfs_to_target_set(const Environment& env, const EnvState& state, int agent,
                                           std::span<const Cell> targets) {
  if (targets.empty()) return std::nullopt;
  Grid2D<std::uint8_t> mask(env.map().height, env.map().width, 0);
  for (const Cell& t : targets) {
    if (mask.in_bounds(t)) mask[t] = 1;
  }
  return bfs_from(env, state, agent, [&mask](Cell c) { return mask[c] != 0; });
}

std::optional<FirstStep> bfs_toward(const Environment& env, const EnvState& state, int agent,
                                    Cell target) {
  if (!env.map().in_bounds(target)) return std::nullopt;
  return bfs_from(env, state, agent, [target](Cell c) { return c == target; });
}

std::vector<int> get_opponents(const EnvState& state, int agent) {
  std::vector<int> out;
  for (int j = 0; j < static_cast<int>(state.agent_pos.size()); ++j) {
    if (j != agent && state.active(j)) out.push_back(j);
  }
  return out;
}

std::vector<int> beam_targets_for_orient(const Environment& env, const EnvState& state, Cell origin,
                                         Orientation orient, std::span<const int> opponents) {
  std::vector<int> out;
  if (opponents.empty()) return out;
  for (const Cell& c : beam_footprint(origin, orient, env.penalty_beam(), env.walls())) {
    for (int j : opponents) {
      if (state.active(j) && pos_of(state, j) == c) out.push_back(j);
    }
  }
  return out;
}

int clean_count_at(const Environment& env, const EnvState& state, Cell origin, Orientation orient) {
  int n = 0;
  for (const Cell& c : beam_footprint(origin, orient, env.cleanup().clean_beam, env.walls())) {
    n += state.waste[c];
  }
  return n;
}

Action rotate_toward(Orientation cur, Orientation target) {
  const int diff = (static_cast<int>(target) - static_cast<int>(cur) + 4) % 4;
  if (diff == 0) return Action::Stand;
  return diff == 3 ? Action::RotateLeft : Action::RotateRight;
}

Action bfs_collector_act(const Environment& env, const EnvState& state, int agent) {
  if (!state.active(agent)) return Action::Stand;
  return move_or_stand(bfs_nearest_apple(env, state, agent), orient_of(state, agent));
}

Action exploitative_act(const Environment& env, const EnvState& state, int agent) {
  if (!state.active(agent)) return Action::Stand;
  const std::vector<int> opps = get_opponents(state, agent);
  if (!beam_targets_for_orient(env, state, pos_of(state, agent), orient_of(state, agent), opps).empty()) {
    return Action::Beam;
  }
  return bfs_collector_act(env, state, agent);
}

Action voronoi_act(const Environment& env, const EnvState& state, int agent) {
  if (!state.active(agent)) return Action::Stand;
  const GridMap& map = env.map();
  const auto& walls = env.walls();
  std::vector<Source> sources;
  for (int i = 0; i < env.n_agents(); ++i) {
    if (state.active(i)) sources.push_back({i, pos_of(state, i)});
  }
  const SourceField field = multi_source_bfs(map.height, map.width, std::span<const Source>(sources),
                                             [&walls](Cell c) { return walls[c] == 0; });
  const Orientation o = orient_of(state, agent);

  // Phase 1: nearest owned alive apple.
  auto owned_alive = [&](Cell c) {
    const int k = env.apple_at(c);
    return k >= 0 && state.apple_alive[static_cast<std::size_t>(k)] && field.owner[c] == agent;
  };
  if (auto step = bfs_from(env, state, agent, owned_alive)) return move_or_stand(step, o);

  // Phase 2: wait next to the nearest owned dead spawn. Standing on it would
  // block its respawn, so step off first.
  auto owned_dead = [&](Cell c) {
    const int k = env.apple_at(c);
    return k >= 0 && !state.apple_alive[static_cast<std::size_t>(k)] && field.owner[c] == agent;
  };
  if (auto step = bfs_from(env, state, agent, owned_dead)) {
    if (step->dist == 1) return Action::Stand;
    if (step->dist > 1) return move_or_stand(step, o);
    const Cell here = pos_of(state, agent);
    for (const Cell& d : kNeighborOrder) {
      const Cell next = here + d;
      if (map.is_wall(next) || env.apple_at(next) >= 0 || env.agent_at(state, next) >= 0) continue;
      return direction_to_action(d.row, d.col, o);
    }
    return Action::Stand;
  }

  // Phase 3: any reachable alive apple.
  return bfs_collector_act(env, state, agent);
}

Action strip_combat_act(const Environment& env, const EnvState& state, int agent) {
  if (!state.active(agent)) return Action::Stand;
  const BeamSpec& beam = env.penalty_beam();
  const Cell me = pos_of(state, agent);
  const Orientation o = orient_of(state, agent);
  const std::vector<int> opps = get_opponents(state, agent);
  auto wounded = [&](int j) { return state.agent_beam_hits[static_cast<std::size_t>(j)] >= beam.hits_to_tag - 1; };

  // Tier 1: kill shot directly ahead.
  const std::vector<int> ahead = beam_targets_for_orient(env, state, me, o, opps);
  if (std::any_of(ahead.begin(), ahead.end(), wounded)) return Action::Beam;

  // Tier 2: one rotation lands a kill shot.
  for (const auto& [act, turned] : {std::pair{Action::RotateLeft, rotate_left(o)},
                                    std::pair{Action::RotateRight, rotate_right(o)}}) {
    const std::vector<int> t = beam_targets_for_orient(env, state, me, turned, opps);
    if (std::any_of(t.begin(), t.end(), wounded)) return act;
  }

  // Flee when one hit from being tagged and someone has us in their path.
  const int my_hits = state.agent_beam_hits[static_cast<std::size_t>(agent)];
  if (my_hits >= beam.hits_to_tag - 1) {
    const std::array<int, 1> self{agent};
    int threat = -1;
    for (int j : opps) {
      if (beam_targets_for_orient(env, state, pos_of(state, j), orient_of(state, j), self).empty()) continue;
      if (threat < 0 || manhattan(pos_of(state, j), me) < manhattan(pos_of(state, threat), me)) threat = j;
    }
    if (threat >= 0) {
      const Cell tp = pos_of(state, threat);
      int best = manhattan(me, tp);
      std::optional<Cell> best_step;
      for (const Cell& d : kNeighborOrder) {
        const Cell next = me + d;
        if (env.map().is_wall(next) || env.agent_at(state, next) >= 0) continue;
        if (manhattan(next, tp) > best) {
          best = manhattan(next, tp);
          best_step = d;
        }
      }
      if (best_step) return direction_to_action(best_step->row, best_step->col, o);
    }
  }

  // Tier 3: chase the nearest wounded opponent within range 8.
  int prey = -1;
  for (int j : opps) {
    if (!wounded(j) || manhattan(pos_of(state, j), me) > 8) continue;
    if (prey < 0 || manhattan(pos_of(state, j), me) < manhattan(pos_of(state, prey), me)) prey = j;
  }
  if (prey >= 0) {
    const auto step = bfs_toward(env, state, agent, pos_of(state, prey));
    if (step && step->dist > 0) return direction_to_action(step->dr, step->dc, o);
  }

  // Tier 4: first hit on very close targets.
  for (int j : ahead) {
    if (manhattan(pos_of(state, j), me) <= 2) return Action::Beam;
  }

  // Home strip first, then anywhere.
  const double zone_width = static_cast<double>(env.map().width) / env.n_agents();
  const int zone_start = static_cast<int>(agent * zone_width);
  const int zone_end = static_cast<int>((agent + 1) * zone_width);
  std::vector<Cell> home;
  for (const Cell& c : env.alive_apple_cells(state)) {
    if (c.col >= zone_start && c.col < zone_end) home.push_back(c);
  }
  if (auto step = bfs_to_target_set(env, state, agent, home)) return move_or_stand(step, o);
  return bfs_collector_act(env, state, agent);
}

int adaptive_cleaner_count(double waste_ratio) {
  if (waste_ratio >= 0.8) return 7;
  if (waste_ratio >= 0.6) return 5;
  if (waste_ratio >= 0.4) return 3;
  if (waste_ratio >= 0.2) return 2;
  if (waste_ratio >= 0.07) return 1;
  return 0;
}

bool adaptive_is_cleaner(double waste_ratio, int agent) { return agent < adaptive_cleaner_count(waste_ratio); }

Action adaptive_cleaner_act(const Environment& env, const EnvState& state, int agent) {
  if (!state.active(agent)) return Action::Stand;
  if (!adaptive_is_cleaner(env.waste_fraction(state), agent)) return bfs_collector_act(env, state, agent);

  long sum_r = 0;
  long sum_c = 0;
  long count = 0;
  for (const Cell& c : env.river_cells()) {
    if (!state.waste[c]) continue;
    sum_r += c.row;
    sum_c += c.col;
    ++count;
  }
  if (count == 0) return bfs_collector_act(env, state, agent);
  const Cell centroid{static_cast<int>(sum_r / count), static_cast<int>(sum_c / count)};

  // Best (cell, orientation) for the clean beam within a 9x9 window.
  int best_count = 0;
  Cell best_cell = kOffGrid;
  Orientation best_orient = Orientation::N;
  for (int dr = -4; dr <= 4; ++dr) {
    for (int dc = -4; dc <= 4; ++dc) {
      const Cell c{centroid.row + dr, centroid.col + dc};
      if (env.map().is_wall(c)) continue;
      for (int o = 0; o < 4; ++o) {
        const int n = clean_count_at(env, state, c, static_cast<Orientation>(o));
        if (n > best_count) {
          best_count = n;
          best_cell = c;
          best_orient = static_cast<Orientation>(o);
        }
      }
    }
  }
  if (best_count == 0) return bfs_collector_act(env, state, agent);

  const Orientation o = orient_of(state, agent);
  if (pos_of(state, agent) == best_cell) {
    return o == best_orient ? Action::Clean : rotate_toward(o, best_orient);
  }
  if (auto step = bfs_toward(env, state, agent, best_cell)) return move_or_stand(step, o);
  return bfs_collector_act(env, state, agent);
}

double threshold_for(int agent) {
  static const std::map<int, double> kThresholds{{0, 0.15}, {5, 0.20}, {1, 0.40}, {6, 0.45}};
  const auto it = kThresholds.find(agent);
  return it == kThresholds.end() ? 2.0 : it->second;
}

bool threshold_is_cleaner(double waste_fraction, int agent) { return waste_fraction > threshold_for(agent); }

Action threshold_cleaner_act(const Environment& env, const EnvState& state, int agent) {
  if (!state.active(agent)) return Action::Stand;
  if (!threshold_is_cleaner(env.waste_fraction(state), agent)) return bfs_collector_act(env, state, agent);

  const Cell me = pos_of(state, agent);
  const Orientation o = orient_of(state, agent);
  std::array<int, 4> counts{};
  for (int d = 0; d < 4; ++d) counts[static_cast<std::size_t>(d)] = clean_count_at(env, state, me, static_cast<Orientation>(d));
  const auto best = std::max_element(counts.begin(), counts.end());
  if (*best > 0) {
    const auto best_dir = static_cast<Orientation>(best - counts.begin());
    return best_dir == o ? Action::Clean : rotate_toward(o, best_dir);
  }
  // Nothing in reach from here: walk to the nearest waste.
  auto step = bfs_from(env, state, agent, [&](Cell c) { return state.waste[c] != 0; });
  if (step) return move_or_stand(step, o);
  return bfs_collector_act(env, state, agent);
}

std::vector<std::string> builtin_policy_names() {
  return {"bfs", "exploitative", "voronoi", "strip_combat", "adaptive_cleaner", "threshold_cleaner"};
}

bool builtin_supports(const std::string& name, Game game) {
  if (name == "bfs" || name == "exploitative") return true;
  if (name == "voronoi" || name == "strip_combat") return game == Game::Gathering;
  if (name == "adaptive_cleaner" || name == "threshold_cleaner") return game == Game::Cleanup;
  return false;
}

PolicyBinding make_function_binding(std::string id,
                                    std::function<Action(const Environment&, const EnvState&, int)> fn) {
  PolicyBinding b;
  b.id = std::move(id);
  b.kind = PolicyKind::Builtin;
  b.privilege = Privilege::ReadOnly;
  b.factory = [fn = std::move(fn)] { return std::make_unique<FunctionPolicy>(fn); };
  return b;
}

PolicyBinding make_builtin(const std::string& name, Game game) {
  static const std::map<std::string, Action (*)(const Environment&, const EnvState&, int)> kTable{
      {"bfs", &bfs_collector_act},
      {"exploitative", &exploitative_act},
      {"voronoi", &voronoi_act},
      {"strip_combat", &strip_combat_act},
      {"adaptive_cleaner", &adaptive_cleaner_act},
      {"threshold_cleaner", &threshold_cleaner_act},
  };
  const auto it = kTable.find(name);
  if (it == kTable.end()) throw UsageError("unknown builtin policy '" + name + "'");
  if (!builtin_supports(name, game)) {
    throw UsageError("policy '" + name + "' does not support " + std::string(to_string(game)));
  }
  return make_function_binding(name, it->second);
}

}  // namespace ssd
