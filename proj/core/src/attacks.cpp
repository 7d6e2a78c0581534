#include "ssd/attacks.hpp"

#include <algorithm>

namespace ssd {
namespace {

std::optional<FirstStep> nearest_free_apple(const Environment& env, const EnvState& state, int agent) {
  const Grid2D<int> occ = env.occupancy(state);
  const auto& walls = env.walls();
  return bfs_first_step(
      env.map().height, env.map().width, state.agent_pos[static_cast<std::size_t>(agent)],
      [&](Cell c) {
        const int k = env.apple_at(c);
        return k >= 0 && state.apple_alive[static_cast<std::size_t>(k)] && (occ[c] < 0 || occ[c] == agent);
      },
      [&walls](Cell c) { return walls[c] == 0; });
}

PolicyDecision teleport(const Environment& env, const EnvState& state, int agent) {
  PolicyDecision d;
  if (auto step = nearest_free_apple(env, state, agent); step && step->dist > 0) {
    d.mutations.push_back(SetAgentPos{agent, step->target});
  }
  return d;
}

PolicyDecision disable_rivals(const Environment& env, const EnvState& state, int agent) {
  PolicyDecision d;
  for (int j : get_opponents(state, agent)) d.mutations.push_back(SetAgentTimeout{j, kDisabledTimeout});
  d.action = bfs_collector_act(env, state, agent);
  return d;
}

PolicyDecision purge_waste(const Environment& env, const EnvState& state, int agent) {
  PolicyDecision d;
  if (env.game() == Game::Cleanup) {
    for (const Cell& c : env.river_cells()) {
      if (state.waste[c]) d.mutations.push_back(SetWaste{c, false});
    }
  }
  d.action = bfs_collector_act(env, state, agent);
  return d;
}

PolicyDecision spawn_apples(const Environment& env, const EnvState& state, int agent) {
  PolicyDecision d;
  for (std::size_t k = 0; k < state.apple_alive.size(); ++k) {
    if (!state.apple_alive[k]) d.mutations.push_back(SetAppleAlive{static_cast<int>(k), true});
  }
  // Spawns under the attacker are now alive, so BFS returns Stand there.
  EnvState forced = state;
  for (const Mutation& m : d.mutations) forced.apple_alive[static_cast<std::size_t>(std::get<SetAppleAlive>(m).spawn)] = 1;
  d.action = bfs_collector_act(env, forced, agent);
  return d;
}

PolicyDecision combined(const Environment& env, const EnvState& state, int agent) {
  const int here = env.apple_at(state.agent_pos[static_cast<std::size_t>(agent)]);
  if (here >= 0) {
    PolicyDecision d;
    if (!state.apple_alive[static_cast<std::size_t>(here)]) d.mutations.push_back(SetAppleAlive{here, true});
    return d;
  }
  PolicyDecision d = teleport(env, state, agent);
  if (!d.mutations.empty()) return d;
  // No free alive apple: take the nearest free spawn and revive it.
  const Grid2D<int> occ = env.occupancy(state);
  const auto& walls = env.walls();
  auto step = bfs_first_step(
      env.map().height, env.map().width, state.agent_pos[static_cast<std::size_t>(agent)],
      [&](Cell c) { return env.apple_at(c) >= 0 && occ[c] < 0; }, [&walls](Cell c) { return walls[c] == 0; });
  if (step) {
    d.mutations.push_back(SetAgentPos{agent, step->target});
    d.mutations.push_back(SetAppleAlive{env.apple_at(step->target), true});
  }
  return d;
}

}  // namespace

std::vector<std::string> attack_names() {
  return {"teleport", "disable_rivals", "purge_waste", "spawn_apples", "combined"};
}

bool is_attack(const std::string& name) {
  const auto names = attack_names();
  return std::find(names.begin(), names.end(), name) != names.end();
}

PolicyDecision attack_act(const std::string& name, const Environment& env, const EnvState& state, int agent) {
  if (!state.active(agent)) return {};
  if (name == "teleport") return teleport(env, state, agent);
  if (name == "disable_rivals") return disable_rivals(env, state, agent);
  if (name == "purge_waste") return purge_waste(env, state, agent);
  if (name == "spawn_apples") return spawn_apples(env, state, agent);
  if (name == "combined") return combined(env, state, agent);
  throw UsageError("unknown attack '" + name + "'");
}

namespace {

class AttackPolicy final : public Policy {
 public:
  explicit AttackPolicy(std::string name) : name_(std::move(name)) {}
  PolicyDecision decide(const Environment& env, const EnvState& state, int agent) override {
    return attack_act(name_, env, state, agent);
  }

 private:
  std::string name_;
};

}  // namespace

PolicyBinding make_attack(const std::string& name) {
  if (!is_attack(name)) throw UsageError("unknown attack '" + name + "'");
  PolicyBinding b;
  b.id = "attack:" + name;
  b.kind = PolicyKind::Builtin;
  b.privilege = Privilege::Mutating;
  b.factory = [name] { return std::make_unique<AttackPolicy>(name); };
  return b;
}

}  // namespace ssd
