#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssd/env.hpp"

namespace ssd {

struct PolicyDecision {
  Action action = Action::Stand;
  std::vector<Mutation> mutations;  // applied before the engine step
};

// A policy instance lives for one episode and is queried once per active
// agent per step, in agent-index order, against the same pre-step state.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual void begin_episode(const Environment& /*env*/, const EnvState& /*state*/) {}
  // Called once per step, before the decide calls, with the active agents
  // this instance is about to be queried for.
  virtual void prepare_step(const Environment& /*env*/, const EnvState& /*state*/,
                            std::span<const int> /*agents*/) {}
  virtual PolicyDecision decide(const Environment& env, const EnvState& state, int agent) = 0;
};

enum class PolicyKind { Builtin, QTable, External };

struct PolicyBinding {
  std::string id;
  PolicyKind kind = PolicyKind::Builtin;
  Privilege privilege = Privilege::ReadOnly;
  std::function<std::unique_ptr<Policy>()> factory;
};

// --- pathfinding helpers over live state --------------------------------
// Only walls block; other agents do not. All return std::nullopt for a
// removed agent or when nothing is reachable.

std::optional<FirstStep> bfs_nearest_apple(const Environment& env, const EnvState& state, int agent);
std::optional<FirstStep> bfs_to_target_set(const Environment& env, const EnvState& state, int agent,
                                           std::span<const Cell> targets);
std::optional<FirstStep> bfs_toward(const Environment& env, const EnvState& state, int agent,
                                    Cell target);
// Active agents other than `agent`.
std::vector<int> get_opponents(const EnvState& state, int agent);
// Subset of `opponents` inside the penalty-beam footprint fired from `origin`.
std::vector<int> beam_targets_for_orient(const Environment& env, const EnvState& state, Cell origin,
                                         Orientation orient, std::span<const int> opponents);
// Waste cells inside the clean-beam footprint.
int clean_count_at(const Environment& env, const EnvState& state, Cell origin, Orientation orient);
// One rotation toward `target`; Stand when already facing it.
Action rotate_toward(Orientation cur, Orientation target);

// --- builtin policies ------------------------------------------------------

// Nearest alive apple by BFS; Stand when removed or nothing is reachable.
Action bfs_collector_act(const Environment& env, const EnvState& state, int agent);
// Beams when an opponent is already in the beam path, else collects.
Action exploitative_act(const Environment& env, const EnvState& state, int agent);

// Territory by multi-source flood fill over active agents. Never beams.
Action voronoi_act(const Environment& env, const EnvState& state, int agent);
// Column strips plus the four combat tiers and the flee rule.
Action strip_combat_act(const Environment& env, const EnvState& state, int agent);

int adaptive_cleaner_count(double waste_ratio);
bool adaptive_is_cleaner(double waste_ratio, int agent);
Action adaptive_cleaner_act(const Environment& env, const EnvState& state, int agent);

// Per-agent thresholds {0: 0.15, 5: 0.20, 1: 0.40, 6: 0.45}; others never clean.
double threshold_for(int agent);
bool threshold_is_cleaner(double waste_fraction, int agent);
Action threshold_cleaner_act(const Environment& env, const EnvState& state, int agent);

// Names accepted by make_builtin: bfs, exploitative, voronoi, strip_combat,
// adaptive_cleaner, threshold_cleaner. Throws UsageError for an unknown name
// or one that does not fit `game`.
std::vector<std::string> builtin_policy_names();
bool builtin_supports(const std::string& name, Game game);
PolicyBinding make_builtin(const std::string& name, Game game);

// Wraps a stateless act function as a read-only binding.
PolicyBinding make_function_binding(std::string id,
                                    std::function<Action(const Environment&, const EnvState&, int)> fn);

}  // namespace ssd
