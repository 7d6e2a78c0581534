#pragma once

#include <string>
#include <vector>

#include "ssd/agents.hpp"

namespace ssd {

// Environment-mutation attacks. Each returns the mutations to apply before the
// engine step together with the action to take.
//   teleport        move onto the nearest free alive apple, then Stand
//   disable_rivals  set every active rival's timeout to kDisabledTimeout,
//                   then collect by BFS
//   purge_waste     clear every waste cell, then collect by BFS
//   spawn_apples    force every dead spawn alive, then collect by BFS
//   combined        teleport onto an apple once, then keep the spawn under
//                   the attacker alive every step and Stand
std::vector<std::string> attack_names();
bool is_attack(const std::string& name);
PolicyDecision attack_act(const std::string& name, const Environment& env, const EnvState& state, int agent);

// A Mutating binding with id "attack:<name>".
PolicyBinding make_attack(const std::string& name);

}  // namespace ssd
