#include "ssd/prompts.hpp"

#include <cstdio>

#include "ssd/errors.hpp"
#include "ssd/evaluation.hpp"

namespace ssd {
namespace {

constexpr std::string_view kGatheringSystem = R"(You are an expert game-theoretic AI designing policies for a multi-agent
Sequential Social Dilemma (the Gathering game).

## Environment Summary

- 2D gridworld. Agents collect apples (+1 reward each). Apples respawn after
  25 steps. Agents can fire a "tagging beam" that temporarily removes rivals
  for 25 steps (requires 2 hits to tag in Gathering).
- Episode length: 1000 steps.
- 8 actions: FORWARD(0), BACKWARD(1), STEP_LEFT(2), STEP_RIGHT(3),
  ROTATE_LEFT(4), ROTATE_RIGHT(5), BEAM(6), STAND(7)
- Agents move in 4 cardinal directions WITHOUT needing to rotate first
  (strafe movement). Rotation only matters for the beam direction.

## Environment API (available in your policy's namespace)

```python
# env attributes you can read:
env.agent_pos        # np.array shape (n_agents, 2) -- [row, col] per agent
env.agent_orient     # np.array shape (n_agents,) -- 0=N, 1=E, 2=S, 3=W
env.agent_timeout    # np.array shape (n_agents,) -- >0 means agent is removed
env.agent_beam_hits  # np.array shape (n_agents,) -- hits accumulated toward tag
env.apple_alive      # np.array shape (n_apples,) bool -- which apples exist
env._apple_pos       # np.array shape (n_apples, 2) -- [row, col] per apple spawn
env.walls            # np.array shape (H, W) bool -- wall map
env.height, env.width                  # map dimensions
env.n_agents, env.n_apples             # counts
env.beam_length, env.beam_width        # beam parameters (20, 1)
env.hits_to_tag, env.timeout_steps     # 2 hits to tag, 25 step timeout
```

## Helper functions available in your namespace

```python
from gathering_env import Action, Orientation, _ROTATIONS, NUM_ACTIONS

bfs_nearest_apple(env, agent_id) -> Optional[Tuple[int,int]]
bfs_to_target_set(env, agent_id, target_set) -> Optional[Tuple[int,int]]
bfs_toward(env, agent_id, target_r, target_c) -> Optional[Tuple[int,int]]
direction_to_action(dr, dc, orientation) -> int
get_opponents(env, agent_id) -> list
_beam_targets_for_orient(env, ar, ac, orient_val, opponents) -> list
_rotation_distance(cur, target) -> int
greedy_action(env, agent_id) -> int
exploitative_action(env, agent_id) -> int
# Also available: np (numpy), deque (from collections)
```

## Your task

Write a Python function called `policy` with this exact signature:

```python
def policy(env, agent_id) -> int:
    """Return an action (int 0-7) for the given agent."""
    ...
```

The function must:
1. Return an integer 0-7 (an Action value)
2. Be deterministic given the environment state
3. Only use the env attributes and helper functions listed above
4. Not import any modules (numpy and deque are pre-loaded)
5. Not use eval(), exec(), open(), or __import__

## Working Example (seed BFS policy)

```python
def policy(env, agent_id) -> int:
    """BFS greedy: go to nearest apple, never beam."""
    if int(env.agent_timeout[agent_id]) > 0:
        return 7  # STAND while removed
    result = bfs_nearest_apple(env, agent_id)
    if result is None:
        return 7  # No reachable apple -- stand
    dr, dc = result
    return direction_to_action(dr, dc, int(env.agent_orient[agent_id]))
```

IMPORTANT:
- Always check `if result is None` before unpacking BFS results.
- Always cast env arrays to int when comparing.
- Always return a plain int (0-7), never a tuple or None.
- Put your code in a single ```python ... ``` block.
- Before the code block, explain your reasoning for the policy design.
)";

constexpr std::string_view kCleanupSystem = R"(You are an expert game-theoretic AI designing policies for a multi-agent
Sequential Social Dilemma (the Cleanup game).

## Environment Summary

- 2D gridworld with two regions: a river area (left side) and an orchard
  (right side). A stream separates the two regions.
- Agents collect apples in the orchard (+1 reward each).
- Waste (pollution) accumulates in the river over time.
- Episode length: 1000 steps.
- 9 actions: FORWARD(0), BACKWARD(1), STEP_LEFT(2), STEP_RIGHT(3),
  ROTATE_LEFT(4), ROTATE_RIGHT(5), BEAM(6), STAND(7), CLEAN(8)
- BEAM: fires a penalty beam (range 5, width 3). Costs -1 reward to fire.
  Hit agents receive -50 reward penalty and are removed for 25 steps
  (1 hit to tag).
- CLEAN: fires a cleaning beam (range 5, width 3). Costs -1 reward to fire.
  Removes waste cells in the beam's path, restoring clean river.
- Agents move in 4 cardinal directions WITHOUT needing to rotate first
  (strafe movement). Rotation only matters for the beam/clean direction.

## Environment API (available in your policy's namespace)

```python
# env attributes you can read:
env.agent_pos        # np.array shape (n_agents, 2) -- [row, col] per agent
env.agent_orient     # np.array shape (n_agents,) -- 0=N, 1=E, 2=S, 3=W
env.agent_timeout    # np.array shape (n_agents,) -- >0 means agent is removed
env.agent_beam_hits  # np.array shape (n_agents,) -- hits accumulated toward tag
env.apple_alive      # np.array shape (n_apples,) bool -- which apples exist
env._apple_pos       # np.array shape (n_apples, 2) -- [row, col] per apple spawn
env.walls            # np.array shape (H, W) bool -- wall map
env.waste            # np.array shape (H, W) bool -- True where waste exists
env.river_cells_set  # set of (row, col) -- all river cell positions
env.stream_cells_set # set of (row, col) -- stream cell positions
env.height, env.width                  # map dimensions
env.n_agents, env.n_apples             # counts
env.beam_length, env.beam_width        # beam/clean parameters (5, 3)
env.hits_to_tag, env.timeout_steps     # 1 hit to tag, 25 step timeout
```

## Helper functions available in your namespace

```python
from cleanup_env import CleanupAction, NUM_CLEANUP_ACTIONS
from gathering_env import Orientation, _ROTATIONS

bfs_nearest_apple(env, agent_id) -> Optional[Tuple[int,int]]
bfs_to_target_set(env, agent_id, target_set) -> Optional[Tuple[int,int]]
bfs_toward(env, agent_id, target_r, target_c) -> Optional[Tuple[int,int]]
direction_to_action(dr, dc, orientation) -> int
get_opponents(env, agent_id) -> list
_beam_targets_for_orient(env, ar, ac, orient_val, opponents) -> list
_rotation_distance(cur, target) -> int
greedy_action(env, agent_id) -> int
# Also available: np (numpy), deque (from collections)
```

## Your task

Write a Python function called `policy` with this exact signature:

```python
def policy(env, agent_id) -> int:
    """Return an action (int 0-8) for the given agent."""
    ...
```

The function must:
1. Return an integer 0-8 (a CleanupAction value)
2. Be deterministic given the environment state
3. Only use the env attributes and helper functions listed above
4. Not import any modules (numpy and deque are pre-loaded)
5. Not use eval(), exec(), open(), or __import__

## Working Example (seed BFS policy)

```python
def policy(env, agent_id) -> int:
    """BFS greedy: go to nearest apple, never beam or clean."""
    if int(env.agent_timeout[agent_id]) > 0:
        return 7  # STAND while removed
    result = bfs_nearest_apple(env, agent_id)
    if result is None:
        return 7  # No reachable apple -- stand
    dr, dc = result
    return direction_to_action(dr, dc, int(env.agent_orient[agent_id]))
```

IMPORTANT:
- Always check `if result is None` before unpacking BFS results.
- Always cast env arrays to int when comparing.
- Always return a plain int (0-8), never a tuple or None.
- Put your code in a single ```python ... ``` block.
- Before the code block, explain your reasoning for the policy design.
)";

constexpr std::string_view kGatheringHint =
    "Apples respawn every 25 steps. It takes 2 beam hits to tag out an agent.";
constexpr std::string_view kCleanupHint =
    "Waste accumulates in the river over time. BEAM costs -1 to fire (-50 to target, 1 hit tags out "
    "for 25 steps). CLEAN costs -1 to fire (removes waste in beam path).";

constexpr std::string_view kMetricDefinitions = R"(### Social Metrics (definitions)

- **Efficiency**: collective apple collection rate across all agents
  (higher = more apples collected per step).
- **Equality**: fairness of reward distribution between agents
  (1.0 = perfectly equal, negative = highly unequal).
- **Sustainability**: long-term apple availability -- measures whether
  resources are preserved over the episode (higher = apples remain
  available later in the episode).
- **Peace**: absence of aggressive beaming -- counts agents not involved
  in attack beam conflicts (higher = less aggression). Using the CLEAN
  beam to remove waste does NOT reduce peace.

)";

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string instructions(const GameConfig& cfg) {
  const Game game = game_of(cfg);
  const GridMap& map = std::visit([](const auto& c) -> const GridMap& { return c.map; }, cfg);
  std::string s = "## Instructions\n\n";
  s += "Write a policy that maximizes per-agent reward. All agents will run your\n";
  s += "exact same code simultaneously. There are " + std::to_string(n_agents_of(cfg)) + " agents on a " +
       std::to_string(map.width) + "x" + std::to_string(map.height) + " map\n";
  s += "with ~" + std::to_string(map.apple_spawns.size()) + " apple spawns.\n";
  s += std::string(game == Game::Gathering ? kGatheringHint : kCleanupHint) + "\n\n";
  s += "Write your `policy(env, agent_id) -> int` function (returns 0-" +
       std::string(game == Game::Gathering ? "7" : "8") + ").\n";
  return s;
}

std::string strip_trailing(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

}  // namespace

const char* to_string(FeedbackLevel level) { return level == FeedbackLevel::Sparse ? "sparse" : "dense"; }

FeedbackLevel parse_feedback_level(std::string_view s) {
  if (s == "sparse" || s == "reward") return FeedbackLevel::Sparse;
  if (s == "dense" || s == "social") return FeedbackLevel::Dense;
  throw UsageError("unknown feedback level '" + std::string(s) + "' (expected sparse or dense)");
}

std::string build_system_prompt(Game game) {
  return std::string(game == Game::Gathering ? kGatheringSystem : kCleanupSystem);
}

std::string build_user_prompt(int k, int K, std::span<const PromptHistoryEntry> history, FeedbackLevel level,
                              const GameConfig& cfg) {
  if (k < 0 || K < 0 || k > K) {
    throw UsageError("build_user_prompt: iteration " + std::to_string(k) + " outside 0.." + std::to_string(K));
  }
  if (k == 0) {
    if (!history.empty()) throw UsageError("build_user_prompt: iteration 0 takes no history");
    std::string s = "## Iteration 0/" + std::to_string(K) + ": Write the initial policy\n\n";
    s += "No prior policy exists yet. All agents will run the same code.\n";
    s += "Your task is to write a first policy that maximizes per-agent reward.\n\n";
    return s + instructions(cfg);
  }
  if (static_cast<int>(history.size()) != k) {
    throw UsageError("build_user_prompt: iteration " + std::to_string(k) + " needs " + std::to_string(k) +
                     " history entries, got " + std::to_string(history.size()));
  }
  for (std::size_t i = 0; i < history.size(); ++i) {
    if (!history[i].feedback) {
      throw UsageError("build_user_prompt: history entry " + std::to_string(i) + " has no feedback");
    }
  }

  std::string s = "## Iteration " + std::to_string(k) + "/" + std::to_string(K) + ": Write an improved policy\n\n";
  s += "The following policy is currently used by all agents. All agents run the\n";
  s += "same code. Your task is to write an improved version that maximizes\n";
  s += "per-agent reward.\n\n";
  s += "### Current policy: **P" + std::to_string(k - 1) +
       (level == FeedbackLevel::Sparse ? "_reward" : "_rall") + "**\n\n";
  s += "```python\n" + strip_trailing(history.back().policy_source) + "\n```\n\n";
  s += "## Results from previous iterations\n\n";
  if (level == FeedbackLevel::Dense) s += kMetricDefinitions;
  for (std::size_t i = 0; i < history.size(); ++i) {
    const Feedback& f = *history[i].feedback;
    s += "- Iteration " + std::to_string(i) + ": Avg agent reward=" + fmt("%.1f", f.mean_return);
    if (level == FeedbackLevel::Dense) {
      s += " | efficiency=" + fmt("%.3f", f.metrics.efficiency) + ",\n  equality=" +
           fmt("%.3f", f.metrics.equality) + ", sustainability=" + fmt("%.1f", f.metrics.sustainability) +
           ", peace=" + fmt("%.1f", f.metrics.peace);
    }
    s += "\n";
  }
  s += "\n";
  return s + instructions(cfg);
}

std::string retry_suffix(int attempt, std::string_view diagnostic) {
  return "\n## Attempt " + std::to_string(attempt) + " failed validation\n\n" + std::string(diagnostic) +
         "\n\nFix the problem and return the complete corrected policy.\n";
}

}  // namespace ssd
