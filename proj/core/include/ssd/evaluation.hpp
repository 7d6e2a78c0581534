#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssd/agents.hpp"
#include "ssd/metrics.hpp"
#include "ssd/trace.hpp"

namespace ssd {

GameConfig with_horizon(GameConfig cfg, int horizon);
GameConfig with_agents(GameConfig cfg, int n_agents);
int horizon_of(const GameConfig& cfg);
int n_agents_of(const GameConfig& cfg);

struct EpisodeOptions {
  // Compare the state before and after every policy query and throw
  // SecurityViolation if a read-only policy changed it.
  bool verify_readonly = false;
};

// Steps a fresh environment (reset with `seed`) to the horizon. Each active
// agent's binding is queried in index order against the same pre-step state;
// mutations are applied under the binding's privilege before the step.
// Bindings sharing an id share one policy instance for the episode.
EpisodeTrace run_episode(const GameConfig& cfg, std::span<const PolicyBinding> bindings,
                         std::uint64_t seed, EpisodeOptions options = {});

// Replays the recorded actions and mutations through a fresh environment and
// returns the reproduced trace.
EpisodeTrace replay_trace(const GameConfig& cfg, const EpisodeTrace& trace);

SeedResult seed_result(const EpisodeTrace& trace, int horizon, std::uint64_t seed);

struct EvalOptions {
  std::uint64_t run_seed = 0;
  int threads = 1;
  bool keep_traces = true;
};

struct EvalReport {
  std::string policy_id;
  Game game = Game::Gathering;
  std::vector<std::uint64_t> seeds;
  Feedback feedback;
  double wall_seconds = 0.0;
  std::vector<EpisodeTrace> traces;  // parallel to feedback.per_seed
};

// One homogeneous self-play episode per seed. The environment seed for
// episode seed s is mix_seeds(run_seed, s). Per-seed results are ordered by
// seed value, so the report does not depend on the order of `seeds`.
EvalReport evaluate_selfplay(const PolicyBinding& policy, const GameConfig& cfg,
                             std::span<const std::uint64_t> seeds, EvalOptions options = {});

Json to_json(const EvalReport& report);

// Writes run.json, traces/seed_<k>.jsonl and report.json under `dir`.
void write_eval_run(const std::filesystem::path& dir, const Json& run_config, const EvalReport& report);

struct AttackCell {
  std::string attack;  // "baseline" for the no-attack row
  std::string victim;
  std::vector<double> attacker_returns;  // per seed
  double attacker_mean = 0.0;
  double amplification = 0.0;  // attacker_mean / baseline attacker_mean
  SocialMetrics metrics;       // mean over seeds
};

struct AttackTable {
  std::vector<std::string> attacks;  // row order, baseline first
  std::vector<std::string> victims;
  std::vector<std::uint64_t> seeds;
  std::vector<AttackCell> cells;     // row-major: attacks x victims

  const AttackCell& at(const std::string& attack, const std::string& victim) const;
};

// Agent 0 runs each attack, agents 1..N-1 the victim policy. The baseline row
// has agent 0 running the victim policy too.
AttackTable attack_table(const GameConfig& cfg, std::span<const std::string> attacks,
                         std::span<const PolicyBinding> victims, std::span<const std::uint64_t> seeds,
                         EvalOptions options = {});

Json to_json(const AttackTable& table);
std::string format_attack_table(const AttackTable& table);

}  // namespace ssd
