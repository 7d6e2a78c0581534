#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ssd/agents.hpp"

namespace ssd {

// Feature bin counts. Directions are absolute grid directions; a standing
// apple (distance 0) reports N.
//
// Gathering, 5*4*3*4*3*2*3 = 4320 states:
//   0 nearest-apple BFS direction  {N, E, S, W, none}
//   1 nearest-apple BFS distance   {0-2, 3-6, 7-14, 15+ or none}
//   2 alive apples within Manhattan radius 3  {0, 1-3, 4+}
//   3 nearest-rival direction      {N, E, S, W}; none -> N
//   4 nearest-rival distance       {0-2, 3-6, 7+ or none}
//   5 rival in the current beam path {no, yes}
//   6 own hits                     {0, 1+, removed}
//
// Cleanup, 4*3*3*4*3*3*3*3 = 11664 states:
//   0 nearest-apple direction      {N, E, S, W}; none -> N
//   1 nearest-apple distance       {0-3, 4-10, 11+ or none}
//   2 apple density                as Gathering feature 2
//   3 nearest-waste BFS direction  {N, E, S, W}; none -> N
//   4 nearest-waste distance       {0-3, 4-10, 11+ or none}
//   5 global waste fraction        {< t/2, < t, >= t} for depletion threshold t
//   6 can clean                    {no waste, waste off the beam, waste in beam}
//   7 nearest-rival distance       {0-2, 3-6, 7+ or none}
inline constexpr std::array<int, 7> kGatheringBins{5, 4, 3, 4, 3, 2, 3};
inline constexpr std::array<int, 8> kCleanupBins{4, 3, 3, 4, 3, 3, 3, 3};

std::span<const int> q_feature_bins(Game game);
int q_state_count(Game game);
int q_action_count(Game game);

std::vector<int> q_features(const Environment& env, const EnvState& state, int agent);
// Mixed-radix index, first feature most significant. Throws PreconditionError
// for a tuple of the wrong length or a value outside its bin range.
int q_state_index(Game game, std::span<const int> features);
std::vector<int> q_decode(Game game, int index);

struct QParams {
  double alpha = 0.1;
  double gamma = 0.95;
  double epsilon_start = 1.0;  // linear over episodes
  double epsilon_end = 0.05;
  double beam_penalty = 1.0;   // subtracted per BEAM fired
  double clean_bonus = 0.25;   // per waste cell cleaned (Cleanup)
};

struct QTable {
  Game game = Game::Gathering;
  int state_count = 0;
  int action_count = 0;
  std::vector<double> values;  // state-major

  static QTable zeros(Game game);

  double& at(int s, int a) { return values[static_cast<std::size_t>(s) * action_count + a]; }
  double at(int s, int a) const { return values[static_cast<std::size_t>(s) * action_count + a]; }
  // Highest-valued action; ties go to the lowest index.
  Action greedy(int s) const;

  // 16-byte header {"SSDQ", game, state_count, action_count} as little-endian
  // u32 fields, then state_count*action_count little-endian doubles.
  void save(const std::filesystem::path& path) const;
  static QTable load(const std::filesystem::path& path);

  friend bool operator==(const QTable&, const QTable&) = default;
};

struct QTrainOptions {
  QParams params;
  // Optional: per (state, action) update counts, resized by q_train.
  std::vector<std::uint64_t>* visits = nullptr;
  // Called after each episode with (episode index, summed raw return).
  std::function<void(int, double)> on_episode;
};

// Shared-table Q-learning with all agents updating each step. The episode
// environment seed is mix_seeds(seed, episode); exploration draws come from
// a separate stream seeded by `seed`.
QTable q_train(const GameConfig& cfg, int episodes, std::uint64_t seed, QTrainOptions options = {});

// Continues training an existing table.
void q_train_into(QTable& table, const GameConfig& cfg, int episodes, std::uint64_t seed,
                  QTrainOptions options = {});

// Greedy read-only policy over a trained table.
PolicyBinding make_q_policy(std::shared_ptr<const QTable> table, std::string id = "qlearner");

}  // namespace ssd
