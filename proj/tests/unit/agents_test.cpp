#include <gtest/gtest.h>

#include "ssd/agents.hpp"
#include "ssd/evaluation.hpp"
#include "ssd/map_io.hpp"
#include "support.hpp"

namespace ssd {
namespace {

GatheringConfig corridor(std::string_view rows, int n) {
  GatheringConfig g;
  g.map = parse_map("ssdmap v1\n" + std::string(rows));
  g.n_agents = n;
  return g;
}

TEST(Adaptive, Staircase) {
  const std::vector<std::pair<double, int>> cases{
      {0.0, 0},  {0.069, 0}, {0.07, 1}, {0.19, 1}, {0.2, 2}, {0.39, 2},
      {0.4, 3},  {0.59, 3},  {0.6, 5},  {0.79, 5}, {0.8, 7}, {1.0, 7}};
  for (auto [w, n] : cases) EXPECT_EQ(adaptive_cleaner_count(w), n) << w;
  EXPECT_TRUE(adaptive_is_cleaner(0.45, 2));
  EXPECT_FALSE(adaptive_is_cleaner(0.45, 3));
}

TEST(Threshold, PerAgentTable) {
  EXPECT_DOUBLE_EQ(threshold_for(0), 0.15);
  EXPECT_DOUBLE_EQ(threshold_for(5), 0.20);
  EXPECT_DOUBLE_EQ(threshold_for(1), 0.40);
  EXPECT_DOUBLE_EQ(threshold_for(6), 0.45);
  EXPECT_TRUE(threshold_is_cleaner(0.16, 0));
  EXPECT_FALSE(threshold_is_cleaner(0.14, 0));
  EXPECT_FALSE(threshold_is_cleaner(0.39, 1));
  for (int i : {2, 3, 4, 7, 8, 9}) EXPECT_FALSE(threshold_is_cleaner(1.0, i)) << i;
}

TEST(Builtins, SupportedGames) {
  for (const auto& name : builtin_policy_names()) {
    EXPECT_TRUE(builtin_supports(name, Game::Gathering) || builtin_supports(name, Game::Cleanup)) << name;
  }
  EXPECT_TRUE(builtin_supports("bfs", Game::Gathering));
  EXPECT_TRUE(builtin_supports("bfs", Game::Cleanup));
  EXPECT_FALSE(builtin_supports("adaptive_cleaner", Game::Gathering));
  EXPECT_FALSE(builtin_supports("threshold_cleaner", Game::Gathering));
  EXPECT_THROW(make_builtin("adaptive_cleaner", Game::Gathering), UsageError);
  EXPECT_THROW(make_builtin("nonexistent", Game::Cleanup), UsageError);
}

TEST(Helpers, RotateToward) {
  EXPECT_EQ(rotate_toward(Orientation::N, Orientation::N), Action::Stand);
  EXPECT_EQ(rotate_toward(Orientation::N, Orientation::E), Action::RotateRight);
  EXPECT_EQ(rotate_toward(Orientation::N, Orientation::W), Action::RotateLeft);
  const Action back = rotate_toward(Orientation::N, Orientation::S);
  EXPECT_TRUE(back == Action::RotateLeft || back == Action::RotateRight);
}

TEST(Helpers, OpponentsAndBeamTargets) {
  const Environment env(corridor("########\n#0.1..2#\n########\n", 3));
  EnvState s = env.reset(0);
  EXPECT_EQ(get_opponents(s, 1), (std::vector<int>{0, 2}));
  const auto opp = get_opponents(s, 0);
  EXPECT_EQ(beam_targets_for_orient(env, s, s.agent_pos[0], Orientation::E, opp), (std::vector<int>{1, 2}));
  EXPECT_TRUE(beam_targets_for_orient(env, s, s.agent_pos[0], Orientation::N, opp).empty());
}

TEST(Bfs, CollectorHeadsForNearestApple) {
  const Environment env(corridor("########\n#A..0.A#\n########\n", 1));
  EnvState s = env.reset(0);
  // Apple two cells east beats the one three cells west. Facing N, east is StepRight.
  EXPECT_EQ(bfs_collector_act(env, s, 0), Action::StepRight);
  const auto fs = bfs_nearest_apple(env, s, 0);
  ASSERT_TRUE(fs.has_value());
  EXPECT_EQ(fs->dist, 2);
  EXPECT_EQ(fs->target, (Cell{1, 6}));
}

TEST(Bfs, StandsWithNothingReachable) {
  const Environment env(corridor("#####\n#0#A#\n#####\n", 1));
  const EnvState s = env.reset(0);
  EXPECT_FALSE(bfs_nearest_apple(env, s, 0).has_value());
  EXPECT_EQ(bfs_collector_act(env, s, 0), Action::Stand);
}

TEST(Exploitative, BeamsWhenRivalInPath) {
  const Environment env(corridor("#######\n#0...1#\n#.....#\n#######\n", 2));
  EnvState s = env.reset(0);
  env.step(s, std::vector<Action>{Action::RotateRight, Action::Stand});
  EXPECT_EQ(exploitative_act(env, s, 0), Action::Beam);
}

TEST(Builtins, NeverEmitIllegalActions) {
  for (Game game : {Game::Gathering, Game::Cleanup}) {
    const GameConfig cfg = with_horizon(default_config(game), 120);
    for (const auto& name : builtin_policy_names()) {
      if (!builtin_supports(name, game)) continue;
      const auto b = testing::everyone(make_builtin(name, game), 10);
      const EpisodeTrace t = run_episode(cfg, b, 4, {.verify_readonly = true});
      for (const auto& rec : t.steps) {
        for (Action a : rec.actions) {
          ASSERT_LT(static_cast<int>(a), game == Game::Gathering ? kNumGatheringActions : kNumCleanupActions);
        }
        ASSERT_TRUE(rec.mutations.empty());
      }
    }
  }
}

TEST(Builtins, VoronoiNeverBeams) {
  const GameConfig cfg = with_horizon(default_config(Game::Gathering), 200);
  const auto b = testing::everyone(make_builtin("voronoi", Game::Gathering), 10);
  const EpisodeTrace t = run_episode(cfg, b, 0);
  for (const auto& rec : t.steps) {
    for (Action a : rec.actions) ASSERT_NE(a, Action::Beam);
  }
}

TEST(Builtins, CleanersLowerWaste) {
  const Environment env(default_config(Game::Cleanup));
  auto mean_waste = [&](auto act) {
    EnvState s = env.reset(2);
    double sum = 0.0;
    for (int t = 0; t < 300; ++t) {
      std::vector<Action> acts;
      for (int i = 0; i < env.n_agents(); ++i) acts.push_back(act(env, s, i));
      env.step(s, acts);
      sum += env.waste_fraction(s);
    }
    return sum / 300.0;
  };
  const double none = mean_waste(bfs_collector_act);
  EXPECT_LT(mean_waste(threshold_cleaner_act), none);
  EXPECT_LT(mean_waste(adaptive_cleaner_act), none);
}

}  // namespace
}  // namespace ssd
