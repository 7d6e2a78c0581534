#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "ssd/evaluation.hpp"
#include "ssd/map_io.hpp"
#include "ssd/qlearning.hpp"
#include "support.hpp"

namespace ssd {
namespace {

TEST(QShapes, TableSizes) {
  EXPECT_EQ(q_state_count(Game::Gathering), 4320);
  EXPECT_EQ(q_action_count(Game::Gathering), 8);
  EXPECT_EQ(q_state_count(Game::Cleanup), 11664);
  EXPECT_EQ(q_action_count(Game::Cleanup), 9);
  const QTable g = QTable::zeros(Game::Gathering);
  EXPECT_EQ(g.values.size(), 4320u * 8u);
  const QTable c = QTable::zeros(Game::Cleanup);
  EXPECT_EQ(c.values.size(), 11664u * 9u);
}

TEST(QShapes, IndexIsABijection) {
  for (Game game : {Game::Gathering, Game::Cleanup}) {
    const auto bins = q_feature_bins(game);
    const int n = q_state_count(game);
    std::vector<std::uint8_t> hit(static_cast<std::size_t>(n), 0);
    // Walk every tuple with an odometer and check both directions.
    std::vector<int> f(bins.size(), 0);
    int visited = 0;
    for (bool done = false; !done;) {
      const int idx = q_state_index(game, f);
      ASSERT_GE(idx, 0);
      ASSERT_LT(idx, n);
      ASSERT_FALSE(hit[static_cast<std::size_t>(idx)]);
      hit[static_cast<std::size_t>(idx)] = 1;
      ASSERT_EQ(q_decode(game, idx), f);
      ++visited;
      done = true;
      for (std::size_t k = bins.size(); k-- > 0;) {
        if (++f[k] < bins[k]) {
          done = false;
          break;
        }
        f[k] = 0;
      }
    }
    EXPECT_EQ(visited, n);
  }
}

TEST(QShapes, FirstFeatureMostSignificant) {
  std::vector<int> f(7, 0);
  f[6] = 1;
  EXPECT_EQ(q_state_index(Game::Gathering, f), 1);
  f[6] = 0;
  f[0] = 1;
  EXPECT_EQ(q_state_index(Game::Gathering, f), 4320 / 5);
}

TEST(QShapes, RejectsBadTuples) {
  EXPECT_THROW(q_state_index(Game::Gathering, std::vector<int>{0, 0, 0}), PreconditionError);
  EXPECT_THROW(q_state_index(Game::Gathering, std::vector<int>{5, 0, 0, 0, 0, 0, 0}), PreconditionError);
  EXPECT_THROW(q_state_index(Game::Cleanup, std::vector<int>{0, 0, 0, 0, 0, 0, 0, -1}), PreconditionError);
  EXPECT_THROW(q_decode(Game::Cleanup, 11664), PreconditionError);
}

TEST(QFeatures, HandBuiltGathering) {
  GatheringConfig g;
  g.map = parse_map("ssdmap v1\n#######\n#0.A.1#\n#######\n");
  g.n_agents = 2;
  const Environment env(g);
  const EnvState s = env.reset(0);
  // Apple 2 east, one apple nearby, rival 4 east (dist bin 3-6), facing N so
  // the rival is off the beam, no hits.
  EXPECT_EQ(q_features(env, s, 0), (std::vector<int>{1, 0, 1, 1, 1, 0, 0}));
}

TEST(QFeatures, AlwaysInRange) {
  for (Game game : {Game::Gathering, Game::Cleanup}) {
    const Environment env(default_config(game));
    EnvState s = env.reset(5);
    const auto bins = q_feature_bins(game);
    Rng rng(1);
    for (int t = 0; t < 150; ++t) {
      for (int i = 0; i < env.n_agents(); ++i) {
        const auto f = q_features(env, s, i);
        ASSERT_EQ(f.size(), bins.size());
        for (std::size_t k = 0; k < f.size(); ++k) {
          ASSERT_GE(f[k], 0);
          ASSERT_LT(f[k], bins[k]);
        }
      }
      std::vector<Action> acts;
      for (int i = 0; i < env.n_agents(); ++i) acts.push_back(static_cast<Action>(rng.below(env.num_actions())));
      env.step(s, acts);
    }
  }
}

TEST(QTableIo, SaveLoadRoundTrip) {
  QTable t = QTable::zeros(Game::Cleanup);
  for (std::size_t i = 0; i < t.values.size(); ++i) t.values[i] = static_cast<double>(i % 97) * 0.125 - 3.0;
  const auto path = std::filesystem::temp_directory_path() / "ssd_q_roundtrip.bin";
  t.save(path);
  EXPECT_EQ(std::filesystem::file_size(path), 16u + t.values.size() * 8u);
  EXPECT_EQ(QTable::load(path), t);
  {
    std::ofstream bad(path, std::ios::binary);
    bad << "XXXX";
  }
  EXPECT_ANY_THROW(QTable::load(path));
  std::filesystem::remove(path);
}

TEST(QTableIo, GreedyTiesGoLow) {
  QTable t = QTable::zeros(Game::Gathering);
  EXPECT_EQ(t.greedy(0), Action::Forward);
  t.at(3, 5) = 1.0;
  t.at(3, 6) = 1.0;
  EXPECT_EQ(t.greedy(3), Action::RotateRight);
}

TEST(QTrain, DeterministicAndUsable) {
  const GameConfig cfg = with_horizon(default_config(Game::Gathering), 60);
  int calls = 0;
  QTrainOptions opt;
  opt.on_episode = [&](int, double) { ++calls; };
  const QTable a = q_train(cfg, 3, 11, opt);
  const QTable b = q_train(cfg, 3, 11);
  EXPECT_EQ(calls, 3);
  EXPECT_EQ(a, b);
  bool learned = false;
  for (double v : a.values) learned |= v != 0.0;
  EXPECT_TRUE(learned);

  const auto table = std::make_shared<const QTable>(a);
  const auto bindings = testing::everyone(make_q_policy(table), 10);
  const EpisodeTrace tr = run_episode(cfg, bindings, 2);
  EXPECT_EQ(tr.steps.size(), 60u);
  EXPECT_EQ(tr.digest(), run_episode(cfg, bindings, 2).digest());
}

}  // namespace
}  // namespace ssd
