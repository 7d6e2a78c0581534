#include <gtest/gtest.h>

#include <random>
#include <set>

#include "ssd/agents.hpp"
#include "ssd/evaluation.hpp"
#include "ssd/sandbox.hpp"
#include "support.hpp"

namespace ssd {
namespace {

using std::chrono::milliseconds;

std::string digest_of(const GameConfig& cfg, const PolicyBinding& b, std::uint64_t seed) {
  return run_episode(cfg, testing::everyone(b, n_agents_of(cfg)), seed).digest();
}

PolicyBinding external(const std::string& source, Game game, Privilege p = Privilege::ReadOnly) {
  return make_external_binding(testing::test_worker(), source, game, p);
}

TEST(Protocol, ExternalBfsMatchesBuiltin) {
  for (Game game : {Game::Gathering, Game::Cleanup}) {
    const GameConfig cfg = with_horizon(default_config(game), 100);
    const PolicyBinding ext = external(testing::kSeedBfsPolicy, game);
    const PolicyBinding builtin = make_builtin("bfs", game);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      EXPECT_EQ(digest_of(cfg, ext, seed), digest_of(cfg, builtin, seed)) << to_string(game) << " seed " << seed;
    }
  }
}

TEST(Protocol, ParityAcrossSnapshotResync) {
  // Long enough to cross a periodic full-snapshot resend.
  const GameConfig cfg = with_horizon(default_config(Game::Cleanup), 250);
  WorkerSpec spec = testing::test_worker();
  spec.full_snapshot_every = 40;
  const PolicyBinding ext = make_external_binding(spec, testing::kSeedBfsPolicy, Game::Cleanup, Privilege::ReadOnly);
  EXPECT_EQ(digest_of(cfg, ext, 3), digest_of(cfg, make_builtin("bfs", Game::Cleanup), 3));
}

TEST(Protocol, HelperParity) {
  const std::string greedy = "def policy(env, agent_id) -> int:\n    return greedy_action(env, agent_id)\n";
  const std::string exploit = "def policy(env, agent_id) -> int:\n    return exploitative_action(env, agent_id)\n";
  for (Game game : {Game::Gathering, Game::Cleanup}) {
    const GameConfig cfg = with_horizon(default_config(game), 100);
    EXPECT_EQ(digest_of(cfg, external(greedy, game), 1), digest_of(cfg, make_builtin("bfs", game), 1));
    EXPECT_EQ(digest_of(cfg, external(exploit, game), 1), digest_of(cfg, make_builtin("exploitative", game), 1));
  }
}

TEST(Protocol, ReadOnlySessionsEmitNoMutations) {
  const GameConfig cfg = with_horizon(default_config(Game::Gathering), 60);
  const EpisodeTrace t =
      run_episode(cfg, testing::everyone(external(testing::kSeedBfsPolicy, Game::Gathering), 10), 0,
                  {.verify_readonly = true});
  for (const auto& rec : t.steps) ASSERT_TRUE(rec.mutations.empty());
}

TEST(Protocol, MutatingTeleportEndToEnd) {
  const std::string src =
      "def policy(env, agent_id) -> int:\n"
      "    taken = {(int(p[0]), int(p[1])) for p in env.agent_pos}\n"
      "    here = (int(env.agent_pos[agent_id][0]), int(env.agent_pos[agent_id][1]))\n"
      "    for k in range(len(env.apple_alive)):\n"
      "        cell = (int(env._apple_pos[k][0]), int(env._apple_pos[k][1]))\n"
      "        if cell == here and env.apple_alive[k]:\n"
      "            break\n"
      "        if env.apple_alive[k] and cell not in taken:\n"
      "            env.agent_pos[agent_id] = cell\n"
      "            break\n"
      "    return 7\n";
  const GameConfig cfg = with_horizon(default_config(Game::Gathering), 80);
  std::vector<PolicyBinding> b{external(src, Game::Gathering, Privilege::Mutating)};
  for (int i = 1; i < 10; ++i) b.push_back(make_builtin("bfs", Game::Gathering));
  const EpisodeTrace t = run_episode(cfg, b, 0);
  int teleports = 0;
  for (const auto& rec : t.steps) {
    for (const auto& m : rec.mutations) teleports += std::holds_alternative<SetAgentPos>(m);
  }
  EXPECT_GT(teleports, 10);
  EXPECT_GT(t.returns()[0], 20.0);
  EXPECT_EQ(replay_trace(cfg, t).digest(), t.digest());

  // The same source in a read-only binding aborts the episode.
  std::vector<PolicyBinding> ro = b;
  ro[0] = external(src, Game::Gathering, Privilege::ReadOnly);
  EXPECT_THROW(run_episode(cfg, ro, 0), EpisodeAborted);
}

TEST(Protocol, HelloReportsModeAndGame) {
  WorkerSession s(testing::test_worker(), Game::Cleanup, Privilege::Mutating);
  const Json r = s.request(Json{{"type", "hello"}}, milliseconds{5000});
  EXPECT_EQ(r["type"], "hello");
  EXPECT_EQ(r["mode"], "mutating");
  EXPECT_EQ(r["game"], "cleanup");
}

TEST(Protocol, OneReplyPerRequestId) {
  WorkerSession s(testing::test_worker(), Game::Gathering, Privilege::ReadOnly);
  ASSERT_TRUE(s.load(testing::kSeedBfsPolicy).ok);
  const Environment env(default_config(Game::Gathering));
  const EnvState st = env.reset(0);
  s.reset(env, st);
  for (int i = 0; i < env.n_agents(); ++i) s.submit(env, st, i);
  for (int i = 0; i < env.n_agents(); ++i) {
    const ActReply r = s.collect(i, st.step);
    ASSERT_TRUE(r.value.has_value());
    EXPECT_EQ(*r.value, static_cast<int>(bfs_collector_act(env, st, i)));
  }
  EXPECT_FALSE(s.pending());
  // Raw requests: ids echo back in order.
  for (int k = 0; k < 5; ++k) {
    s.send_line(Json{{"id", 1000 + k}, {"type", "hello"}}.dump());
  }
  for (int k = 0; k < 5; ++k) EXPECT_EQ(s.read_reply(milliseconds{5000})["id"], 1000 + k);
}

TEST(Protocol, UnknownMessageType) {
  WorkerSession s(testing::test_worker(), Game::Gathering, Privilege::ReadOnly);
  const Json r = s.request(Json{{"type", "teleport_everyone"}}, milliseconds{5000});
  EXPECT_EQ(r["type"], "error");
  EXPECT_NE(r["message"].get<std::string>().find("unknown message type"), std::string::npos);
  EXPECT_EQ(s.request(Json{{"type", "act"}, {"agent", 0}}, milliseconds{5000})["type"], "error");
}

TEST(Protocol, FuzzedFramesGetErrorsAndSessionSurvives) {
  WorkerSession s(testing::test_worker(), Game::Gathering, Privilege::ReadOnly);
  std::mt19937_64 rng(2024);
  const std::vector<std::string> seeds{R"({"id": 1, "type": "act", "agent": )", R"({"type": )", R"([1, 2, 3])",
                                       R"("just a string")", R"({"id": 3, "type": "load", "source": 5)", "nul"};
  int errors = 0;
  for (int i = 0; i < 1000; ++i) {
    std::string frame;
    if (i % 2 == 0) {
      frame = seeds[rng() % seeds.size()];
      frame.resize(1 + rng() % frame.size());
    } else {
      const std::size_t len = 1 + rng() % 40;
      for (std::size_t k = 0; k < len; ++k) {
        char c = static_cast<char>(rng() % 256);
        if (c == '\n') c = 'x';
        frame.push_back(c);
      }
    }
    frame[0] = frame[0] == ' ' || frame[0] == '\t' || frame[0] == '\r' ? '?' : frame[0];
    s.send_line(frame);
    const Json r = s.read_reply(milliseconds{5000});
    errors += r["type"] == "error";
  }
  EXPECT_EQ(errors, 1000);
  EXPECT_EQ(s.request(Json{{"type", "hello"}}, milliseconds{5000})["type"], "hello");
}

TEST(Protocol, WireDeltaOnlyCarriesChanges) {
  const Environment env(default_config(Game::Cleanup));
  EnvState st = env.reset(0);
  const Json before = wire_dynamic(env, st);
  EXPECT_TRUE(wire_delta(before, before).empty());
  env.step(st, std::vector<Action>(10, Action::RotateLeft));
  const Json d = wire_delta(before, wire_dynamic(env, st));
  EXPECT_TRUE(d.contains("agent_orient"));
  EXPECT_FALSE(d.contains("agent_pos"));
  const Json snap = wire_snapshot(env, st);
  EXPECT_TRUE(snap.contains("walls"));
  EXPECT_TRUE(snap.contains("_apple_pos"));
}

TEST(Protocol, MissingWorkerIsInfrastructureError) {
  WorkerSpec spec;
  spec.argv = {"/nonexistent/worker-binary"};
  spec.startup_budget = milliseconds{2000};
  EXPECT_THROW(WorkerSession(spec, Game::Gathering, Privilege::ReadOnly), InfrastructureError);
}

}  // namespace
}  // namespace ssd
