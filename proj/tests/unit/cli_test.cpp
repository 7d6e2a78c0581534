#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "settings.hpp"
#include "ssd/evaluation.hpp"
#include "ssd/trace.hpp"
#include "support.hpp"

namespace ssd::cli {
namespace {

namespace fs = std::filesystem;

// Runs `fn` and returns the ConfigError message, or "" if nothing was thrown.
template <class F>
std::string config_error(F&& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ssd_cli_" + name);
  fs::remove_all(p);
  return p;
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

TEST(Settings, FieldPreciseErrors) {
  const Settings s(Json{{"K", "three"}, {"seeds", Json::array({1, 1})}, {"alpha", true}, {"horizon", -4}});
  EXPECT_NE(config_error([&] { (void)s.integer("K"); }).find("config field 'K'"), std::string::npos);
  EXPECT_NE(config_error([&] { (void)s.seeds("seeds", 5); }).find("'seeds'"), std::string::npos);
  EXPECT_NE(config_error([&] { (void)s.number("alpha", 0.1); }).find("'alpha'"), std::string::npos);
  EXPECT_NE(config_error([&] { (void)s.integer("horizon", 1000, 1); }).find("'horizon'"), std::string::npos);
  EXPECT_NE(config_error([&] { (void)s.integer("R"); }).find("'R'"), std::string::npos);
}

TEST(Settings, UnknownKeys) {
  EXPECT_NE(config_error([] { Settings(Json{{"gmae", "cleanup"}}).check_known_keys(); }).find("unknown field 'gmae'"),
            std::string::npos);
  // Output-only keys of a run.json are tolerated.
  EXPECT_NO_THROW(Settings(Json{{"digest", "x"}, {"status", "complete"}, {"game", "cleanup"}}).check_known_keys());
}

TEST(Settings, SeedsAndLists) {
  EXPECT_EQ(parse_seeds_flag("5"), Json(5));
  EXPECT_EQ(parse_seeds_flag("0,3,9"), Json::array({0, 3, 9}));
  EXPECT_ANY_THROW(parse_seeds_flag("a,b"));
  EXPECT_EQ(Settings(Json{{"seeds", 3}}).seeds("seeds", 5), (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(Settings().seeds("seeds", 2), (std::vector<std::uint64_t>{0, 1}));
  EXPECT_EQ(Settings(Json{{"attacks", "teleport,combined"}}).list("attacks"),
            (std::vector<std::string>{"teleport", "combined"}));
  EXPECT_EQ(Settings(Json{{"model_options", R"({"temperature": 0.5})"}}).object("model_options")["temperature"], 0.5);
}

TEST(Settings, GameConfigResolution) {
  EXPECT_NE(config_error([] { (void)game_config(Settings()); }).find("'game'"), std::string::npos);
  EXPECT_NE(config_error([] { (void)game_config(Settings(Json{{"game", "chess"}})); }).find("'game'"),
            std::string::npos);
  const GameConfig c = game_config(Settings(Json{{"game", "cleanup"}, {"n_agents", 4}, {"horizon", 30}}));
  EXPECT_EQ(game_of(c), Game::Cleanup);
  EXPECT_EQ(n_agents_of(c), 4);
  EXPECT_EQ(horizon_of(c), 30);
  // An embedded config wins and must agree with game.
  const Json embedded = to_json(with_horizon(default_config(Game::Gathering), 77));
  EXPECT_EQ(horizon_of(game_config(Settings(Json{{"game_config", embedded}}))), 77);
  EXPECT_FALSE(config_error([&] { (void)game_config(Settings(Json{{"game", "cleanup"}, {"game_config", embedded}})); })
                   .empty());
}

TEST(Commands, ExitCodes) {
  EXPECT_EQ(exit_code_for(ConfigError("x")), kConfig);
  EXPECT_EQ(exit_code_for(UsageError("x")), kConfig);
  EXPECT_EQ(exit_code_for(SecurityViolation("x")), kSecurity);
  EXPECT_EQ(exit_code_for(EpisodeAborted("x")), kValidation);
  EXPECT_EQ(exit_code_for(InfrastructureError("x")), kInfrastructure);
  EXPECT_EQ(exit_code_for(TransportError("x")), kInfrastructure);
  EXPECT_EQ(exit_code_for(std::runtime_error("x")), kOther);
}

TEST(Commands, OutDirRefusesOverwrite) {
  const fs::path dir = scratch("outdir");
  fs::create_directories(dir);
  std::ofstream(dir / "keep.txt") << "x";
  const Settings s(Json{{"out", dir.string()}});
  EXPECT_NE(config_error([&] { prepare_out_dir(s, false); }).find("--force"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "keep.txt"));
  prepare_out_dir(s, true);
  EXPECT_FALSE(fs::exists(dir / "keep.txt"));
  fs::remove_all(dir);
}

TEST(Commands, ResolvePolicySpecs) {
  const WorkerSpec w = testing::test_worker();
  EXPECT_EQ(resolve_policy("bfs", Game::Gathering, w).id, "bfs");
  EXPECT_EQ(resolve_policy("combined", Game::Cleanup, w).privilege, Privilege::Mutating);
  EXPECT_THROW(resolve_policy("q:/nonexistent.bin", Game::Gathering, w), std::exception);
  EXPECT_NE(config_error([&] { resolve_policy("superhuman", Game::Gathering, w); }).find("bfs"), std::string::npos);
}

TEST(Commands, EvalWritesRunFiles) {
  const fs::path dir = scratch("eval");
  Context ctx;
  ctx.settings = Settings(Json{{"game", "gathering"}, {"policy", "bfs"}, {"seeds", 2}, {"horizon", 50},
                               {"out", dir.string()}});
  std::ostringstream out;
  EXPECT_EQ(cmd_eval(ctx, out), kOk);
  EXPECT_TRUE(fs::exists(dir / "run.json"));
  EXPECT_TRUE(fs::exists(dir / "report.json"));
  EXPECT_EQ(read_json(dir / "run.json")["command"], "eval");
  fs::remove_all(dir);
}

TEST(Commands, SynthReproducesFromRunJson) {
  const fs::path first = scratch("synth_a");
  const fs::path second = scratch("synth_b");
  Context ctx;
  ctx.default_worker = SSD_TEST_WORKER;
  ctx.settings = Settings(Json{{"game", "cleanup"}, {"feedback", "dense"}, {"K", 1}, {"seeds", 2}, {"horizon", 60},
                               {"smoke_steps", 10}, {"mock", (testing::fixtures() / "mock" / "seed_bfs").string()},
                               {"out", first.string()}});
  std::ostringstream out;
  ASSERT_EQ(cmd_synth(ctx, out), kOk) << out.str();
  const Json run = read_json(first / "run.json");
  EXPECT_EQ(run["iterations"], 2);
  EXPECT_EQ(run["status"], "complete");

  Context again;
  again.default_worker = SSD_TEST_WORKER;
  again.settings = Settings::from_file(first / "run.json");
  again.settings.set("out", second.string());
  again.settings.check_known_keys();
  ASSERT_EQ(cmd_synth(again, out), kOk);
  EXPECT_EQ(read_json(second / "run.json")["digest"], run["digest"]);
  fs::remove_all(first);
  fs::remove_all(second);
}

TEST(Commands, SynthExhaustedExitCode) {
  const fs::path dir = scratch("synth_bad");
  Context ctx;
  ctx.default_worker = SSD_TEST_WORKER;
  ctx.settings = Settings(Json{{"game", "gathering"}, {"K", 0}, {"R", 2}, {"seeds", 1}, {"horizon", 20},
                               {"smoke_steps", 5},
                               {"mock", (testing::fixtures() / "mock" / "always_invalid").string()},
                               {"out", dir.string()}});
  std::ostringstream out;
  EXPECT_EQ(cmd_synth(ctx, out), kValidation);
  EXPECT_EQ(read_json(dir / "run.json")["status"], "validation_exhausted");
  fs::remove_all(dir);
}

}  // namespace
}  // namespace ssd::cli
