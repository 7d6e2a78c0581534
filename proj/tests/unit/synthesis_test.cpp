#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "ssd/chat.hpp"
#include "ssd/evaluation.hpp"
#include "ssd/prompts.hpp"
#include "ssd/synthesis.hpp"
#include "support.hpp"

namespace ssd {
namespace {

namespace fs = std::filesystem;

std::string fenced(const std::string& body) { return "Here you go.\n```python\n" + body + "```\n"; }

LoopOptions quick_options(int K) {
  LoopOptions o;
  o.K = K;
  o.R = 3;
  o.level = FeedbackLevel::Dense;
  o.seeds = {0, 1};
  o.validation.worker = testing::test_worker();
  o.validation.smoke_steps = 20;
  o.transport_backoff = std::chrono::milliseconds{0};
  return o;
}

GameConfig short_cleanup() { return with_horizon(default_config(Game::Cleanup), 60); }

class ThrowingClient final : public ChatClient {
 public:
  ChatResponse complete(const ChatRequest&) override {
    ++calls;
    throw TransportError("connection refused");
  }
  int calls = 0;
};

TEST(Extract, LastCompleteBlock) {
  EXPECT_EQ(extract_code_block("```python\nx = 1\n```"), "x = 1\n");
  EXPECT_EQ(extract_code_block("a\n```\nfirst\n```\ntext\n```py\nsecond\n```\n"), "second\n");
  EXPECT_EQ(extract_code_block("  ```python\nindented fence\n  ```"), "indented fence\n");
  EXPECT_FALSE(extract_code_block("no code here").has_value());
  EXPECT_FALSE(extract_code_block("```python\nnever closed\n").has_value());
  EXPECT_EQ(extract_code_block("```python\ndone\n```\n```python\ndangling\n"), "done\n");
}

TEST(Validate, AcceptsBfsPolicy) {
  ValidationOptions v;
  v.worker = testing::test_worker();
  const ValidationResult r = validate_policy(testing::kSeedBfsPolicy, short_cleanup(), v);
  EXPECT_TRUE(r.ok) << r.diagnostic();
  EXPECT_EQ(r.stage, "passed");
}

TEST(Validate, EmptySourceIsStatic) {
  ValidationOptions v;
  v.worker = testing::test_worker();
  const ValidationResult r = validate_policy("", short_cleanup(), v);
  EXPECT_FALSE(r.ok);
  EXPECT_EQ(r.stage, "static");
}

TEST(Validate, JsonRoundTrip) {
  ValidationResult r;
  r.stage = "smoke";
  r.failures = {"a", "b"};
  const ValidationResult back = validation_from_json(to_json(r));
  EXPECT_EQ(back.stage, "smoke");
  EXPECT_EQ(back.failures, r.failures);
  EXPECT_EQ(back.diagnostic(), "a\nb");
}

TEST(RunLoop, InvalidThenValidUsesTwoAttempts) {
  MockChatClient client(testing::fixtures() / "mock" / "invalid_then_valid");
  const RunArtifact a = run_loop(short_cleanup(), client, quick_options(0));
  ASSERT_EQ(a.status, "complete") << a.failure;
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_EQ(a.records[0].attempts_used, 2);
  ASSERT_EQ(client.requests().size(), 2u);
  const auto& first = a.records[0].attempts[0];
  EXPECT_FALSE(first.validation.ok);
  EXPECT_EQ(first.validation.stage, "static");
  const std::string diag = first.validation.diagnostic();
  EXPECT_FALSE(diag.empty());
  // The second prompt is the first plus the failure report.
  const std::string& p1 = client.requests()[0].user;
  const std::string& p2 = client.requests()[1].user;
  EXPECT_EQ(p2, p1 + retry_suffix(1, diag));
  EXPECT_NE(p2.find("import"), std::string::npos);
}

TEST(RunLoop, ZeroShotReproducesBaselinePrompt) {
  MockChatClient client(testing::fixtures() / "mock" / "seed_bfs");
  const GameConfig cfg = short_cleanup();
  const RunArtifact a = run_loop(cfg, client, quick_options(0));
  ASSERT_EQ(a.status, "complete");
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_EQ(client.requests()[0].system, build_system_prompt(Game::Cleanup));
  EXPECT_EQ(client.requests()[0].user, build_user_prompt(0, 0, {}, FeedbackLevel::Dense, cfg));
  ASSERT_TRUE(a.records[0].feedback.has_value());
  EXPECT_EQ(a.records[0].trace_digests.size(), 2u);
  EXPECT_EQ(a.final_policy_source, a.records[0].policy_source);
}

TEST(RunLoop, RefinementPromptsCarryHistory) {
  MockChatClient client(testing::fixtures() / "mock" / "seed_bfs");
  const GameConfig cfg = short_cleanup();
  const RunArtifact a = run_loop(cfg, client, quick_options(2));
  ASSERT_EQ(a.status, "complete");
  ASSERT_EQ(a.records.size(), 3u);
  std::vector<PromptHistoryEntry> hist;
  for (int k = 0; k < 3; ++k) {
    EXPECT_EQ(a.records[static_cast<std::size_t>(k)].user_prompt,
              build_user_prompt(k, 2, hist, FeedbackLevel::Dense, cfg));
    hist.push_back({a.records[static_cast<std::size_t>(k)].policy_source, a.records[static_cast<std::size_t>(k)].feedback});
  }
}

TEST(RunLoop, ExhaustedAttemptsStop) {
  MockChatClient client(testing::fixtures() / "mock" / "always_invalid");
  const RunArtifact a = run_loop(short_cleanup(), client, quick_options(2));
  EXPECT_EQ(a.status, "validation_exhausted");
  EXPECT_EQ(a.failed_iteration, 0);
  EXPECT_EQ(client.requests().size(), 3u);
  ASSERT_EQ(a.records.size(), 1u);
  EXPECT_EQ(a.records[0].attempts.size(), 3u);
  EXPECT_EQ(a.records[0].attempts[0].validation.stage, "smoke");
  // Each retry carries every earlier failure.
  const std::string& last = client.requests()[2].user;
  EXPECT_NE(last.find("## Attempt 1 failed validation"), std::string::npos);
  EXPECT_NE(last.find("## Attempt 2 failed validation"), std::string::npos);
}

TEST(RunLoop, MissingCodeBlockIsExtractFailure) {
  MockChatClient client(std::vector<std::string>{"I cannot help with that.", fenced(testing::kSeedBfsPolicy)});
  const RunArtifact a = run_loop(short_cleanup(), client, quick_options(0));
  ASSERT_EQ(a.status, "complete");
  EXPECT_EQ(a.records[0].attempts[0].validation.stage, "extract");
  EXPECT_EQ(a.records[0].attempts_used, 2);
}

TEST(RunLoop, TransportErrorsRetryThenStop) {
  ThrowingClient client;
  LoopOptions o = quick_options(1);
  o.transport_retries = 2;
  const RunArtifact a = run_loop(short_cleanup(), client, o);
  EXPECT_EQ(a.status, "transport_error");
  EXPECT_EQ(client.calls, 3);
  EXPECT_NE(a.failure.find("connection refused"), std::string::npos);
}

TEST(RunLoop, RejectsBadOptions) {
  MockChatClient client(std::vector<std::string>{"x"});
  LoopOptions o = quick_options(0);
  o.R = 0;
  EXPECT_THROW(run_loop(short_cleanup(), client, o), UsageError);
  o = quick_options(-1);
  EXPECT_THROW(run_loop(short_cleanup(), client, o), UsageError);
  o = quick_options(0);
  o.seeds.clear();
  EXPECT_THROW(run_loop(short_cleanup(), client, o), UsageError);
}

TEST(RunLoop, PersistsAndReproduces) {
  const fs::path dir = fs::temp_directory_path() / "ssd_synth_persist";
  fs::remove_all(dir);
  LoopOptions o = quick_options(1);
  o.out_dir = dir;
  MockChatClient c1(testing::fixtures() / "mock" / "seed_bfs");
  const RunArtifact a = run_loop(short_cleanup(), c1, o);
  ASSERT_EQ(a.status, "complete");
  for (const char* f : {"prompt_system.txt", "prompt_user.txt", "response.txt", "policy.py.txt", "validation.json",
                        "feedback.json", "requests.jsonl"}) {
    EXPECT_TRUE(fs::exists(dir / "iterations" / "k_1" / f)) << f;
  }
  std::ifstream in(dir / "run.json");
  const Json run = Json::parse(in);
  EXPECT_EQ(run["digest"], a.digest());
  EXPECT_EQ(run["K"], 1);
  EXPECT_EQ(run["iterations"], 2);
  // Same config and canned responses give the same digest.
  o.out_dir.reset();
  MockChatClient c2(testing::fixtures() / "mock" / "seed_bfs");
  EXPECT_EQ(run_loop(game_config_from_json(run["game_config"]), c2, o).digest(), a.digest());
  fs::remove_all(dir);
}

}  // namespace
}  // namespace ssd
