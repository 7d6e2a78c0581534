#include <gtest/gtest.h>

#include "ssd/prompts.hpp"
#include "support.hpp"

namespace ssd {
namespace {

std::string golden(const std::string& name) { return testing::read_text(testing::fixtures() / "goldens" / name); }

using testing::canned_history;

const char* game_name(Game g) { return g == Game::Gathering ? "gathering" : "cleanup"; }

TEST(Prompts, SystemGoldens) {
  for (Game g : {Game::Gathering, Game::Cleanup}) {
    EXPECT_EQ(build_system_prompt(g), golden(std::string("system_") + game_name(g) + ".txt")) << game_name(g);
  }
}

TEST(Prompts, ZeroShotGoldens) {
  for (Game g : {Game::Gathering, Game::Cleanup}) {
    for (FeedbackLevel level : {FeedbackLevel::Sparse, FeedbackLevel::Dense}) {
      EXPECT_EQ(build_user_prompt(0, 3, {}, level, default_config(g)),
                golden(std::string("user_k0_") + game_name(g) + ".txt"))
          << game_name(g);
    }
  }
}

TEST(Prompts, RefinementGoldens) {
  const auto history = canned_history();
  for (Game g : {Game::Gathering, Game::Cleanup}) {
    for (FeedbackLevel level : {FeedbackLevel::Sparse, FeedbackLevel::Dense}) {
      const std::string name =
          std::string("user_k2_") + to_string(level) + "_" + game_name(g) + ".txt";
      EXPECT_EQ(build_user_prompt(2, 3, history, level, default_config(g)), golden(name)) << name;
    }
  }
}

TEST(Prompts, SparseHidesSocialMetrics) {
  const auto history = canned_history();
  const std::string sparse = build_user_prompt(2, 3, history, FeedbackLevel::Sparse, default_config(Game::Cleanup));
  const std::string dense = build_user_prompt(2, 3, history, FeedbackLevel::Dense, default_config(Game::Cleanup));
  EXPECT_EQ(sparse.find("efficiency="), std::string::npos);
  EXPECT_NE(dense.find("efficiency=0.123"), std::string::npos);
  EXPECT_NE(sparse.find("return greedy_action"), std::string::npos);
}

TEST(Prompts, RejectsBadHistory) {
  const auto history = canned_history();
  const GameConfig cfg = default_config(Game::Gathering);
  EXPECT_THROW(build_user_prompt(0, 3, history, FeedbackLevel::Sparse, cfg), UsageError);
  EXPECT_THROW(build_user_prompt(1, 3, history, FeedbackLevel::Sparse, cfg), UsageError);
  EXPECT_THROW(build_user_prompt(4, 3, {}, FeedbackLevel::Sparse, cfg), UsageError);
  auto missing = history;
  missing[0].feedback.reset();
  EXPECT_THROW(build_user_prompt(2, 3, missing, FeedbackLevel::Dense, cfg), UsageError);
}

TEST(Prompts, RetrySuffix) {
  EXPECT_EQ(retry_suffix(1, "boom"),
            "\n## Attempt 1 failed validation\n\nboom\n\nFix the problem and return the complete corrected policy.\n");
}

TEST(Prompts, FeedbackLevelNames) {
  EXPECT_EQ(parse_feedback_level("reward"), FeedbackLevel::Sparse);
  EXPECT_EQ(parse_feedback_level("social"), FeedbackLevel::Dense);
  EXPECT_EQ(parse_feedback_level("dense"), FeedbackLevel::Dense);
  EXPECT_ANY_THROW(parse_feedback_level("loud"));
}

}  // namespace
}  // namespace ssd
