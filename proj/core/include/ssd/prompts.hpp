#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "ssd/env.hpp"
#include "ssd/metrics.hpp"

namespace ssd {

enum class FeedbackLevel { Sparse, Dense };

const char* to_string(FeedbackLevel level);
// Accepts sparse/reward and dense/social.
FeedbackLevel parse_feedback_level(std::string_view s);

std::string build_system_prompt(Game game);

// What the user prompt needs to know about one finished iteration.
struct PromptHistoryEntry {
  std::string policy_source;
  std::optional<Feedback> feedback;
};

// Iteration k of K. For k == 0 `history` must be empty; for k >= 1 it holds
// iterations 0..k-1, each with feedback, and the last entry is the current
// policy. Throws UsageError otherwise.
std::string build_user_prompt(int k, int K, std::span<const PromptHistoryEntry> history, FeedbackLevel level,
                              const GameConfig& cfg);

// Appended to the user prompt after a failed attempt.
std::string retry_suffix(int attempt, std::string_view diagnostic);

}  // namespace ssd
