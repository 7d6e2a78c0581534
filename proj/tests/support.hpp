#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "ssd/agents.hpp"
#include "ssd/prompts.hpp"
#include "ssd/sandbox.hpp"

namespace ssd::testing {

inline WorkerSpec test_worker() { return worker_spec_from_env(SSD_TEST_WORKER); }

inline std::filesystem::path fixtures() { return SSD_TEST_FIXTURES; }

// The same binding for every agent.
inline std::vector<PolicyBinding> everyone(const PolicyBinding& b, int n) {
  return std::vector<PolicyBinding>(static_cast<std::size_t>(n), b);
}

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Feedback canned_feedback(double r, double u, double e, double s, double p) {
  Feedback f;
  f.mean_return = r;
  f.metrics = {.efficiency = u, .equality = e, .sustainability = s, .peace = p};
  return f;
}

// History behind the k=2 golden prompts.
inline std::vector<PromptHistoryEntry> canned_history() {
  return {
      {"def policy(env, agent_id) -> int:\n    return 7\n", canned_feedback(12.345, 0.1234, 0.98765, 456.78, 9.95)},
      {"def policy(env, agent_id) -> int:\n    return greedy_action(env, agent_id)\n",
       canned_feedback(-3.05, -0.0305, -3.0612, 16.44, 10.0)},
  };
}

inline const char* kSeedBfsPolicy = R"(def policy(env, agent_id) -> int:
    if int(env.agent_timeout[agent_id]) > 0:
        return 7
    result = bfs_nearest_apple(env, agent_id)
    if result is None:
        return 7
    dr, dc = result
    return direction_to_action(dr, dc, int(env.agent_orient[agent_id]))
)";

}  // namespace ssd::testing
