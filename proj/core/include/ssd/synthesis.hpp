#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssd/chat.hpp"
#include "ssd/metrics.hpp"
#include "ssd/prompts.hpp"
#include "ssd/sandbox.hpp"

namespace ssd {

// Body of the last complete ``` fenced block, or nullopt.
std::optional<std::string> extract_code_block(std::string_view response);

struct ValidationResult {
  bool ok = false;
  // "extract", "static" or "smoke" for failures; "passed" otherwise.
  std::string stage = "passed";
  std::vector<std::string> failures;

  std::string diagnostic() const;
};

Json to_json(const ValidationResult& v);
ValidationResult validation_from_json(const Json& j);

struct ValidationOptions {
  WorkerSpec worker;
  int smoke_steps = 50;
  std::uint64_t smoke_seed = 0;
};

// Static safety check in the worker, then a smoke episode with every agent
// running `source` read-only. Failures come back in the result; only a
// worker that cannot be started throws (InfrastructureError).
ValidationResult validate_policy(std::string_view source, const GameConfig& cfg, const ValidationOptions& options);

struct Attempt {
  int attempt = 1;
  std::string user_prompt;
  std::string response;
  std::string source;  // empty when extraction failed
  ValidationResult validation;
};

struct IterationRecord {
  int k = 0;
  std::string policy_source;
  ValidationResult validation;
  int attempts_used = 0;
  std::optional<Feedback> feedback;  // absent when every attempt failed
  std::vector<std::string> trace_digests;
  std::string system_prompt;
  std::string user_prompt;  // as sent on the last attempt
  std::vector<Attempt> attempts;
};

Json to_json(const IterationRecord& r);

struct LoopOptions {
  int K = 3;
  int R = 3;
  FeedbackLevel level = FeedbackLevel::Sparse;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::uint64_t run_seed = 0;
  int threads = 1;
  ValidationOptions validation;
  std::string model;
  Json model_options = Json::object();
  int transport_retries = 3;
  std::chrono::milliseconds transport_backoff{1000};
  // When set, every finished iteration is written here as it completes.
  std::optional<std::filesystem::path> out_dir;
  Json extra_run_config = Json::object();  // echoed into run.json
};

struct RunArtifact {
  std::vector<IterationRecord> records;
  // "complete", "validation_exhausted" or "transport_error".
  std::string status = "complete";
  std::optional<int> failed_iteration;
  std::string failure;
  std::string final_policy_source;  // last policy that passed validation

  // SHA-256 over the records' sources, validations and feedback.
  std::string digest() const;
};

// Generate, validate (up to R attempts, each failure appended to the next
// prompt), evaluate, feed back; K refinement iterations after iteration 0.
// If every attempt at some iteration fails, the run stops there and keeps
// the previous policy.
RunArtifact run_loop(const GameConfig& cfg, ChatClient& client, const LoopOptions& options);

Json run_json(const GameConfig& cfg, const LoopOptions& options, const RunArtifact& artifact);
void write_iteration(const std::filesystem::path& dir, const IterationRecord& record);

}  // namespace ssd
