#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssd/env.hpp"

namespace ssd {

using Json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view data);

struct StepRecord {
  int step = 0;
  std::vector<Action> actions;
  std::vector<double> rewards;
  std::vector<Event> events;
  std::vector<std::uint8_t> active;  // after the step
  std::vector<Mutation> mutations;   // applied before the step

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

struct EpisodeTrace {
  std::string config_digest;
  std::uint64_t seed = 0;  // environment seed actually used for reset
  int n_agents = 0;
  std::vector<StepRecord> steps;

  std::vector<double> returns() const;
  // One JSON object per line, keys in the order
  // step, actions, rewards, events, active, mutations.
  std::string to_jsonl() const;
  // SHA-256 of to_jsonl().
  std::string digest() const;

  static EpisodeTrace from_jsonl(std::string_view text);
};

Json to_json(const Event& e);
Event event_from_json(const Json& j);
Json to_json(const Mutation& m);
Mutation mutation_from_json(const Json& j);
Json to_json(const StepRecord& r);
StepRecord step_record_from_json(const Json& j);

Json to_json(const BeamSpec& b);
BeamSpec beam_from_json(const Json& j);
// The map is embedded as its text form, so a config fully reproduces a run.
Json to_json(const GameConfig& cfg);
GameConfig game_config_from_json(const Json& j);
std::string config_digest(const GameConfig& cfg);

}  // namespace ssd
