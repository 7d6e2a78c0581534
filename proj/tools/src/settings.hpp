#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssd/env.hpp"
#include "ssd/sandbox.hpp"
#include "ssd/trace.hpp"

namespace ssd::cli {

// Values from an optional JSON config file, with command-line flags layered
// on top. Accessors throw ConfigError naming the offending field.
class Settings {
 public:
  Settings() = default;
  explicit Settings(Json values);
  static Settings from_file(const std::filesystem::path& path);

  void set(const std::string& key, Json value) { values_[key] = std::move(value); }
  bool has(const std::string& key) const { return values_.contains(key) && !values_[key].is_null(); }
  const Json& json() const { return values_; }

  std::string str(const std::string& key, std::optional<std::string> fallback = std::nullopt) const;
  int integer(const std::string& key, std::optional<int> fallback = std::nullopt, int min = 0) const;
  std::uint64_t u64(const std::string& key, std::optional<std::uint64_t> fallback = std::nullopt) const;
  double number(const std::string& key, double fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  // A comma-separated string or an array of strings.
  std::vector<std::string> list(const std::string& key, std::vector<std::string> fallback = {}) const;
  // An integer n (meaning seeds 0..n-1) or an explicit array.
  std::vector<std::uint64_t> seeds(const std::string& key, int fallback_count) const;
  // A JSON object, or a string holding one.
  Json object(const std::string& key) const;

  // Throws ConfigError on keys no command understands.
  void check_known_keys() const;

 private:
  const Json& require(const std::string& key) const;
  Json values_ = Json::object();
};

// "5" -> 5, "0,3,9" -> [0, 3, 9].
Json parse_seeds_flag(const std::string& text);

// Embedded game_config if present, else game/map defaults; n_agents and
// horizon override either.
GameConfig game_config(const Settings& s);

// "worker" setting, else SSD_WORKER, else `fallback`.
WorkerSpec worker_spec(const Settings& s, const std::string& fallback);

}  // namespace ssd::cli
