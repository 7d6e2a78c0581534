#include "settings.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "ssd/errors.hpp"
#include "ssd/evaluation.hpp"
#include "ssd/map_io.hpp"

namespace ssd::cli {
namespace {

constexpr std::array kKnownKeys = {
    // inputs
    "command", "game", "map", "n_agents", "horizon", "seeds", "seed", "run_seed", "threads", "out", "policy",
    "worker", "act_budget_ms", "feedback", "K", "R", "mock", "model", "model_options", "smoke_steps",
    "smoke_seed", "transport_retries", "episodes", "alpha", "gamma", "attacks", "victims", "trace", "every",
    "game_config", "q_table",
    // written by earlier runs, ignored on input
    "status", "failed_iteration", "failure", "iterations", "digest", "policy_id", "wall_seconds"};

ConfigError field_error(const std::string& key, const std::string& expected, const Json& got) {
  return ConfigError("config field '" + key + "': expected " + expected + ", got " + got.dump());
}

}  // namespace

Settings::Settings(Json values) : values_(std::move(values)) {
  if (!values_.is_object()) throw ConfigError("config: top level must be a JSON object");
}

Settings Settings::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Json j;
  try {
    j = Json::parse(ss.str());
  } catch (const Json::parse_error& e) {
    throw ConfigError("config: '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return Settings(std::move(j));
}

const Json& Settings::require(const std::string& key) const {
  if (!has(key)) throw ConfigError("config field '" + key + "' is required");
  return values_[key];
}

std::string Settings::str(const std::string& key, std::optional<std::string> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const Json& v = require(key);
  if (!v.is_string()) throw field_error(key, "a string", v);
  return v.get<std::string>();
}

int Settings::integer(const std::string& key, std::optional<int> fallback, int min) const {
  if (!has(key) && fallback) return *fallback;
  const Json& v = require(key);
  if (!v.is_number_integer() || v.get<std::int64_t>() < min || v.get<std::int64_t>() > INT32_MAX) {
    throw field_error(key, "an integer >= " + std::to_string(min), v);
  }
  return v.get<int>();
}

std::uint64_t Settings::u64(const std::string& key, std::optional<std::uint64_t> fallback) const {
  if (!has(key) && fallback) return *fallback;
  const Json& v = require(key);
  if (!v.is_number_unsigned()) throw field_error(key, "a non-negative integer", v);
  return v.get<std::uint64_t>();
}

double Settings::number(const std::string& key, double fallback) const {
  if (!has(key)) return fallback;
  const Json& v = values_[key];
  if (!v.is_number()) throw field_error(key, "a number", v);
  return v.get<double>();
}

bool Settings::boolean(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const Json& v = values_[key];
  if (!v.is_boolean()) throw field_error(key, "true or false", v);
  return v.get<bool>();
}

std::vector<std::string> Settings::list(const std::string& key, std::vector<std::string> fallback) const {
  if (!has(key)) return fallback;
  const Json& v = values_[key];
  std::vector<std::string> out;
  if (v.is_string()) {
    std::stringstream ss(v.get<std::string>());
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(item);
    }
  } else if (v.is_array()) {
    for (const Json& e : v) {
      if (!e.is_string()) throw field_error(key, "a list of strings", v);
      out.push_back(e.get<std::string>());
    }
  } else {
    throw field_error(key, "a string or a list of strings", v);
  }
  if (out.empty()) throw field_error(key, "at least one entry", v);
  return out;
}

std::vector<std::uint64_t> Settings::seeds(const std::string& key, int fallback_count) const {
  std::vector<std::uint64_t> out;
  if (!has(key)) {
    for (int i = 0; i < fallback_count; ++i) out.push_back(static_cast<std::uint64_t>(i));
    return out;
  }
  const Json& v = values_[key];
  if (v.is_number_integer()) {
    if (v.get<std::int64_t>() < 1) throw field_error(key, "a seed count >= 1", v);
    for (std::int64_t i = 0; i < v.get<std::int64_t>(); ++i) out.push_back(static_cast<std::uint64_t>(i));
    return out;
  }
  if (!v.is_array() || v.empty()) throw field_error(key, "a seed count or a nonempty list of seeds", v);
  for (const Json& e : v) {
    if (!e.is_number_unsigned()) throw field_error(key, "a list of non-negative integers", v);
    out.push_back(e.get<std::uint64_t>());
  }
  std::vector<std::uint64_t> sorted = out;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw field_error(key, "distinct seeds", v);
  }
  return out;
}

Json Settings::object(const std::string& key) const {
  if (!has(key)) return Json::object();
  Json v = values_[key];
  if (v.is_string()) {
    try {
      v = Json::parse(v.get<std::string>());
    } catch (const Json::parse_error&) {
      throw field_error(key, "a JSON object", values_[key]);
    }
  }
  if (!v.is_object()) throw field_error(key, "a JSON object", values_[key]);
  return v;
}

void Settings::check_known_keys() const {
  for (const auto& [k, v] : values_.items()) {
    if (std::find(kKnownKeys.begin(), kKnownKeys.end(), k) == kKnownKeys.end()) {
      throw ConfigError("config: unknown field '" + k + "'");
    }
  }
}

Json parse_seeds_flag(const std::string& text) {
  auto parse_one = [&](const std::string& s) -> std::uint64_t {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("--seeds: '" + text + "' is neither a count nor a comma-separated list of seeds");
    }
    return std::stoull(s);
  };
  if (text.find(',') == std::string::npos) {
    const std::uint64_t n = parse_one(text);
    if (n > static_cast<std::uint64_t>(INT32_MAX)) throw ConfigError("--seeds: count too large");
    return Json(static_cast<std::int64_t>(n));
  }
  Json out = Json::array();
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_one(item));
  return out;
}

GameConfig game_config(const Settings& s) {
  GameConfig cfg;
  if (s.has("game_config")) {
    try {
      cfg = game_config_from_json(s.json()["game_config"]);
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("config field 'game_config': ") + e.what());
    }
    if (s.has("game") && parse_game(s.str("game")) != game_of(cfg)) {
      throw ConfigError("config field 'game': '" + s.str("game") + "' disagrees with game_config");
    }
    if (s.has("map")) {
      throw ConfigError("config field 'map': cannot be combined with an embedded game_config");
    }
  } else {
    if (!s.has("game")) throw ConfigError("config field 'game' is required (gathering or cleanup)");
    Game game;
    try {
      game = parse_game(s.str("game"));
    } catch (const ConfigError&) {
      throw field_error("game", "\"gathering\" or \"cleanup\"", s.json()["game"]);
    }
    cfg = default_config(game);
    if (s.has("map")) {
      GridMap map = resolve_map(s.str("map"));
      std::visit([&](auto& c) { c.map = std::move(map); }, cfg);
    }
  }
  if (s.has("n_agents")) cfg = with_agents(cfg, s.integer("n_agents", std::nullopt, 1));
  if (s.has("horizon")) cfg = with_horizon(cfg, s.integer("horizon", std::nullopt, 1));
  return cfg;
}

WorkerSpec worker_spec(const Settings& s, const std::string& fallback) {
  WorkerSpec spec;
  if (s.has("worker")) {
    const Json& w = s.json()["worker"];
    if (w.is_string()) {
      std::stringstream ss(w.get<std::string>());
      std::string tok;
      while (ss >> tok) spec.argv.push_back(tok);
    } else {
      spec.argv = s.list("worker");
    }
    if (spec.argv.empty()) throw field_error("worker", "a command line", w);
  } else {
    spec = worker_spec_from_env(fallback);
  }
  spec.act_budget = std::chrono::milliseconds(s.integer("act_budget_ms", 50, 1));
  return spec;
}

}  // namespace ssd::cli
