#include "ssd/trace.hpp"

#include <openssl/evp.h>

#include <array>
#include <sstream>

namespace ssd {
namespace {

Json cell_json(Cell c) { return Json::array({c.row, c.col}); }

Cell cell_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw UsageError("expected [row, col], got " + j.dump());
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

EventKind event_kind_from(std::string_view s) {
  for (int k = 0; k <= static_cast<int>(EventKind::AgentRespawned); ++k) {
    if (s == to_string(static_cast<EventKind>(k))) return static_cast<EventKind>(k);
  }
  throw UsageError("unknown event type '" + std::string(s) + "'");
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() ? fallback : it->template get<T>();
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

Json to_json(const Event& e) {
  Json j;
  j["type"] = to_string(e.kind);
  if (e.agent >= 0) j["agent"] = e.agent;
  if (e.target >= 0) j["target"] = e.target;
  if (e.spawn >= 0) j["spawn"] = e.spawn;
  if (e.cell != Cell{-1, -1}) j["cell"] = cell_json(e.cell);
  if (e.kind == EventKind::Cleaned) {
    Json cells = Json::array();
    for (const Cell& c : e.cells) cells.push_back(cell_json(c));
    j["cells"] = std::move(cells);
  }
  return j;
}

Event event_from_json(const Json& j) {
  Event e;
  e.kind = event_kind_from(j.at("type").get<std::string>());
  e.agent = get_or(j, "agent", -1);
  e.target = get_or(j, "target", -1);
  e.spawn = get_or(j, "spawn", -1);
  if (j.contains("cell")) e.cell = cell_from(j.at("cell"));
  if (j.contains("cells")) {
    for (const auto& c : j.at("cells")) e.cells.push_back(cell_from(c));
  }
  return e;
}

Json to_json(const Mutation& m) {
  return std::visit(
      [](const auto& op) -> Json {
        using T = std::decay_t<decltype(op)>;
        Json j;
        if constexpr (std::is_same_v<T, SetAgentPos>) {
          j["op"] = "set_agent_pos";
          j["agent"] = op.agent;
          j["cell"] = cell_json(op.cell);
        } else if constexpr (std::is_same_v<T, SetAgentOrient>) {
          j["op"] = "set_agent_orient";
          j["agent"] = op.agent;
          j["value"] = static_cast<int>(op.orient);
        } else if constexpr (std::is_same_v<T, SetAgentTimeout>) {
          j["op"] = "set_agent_timeout";
          j["agent"] = op.agent;
          j["value"] = op.steps;
        } else if constexpr (std::is_same_v<T, SetAgentBeamHits>) {
          j["op"] = "set_agent_beam_hits";
          j["agent"] = op.agent;
          j["value"] = op.hits;
        } else if constexpr (std::is_same_v<T, SetAppleAlive>) {
          j["op"] = "set_apple_alive";
          j["spawn"] = op.spawn;
          j["value"] = op.alive;
        } else if constexpr (std::is_same_v<T, SetWaste>) {
          j["op"] = "set_waste";
          j["cell"] = cell_json(op.cell);
          j["value"] = op.present;
        }
        return j;
      },
      m);
}

Mutation mutation_from_json(const Json& j) {
  if (!j.is_object() || !j.contains("op")) throw UsageError("mutation: expected an object with 'op'");
  const std::string op = j.at("op").get<std::string>();
  if (op == "set_agent_pos") return SetAgentPos{j.at("agent").get<int>(), cell_from(j.at("cell"))};
  if (op == "set_agent_orient") {
    const int v = j.at("value").get<int>();
    if (v < 0 || v > 3) throw UsageError("mutation: orientation out of range");
    return SetAgentOrient{j.at("agent").get<int>(), static_cast<Orientation>(v)};
  }
  if (op == "set_agent_timeout") return SetAgentTimeout{j.at("agent").get<int>(), j.at("value").get<int>()};
  if (op == "set_agent_beam_hits") return SetAgentBeamHits{j.at("agent").get<int>(), j.at("value").get<int>()};
  if (op == "set_apple_alive") return SetAppleAlive{j.at("spawn").get<int>(), j.at("value").get<bool>()};
  if (op == "set_waste") return SetWaste{cell_from(j.at("cell")), j.at("value").get<bool>()};
  throw UsageError("mutation: unknown op '" + op + "'");
}

Json to_json(const StepRecord& r) {
  Json j;
  j["step"] = r.step;
  Json actions = Json::array();
  for (Action a : r.actions) actions.push_back(static_cast<int>(a));
  j["actions"] = std::move(actions);
  j["rewards"] = r.rewards;
  Json events = Json::array();
  for (const Event& e : r.events) events.push_back(to_json(e));
  j["events"] = std::move(events);
  Json active = Json::array();
  for (auto a : r.active) active.push_back(a != 0);
  j["active"] = std::move(active);
  Json muts = Json::array();
  for (const Mutation& m : r.mutations) muts.push_back(to_json(m));
  j["mutations"] = std::move(muts);
  return j;
}

StepRecord step_record_from_json(const Json& j) {
  StepRecord r;
  r.step = j.at("step").get<int>();
  for (const auto& a : j.at("actions")) r.actions.push_back(static_cast<Action>(a.get<int>()));
  r.rewards = j.at("rewards").get<std::vector<double>>();
  for (const auto& e : j.at("events")) r.events.push_back(event_from_json(e));
  for (const auto& a : j.at("active")) r.active.push_back(a.get<bool>() ? 1 : 0);
  if (j.contains("mutations")) {
    for (const auto& m : j.at("mutations")) r.mutations.push_back(mutation_from_json(m));
  }
  return r;
}

std::vector<double> EpisodeTrace::returns() const {
  std::vector<double> out(static_cast<std::size_t>(n_agents), 0.0);
  for (const StepRecord& r : steps) {
    for (std::size_t i = 0; i < out.size() && i < r.rewards.size(); ++i) out[i] += r.rewards[i];
  }
  return out;
}

std::string EpisodeTrace::to_jsonl() const {
  std::string out;
  for (const StepRecord& r : steps) {
    out += to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

std::string EpisodeTrace::digest() const { return sha256_hex(to_jsonl()); }

EpisodeTrace EpisodeTrace::from_jsonl(std::string_view text) {
  EpisodeTrace t;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    t.steps.push_back(step_record_from_json(Json::parse(line)));
  }
  if (!t.steps.empty()) t.n_agents = static_cast<int>(t.steps.front().rewards.size());
  return t;
}

Json to_json(const BeamSpec& b) {
  Json j;
  j["length"] = b.length;
  j["width"] = b.width;
  j["fire_cost"] = b.fire_cost;
  j["hit_penalty"] = b.hit_penalty;
  j["hits_to_tag"] = b.hits_to_tag;
  j["timeout_steps"] = b.timeout_steps;
  return j;
}

BeamSpec beam_from_json(const Json& j) {
  BeamSpec b;
  b.length = j.at("length").get<int>();
  b.width = j.at("width").get<int>();
  b.fire_cost = j.at("fire_cost").get<double>();
  b.hit_penalty = j.at("hit_penalty").get<double>();
  b.hits_to_tag = j.at("hits_to_tag").get<int>();
  b.timeout_steps = j.at("timeout_steps").get<int>();
  return b;
}

Json to_json(const GameConfig& cfg) {
  Json j;
  std::visit(
      [&j](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        j["game"] = std::is_same_v<T, GatheringConfig> ? "gathering" : "cleanup";
        j["n_agents"] = c.n_agents;
        j["horizon"] = c.horizon;
        if constexpr (std::is_same_v<T, GatheringConfig>) {
          j["apple_respawn"] = c.apple_respawn;
          j["beam"] = to_json(c.beam);
        } else {
          j["penalty_beam"] = to_json(c.penalty_beam);
          j["clean_beam"] = to_json(c.clean_beam);
          j["initial_waste_fraction"] = c.initial_waste_fraction;
          j["waste_spawn_rate"] = c.waste_spawn_rate;
          j["waste_saturation"] = c.waste_saturation;
          j["apple_base_rate"] = c.apple_base_rate;
          j["depletion_threshold"] = c.depletion_threshold;
        }
        j["map"] = {{"name", c.map.name}, {"text", format_map(c.map)}};
      },
      cfg);
  return j;
}

GameConfig game_config_from_json(const Json& j) {
  const Game game = parse_game(j.at("game").get<std::string>());
  auto read_map = [](const Json& m) -> GridMap {
    if (m.is_string()) return resolve_map(m.get<std::string>());
    if (m.contains("text")) return parse_map(m.at("text").get<std::string>(), get_or<std::string>(m, "name", "unnamed"));
    if (m.contains("path")) return load_map_file(m.at("path").get<std::string>());
    return resolve_map(m.at("name").get<std::string>());
  };
  try {
    if (game == Game::Gathering) {
      GatheringConfig c;
      c.n_agents = get_or(j, "n_agents", c.n_agents);
      c.horizon = get_or(j, "horizon", c.horizon);
      c.apple_respawn = get_or(j, "apple_respawn", c.apple_respawn);
      if (j.contains("beam")) c.beam = beam_from_json(j.at("beam"));
      if (j.contains("map")) c.map = read_map(j.at("map"));
      return c;
    }
    CleanupConfig c;
    c.n_agents = get_or(j, "n_agents", c.n_agents);
    c.horizon = get_or(j, "horizon", c.horizon);
    if (j.contains("penalty_beam")) c.penalty_beam = beam_from_json(j.at("penalty_beam"));
    if (j.contains("clean_beam")) c.clean_beam = beam_from_json(j.at("clean_beam"));
    c.initial_waste_fraction = get_or(j, "initial_waste_fraction", c.initial_waste_fraction);
    c.waste_spawn_rate = get_or(j, "waste_spawn_rate", c.waste_spawn_rate);
    c.waste_saturation = get_or(j, "waste_saturation", c.waste_saturation);
    c.apple_base_rate = get_or(j, "apple_base_rate", c.apple_base_rate);
    c.depletion_threshold = get_or(j, "depletion_threshold", c.depletion_threshold);
    if (j.contains("map")) c.map = read_map(j.at("map"));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

std::string config_digest(const GameConfig& cfg) { return sha256_hex(to_json(cfg).dump()); }

}  // namespace ssd
