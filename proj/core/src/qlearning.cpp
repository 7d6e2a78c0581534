#include "ssd/qlearning.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>

namespace ssd {
namespace {

constexpr char kMagic[4] = {'S', 'S', 'D', 'Q'};

// Absolute direction index of a unit step, N=0 E=1 S=2 W=3.
int direction_index(int dr, int dc) {
  if (dr < 0) return 0;
  if (dc > 0) return 1;
  if (dr > 0) return 2;
  return 3;
}

int apple_density(const Environment& env, const EnvState& state, Cell me) {
  int n = 0;
  for (std::size_t k = 0; k < state.apple_alive.size(); ++k) {
    if (!state.apple_alive[k]) continue;
    const Cell a = env.map().apple_spawns[k];
    if (std::abs(a.row - me.row) + std::abs(a.col - me.col) <= 3) ++n;
  }
  if (n == 0) return 0;
  return n <= 3 ? 1 : 2;
}

// Nearest active rival by Manhattan distance, lower index on ties.
int nearest_rival(const EnvState& state, int agent, int* dist) {
  const Cell me = state.agent_pos[static_cast<std::size_t>(agent)];
  int best = -1;
  int best_d = 0;
  for (int j = 0; j < static_cast<int>(state.agent_pos.size()); ++j) {
    if (j == agent || !state.active(j)) continue;
    const Cell p = state.agent_pos[static_cast<std::size_t>(j)];
    const int d = std::abs(p.row - me.row) + std::abs(p.col - me.col);
    if (best < 0 || d < best_d) {
      best = j;
      best_d = d;
    }
  }
  *dist = best_d;
  return best;
}

int rival_distance_bin(int rival, int d) {
  if (rival < 0) return 2;
  if (d <= 2) return 0;
  return d <= 6 ? 1 : 2;
}

int near_far_bin(const std::optional<FirstStep>& s) {
  if (!s) return 2;
  if (s->dist <= 3) return 0;
  return s->dist <= 10 ? 1 : 2;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4] = {};
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

class QPolicy final : public Policy {
 public:
  explicit QPolicy(std::shared_ptr<const QTable> table) : table_(std::move(table)) {}
  PolicyDecision decide(const Environment& env, const EnvState& state, int agent) override {
    if (!state.active(agent)) return {};
    const std::vector<int> f = q_features(env, state, agent);
    return {table_->greedy(q_state_index(env.game(), f)), {}};
  }

 private:
  std::shared_ptr<const QTable> table_;
};

}  // namespace

std::span<const int> q_feature_bins(Game game) {
  if (game == Game::Gathering) return kGatheringBins;
  return kCleanupBins;
}

int q_state_count(Game game) {
  int n = 1;
  for (int b : q_feature_bins(game)) n *= b;
  return n;
}

int q_action_count(Game game) { return game == Game::Gathering ? kNumGatheringActions : kNumCleanupActions; }

std::vector<int> q_features(const Environment& env, const EnvState& state, int agent) {
  const bool active = state.active(agent);
  const Cell me = state.agent_pos[static_cast<std::size_t>(agent)];
  const Orientation o = state.agent_orient[static_cast<std::size_t>(agent)];
  const auto apple = bfs_nearest_apple(env, state, agent);
  auto dir_of = [](const std::optional<FirstStep>& s, int none) {
    if (!s) return none;
    if (s->dist == 0) return 0;
    return direction_index(s->dr, s->dc);
  };
  int rival_d = 0;
  const int rival = active ? nearest_rival(state, agent, &rival_d) : -1;
  int rival_dir = 0;
  if (rival >= 0) {
    const Cell p = state.agent_pos[static_cast<std::size_t>(rival)];
    const int dr = p.row - me.row;
    const int dc = p.col - me.col;
    rival_dir = std::abs(dr) >= std::abs(dc) ? (dr < 0 ? 0 : 2) : (dc > 0 ? 1 : 3);
  }

  if (env.game() == Game::Gathering) {
    int apple_dist = 3;
    if (apple) apple_dist = apple->dist <= 2 ? 0 : apple->dist <= 6 ? 1 : apple->dist <= 14 ? 2 : 3;
    const int density = active ? apple_density(env, state, me) : 0;
    int beam_path = 0;
    if (active) {
      const std::vector<int> opps = get_opponents(state, agent);
      beam_path = beam_targets_for_orient(env, state, me, o, opps).empty() ? 0 : 1;
    }
    const int hits = !active ? 2 : state.agent_beam_hits[static_cast<std::size_t>(agent)] > 0 ? 1 : 0;
    return {dir_of(apple, 4), apple_dist, density, rival_dir, rival_distance_bin(rival, rival_d), beam_path, hits};
  }

  const CleanupConfig& c = env.cleanup();
  std::optional<FirstStep> waste;
  if (active) {
    const auto& walls = env.walls();
    waste = bfs_first_step(
        env.map().height, env.map().width, me, [&](Cell x) { return state.waste[x] != 0; },
        [&walls](Cell x) { return walls[x] == 0; });
  }
  const double wf = env.waste_fraction(state);
  const int global = wf < 0.5 * c.depletion_threshold ? 0 : wf < c.depletion_threshold ? 1 : 2;
  int can_clean = 0;
  if (wf > 0.0) can_clean = active && clean_count_at(env, state, me, o) > 0 ? 2 : 1;
  return {dir_of(apple, 0),
          near_far_bin(apple),
          active ? apple_density(env, state, me) : 0,
          dir_of(waste, 0),
          near_far_bin(waste),
          global,
          can_clean,
          rival_distance_bin(rival, rival_d)};
}

int q_state_index(Game game, std::span<const int> features) {
  const std::span<const int> bins = q_feature_bins(game);
  if (features.size() != bins.size()) {
    throw PreconditionError("q_state_index: expected " + std::to_string(bins.size()) + " features");
  }
  int index = 0;
  for (std::size_t i = 0; i < bins.size(); ++i) {
    if (features[i] < 0 || features[i] >= bins[i]) {
      throw PreconditionError("q_state_index: feature " + std::to_string(i) + " out of range");
    }
    index = index * bins[i] + features[i];
  }
  return index;
}

std::vector<int> q_decode(Game game, int index) {
  const std::span<const int> bins = q_feature_bins(game);
  if (index < 0 || index >= q_state_count(game)) throw PreconditionError("q_decode: index out of range");
  std::vector<int> f(bins.size());
  for (std::size_t i = bins.size(); i-- > 0;) {
    f[i] = index % bins[i];
    index /= bins[i];
  }
  return f;
}

QTable QTable::zeros(Game game) {
  QTable t;
  t.game = game;
  t.state_count = q_state_count(game);
  t.action_count = q_action_count(game);
  t.values.assign(static_cast<std::size_t>(t.state_count) * t.action_count, 0.0);
  return t;
}

Action QTable::greedy(int s) const {
  int best = 0;
  for (int a = 1; a < action_count; ++a) {
    if (at(s, a) > at(s, best)) best = a;
  }
  return static_cast<Action>(best);
}

void QTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out.write(kMagic, 4);
  write_u32(out, game == Game::Gathering ? 0u : 1u);
  write_u32(out, static_cast<std::uint32_t>(state_count));
  write_u32(out, static_cast<std::uint32_t>(action_count));
  for (double v : values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
  }
  if (!out) throw Error("write failed: " + path.string());
}

QTable QTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open Q-table " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) throw ConfigError(path.string() + ": not a Q-table file");
  const std::uint32_t game = read_u32(in);
  if (game > 1) throw ConfigError(path.string() + ": unknown game id");
  QTable t = zeros(game == 0 ? Game::Gathering : Game::Cleanup);
  const std::uint32_t states = read_u32(in);
  const std::uint32_t actions = read_u32(in);
  if (static_cast<int>(states) != t.state_count || static_cast<int>(actions) != t.action_count) {
    throw ConfigError(path.string() + ": table shape does not match the game's feature space");
  }
  for (double& v : t.values) {
    unsigned char b[8] = {};
    in.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    v = std::bit_cast<double>(bits);
  }
  if (!in) throw ConfigError(path.string() + ": truncated Q-table");
  if (in.peek() != std::char_traits<char>::eof()) throw ConfigError(path.string() + ": trailing bytes");
  return t;
}

void q_train_into(QTable& table, const GameConfig& cfg, int episodes, std::uint64_t seed,
                  QTrainOptions options) {
  if (episodes < 1) throw UsageError("q_train: episodes must be >= 1");
  const Environment env(cfg);
  if (table.game != env.game()) throw UsageError("q_train: table game does not match config");
  const QParams& p = options.params;
  if (options.visits) options.visits->assign(table.values.size(), 0);

  const int n = env.n_agents();
  const auto nn = static_cast<std::size_t>(n);
  Rng explore(mix_seeds(seed, 0x51ULL));
  std::vector<int> s(nn, 0);
  std::vector<int> s_next(nn, 0);
  std::vector<Action> actions(nn, Action::Stand);
  std::vector<std::uint8_t> acted(nn, 0);
  std::vector<int> cleaned(nn, 0);

  for (int e = 0; e < episodes; ++e) {
    const double frac = episodes == 1 ? 0.0 : static_cast<double>(e) / (episodes - 1);
    const double eps = p.epsilon_start + (p.epsilon_end - p.epsilon_start) * frac;
    EnvState state = env.reset(mix_seeds(seed, static_cast<std::uint64_t>(e)));
    for (int i = 0; i < n; ++i) {
      if (state.active(i)) s[static_cast<std::size_t>(i)] = q_state_index(env.game(), q_features(env, state, i));
    }
    double episode_return = 0.0;
    while (state.step < env.horizon()) {
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        acted[ii] = state.active(i);
        actions[ii] = Action::Stand;
        if (!acted[ii]) continue;
        if (explore.uniform() < eps) {
          actions[ii] = static_cast<Action>(explore.below(static_cast<std::uint64_t>(table.action_count)));
        } else {
          actions[ii] = table.greedy(s[ii]);
        }
      }
      const StepOutcome out = env.step(state, actions);
      std::fill(cleaned.begin(), cleaned.end(), 0);
      for (const Event& ev : out.events) {
        if (ev.kind == EventKind::Cleaned) cleaned[static_cast<std::size_t>(ev.agent)] += static_cast<int>(ev.cells.size());
      }
      double rbar = 0.0;
      for (double r : out.rewards) rbar += r;
      episode_return += rbar;
      rbar /= n;
      const bool last = state.step >= env.horizon();
      for (int i = 0; i < n; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        if (state.active(i) && !last) s_next[ii] = q_state_index(env.game(), q_features(env, state, i));
        if (!acted[ii]) {
          s[ii] = s_next[ii];
          continue;
        }
        double r = 0.5 * out.rewards[ii] + 0.5 * rbar;
        if (actions[ii] == Action::Beam) r -= p.beam_penalty;
        r += p.clean_bonus * cleaned[ii];
        double target = r;
        if (!last && state.active(i)) {
          double best = table.at(s_next[ii], 0);
          for (int a = 1; a < table.action_count; ++a) best = std::max(best, table.at(s_next[ii], a));
          target += p.gamma * best;
        }
        const int a = static_cast<int>(actions[ii]);
        double& q = table.at(s[ii], a);
        q += p.alpha * (target - q);
        if (options.visits) ++(*options.visits)[static_cast<std::size_t>(s[ii]) * table.action_count + a];
        s[ii] = s_next[ii];
      }
    }
    if (options.on_episode) options.on_episode(e, episode_return);
  }
}

QTable q_train(const GameConfig& cfg, int episodes, std::uint64_t seed, QTrainOptions options) {
  QTable t = QTable::zeros(game_of(cfg));
  q_train_into(t, cfg, episodes, seed, std::move(options));
  return t;
}

PolicyBinding make_q_policy(std::shared_ptr<const QTable> table, std::string id) {
  PolicyBinding b;
  b.id = std::move(id);
  b.kind = PolicyKind::QTable;
  b.privilege = Privilege::ReadOnly;
  b.factory = [table = std::move(table)] { return std::make_unique<QPolicy>(table); };
  return b;
}

}  // namespace ssd
