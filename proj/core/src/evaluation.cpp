#include "ssd/evaluation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "ssd/attacks.hpp"

namespace ssd {
namespace {

// Runs fn(i) for i in [0, n) on up to `threads` threads; rethrows the first
// failure after all workers join.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

SocialMetrics mean_metrics(std::span<const SeedResult> rs) {
  SocialMetrics m;
  for (const SeedResult& r : rs) {
    m.efficiency += r.metrics.efficiency;
    m.equality += r.metrics.equality;
    m.sustainability += r.metrics.sustainability;
    m.peace += r.metrics.peace;
  }
  const auto k = static_cast<double>(rs.size());
  m.efficiency /= k;
  m.equality /= k;
  m.sustainability /= k;
  m.peace /= k;
  return m;
}

}  // namespace

GameConfig with_horizon(GameConfig cfg, int horizon) {
  std::visit([horizon](auto& c) { c.horizon = horizon; }, cfg);
  return cfg;
}

GameConfig with_agents(GameConfig cfg, int n_agents) {
  std::visit([n_agents](auto& c) { c.n_agents = n_agents; }, cfg);
  return cfg;
}

int horizon_of(const GameConfig& cfg) {
  return std::visit([](const auto& c) { return c.horizon; }, cfg);
}

int n_agents_of(const GameConfig& cfg) {
  return std::visit([](const auto& c) { return c.n_agents; }, cfg);
}

EpisodeTrace run_episode(const GameConfig& cfg, std::span<const PolicyBinding> bindings,
                         std::uint64_t seed, EpisodeOptions options) {
  const Environment env(cfg);
  const int n = env.n_agents();
  if (static_cast<int>(bindings.size()) != n) {
    throw UsageError("run_episode: expected " + std::to_string(n) + " bindings, got " +
                     std::to_string(bindings.size()));
  }

  // One policy instance per distinct binding id.
  std::map<std::string, std::unique_ptr<Policy>> instances;
  std::vector<Policy*> policy_of(static_cast<std::size_t>(n), nullptr);
  for (int i = 0; i < n; ++i) {
    const PolicyBinding& b = bindings[static_cast<std::size_t>(i)];
    if (!b.factory) throw UsageError("run_episode: binding '" + b.id + "' has no factory");
    auto& slot = instances[b.id];
    if (!slot) slot = b.factory();
    policy_of[static_cast<std::size_t>(i)] = slot.get();
  }

  EnvState state = env.reset(seed);
  for (auto& [id, p] : instances) p->begin_episode(env, state);

  EpisodeTrace trace;
  trace.config_digest = config_digest(cfg);
  trace.seed = seed;
  trace.n_agents = n;
  trace.steps.reserve(static_cast<std::size_t>(env.horizon()));

  std::vector<Action> actions(static_cast<std::size_t>(n));
  std::vector<std::vector<Mutation>> pending(static_cast<std::size_t>(n));
  std::map<Policy*, std::vector<int>> queried;
  while (state.step < env.horizon()) {
    StepRecord rec;
    rec.step = state.step;
    for (auto& [p, agents] : queried) agents.clear();
    for (int i = 0; i < n; ++i) {
      if (state.active(i)) queried[policy_of[static_cast<std::size_t>(i)]].push_back(i);
    }
    for (auto& [p, agents] : queried) {
      if (!agents.empty()) p->prepare_step(env, state, agents);
    }
    for (int i = 0; i < n; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      pending[ii].clear();
      actions[ii] = Action::Stand;
      if (!state.active(i)) continue;
      if (options.verify_readonly && bindings[ii].privilege == Privilege::ReadOnly) {
        const EnvState before = state;
        PolicyDecision d = policy_of[ii]->decide(env, state, i);
        if (!(before == state)) {
          throw SecurityViolation("policy '" + bindings[ii].id + "' modified the environment state");
        }
        actions[ii] = d.action;
        pending[ii] = std::move(d.mutations);
      } else {
        PolicyDecision d = policy_of[ii]->decide(env, state, i);
        actions[ii] = d.action;
        pending[ii] = std::move(d.mutations);
      }
      if (static_cast<int>(actions[ii]) >= env.num_actions()) {
        throw EpisodeAborted("policy '" + bindings[ii].id + "' returned out-of-range action " +
                             std::to_string(static_cast<int>(actions[ii])));
      }
    }
    for (int i = 0; i < n; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      if (pending[ii].empty()) continue;
      if (bindings[ii].privilege != Privilege::Mutating) {
        throw SecurityViolation("policy '" + bindings[ii].id + "' (agent " + std::to_string(i) +
                                ") attempted to mutate the environment without privilege");
      }
      env.apply_mutations(state, pending[ii], Privilege::Mutating);
      rec.mutations.insert(rec.mutations.end(), pending[ii].begin(), pending[ii].end());
    }
    StepOutcome out = env.step(state, actions);
    rec.actions = actions;
    rec.rewards = std::move(out.rewards);
    rec.events = std::move(out.events);
    rec.active = std::move(out.active);
    trace.steps.push_back(std::move(rec));
  }
  return trace;
}

EpisodeTrace replay_trace(const GameConfig& cfg, const EpisodeTrace& trace) {
  const Environment env(cfg);
  EnvState state = env.reset(trace.seed);
  EpisodeTrace out;
  out.config_digest = config_digest(cfg);
  out.seed = trace.seed;
  out.n_agents = env.n_agents();
  for (const StepRecord& src : trace.steps) {
    StepRecord rec;
    rec.step = state.step;
    env.apply_mutations(state, src.mutations, Privilege::Mutating);
    rec.mutations = src.mutations;
    StepOutcome o = env.step(state, src.actions);
    rec.actions = src.actions;
    rec.rewards = std::move(o.rewards);
    rec.events = std::move(o.events);
    rec.active = std::move(o.active);
    out.steps.push_back(std::move(rec));
  }
  return out;
}

SeedResult seed_result(const EpisodeTrace& trace, int horizon, std::uint64_t seed) {
  const EpisodeReturns r = EpisodeReturns::from_trace(trace);
  return {seed, r.returns, social_metrics(r, horizon)};
}

EvalReport evaluate_selfplay(const PolicyBinding& policy, const GameConfig& cfg,
                             std::span<const std::uint64_t> seeds, EvalOptions options) {
  if (seeds.empty()) throw UsageError("evaluate_selfplay: no seeds");
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::uint64_t> sorted(seeds.begin(), seeds.end());
  std::sort(sorted.begin(), sorted.end());

  const int n = n_agents_of(cfg);
  const int horizon = horizon_of(cfg);
  const std::vector<PolicyBinding> bindings(static_cast<std::size_t>(n), policy);
  std::vector<EpisodeTrace> traces(sorted.size());
  std::vector<SeedResult> results(sorted.size());
  parallel_for(sorted.size(), options.threads, [&](std::size_t k) {
    try {
      traces[k] = run_episode(cfg, bindings, mix_seeds(options.run_seed, sorted[k]));
    } catch (const EpisodeAborted& e) {
      throw EpisodeAborted("seed " + std::to_string(sorted[k]) + ": " + e.what());
    } catch (const SecurityViolation& e) {
      throw SecurityViolation("seed " + std::to_string(sorted[k]) + ": " + e.what());
    }
    results[k] = seed_result(traces[k], horizon, sorted[k]);
  });

  EvalReport report;
  report.policy_id = policy.id;
  report.game = game_of(cfg);
  report.seeds = sorted;
  report.feedback = aggregate_feedback(results, n);
  if (options.keep_traces) report.traces = std::move(traces);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

Json to_json(const EvalReport& report) {
  Json j;
  j["policy"] = report.policy_id;
  j["game"] = to_string(report.game);
  j["seeds"] = report.seeds;
  j["feedback"] = to_json(report.feedback);
  Json digests = Json::array();
  for (const EpisodeTrace& t : report.traces) digests.push_back(t.digest());
  j["trace_digests"] = std::move(digests);
  return j;
}

void write_eval_run(const std::filesystem::path& dir, const Json& run_config, const EvalReport& report) {
  std::filesystem::create_directories(dir / "traces");
  write_text(dir / "run.json", run_config.dump(2) + "\n");
  for (std::size_t k = 0; k < report.traces.size(); ++k) {
    write_text(dir / "traces" / ("seed_" + std::to_string(report.seeds[k]) + ".jsonl"),
               report.traces[k].to_jsonl());
  }
  write_text(dir / "report.json", to_json(report).dump(2) + "\n");
}

const AttackCell& AttackTable::at(const std::string& attack, const std::string& victim) const {
  for (const AttackCell& c : cells) {
    if (c.attack == attack && c.victim == victim) return c;
  }
  throw UsageError("attack table has no cell (" + attack + ", " + victim + ")");
}

AttackTable attack_table(const GameConfig& cfg, std::span<const std::string> attacks,
                         std::span<const PolicyBinding> victims, std::span<const std::uint64_t> seeds,
                         EvalOptions options) {
  if (seeds.empty()) throw UsageError("attack_table: no seeds");
  if (victims.empty()) throw UsageError("attack_table: no victims");
  for (const std::string& a : attacks) {
    if (!is_attack(a)) throw UsageError("unknown attack '" + a + "'");
  }
  const int n = n_agents_of(cfg);
  const int horizon = horizon_of(cfg);

  AttackTable table;
  table.attacks.push_back("baseline");
  table.attacks.insert(table.attacks.end(), attacks.begin(), attacks.end());
  for (const PolicyBinding& v : victims) table.victims.push_back(v.id);
  table.seeds.assign(seeds.begin(), seeds.end());

  struct Job {
    std::size_t row;
    std::size_t col;
    std::size_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t r = 0; r < table.attacks.size(); ++r) {
    for (std::size_t c = 0; c < victims.size(); ++c) {
      for (std::size_t s = 0; s < seeds.size(); ++s) jobs.push_back({r, c, s});
    }
  }
  std::vector<SeedResult> results(jobs.size());
  parallel_for(jobs.size(), options.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    std::vector<PolicyBinding> bindings(static_cast<std::size_t>(n), victims[job.col]);
    if (job.row > 0) bindings[0] = make_attack(table.attacks[job.row]);
    const EpisodeTrace trace = run_episode(cfg, bindings, mix_seeds(options.run_seed, seeds[job.seed]));
    results[j] = seed_result(trace, horizon, seeds[job.seed]);
  });

  for (std::size_t r = 0; r < table.attacks.size(); ++r) {
    for (std::size_t c = 0; c < victims.size(); ++c) {
      AttackCell cell;
      cell.attack = table.attacks[r];
      cell.victim = table.victims[c];
      std::vector<SeedResult> rs;
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].row != r || jobs[j].col != c) continue;
        cell.attacker_returns.push_back(results[j].returns.at(0));
        rs.push_back(results[j]);
      }
      cell.attacker_mean = std::accumulate(cell.attacker_returns.begin(), cell.attacker_returns.end(), 0.0) /
                           static_cast<double>(cell.attacker_returns.size());
      cell.metrics = mean_metrics(rs);
      table.cells.push_back(std::move(cell));
    }
  }
  for (std::size_t c = 0; c < victims.size(); ++c) {
    const double base = table.cells[c].attacker_mean;
    for (std::size_t r = 0; r < table.attacks.size(); ++r) {
      AttackCell& cell = table.cells[r * victims.size() + c];
      cell.amplification = base != 0.0 ? cell.attacker_mean / base : 0.0;
    }
  }
  return table;
}

Json to_json(const AttackTable& table) {
  Json j;
  j["attacks"] = table.attacks;
  j["victims"] = table.victims;
  j["seeds"] = table.seeds;
  Json cells = Json::array();
  for (const AttackCell& c : table.cells) {
    Json e;
    e["attack"] = c.attack;
    e["victim"] = c.victim;
    e["attacker_returns"] = c.attacker_returns;
    e["attacker_mean"] = c.attacker_mean;
    e["amplification"] = c.amplification;
    e["metrics"] = to_json(c.metrics);
    cells.push_back(std::move(e));
  }
  j["cells"] = std::move(cells);
  return j;
}

std::string format_attack_table(const AttackTable& table) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "attack";
  for (const std::string& v : table.victims) os << std::setw(22) << ("vs " + v);
  os << '\n';
  for (std::size_t r = 0; r < table.attacks.size(); ++r) {
    os << std::setw(16) << table.attacks[r];
    for (std::size_t c = 0; c < table.victims.size(); ++c) {
      const AttackCell& cell = table.cells[r * table.victims.size() + c];
      std::ostringstream v;
      v << std::fixed << std::setprecision(1) << cell.attacker_mean << " (" << std::setprecision(1)
        << cell.amplification << "x)";
      os << std::setw(22) << v.str();
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace ssd
