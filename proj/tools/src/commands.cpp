#include "commands.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "ssd/attacks.hpp"
#include "ssd/chat.hpp"
#include "ssd/errors.hpp"
#include "ssd/evaluation.hpp"
#include "ssd/qlearning.hpp"
#include "ssd/synthesis.hpp"

namespace ssd::cli {
namespace {

std::string read_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(what + ": cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string metrics_line(const SocialMetrics& m) {
  return "U=" + fmt("%.4f", m.efficiency) + " E=" + fmt("%.4f", m.equality) +
         " S=" + fmt("%.2f", m.sustainability) + " P=" + fmt("%.2f", m.peace);
}

// Inputs echoed into run.json, plus the resolved game config.
Json run_config(const Context& ctx, const std::string& command, const GameConfig& cfg) {
  Json j = ctx.settings.json();
  j["command"] = command;
  j.erase("out");
  j.erase("map");
  j["game"] = to_string(game_of(cfg));
  j["game_config"] = to_json(cfg);
  return j;
}

void print_feedback(std::ostream& out, const Feedback& f) {
  out << std::left << std::setw(8) << "seed" << std::setw(14) << "mean_return" << "metrics\n";
  for (const SeedResult& r : f.per_seed) {
    double sum = 0.0;
    for (double x : r.returns) sum += x;
    out << std::setw(8) << r.seed << std::setw(14) << fmt("%.2f", r.returns.empty() ? 0.0 : sum / r.returns.size())
        << metrics_line(r.metrics) << '\n';
  }
  out << std::setw(8) << "mean" << std::setw(14) << fmt("%.2f", f.mean_return) << metrics_line(f.metrics) << '\n';
}

}  // namespace

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const UsageError*>(&e)) return kConfig;
  if (dynamic_cast<const SecurityViolation*>(&e)) return kSecurity;
  if (dynamic_cast<const EpisodeAborted*>(&e)) return kValidation;
  if (dynamic_cast<const InfrastructureError*>(&e) || dynamic_cast<const TransportError*>(&e)) {
    return kInfrastructure;
  }
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e)) return kConfig;
  return kOther;
}

PolicyBinding resolve_policy(const std::string& spec, Game game, const WorkerSpec& worker) {
  if (spec.rfind("q:", 0) == 0) {
    auto table = std::make_shared<const QTable>(QTable::load(spec.substr(2)));
    if (table->game != game) throw ConfigError("policy '" + spec + "': Q-table was trained for another game");
    return make_q_policy(table);
  }
  if (spec.rfind("py:", 0) == 0 || spec.rfind("py+mut:", 0) == 0) {
    const bool mut = spec[2] == '+';
    const std::string path = spec.substr(mut ? 7 : 3);
    return make_external_binding(worker, read_file(path, "policy '" + spec + "'"), game,
                                 mut ? Privilege::Mutating : Privilege::ReadOnly, spec);
  }
  if (is_attack(spec)) return make_attack(spec);
  if (builtin_supports(spec, game)) return make_builtin(spec, game);
  std::string names;
  for (const auto& n : builtin_policy_names()) {
    if (builtin_supports(n, game)) names += " " + n;
  }
  for (const auto& n : attack_names()) names += " " + n;
  throw ConfigError("policy '" + spec + "' is not available for " + to_string(game) + " (builtins:" + names +
                    "; or q:<table>, py:<file>, py+mut:<file>)");
}

std::filesystem::path prepare_out_dir(const Settings& s, bool force) {
  const std::filesystem::path dir = s.str("out");
  if (std::filesystem::exists(dir)) {
    if (!std::filesystem::is_directory(dir)) throw ConfigError("output path '" + dir.string() + "' is not a directory");
    if (!std::filesystem::is_empty(dir)) {
      if (!force) throw ConfigError("output directory '" + dir.string() + "' is not empty (pass --force to overwrite)");
      std::filesystem::remove_all(dir);
    }
  }
  std::filesystem::create_directories(dir);
  return dir;
}

int cmd_run(const Context& ctx, std::ostream& out) {
  const Settings& s = ctx.settings;
  const GameConfig cfg = game_config(s);
  const Game game = game_of(cfg);
  const int n = n_agents_of(cfg);
  const WorkerSpec worker = worker_spec(s, ctx.default_worker);
  const auto specs = s.list("policy", {"bfs"});
  if (specs.size() != 1 && static_cast<int>(specs.size()) != n) {
    throw ConfigError("config field 'policy': expected 1 or " + std::to_string(n) + " entries, got " +
                      std::to_string(specs.size()));
  }
  std::vector<PolicyBinding> bindings;
  for (int i = 0; i < n; ++i) bindings.push_back(resolve_policy(specs[specs.size() == 1 ? 0 : i], game, worker));
  const std::uint64_t seed = s.u64("seed", 0);
  const auto dir = prepare_out_dir(s, ctx.force);

  const EpisodeTrace trace = run_episode(cfg, bindings, seed);
  const SeedResult r = seed_result(trace, horizon_of(cfg), seed);
  write_file(dir / "run.json", run_config(ctx, "run", cfg).dump(2) + "\n");
  write_file(dir / "trace.jsonl", trace.to_jsonl());
  Json summary{{"seed", seed}, {"returns", r.returns}, {"metrics", to_json(r.metrics)}, {"digest", trace.digest()}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");

  out << "agent  policy              return\n";
  for (int i = 0; i < n; ++i) {
    out << std::left << std::setw(7) << i << std::setw(20) << bindings[static_cast<std::size_t>(i)].id
        << fmt("%.1f", r.returns[static_cast<std::size_t>(i)]) << '\n';
  }
  out << metrics_line(r.metrics) << "\ndigest " << trace.digest() << "\nwrote " << dir.string() << '\n';
  return kOk;
}

int cmd_eval(const Context& ctx, std::ostream& out) {
  const Settings& s = ctx.settings;
  const GameConfig cfg = game_config(s);
  const PolicyBinding policy = resolve_policy(s.str("policy", "bfs"), game_of(cfg), worker_spec(s, ctx.default_worker));
  const auto seeds = s.seeds("seeds", 5);
  EvalOptions eo;
  eo.run_seed = s.u64("run_seed", 0);
  eo.threads = s.integer("threads", 1, 1);
  const auto dir = prepare_out_dir(s, ctx.force);

  const EvalReport report = evaluate_selfplay(policy, cfg, seeds, eo);
  write_eval_run(dir, run_config(ctx, "eval", cfg), report);
  out << report.policy_id << " on " << to_string(game_of(cfg)) << ", " << seeds.size() << " seeds\n";
  print_feedback(out, report.feedback);
  out << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_train_q(const Context& ctx, std::ostream& out) {
  const Settings& s = ctx.settings;
  const GameConfig cfg = game_config(s);
  const Game game = game_of(cfg);
  const int episodes = s.integer("episodes", 1000, 1);
  const std::uint64_t seed = s.u64("seed", 0);
  const auto seeds = s.seeds("seeds", 5);
  QTrainOptions qo;
  qo.params.alpha = s.number("alpha", qo.params.alpha);
  qo.params.gamma = s.number("gamma", qo.params.gamma);
  const auto dir = prepare_out_dir(s, ctx.force);

  std::string curve = "episode,return\n";
  qo.on_episode = [&](int ep, double ret) {
    curve += std::to_string(ep) + "," + fmt("%.1f", ret) + "\n";
    if ((ep + 1) % 100 == 0) std::cerr << "episode " << ep + 1 << "/" << episodes << " return " << ret << '\n';
  };
  auto table = std::make_shared<const QTable>(q_train(cfg, episodes, seed, qo));
  table->save(dir / "q_table.bin");
  write_file(dir / "curve.csv", curve);

  EvalOptions eo;
  eo.run_seed = s.u64("run_seed", 0);
  eo.threads = s.integer("threads", 1, 1);
  eo.keep_traces = false;
  const EvalReport q = evaluate_selfplay(make_q_policy(table), cfg, seeds, eo);
  const EvalReport bfs = evaluate_selfplay(make_builtin("bfs", game), cfg, seeds, eo);
  write_file(dir / "run.json", run_config(ctx, "train-q", cfg).dump(2) + "\n");
  write_file(dir / "report.json", Json{{"qlearner", to_json(q)}, {"bfs", to_json(bfs)}}.dump(2) + "\n");
  out << "qlearner  " << metrics_line(q.feedback.metrics) << "\nbfs       " << metrics_line(bfs.feedback.metrics)
      << "\nwrote " << dir.string() << '\n';
  return kOk;
}

int cmd_synth(const Context& ctx, std::ostream& out) {
  const Settings& s = ctx.settings;
  const GameConfig cfg = game_config(s);
  LoopOptions o;
  o.K = s.integer("K", 3, 0);
  o.R = s.integer("R", 3, 1);
  o.level = parse_feedback_level(s.str("feedback", "sparse"));
  o.seeds = s.seeds("seeds", 5);
  o.run_seed = s.u64("run_seed", 0);
  o.threads = s.integer("threads", 1, 1);
  o.validation.worker = worker_spec(s, ctx.default_worker);
  o.validation.smoke_steps = s.integer("smoke_steps", 50, 1);
  o.validation.smoke_seed = s.u64("smoke_seed", 0);
  o.model = s.str("model", "");
  o.model_options = s.object("model_options");
  o.transport_retries = s.integer("transport_retries", 3, 0);

  std::unique_ptr<ChatClient> client;
  if (s.has("mock")) {
    const auto mock = std::filesystem::absolute(s.str("mock"));
    client = std::make_unique<MockChatClient>(mock);
    o.extra_run_config["mock"] = mock.string();
  } else {
    client = std::make_unique<HttpChatClient>(http_chat_options_from_env());
  }
  o.extra_run_config["threads"] = o.threads;
  o.extra_run_config["transport_retries"] = o.transport_retries;
  o.out_dir = prepare_out_dir(s, ctx.force);

  const RunArtifact a = run_loop(cfg, *client, o);
  out << std::left << std::setw(4) << "k" << std::setw(10) << "attempts" << std::setw(10) << "r-bar"
      << "metrics\n";
  for (const IterationRecord& r : a.records) {
    out << std::setw(4) << r.k << std::setw(10) << r.attempts_used;
    if (r.feedback) {
      out << std::setw(10) << fmt("%.1f", r.feedback->mean_return) << metrics_line(r.feedback->metrics) << '\n';
    } else {
      out << "failed " << r.validation.stage << ": " << r.validation.diagnostic() << '\n';
    }
  }
  out << "status " << a.status << "\ndigest " << a.digest() << "\nwrote " << o.out_dir->string() << '\n';
  if (a.status == "validation_exhausted") return kValidation;
  if (a.status == "transport_error") return kInfrastructure;
  return kOk;
}

int cmd_attack(const Context& ctx, std::ostream& out) {
  const Settings& s = ctx.settings;
  const GameConfig cfg = game_config(s);
  const Game game = game_of(cfg);
  const auto attacks = s.list("attacks", attack_names());
  const auto victim_specs = s.list("victims", {"bfs"});
  const WorkerSpec worker = worker_spec(s, ctx.default_worker);
  std::vector<PolicyBinding> victims;
  for (const auto& v : victim_specs) victims.push_back(resolve_policy(v, game, worker));
  const auto seeds = s.seeds("seeds", 5);
  EvalOptions eo;
  eo.run_seed = s.u64("run_seed", 0);
  eo.threads = s.integer("threads", 1, 1);
  eo.keep_traces = false;
  const auto dir = prepare_out_dir(s, ctx.force);

  const AttackTable table = attack_table(cfg, attacks, victims, seeds, eo);
  const std::string text = format_attack_table(table);
  write_file(dir / "run.json", run_config(ctx, "attack", cfg).dump(2) + "\n");
  write_file(dir / "attack.json", to_json(table).dump(2) + "\n");
  write_file(dir / "table.txt", text);
  out << text << "wrote " << dir.string() << '\n';
  return kOk;
}

int cmd_render(const Context& ctx, std::ostream& out) {
  const Settings& s = ctx.settings;
  const GameConfig cfg = game_config(s);
  const EpisodeTrace trace = EpisodeTrace::from_jsonl(read_file(s.str("trace"), "trace"));
  if (!trace.config_digest.empty() && trace.config_digest != config_digest(cfg)) {
    throw ConfigError("trace '" + s.str("trace") + "' was recorded under a different game config");
  }
  const int every = s.integer("every", 1, 1);
  const Environment env(cfg);
  EnvState state = env.reset(trace.seed);
  std::ostringstream frames;
  auto frame = [&] {
    frames << "step " << state.step << '\n' << env.render_ascii(state) << '\n';
  };
  frame();
  for (const StepRecord& rec : trace.steps) {
    env.apply_mutations(state, rec.mutations, Privilege::Mutating);
    env.step(state, rec.actions);
    if (state.step % every == 0 || state.step == static_cast<int>(trace.steps.size())) frame();
  }
  if (s.has("out")) {
    const auto dir = prepare_out_dir(s, ctx.force);
    write_file(dir / "frames.txt", frames.str());
    out << "wrote " << (dir / "frames.txt").string() << '\n';
  } else {
    out << frames.str();
  }
  return kOk;
}

}  // namespace ssd::cli
