#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <memory>
#include <optional>

#include "commands.hpp"
#include "ssd/errors.hpp"

#ifndef SSD_DEFAULT_WORKER
#define SSD_DEFAULT_WORKER "python3 tools/worker/stub_worker.py"
#endif

namespace {

using ssd::Json;
using ssd::cli::Settings;

// Flags that were given on the command line, applied over the config file.
struct Overrides {
  std::vector<std::function<void(Settings&)>> apply;

  template <typename T>
  void add(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto v = std::make_shared<std::optional<T>>();
    app->add_option(flag, *v, help);
    apply.push_back([v, key](Settings& s) {
      if (*v) s.set(key, Json(**v));
    });
  }
};

struct Subcommand {
  CLI::App* app = nullptr;
  Overrides overrides;
  std::function<int(const ssd::cli::Context&, std::ostream&)> run;
  std::string config_path;
  bool force = false;
  std::optional<std::string> seeds;
};

void add_common(Subcommand& c) {
  c.app->add_option("--config", c.config_path, "JSON config file; flags override its values");
  c.app->add_flag("--force", c.force, "overwrite a nonempty output directory");
  c.overrides.add<std::string>(c.app, "--game", "game", "gathering or cleanup");
  c.overrides.add<std::string>(c.app, "--map", "map", "builtin map name or ssdmap file");
  c.overrides.add<int>(c.app, "--agents", "n_agents", "number of agents");
  c.overrides.add<int>(c.app, "--horizon", "horizon", "episode length in steps");
  c.overrides.add<std::string>(c.app, "--out", "out", "output directory");
  c.overrides.add<std::string>(c.app, "--worker", "worker", "sandbox worker command line");
}

void add_eval_like(Subcommand& c) {
  c.app->add_option("--seeds", c.seeds, "seed count, or a comma-separated list of seeds");
  c.overrides.add<std::uint64_t>(c.app, "--run-seed", "run_seed", "mixed into every episode seed");
  c.overrides.add<int>(c.app, "--threads", "threads", "episodes run in parallel");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential social dilemma engine, evaluation and policy synthesis"};
  app.require_subcommand(1);
  std::vector<std::unique_ptr<Subcommand>> subs;
  auto make = [&](const std::string& name, const std::string& help,
                  std::function<int(const ssd::cli::Context&, std::ostream&)> run) -> Subcommand& {
    auto c = std::make_unique<Subcommand>();
    c->app = app.add_subcommand(name, help);
    c->run = std::move(run);
    add_common(*c);
    subs.push_back(std::move(c));
    return *subs.back();
  };

  auto& run = make("run", "run one episode and record its trace", ssd::cli::cmd_run);
  run.overrides.add<std::string>(run.app, "--policy", "policy", "policy, or one per agent, comma-separated");
  run.overrides.add<std::uint64_t>(run.app, "--seed", "seed", "environment seed");

  auto& eval = make("eval", "self-play evaluation over seeds", ssd::cli::cmd_eval);
  add_eval_like(eval);
  eval.overrides.add<std::string>(eval.app, "--policy", "policy", "policy to evaluate");

  auto& train = make("train-q", "train the tabular Q-learner", ssd::cli::cmd_train_q);
  add_eval_like(train);
  train.overrides.add<int>(train.app, "--episodes", "episodes", "training episodes");
  train.overrides.add<std::uint64_t>(train.app, "--seed", "seed", "training seed");
  train.overrides.add<double>(train.app, "--alpha", "alpha", "learning rate");
  train.overrides.add<double>(train.app, "--gamma", "gamma", "discount");

  auto& synth = make("synth", "iterative policy synthesis with a chat model", ssd::cli::cmd_synth);
  add_eval_like(synth);
  synth.overrides.add<std::string>(synth.app, "--feedback", "feedback", "sparse (reward) or dense (social)");
  synth.overrides.add<int>(synth.app, "--K", "K", "refinement iterations");
  synth.overrides.add<int>(synth.app, "--R", "R", "attempts per iteration");
  synth.overrides.add<std::string>(synth.app, "--mock", "mock", "directory of canned responses");
  synth.overrides.add<std::string>(synth.app, "--model", "model", "model name sent to the endpoint");
  synth.overrides.add<std::string>(synth.app, "--model-options", "model_options", "JSON object of sampling options");
  synth.overrides.add<int>(synth.app, "--smoke-steps", "smoke_steps", "smoke-test episode length");
  synth.overrides.add<int>(synth.app, "--act-budget-ms", "act_budget_ms", "per-call time budget");

  auto& attack = make("attack", "environment-mutation attack table", ssd::cli::cmd_attack);
  add_eval_like(attack);
  attack.overrides.add<std::string>(attack.app, "--attacks", "attacks", "comma-separated attack names");
  attack.overrides.add<std::string>(attack.app, "--victims", "victims", "comma-separated victim policies");

  auto& render = make("render", "print a recorded trace as ASCII frames", ssd::cli::cmd_render);
  render.overrides.add<std::string>(render.app, "--trace", "trace", "trace .jsonl file");
  render.overrides.add<int>(render.app, "--every", "every", "print every n-th step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ssd::cli::kConfig;
  }

  for (auto& c : subs) {
    if (!c->app->parsed()) continue;
    try {
      ssd::cli::Context ctx;
      if (!c->config_path.empty()) ctx.settings = Settings::from_file(c->config_path);
      for (auto& f : c->overrides.apply) f(ctx.settings);
      if (c->seeds) ctx.settings.set("seeds", ssd::cli::parse_seeds_flag(*c->seeds));
      ctx.settings.check_known_keys();
      ctx.force = c->force;
      ctx.default_worker = SSD_DEFAULT_WORKER;
      return c->run(ctx, std::cout);
    } catch (const std::exception& e) {
      std::cerr << "ssd " << c->app->get_name() << ": " << e.what() << '\n';
      return ssd::cli::exit_code_for(e);
    }
  }
  return ssd::cli::kOther;
}
