#include "ssd/synthesis.hpp"

#include <fstream>
#include <thread>

#include "ssd/errors.hpp"
#include "ssd/evaluation.hpp"

namespace ssd {
namespace {

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
}

ValidationResult failure(std::string stage, std::vector<std::string> failures) {
  ValidationResult v;
  v.ok = false;
  v.stage = std::move(stage);
  v.failures = std::move(failures);
  return v;
}

bool is_fence(std::string_view line) {
  const auto start = line.find_first_not_of(" \t");
  return start != std::string_view::npos && line.substr(start, 3) == "```";
}

}  // namespace

std::optional<std::string> extract_code_block(std::string_view response) {
  std::optional<std::string> last;
  std::string body;
  bool inside = false;
  std::size_t pos = 0;
  while (pos <= response.size()) {
    auto nl = response.find('\n', pos);
    if (nl == std::string_view::npos) nl = response.size();
    std::string_view line = response.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (is_fence(line)) {
      if (inside) last = body;
      inside = !inside;
      body.clear();
    } else if (inside) {
      body.append(line);
      body.push_back('\n');
    }
    pos = nl + 1;
  }
  return last;
}

std::string ValidationResult::diagnostic() const {
  std::string out;
  for (const auto& f : failures) {
    if (!out.empty()) out += '\n';
    out += f;
  }
  return out;
}

Json to_json(const ValidationResult& v) {
  return Json{{"ok", v.ok}, {"stage", v.stage}, {"failures", v.failures}};
}

ValidationResult validation_from_json(const Json& j) {
  ValidationResult v;
  v.ok = j.at("ok").get<bool>();
  v.stage = j.at("stage").get<std::string>();
  v.failures = j.at("failures").get<std::vector<std::string>>();
  return v;
}

ValidationResult validate_policy(std::string_view source, const GameConfig& cfg, const ValidationOptions& options) {
  if (source.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    return failure("static", {"empty policy source"});
  }
  // The smoke session's load is the static check; a rejected load never
  // reaches the first step.
  const GameConfig smoke_cfg = with_horizon(cfg, options.smoke_steps);
  const PolicyBinding binding =
      make_external_binding(options.worker, std::string(source), game_of(cfg), Privilege::ReadOnly, "candidate");
  const std::vector<PolicyBinding> bindings(static_cast<std::size_t>(n_agents_of(cfg)), binding);
  try {
    run_episode(smoke_cfg, bindings, options.smoke_seed);
  } catch (const PolicyRejected& e) {
    return failure("static", e.violations());
  } catch (const EpisodeAborted& e) {
    return failure("smoke", {std::string("smoke test failed: ") + e.what()});
  } catch (const SecurityViolation& e) {
    return failure("smoke", {std::string("smoke test failed: ") + e.what()});
  } catch (const PreconditionError& e) {
    return failure("smoke", {std::string("smoke test failed: ") + e.what()});
  }
  return ValidationResult{true, "passed", {}};
}

Json to_json(const IterationRecord& r) {
  Json attempts = Json::array();
  for (const Attempt& a : r.attempts) {
    attempts.push_back(Json{{"attempt", a.attempt}, {"validation", to_json(a.validation)}});
  }
  Json j;
  j["k"] = r.k;
  j["attempts_used"] = r.attempts_used;
  j["validation"] = to_json(r.validation);
  j["attempts"] = std::move(attempts);
  j["feedback"] = r.feedback ? to_json(*r.feedback) : Json(nullptr);
  j["trace_digests"] = r.trace_digests;
  j["policy_sha256"] = sha256_hex(r.policy_source);
  return j;
}

std::string RunArtifact::digest() const {
  Json j = Json::array();
  for (const IterationRecord& r : records) {
    Json e = to_json(r);
    e["policy_source"] = r.policy_source;
    j.push_back(std::move(e));
  }
  return sha256_hex(j.dump());
}

void write_iteration(const std::filesystem::path& dir, const IterationRecord& r) {
  const auto k_dir = dir / "iterations" / ("k_" + std::to_string(r.k));
  std::filesystem::create_directories(k_dir);
  write_text(k_dir / "prompt_system.txt", r.system_prompt);
  write_text(k_dir / "prompt_user.txt", r.user_prompt);
  write_text(k_dir / "response.txt", r.attempts.empty() ? "" : r.attempts.back().response);
  write_text(k_dir / "policy.py.txt", r.policy_source);
  Json v = to_json(r.validation);
  v["attempts_used"] = r.attempts_used;
  Json attempts = Json::array();
  for (const Attempt& a : r.attempts) {
    attempts.push_back(Json{{"attempt", a.attempt}, {"ok", a.validation.ok}, {"stage", a.validation.stage},
                            {"failures", a.validation.failures}});
  }
  v["attempts"] = std::move(attempts);
  write_text(k_dir / "validation.json", v.dump(2) + "\n");
  Json fb = r.feedback ? to_json(*r.feedback) : Json(nullptr);
  if (r.feedback) fb["trace_digests"] = r.trace_digests;
  write_text(k_dir / "feedback.json", fb.dump(2) + "\n");
  // Every request and response verbatim, for replay.
  std::string log;
  for (const Attempt& a : r.attempts) {
    log += Json{{"attempt", a.attempt}, {"system", r.system_prompt}, {"user", a.user_prompt},
                {"response", a.response}}
               .dump() +
           "\n";
  }
  write_text(k_dir / "requests.jsonl", log);
}

Json run_json(const GameConfig& cfg, const LoopOptions& o, const RunArtifact& a) {
  Json j;
  j["command"] = "synth";
  j["game"] = to_string(game_of(cfg));
  j["K"] = o.K;
  j["R"] = o.R;
  j["feedback"] = to_string(o.level);
  j["seeds"] = o.seeds;
  j["run_seed"] = o.run_seed;
  j["smoke_steps"] = o.validation.smoke_steps;
  j["smoke_seed"] = o.validation.smoke_seed;
  j["model"] = o.model;
  j["model_options"] = o.model_options;
  j["worker"] = o.validation.worker.argv;
  j["act_budget_ms"] = o.validation.worker.act_budget.count();
  for (auto& [k, v] : o.extra_run_config.items()) j[k] = v;
  j["game_config"] = to_json(cfg);
  j["status"] = a.status;
  j["failed_iteration"] = a.failed_iteration ? Json(*a.failed_iteration) : Json(nullptr);
  j["failure"] = a.failure;
  j["iterations"] = a.records.size();
  j["digest"] = a.digest();
  return j;
}

RunArtifact run_loop(const GameConfig& cfg, ChatClient& client, const LoopOptions& o) {
  if (o.K < 0) throw UsageError("run_loop: K must be >= 0");
  if (o.R < 1) throw UsageError("run_loop: R must be >= 1");
  if (o.seeds.empty()) throw UsageError("run_loop: at least one evaluation seed is required");
  const Game game = game_of(cfg);
  const std::string system = build_system_prompt(game);

  RunArtifact artifact;
  std::vector<PromptHistoryEntry> history;
  auto persist = [&] {
    if (!o.out_dir) return;
    std::filesystem::create_directories(*o.out_dir);
    write_text(*o.out_dir / "run.json", run_json(cfg, o, artifact).dump(2) + "\n");
  };

  for (int k = 0; k <= o.K; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.system_prompt = system;
    std::string user = build_user_prompt(k, o.K, history, o.level, cfg);

    for (int attempt = 1; attempt <= o.R; ++attempt) {
      Attempt a;
      a.attempt = attempt;
      a.user_prompt = user;
      ChatRequest req{system, user, o.model, o.model_options};
      for (int t = 0;; ++t) {
        try {
          a.response = client.complete(req).text;
          break;
        } catch (const TransportError& e) {
          if (t >= o.transport_retries) {
            rec.user_prompt = user;
            rec.attempts_used = attempt - 1;
            rec.validation = failure("transport", {e.what()});
            artifact.records.push_back(std::move(rec));
            artifact.status = "transport_error";
            artifact.failed_iteration = k;
            artifact.failure = e.what();
            if (o.out_dir) write_iteration(*o.out_dir, artifact.records.back());
            persist();
            return artifact;
          }
          std::this_thread::sleep_for(o.transport_backoff * (1 << t));
        }
      }
      if (auto code = extract_code_block(a.response)) {
        a.source = *code;
        a.validation = validate_policy(a.source, cfg, o.validation);
      } else {
        a.validation = failure("extract", {"no code block found: put the policy in a single ```python ... ``` block"});
      }
      rec.attempts.push_back(a);
      rec.attempts_used = attempt;
      rec.user_prompt = user;
      rec.policy_source = a.source;
      rec.validation = a.validation;
      if (a.validation.ok) break;
      user += retry_suffix(attempt, a.validation.diagnostic());
    }

    if (!rec.validation.ok) {
      artifact.status = "validation_exhausted";
      artifact.failed_iteration = k;
      artifact.failure = "iteration " + std::to_string(k) + ": all " + std::to_string(o.R) +
                         " attempts failed validation; keeping the previous policy";
      artifact.records.push_back(std::move(rec));
      if (o.out_dir) write_iteration(*o.out_dir, artifact.records.back());
      persist();
      return artifact;
    }

    const PolicyBinding binding = make_external_binding(o.validation.worker, rec.policy_source, game,
                                                        Privilege::ReadOnly, "P" + std::to_string(k));
    EvalOptions eo;
    eo.run_seed = o.run_seed;
    eo.threads = o.threads;
    const EvalReport report = evaluate_selfplay(binding, cfg, o.seeds, eo);
    rec.feedback = report.feedback;
    for (const auto& t : report.traces) rec.trace_digests.push_back(t.digest());
    history.push_back({rec.policy_source, rec.feedback});
    artifact.final_policy_source = rec.policy_source;
    artifact.records.push_back(std::move(rec));
    if (o.out_dir) write_iteration(*o.out_dir, artifact.records.back());
    persist();
  }
  return artifact;
}

}  // namespace ssd
