#include "ssd/sandbox.hpp"

#include <cerrno>
#include <algorithm>
#include <cstring>
#include <sstream>
#include <thread>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include "ssd/errors.hpp"

extern char** environ;

namespace ssd {
namespace {

using Clock = std::chrono::steady_clock;

Json cells_json(const std::vector<Cell>& cells) {
  Json out = Json::array();
  for (const Cell& c : cells) out.push_back(Json::array({c.row, c.col}));
  return out;
}

std::string errno_text() { return std::strerror(errno); }

std::string max_action_text(Game g) { return g == Game::Gathering ? "0-7" : "0-8"; }

}  // namespace

WorkerSpec worker_spec_from_env(const std::string& fallback) {
  const char* env = std::getenv("SSD_WORKER");
  std::istringstream in(env != nullptr && *env != '\0' ? std::string(env) : fallback);
  WorkerSpec spec;
  for (std::string tok; in >> tok;) spec.argv.push_back(tok);
  return spec;
}

Json wire_dynamic(const Environment& env, const EnvState& state) {
  Json j;
  j["step"] = state.step;
  Json pos = Json::array();
  for (const Cell& c : state.agent_pos) pos.push_back(Json::array({c.row, c.col}));
  j["agent_pos"] = std::move(pos);
  Json orient = Json::array();
  for (Orientation o : state.agent_orient) orient.push_back(static_cast<int>(o));
  j["agent_orient"] = std::move(orient);
  j["agent_timeout"] = state.agent_timeout;
  j["agent_beam_hits"] = state.agent_beam_hits;
  Json alive = Json::array();
  for (auto a : state.apple_alive) alive.push_back(a != 0);
  j["apple_alive"] = std::move(alive);
  if (env.game() == Game::Cleanup) {
    Json waste = Json::array();
    for (const Cell& c : env.river_cells()) {
      if (state.waste[c]) waste.push_back(Json::array({c.row, c.col}));
    }
    j["waste"] = std::move(waste);
  }
  return j;
}

Json wire_snapshot(const Environment& env, const EnvState& state) {
  const GridMap& map = env.map();
  const BeamSpec& beam = env.penalty_beam();
  Json j;
  j["height"] = map.height;
  j["width"] = map.width;
  j["n_agents"] = env.n_agents();
  j["n_apples"] = static_cast<int>(map.apple_spawns.size());
  j["beam_length"] = beam.length;
  j["beam_width"] = beam.width;
  j["hits_to_tag"] = beam.hits_to_tag;
  j["timeout_steps"] = beam.timeout_steps;
  j["walls"] = cells_json(map.cells_of(CellKind::Wall));
  j["_apple_pos"] = cells_json(map.apple_spawns);
  if (env.game() == Game::Cleanup) {
    j["river_cells_set"] = cells_json(env.river_cells());
    j["stream_cells_set"] = cells_json(env.stream_cells());
  }
  const Json dyn = wire_dynamic(env, state);
  for (auto& [k, v] : dyn.items()) j[k] = v;
  return j;
}

Json wire_delta(const Json& prev, const Json& cur) {
  Json out = Json::object();
  for (auto it = cur.begin(); it != cur.end(); ++it) {
    if (!prev.contains(it.key()) || prev.at(it.key()) != it.value()) out[it.key()] = it.value();
  }
  return out;
}

WorkerSession::WorkerSession(const WorkerSpec& spec, Game game, Privilege privilege)
    : spec_(spec), game_(game), privilege_(privilege) {
  if (spec_.argv.empty()) throw InfrastructureError("sandbox worker: empty command");
  int fds[2];
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, fds) != 0) {
    throw InfrastructureError("sandbox worker: socketpair failed: " + errno_text());
  }
  std::vector<std::string> args = spec_.argv;
  args.insert(args.end(), {"--mode", privilege == Privilege::Mutating ? "mutating" : "readonly", "--game",
                           game == Game::Gathering ? "gathering" : "cleanup"});
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, fds[1], STDOUT_FILENO);
  if (!spec_.inherit_stderr) {
    posix_spawn_file_actions_addopen(&actions, STDERR_FILENO, "/dev/null", O_WRONLY, 0);
  }
  pid_t pid = -1;
  const int rc = ::posix_spawnp(&pid, argv[0], &actions, nullptr, argv.data(), environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(fds[1]);
  if (rc != 0) {
    ::close(fds[0]);
    throw InfrastructureError("sandbox worker: cannot start '" + args[0] + "': " + std::strerror(rc));
  }
  pid_ = pid;
  fd_ = fds[0];

  Json hello;
  try {
    hello = request(Json{{"type", "hello"}, {"protocol", 1}}, spec_.startup_budget);
  } catch (const EpisodeAborted& e) {
    kill_worker();
    throw InfrastructureError(std::string("sandbox worker: handshake failed: ") + e.what());
  }
  if (hello.value("type", "") != "hello" || hello.value("protocol", 0) != 1) {
    kill_worker();
    throw InfrastructureError("sandbox worker: unexpected handshake reply " + hello.dump());
  }
}

WorkerSession::~WorkerSession() { close(); }

void WorkerSession::kill_worker() {
  if (pid_ > 0) {
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
}

void WorkerSession::close() {
  if (pid_ <= 0) return;
  try {
    request(Json{{"type", "bye"}}, std::chrono::milliseconds(1000));
  } catch (const Error&) {
    // Fall through to the kill below.
  }
  ::close(fd_);
  fd_ = -1;
  const auto deadline = Clock::now() + std::chrono::milliseconds(1000);
  while (Clock::now() < deadline) {
    if (::waitpid(pid_, nullptr, WNOHANG) == pid_) {
      pid_ = -1;
      return;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  kill_worker();
}

void WorkerSession::send_line(std::string_view line) {
  if (fd_ < 0) throw EpisodeAborted("sandbox worker is not running");
  std::string frame(line);
  frame.push_back('\n');
  std::size_t off = 0;
  while (off < frame.size()) {
    const ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      kill_worker();
      throw EpisodeAborted("sandbox worker exited unexpectedly (write failed)");
    }
    off += static_cast<std::size_t>(n);
  }
}

Json WorkerSession::read_reply(std::chrono::milliseconds budget) {
  const auto deadline = Clock::now() + budget;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      try {
        return Json::parse(line);
      } catch (const Json::parse_error&) {
        kill_worker();
        throw EpisodeAborted("sandbox worker sent a malformed frame");
      }
    }
    if (fd_ < 0) throw EpisodeAborted("sandbox worker is not running");
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    if (left.count() <= 0) {
      kill_worker();
      throw EpisodeAborted("sandbox worker did not reply within " + std::to_string(budget.count()) + " ms");
    }
    pollfd p{fd_, POLLIN, 0};
    const int rc = ::poll(&p, 1, static_cast<int>(left.count()) + 1);
    if (rc < 0 && errno == EINTR) continue;
    if (rc <= 0) continue;
    char buf[65536];
    const ssize_t n = ::read(fd_, buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) {
      kill_worker();
      throw EpisodeAborted("sandbox worker exited unexpectedly");
    }
    buffer_.append(buf, static_cast<std::size_t>(n));
  }
}

Json WorkerSession::request(Json msg, std::chrono::milliseconds budget) {
  const std::int64_t id = next_id_++;
  Json framed;
  framed["id"] = id;
  for (auto& [k, v] : msg.items()) framed[k] = v;
  send_line(framed.dump());
  Json reply = read_reply(budget);
  if (!reply.is_object() || !reply.contains("id") || reply["id"] != id) {
    kill_worker();
    throw EpisodeAborted("sandbox worker protocol error: reply " + reply.dump(-1).substr(0, 200) +
                         " does not answer request " + std::to_string(id));
  }
  return reply;
}

LoadResult WorkerSession::load(std::string_view source) {
  Json reply;
  try {
    reply = request(Json{{"type", "load"}, {"source", std::string(source)}}, spec_.io_budget);
  } catch (const EpisodeAborted& e) {
    throw InfrastructureError(std::string("sandbox worker: load failed: ") + e.what());
  }
  if (reply.value("type", "") != "load_result") {
    throw InfrastructureError("sandbox worker: unexpected load reply " + reply.dump());
  }
  LoadResult r;
  r.ok = reply.value("ok", false);
  if (reply.contains("violations")) r.violations = reply["violations"].get<std::vector<std::string>>();
  if (!r.ok && r.violations.empty()) r.violations.push_back("rejected without a diagnostic");
  return r;
}

void WorkerSession::reset(const Environment& env, const EnvState& state) {
  Json reply;
  try {
    reply = request(Json{{"type", "reset"}, {"snapshot", wire_snapshot(env, state)}}, spec_.io_budget);
  } catch (const EpisodeAborted& e) {
    throw InfrastructureError(std::string("sandbox worker: reset failed: ") + e.what());
  }
  if (reply.value("type", "") != "ack") {
    throw InfrastructureError("sandbox worker: unexpected reset reply " + reply.dump());
  }
  last_dynamic_ = wire_dynamic(env, state);
  last_full_step_ = state.step;
  last_sent_step_ = state.step;
}

void WorkerSession::submit(const Environment& env, const EnvState& state, int agent) {
  // All agents of a step see the same state, so only the first query of a
  // step carries state.
  Json msg{{"type", "act"}, {"agent", agent}, {"step", state.step}};
  if (state.step != last_sent_step_) {
    Json dyn = wire_dynamic(env, state);
    if (last_full_step_ < 0 || state.step - last_full_step_ >= spec_.full_snapshot_every) {
      msg["snapshot"] = wire_snapshot(env, state);
      last_full_step_ = state.step;
    } else {
      Json delta = wire_delta(last_dynamic_, dyn);
      if (!delta.empty()) msg["delta"] = std::move(delta);
    }
    last_dynamic_ = std::move(dyn);
    last_sent_step_ = state.step;
  }
  const std::int64_t id = next_id_++;
  Json framed{{"id", id}};
  for (auto& [k, v] : msg.items()) framed[k] = v;
  // The worker answers queued requests back to back, so the k-th queued
  // request gets k budgets of wall time; the per-call limit is checked
  // against the worker's own timing in collect().
  const auto now = Clock::now();
  const auto base = in_flight_.empty() ? now : std::max(now, in_flight_.back().deadline);
  outbox_ += framed.dump();
  outbox_ += '\n';
  in_flight_.push_back({id, agent, state.step, base + spec_.act_budget});
}

ActReply WorkerSession::collect(int agent, int step) {
  const std::string where = " (agent " + std::to_string(agent) + ", step " + std::to_string(step) + ")";
  if (in_flight_.empty() || in_flight_.front().agent != agent || in_flight_.front().step != step) {
    throw LifecycleError("sandbox: collect without a matching submit" + where);
  }
  const InFlight req = in_flight_.front();
  in_flight_.pop_front();
  if (!outbox_.empty()) {
    std::string frames = std::move(outbox_);
    outbox_.clear();
    frames.pop_back();
    send_line(frames);
  }

  const std::string budget_msg = "policy exceeded the " + std::to_string(spec_.act_budget.count()) +
                                 " ms time budget per call" + where +
                                 "; check for infinite loops or heavy work";
  const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(req.deadline - Clock::now());
  Json reply;
  try {
    reply = read_reply(std::max(left, std::chrono::milliseconds(1)));
  } catch (const EpisodeAborted& e) {
    in_flight_.clear();
    if (std::string_view(e.what()).find("did not reply") != std::string_view::npos) {
      throw EpisodeAborted(budget_msg);
    }
    throw EpisodeAborted(std::string(e.what()) + where);
  }
  if (!reply.is_object() || !reply.contains("id") || reply["id"] != req.id) {
    kill_worker();
    in_flight_.clear();
    throw EpisodeAborted("sandbox worker protocol error: reply does not answer request " +
                         std::to_string(req.id) + where);
  }
  const std::string type = reply.value("type", "");
  if (type == "error") {
    throw EpisodeAborted("policy raised an exception" + where + ":\n" + reply.value("message", ""));
  }
  if (type != "action" && type != "mutations") {
    throw EpisodeAborted("sandbox worker sent an unexpected reply" + where + ": " + reply.dump());
  }
  const auto elapsed = std::chrono::microseconds(reply.value("elapsed_us", std::int64_t{0}));
  if (elapsed > spec_.act_budget) throw EpisodeAborted(budget_msg);
  ActReply r;
  const Json& v = reply["value"];
  if (v.is_number_integer()) {
    r.value = v.get<int>();
  } else {
    r.returned_type = reply.value("returned_type", std::string(v.type_name()));
    r.returned = reply.value("returned", v.dump());
  }
  if (type == "mutations") {
    if (privilege_ != Privilege::Mutating) {
      throw SecurityViolation("read-only sandbox session reported state mutations" + where);
    }
    for (const Json& op : reply.at("ops")) r.mutations.push_back(mutation_from_json(op));
  }
  return r;
}

ActReply WorkerSession::act(const Environment& env, const EnvState& state, int agent) {
  submit(env, state, agent);
  return collect(agent, state.step);
}

LoadResult static_check(const WorkerSpec& spec, Game game, Privilege privilege, std::string_view source) {
  WorkerSession session(spec, game, privilege);
  return session.load(source);
}

namespace {

class ExternalPolicy final : public Policy {
 public:
  ExternalPolicy(WorkerSpec spec, std::shared_ptr<const std::string> source, Game game, Privilege privilege)
      : spec_(std::move(spec)), source_(std::move(source)), game_(game), privilege_(privilege) {}

  void begin_episode(const Environment& env, const EnvState& state) override {
    if (env.game() != game_) throw UsageError("external policy bound for a different game");
    session_ = std::make_unique<WorkerSession>(spec_, game_, privilege_);
    const LoadResult lr = session_->load(*source_);
    if (!lr.ok) {
      std::string msg = "policy failed the static safety check:";
      for (const auto& v : lr.violations) msg += "\n- " + v;
      throw PolicyRejected(msg, lr.violations);
    }
    session_->reset(env, state);
  }

  void prepare_step(const Environment& env, const EnvState& state, std::span<const int> agents) override {
    if (!session_) throw LifecycleError("external policy queried before begin_episode");
    for (int a : agents) session_->submit(env, state, a);
  }

  PolicyDecision decide(const Environment& env, const EnvState& state, int agent) override {
    if (!session_) throw LifecycleError("external policy queried before begin_episode");
    if (!session_->pending()) session_->submit(env, state, agent);
    ActReply r = session_->collect(agent, state.step);
    const std::string where = " for agent " + std::to_string(agent) + " at step " + std::to_string(state.step);
    if (!r.value) {
      throw EpisodeAborted("policy returned " + r.returned_type + " " + r.returned + where +
                           "; return a plain int (" + max_action_text(game_) + "), never a tuple or None");
    }
    if (*r.value < 0 || *r.value >= env.num_actions()) {
      throw EpisodeAborted("policy returned out-of-range action " + std::to_string(*r.value) + where +
                           "; return a plain int (" + max_action_text(game_) + ")");
    }
    return {static_cast<Action>(*r.value), std::move(r.mutations)};
  }

 private:
  WorkerSpec spec_;
  std::shared_ptr<const std::string> source_;
  Game game_;
  Privilege privilege_;
  std::unique_ptr<WorkerSession> session_;
};

}  // namespace

PolicyBinding make_external_binding(WorkerSpec spec, std::string source, Game game, Privilege privilege,
                                    std::string id) {
  auto src = std::make_shared<const std::string>(std::move(source));
  PolicyBinding b;
  b.id = std::move(id);
  b.kind = PolicyKind::External;
  b.privilege = privilege;
  b.factory = [spec = std::move(spec), src, game, privilege] {
    return std::make_unique<ExternalPolicy>(spec, src, game, privilege);
  };
  return b;
}

}  // namespace ssd
