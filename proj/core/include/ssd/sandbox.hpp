#pragma once

#include <chrono>
#include <deque>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <sys/types.h>

#include "ssd/agents.hpp"
#include "ssd/trace.hpp"

namespace ssd {

// How to start a sandbox worker. The engine appends
// `--mode readonly|mutating --game gathering|cleanup` to `argv`.
struct WorkerSpec {
  std::vector<std::string> argv;
  std::chrono::milliseconds act_budget{50};
  std::chrono::milliseconds startup_budget{15000};  // spawn through hello
  std::chrono::milliseconds io_budget{5000};        // load, reset, bye
  int full_snapshot_every = 100;                     // steps between resyncs
  bool inherit_stderr = false;
};

// Splits a command line on whitespace. SSD_WORKER overrides `fallback`.
WorkerSpec worker_spec_from_env(const std::string& fallback);

// Wire encoding of the state the worker's env proxy exposes. Field names
// follow the policy-facing API (agent_pos, apple_alive, _apple_pos, walls,
// waste, river_cells_set, ...). Off-grid agents are sent as [-1, -1];
// grids are sent as lists of [row, col] cells that are set.
Json wire_snapshot(const Environment& env, const EnvState& state);
// Only the fields that change between steps.
Json wire_dynamic(const Environment& env, const EnvState& state);
// Keys of `cur` whose values differ from `prev`.
Json wire_delta(const Json& prev, const Json& cur);

struct LoadResult {
  bool ok = false;
  std::vector<std::string> violations;
};

struct ActReply {
  std::optional<int> value;    // empty when the policy returned a non-int
  std::string returned_type;   // Python type name of a non-int result
  std::string returned;        // its repr
  std::vector<Mutation> mutations;
};

// One worker process speaking newline-delimited JSON over a socket pair
// bound to its stdin and stdout. Single-owner; not thread-safe.
class WorkerSession {
 public:
  // Spawns the worker and completes the hello handshake. Throws
  // InfrastructureError if either fails.
  WorkerSession(const WorkerSpec& spec, Game game, Privilege privilege);
  ~WorkerSession();
  WorkerSession(const WorkerSession&) = delete;
  WorkerSession& operator=(const WorkerSession&) = delete;

  LoadResult load(std::string_view source);
  void reset(const Environment& env, const EnvState& state);
  // Queries the loaded policy. The state may only change between calls
  // with different `state.step`. Throws EpisodeAborted when the policy raised,
  // overran the act budget (the worker is killed) or the worker died.
  ActReply act(const Environment& env, const EnvState& state, int agent);
  // Pipelined form of act: queue requests for several agents of one step,
  // then collect the replies in submission order.
  void submit(const Environment& env, const EnvState& state, int agent);
  ActReply collect(int agent, int step);
  bool pending() const { return !in_flight_.empty(); }
  void close();

  // Raw frame access for protocol tests. `request` assigns the next id.
  Json request(Json msg, std::chrono::milliseconds budget);
  void send_line(std::string_view line);
  // Reads one reply line. Throws EpisodeAborted on timeout or EOF.
  Json read_reply(std::chrono::milliseconds budget);

  bool alive() const { return pid_ > 0; }
  pid_t pid() const { return pid_; }
  Game game() const { return game_; }
  Privilege privilege() const { return privilege_; }

 private:
  void kill_worker();

  WorkerSpec spec_;
  Game game_;
  Privilege privilege_;
  pid_t pid_ = -1;
  int fd_ = -1;
  std::int64_t next_id_ = 1;
  std::string buffer_;
  Json last_dynamic_;
  int last_full_step_ = -1;
  int last_sent_step_ = -1;
  struct InFlight {
    std::int64_t id;
    int agent;
    int step;
    std::chrono::steady_clock::time_point deadline;
  };
  std::deque<InFlight> in_flight_;
  std::string outbox_;  // submitted frames not yet written
};

// Spawns a worker, loads `source` and closes the session.
LoadResult static_check(const WorkerSpec& spec, Game game, Privilege privilege, std::string_view source);

// Binding whose instances run `source` in a fresh worker per episode.
PolicyBinding make_external_binding(WorkerSpec spec, std::string source, Game game, Privilege privilege,
                                    std::string id = "external");

}  // namespace ssd
