#pragma once

#include <exception>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "settings.hpp"
#include "ssd/agents.hpp"

namespace ssd::cli {

enum ExitCode : int {
  kOk = 0,
  kOther = 1,
  kConfig = 2,
  kValidation = 3,
  kInfrastructure = 4,
  kSecurity = 5,
};

int exit_code_for(const std::exception& e);

struct Context {
  Settings settings;
  bool force = false;
  std::string default_worker;
};

// Builtin policy or attack name, "q:<table>", "py:<file>" (read-only) or
// "py+mut:<file>" (mutating).
PolicyBinding resolve_policy(const std::string& spec, Game game, const WorkerSpec& worker);

// Refuses a nonempty directory unless `force`, which clears it first.
std::filesystem::path prepare_out_dir(const Settings& s, bool force);

int cmd_run(const Context& ctx, std::ostream& out);
int cmd_eval(const Context& ctx, std::ostream& out);
int cmd_train_q(const Context& ctx, std::ostream& out);
int cmd_synth(const Context& ctx, std::ostream& out);
int cmd_attack(const Context& ctx, std::ostream& out);
int cmd_render(const Context& ctx, std::ostream& out);

}  // namespace ssd::cli
