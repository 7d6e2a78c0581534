#pragma once

#include <ostream>
#include <string>
#include <vector>

// Policies the validator must refuse: seven caught by the static check, five
// by the smoke episode.
namespace ssd::testing {

struct SafetyCase {
  std::string name;
  std::string source;
  std::string stage;  // where it must be caught

  friend void PrintTo(const SafetyCase& c, std::ostream* os) { *os << c.name; }
};

inline std::vector<SafetyCase> safety_corpus() {
  const std::string head = "def policy(env, agent_id) -> int:\n";
  return {
      {"eval_call", head + "    return eval('7')\n", "static"},
      {"exec_call", head + "    exec('x = 1')\n    return 7\n", "static"},
      {"open_file", head + "    open('/etc/passwd').read()\n    return 7\n", "static"},
      {"dunder_import", head + "    __import__('os').system('true')\n    return 7\n", "static"},
      {"import_statement", "import os\n" + head + "    return 7\n", "static"},
      {"dunder_attribute", head + "    return env.__class__.__name__ and 7\n", "static"},
      {"no_policy_function", "def act(env, agent_id):\n    return 7\n", "static"},
      {"tuple_return", head + "    return (7, 0)\n", "smoke"},
      {"none_return", head + "    pass\n", "smoke"},
      {"out_of_range", head + "    return 12\n", "smoke"},
      {"slow_call", head + "    s = 0\n    for i in range(50_000_000):\n        s += i\n    return 7\n", "smoke"},
      {"infinite_loop", head + "    while True:\n        pass\n", "smoke"},
  };
}

}  // namespace ssd::testing
