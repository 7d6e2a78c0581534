#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ssd {

// Base of every error the engine raises. Subclasses map onto CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class LifecycleError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

// A policy tried to mutate environment state without the Mutating privilege,
// or submitted a mutation the engine cannot apply.
class SecurityViolation : public Error {
 public:
  using Error::Error;
};

// The sandbox worker could not be started or handshaken.
class InfrastructureError : public Error {
 public:
  using Error::Error;
};

// Chat-model endpoint failures (network, HTTP status, malformed body).
class TransportError : public Error {
 public:
  using Error::Error;
};

// An external policy session failed mid-episode. The message is the
// diagnostic that gets appended to the next synthesis prompt.
class EpisodeAborted : public Error {
 public:
  using Error::Error;
};

// The worker refused to load a policy (static check or load-time error).
class PolicyRejected : public EpisodeAborted {
 public:
  PolicyRejected(const std::string& what, std::vector<std::string> violations)
      : EpisodeAborted(what), violations_(std::move(violations)) {}
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

}  // namespace ssd
