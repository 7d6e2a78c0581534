#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ssd/trace.hpp"

namespace ssd {

struct EpisodeReturns {
  std::vector<double> returns;                   // R_i, summed over the episode
  std::vector<std::vector<int>> positive_steps;  // per agent, steps with r_i^t > 0
  std::vector<int> active_counts;                // per step, agents not tagged out

  static EpisodeReturns from_trace(const EpisodeTrace& trace);
};

struct SocialMetrics {
  double efficiency = 0.0;      // U
  double equality = 0.0;        // E
  double sustainability = 0.0;  // S
  double peace = 0.0;           // P

  friend bool operator==(const SocialMetrics&, const SocialMetrics&) = default;
};

// U = (1/H) sum_i R_i
double efficiency(const EpisodeReturns& r, int horizon);

// E = 1 - sum_{i,j} |R_i - R_j| / (2 N sum_i R_i), signed denominator. When
// sum_i R_i == 0 the result is 1 if every return is equal, else 0.
double equality(const EpisodeReturns& r);

// Mean over agents of each agent's mean positive-reward timestep. Agents that
// never earn positive reward are left out; 0 if none qualify.
double sustainability(const EpisodeReturns& r);

// P = (1/H) sum_t |{i : active at t}|
double peace(const EpisodeReturns& r, int horizon);

SocialMetrics social_metrics(const EpisodeReturns& r, int horizon);

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<double> returns;
  SocialMetrics metrics;
};

struct Feedback {
  double mean_return = 0.0;  // r-bar: mean per-agent return over seeds
  SocialMetrics metrics;     // component-wise mean over seeds
  std::vector<SeedResult> per_seed;
};

// Throws UsageError on an empty list.
Feedback aggregate_feedback(std::span<const SeedResult> per_seed, int n_agents);

Json to_json(const SocialMetrics& m);
SocialMetrics social_metrics_from_json(const Json& j);
Json to_json(const Feedback& f);
Feedback feedback_from_json(const Json& j);

}  // namespace ssd
