#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "ssd/metrics.hpp"
#include "ssd/trace.hpp"

// Hand-built metric fixtures and a brute-force evaluator, shared by the unit
// and acceptance suites.
namespace ssd::testing {

// A hand-built episode: sparse rewards and tag-out intervals.
struct Fixture {
  std::string name;
  int n = 0;
  int horizon = 0;
  std::vector<std::tuple<int, int, double>> rewards;  // (step, agent, reward)
  std::vector<std::tuple<int, int, int>> tagged;      // (agent, from, to) inactive on [from, to)

  friend void PrintTo(const Fixture& f, std::ostream* os) { *os << f.name; }
};

inline EpisodeTrace make_trace(const Fixture& f) {
  EpisodeTrace t;
  t.n_agents = f.n;
  for (int s = 0; s < f.horizon; ++s) {
    StepRecord rec;
    rec.step = s;
    rec.actions.assign(static_cast<std::size_t>(f.n), Action::Stand);
    rec.rewards.assign(static_cast<std::size_t>(f.n), 0.0);
    rec.active.assign(static_cast<std::size_t>(f.n), 1);
    t.steps.push_back(std::move(rec));
  }
  for (auto [s, i, r] : f.rewards) t.steps[static_cast<std::size_t>(s)].rewards[static_cast<std::size_t>(i)] += r;
  for (auto [i, from, to] : f.tagged) {
    for (int s = from; s < to; ++s) t.steps[static_cast<std::size_t>(s)].active[static_cast<std::size_t>(i)] = 0;
  }
  return t;
}

// Brute-force evaluator written against the definitions, sharing nothing
// with the library beyond the fixture.
inline SocialMetrics oracle(const Fixture& f) {
  std::vector<double> R(static_cast<std::size_t>(f.n), 0.0);
  std::map<int, std::map<int, double>> per_step;  // agent -> step -> reward
  for (auto [s, i, r] : f.rewards) per_step[i][s] += r;
  for (auto& [i, steps] : per_step) {
    for (auto& [s, r] : steps) R[static_cast<std::size_t>(i)] += r;
  }
  SocialMetrics m;
  const double total = std::accumulate(R.begin(), R.end(), 0.0);
  m.efficiency = total / f.horizon;

  // Sorted-order form of the pairwise absolute difference sum.
  std::vector<double> x = R;
  std::sort(x.begin(), x.end());
  double pair_sum = 0.0;
  for (int k = 0; k < f.n; ++k) pair_sum += 2.0 * (2.0 * k - f.n + 1.0) * x[static_cast<std::size_t>(k)];
  if (total == 0.0) {
    m.equality = pair_sum == 0.0 ? 1.0 : 0.0;
  } else {
    m.equality = 1.0 - pair_sum / (2.0 * f.n * total);
  }

  double s_sum = 0.0;
  int s_count = 0;
  for (auto& [i, steps] : per_step) {
    double t_sum = 0.0;
    int c = 0;
    for (auto& [s, r] : steps) {
      if (r > 0.0) {
        t_sum += s;
        ++c;
      }
    }
    if (c > 0) {
      s_sum += t_sum / c;
      ++s_count;
    }
  }
  m.sustainability = s_count ? s_sum / s_count : 0.0;

  double active = 0.0;
  for (int s = 0; s < f.horizon; ++s) {
    for (int i = 0; i < f.n; ++i) {
      bool on = true;
      for (auto [a, from, to] : f.tagged) {
        if (a == i && s >= from && s < to) on = false;
      }
      active += on;
    }
  }
  m.peace = active / f.horizon;
  return m;
}

inline std::vector<Fixture> metric_fixtures() {
  std::vector<Fixture> fs;
  auto every_agent_at = [](int n, int step, double r) {
    std::vector<std::tuple<int, int, double>> out;
    for (int i = 0; i < n; ++i) out.emplace_back(step, i, r);
    return out;
  };
  fs.push_back({"all_zero", 10, 1000, {}, {}});
  {
    Fixture f{"all_equal_100", 10, 1000, {}, {}};
    for (int i = 0; i < 10; ++i) {
      for (int k = 0; k < 100; ++k) f.rewards.emplace_back(k * 10, i, 1.0);
    }
    fs.push_back(f);
  }
  fs.push_back({"two_agents_3_1", 2, 10, {{0, 0, 1}, {1, 0, 1}, {2, 0, 1}, {3, 1, 1}}, {}});
  fs.push_back({"all_at_500", 4, 1000, every_agent_at(4, 500, 1.0), {}});
  fs.push_back({"a_0_and_1000_b_500", 10, 1001, {{0, 0, 1}, {1000, 0, 1}, {500, 1, 1}}, {}});
  fs.push_back({"one_tagged_25", 10, 1000, {{3, 2, 1}}, {{4, 100, 125}}});
  {
    Fixture f{"all_tagged_always", 3, 50, {}, {}};
    for (int i = 0; i < 3; ++i) f.tagged.emplace_back(i, 0, 50);
    fs.push_back(f);
  }
  fs.push_back({"single_agent", 1, 20, {{4, 0, 1}, {9, 0, 1}}, {}});
  fs.push_back({"one_rich_rest_poor", 5, 100, {{10, 0, 50}}, {}});
  // Beam fines push the sum negative; E leaves [0, 1].
  fs.push_back({"negative_sum", 3, 100, {{1, 0, -50}, {2, 1, -1}, {3, 2, 2}}, {}});
  fs.push_back({"negative_sum_large_spread", 10, 1000,
                {{5, 0, -51}, {6, 1, -1}, {7, 2, 30}, {8, 3, 1}, {9, 4, -2}}, {}});
  fs.push_back({"tiny_positive_sum", 2, 10, {{0, 0, 10}, {1, 1, -9}}, {}});
  fs.push_back({"mixed_sign_zero_sum", 2, 10, {{0, 0, 5}, {1, 1, -5}}, {}});
  fs.push_back({"negative_then_positive_same_agent", 2, 30, {{2, 0, -1}, {20, 0, 3}, {25, 1, 1}}, {}});
  fs.push_back({"fractional_rewards", 3, 7, {{0, 0, 0.25}, {3, 1, 0.5}, {6, 2, 0.125}}, {}});
  fs.push_back({"late_only", 4, 1000, {{999, 0, 1}, {998, 1, 1}}, {}});
  fs.push_back({"early_collapse", 10, 1000, [] {
                  std::vector<std::tuple<int, int, double>> r;
                  for (int s = 0; s < 30; ++s) r.emplace_back(s, s % 10, 1.0);
                  return r;
                }(),
                {}});
  fs.push_back({"overlapping_tags", 4, 100, {{50, 3, 1}}, {{0, 10, 35}, {1, 20, 45}, {0, 60, 85}}});
  fs.push_back({"same_step_multiple", 3, 5, {{2, 0, 1}, {2, 0, 1}, {2, 1, 1}}, {}});
  fs.push_back({"zero_reward_events", 3, 5, {{1, 0, 0.0}, {2, 1, 0.0}}, {}});
  fs.push_back({"cleanup_costs", 6, 200, {{10, 0, -1}, {11, 0, -1}, {40, 1, 1}, {41, 2, 1}, {90, 3, -50}}, {{3, 90, 115}}});
  fs.push_back({"horizon_one", 2, 1, {{0, 0, 1}}, {{1, 0, 1}}});
  {
    Fixture f{"staircase", 8, 400, {}, {}};
    for (int i = 0; i < 8; ++i) {
      for (int k = 0; k <= i; ++k) f.rewards.emplace_back(k * 40 + i, i, 1.0);
    }
    fs.push_back(f);
  }
  return fs;
}

}  // namespace ssd::testing
