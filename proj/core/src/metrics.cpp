#include "ssd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ssd {

EpisodeReturns EpisodeReturns::from_trace(const EpisodeTrace& trace) {
  EpisodeReturns r;
  const auto n = static_cast<std::size_t>(trace.n_agents);
  r.returns.assign(n, 0.0);
  r.positive_steps.assign(n, {});
  r.active_counts.reserve(trace.steps.size());
  for (const StepRecord& rec : trace.steps) {
    for (std::size_t i = 0; i < n; ++i) {
      r.returns[i] += rec.rewards[i];
      if (rec.rewards[i] > 0.0) r.positive_steps[i].push_back(rec.step);
    }
    r.active_counts.push_back(
        static_cast<int>(std::count(rec.active.begin(), rec.active.end(), std::uint8_t{1})));
  }
  return r;
}

double efficiency(const EpisodeReturns& r, int horizon) {
  if (horizon <= 0) throw PreconditionError("efficiency: horizon must be > 0");
  return std::accumulate(r.returns.begin(), r.returns.end(), 0.0) / horizon;
}

double equality(const EpisodeReturns& r) {
  const std::size_t n = r.returns.size();
  if (n == 0) throw PreconditionError("equality: no agents");
  const double total = std::accumulate(r.returns.begin(), r.returns.end(), 0.0);
  double diff = 0.0;
  for (double a : r.returns) {
    for (double b : r.returns) diff += std::abs(a - b);
  }
  if (total == 0.0) return diff == 0.0 ? 1.0 : 0.0;
  return 1.0 - diff / (2.0 * static_cast<double>(n) * total);
}

double sustainability(const EpisodeReturns& r) {
  double sum = 0.0;
  int counted = 0;
  for (const auto& steps : r.positive_steps) {
    if (steps.empty()) continue;
    const double mean =
        std::accumulate(steps.begin(), steps.end(), 0.0) / static_cast<double>(steps.size());
    sum += mean;
    ++counted;
  }
  return counted == 0 ? 0.0 : sum / counted;
}

double peace(const EpisodeReturns& r, int horizon) {
  if (horizon <= 0) throw PreconditionError("peace: horizon must be > 0");
  const double total = std::accumulate(r.active_counts.begin(), r.active_counts.end(), 0.0);
  return total / horizon;
}

SocialMetrics social_metrics(const EpisodeReturns& r, int horizon) {
  return {efficiency(r, horizon), equality(r), sustainability(r), peace(r, horizon)};
}

Feedback aggregate_feedback(std::span<const SeedResult> per_seed, int n_agents) {
  if (per_seed.empty()) throw UsageError("aggregate_feedback: no seeds");
  if (n_agents <= 0) throw UsageError("aggregate_feedback: n_agents must be > 0");
  Feedback f;
  double total = 0.0;
  for (const SeedResult& s : per_seed) {
    total += std::accumulate(s.returns.begin(), s.returns.end(), 0.0);
    f.metrics.efficiency += s.metrics.efficiency;
    f.metrics.equality += s.metrics.equality;
    f.metrics.sustainability += s.metrics.sustainability;
    f.metrics.peace += s.metrics.peace;
  }
  const auto k = static_cast<double>(per_seed.size());
  f.mean_return = total / (static_cast<double>(n_agents) * k);
  f.metrics.efficiency /= k;
  f.metrics.equality /= k;
  f.metrics.sustainability /= k;
  f.metrics.peace /= k;
  f.per_seed.assign(per_seed.begin(), per_seed.end());
  return f;
}

Json to_json(const SocialMetrics& m) {
  Json j;
  j["efficiency"] = m.efficiency;
  j["equality"] = m.equality;
  j["sustainability"] = m.sustainability;
  j["peace"] = m.peace;
  return j;
}

SocialMetrics social_metrics_from_json(const Json& j) {
  return {j.at("efficiency").get<double>(), j.at("equality").get<double>(),
          j.at("sustainability").get<double>(), j.at("peace").get<double>()};
}

Json to_json(const Feedback& f) {
  Json j;
  j["mean_return"] = f.mean_return;
  j["metrics"] = to_json(f.metrics);
  Json seeds = Json::array();
  for (const SeedResult& s : f.per_seed) {
    Json e;
    e["seed"] = s.seed;
    e["returns"] = s.returns;
    e["metrics"] = to_json(s.metrics);
    seeds.push_back(std::move(e));
  }
  j["per_seed"] = std::move(seeds);
  return j;
}

Feedback feedback_from_json(const Json& j) {
  Feedback f;
  f.mean_return = j.at("mean_return").get<double>();
  f.metrics = social_metrics_from_json(j.at("metrics"));
  for (const auto& e : j.at("per_seed")) {
    f.per_seed.push_back({e.at("seed").get<std::uint64_t>(), e.at("returns").get<std::vector<double>>(),
                          social_metrics_from_json(e.at("metrics"))});
  }
  return f;
}

}  // namespace ssd
