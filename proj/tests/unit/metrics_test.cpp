#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <numeric>
#include <random>

#include "metrics_fixtures.hpp"
#include "ssd/metrics.hpp"

namespace ssd {
namespace {

using testing::Fixture;
using testing::metric_fixtures;
using testing::make_trace;
using testing::oracle;

class MetricsOracle : public ::testing::TestWithParam<Fixture> {};

TEST_P(MetricsOracle, MatchesBruteForce) {
  const Fixture& f = GetParam();
  const EpisodeTrace t = make_trace(f);
  const SocialMetrics got = social_metrics(EpisodeReturns::from_trace(t), f.horizon);
  const SocialMetrics want = oracle(f);
  EXPECT_NEAR(got.efficiency, want.efficiency, 1e-9);
  EXPECT_NEAR(got.equality, want.equality, 1e-9);
  EXPECT_NEAR(got.sustainability, want.sustainability, 1e-9);
  EXPECT_NEAR(got.peace, want.peace, 1e-9);
}

INSTANTIATE_TEST_SUITE_P(Fixtures, MetricsOracle, ::testing::ValuesIn(metric_fixtures()),
                         [](const auto& info) { return info.param.name; });

TEST(Metrics, FixtureCountAndUnboundedRegimes) {
  const auto fs = metric_fixtures();
  EXPECT_GE(fs.size(), 20u);
  bool below = false, above = false;
  for (const auto& f : fs) {
    below |= oracle(f).equality < 0.0;
    above |= oracle(f).equality > 1.0;
  }
  EXPECT_TRUE(below);
  EXPECT_TRUE(above);
}

TEST(Metrics, WorkedExamples) {
  EpisodeReturns r;
  r.returns = {3, 1};
  EXPECT_DOUBLE_EQ(equality(r), 0.75);
  r.returns.assign(10, 100.0);
  EXPECT_DOUBLE_EQ(efficiency(r, 1000), 1.0);
  EXPECT_DOUBLE_EQ(equality(r), 1.0);

  const Fixture tag{"t", 10, 1000, {}, {{0, 0, 25}}};
  EXPECT_NEAR(peace(EpisodeReturns::from_trace(make_trace(tag)), 1000), 9.975, 1e-12);
  const Fixture ab{"ab", 10, 1001, {{0, 0, 1}, {1000, 0, 1}, {500, 1, 1}}, {}};
  EXPECT_DOUBLE_EQ(sustainability(EpisodeReturns::from_trace(make_trace(ab))), 500.0);
}

TEST(Metrics, ZeroSumGuard) {
  EpisodeReturns r;
  r.returns = {0, 0, 0};
  EXPECT_EQ(equality(r), 1.0);
  r.returns = {2, -2, 0};
  EXPECT_EQ(equality(r), 0.0);
}

TEST(Metrics, ScaleAndPermutationInvariance) {
  std::mt19937 rng(9);
  for (int trial = 0; trial < 200; ++trial) {
    Fixture f{"rand", 2 + static_cast<int>(rng() % 9), 50, {}, {}};
    for (int k = 0; k < 40; ++k) {
      f.rewards.emplace_back(static_cast<int>(rng() % 50), static_cast<int>(rng() % f.n),
                             static_cast<double>(static_cast<int>(rng() % 7)));
    }
    const EpisodeReturns base = EpisodeReturns::from_trace(make_trace(f));
    const double total = std::accumulate(base.returns.begin(), base.returns.end(), 0.0);
    if (total == 0.0) continue;

    EpisodeReturns scaled = base;
    for (double& x : scaled.returns) x *= 2.5;
    EXPECT_NEAR(equality(scaled), equality(base), 1e-12);
    EXPECT_NEAR(efficiency(scaled, 50), 2.5 * efficiency(base, 50), 1e-12);

    const SocialMetrics m = social_metrics(base, 50);
    EpisodeReturns perm = base;
    std::vector<std::size_t> idx(base.returns.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      perm.returns[i] = base.returns[idx[i]];
      perm.positive_steps[i] = base.positive_steps[idx[i]];
    }
    const SocialMetrics p = social_metrics(perm, 50);
    EXPECT_NEAR(p.efficiency, m.efficiency, 1e-12);
    EXPECT_NEAR(p.equality, m.equality, 1e-12);
    EXPECT_NEAR(p.sustainability, m.sustainability, 1e-9);
    EXPECT_EQ(p.peace, m.peace);

    EXPECT_LE(m.equality, 1.0);
    EXPECT_GE(m.peace, 0.0);
    EXPECT_LE(m.peace, f.n);
    EXPECT_GE(m.sustainability, 0.0);
    EXPECT_LE(m.sustainability, 50.0);
    const bool all_equal = std::adjacent_find(base.returns.begin(), base.returns.end(),
                                              std::not_equal_to<>()) == base.returns.end();
    EXPECT_EQ(m.equality == 1.0, all_equal);
  }
}

TEST(Metrics, AggregateFeedback) {
  const SeedResult a{0, {1, 1}, {1.0, 1.0, 10.0, 2.0}};
  const SeedResult b{1, {3, 5}, {2.0, 0.5, 20.0, 1.0}};
  const std::vector<SeedResult> both{a, b};
  const Feedback f = aggregate_feedback(both, 2);
  EXPECT_DOUBLE_EQ(f.metrics.efficiency, 1.5);
  EXPECT_DOUBLE_EQ(f.metrics.sustainability, 15.0);
  EXPECT_DOUBLE_EQ(f.mean_return, (1 + 1 + 3 + 5) / 4.0);
  EXPECT_EQ(f.per_seed.size(), 2u);

  const std::vector<SeedResult> one{a};
  const Feedback g = aggregate_feedback(one, 2);
  EXPECT_EQ(g.metrics, a.metrics);
  EXPECT_THROW(aggregate_feedback(std::vector<SeedResult>{}, 2), UsageError);

  const Feedback back = feedback_from_json(to_json(f));
  EXPECT_EQ(back.metrics, f.metrics);
  EXPECT_EQ(back.mean_return, f.mean_return);
}

}  // namespace
}  // namespace ssd
