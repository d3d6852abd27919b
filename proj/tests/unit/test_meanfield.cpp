#include <gtest/gtest.h>

#include <random>

#include "mfn/errors.hpp"
#include "mfn/meanfield.hpp"
#include "oracles.hpp"

using namespace mfn;

namespace {

MeanFieldStats agg(const std::vector<double>& xs, std::vector<double> ws = {}) {
  if (ws.empty()) ws.assign(xs.size(), 1.0);
  return aggregate(std::span<const double>(xs), std::span<const double>(ws));
}

GroupStats group(const std::vector<double>& xs) {
  GroupStats g;
  for (std::size_t i = 0; i < xs.size(); ++i) g.members.push_back(AgentId(i));
  g.stats = agg(xs);
  return g;
}

void expect_matches_batch(const MeanFieldStats& s, const std::vector<double>& xs, const std::vector<double>& ws,
                          double rel) {
  const auto b = oracle::weighted(xs, ws);
  EXPECT_TRUE(oracle::rel_close(s.mean[0], b.mean, rel)) << s.mean[0] << " vs " << b.mean;
  EXPECT_TRUE(oracle::rel_close(s.variance[0], b.variance, rel, 1e-12)) << s.variance[0] << " vs " << b.variance;
  EXPECT_TRUE(oracle::rel_close(s.total_weight, b.weight, rel));
  EXPECT_EQ(s.count, xs.size());
}

}  // namespace

TEST(Aggregate, UnitWeightsOneTwoThree) {
  const auto s = agg({1, 2, 3});
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_NEAR(s.variance[0], 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.total_weight, 3.0);
}

TEST(Aggregate, SinglePoint) {
  const auto s = agg({5}, {4});
  EXPECT_DOUBLE_EQ(s.mean[0], 5.0);
  EXPECT_DOUBLE_EQ(s.variance[0], 0.0);
  EXPECT_DOUBLE_EQ(s.total_weight, 4.0);
}

TEST(Aggregate, IdenticalStatesHaveZeroVariance) {
  const auto s = agg({5, 5}, {2, 7});
  EXPECT_DOUBLE_EQ(s.mean[0], 5.0);
  EXPECT_DOUBLE_EQ(s.variance[0], 0.0);
}

TEST(Aggregate, RejectsBadInput) {
  const std::vector<double> none;
  EXPECT_THROW(aggregate(std::span<const double>(none), std::span<const double>(none)), Error);
  try {
    agg({1, 2}, {1, 0});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonPositiveWeight);
  }
  try {
    agg({1, 2}, {1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
  try {
    agg({}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyInput);
  }
}

TEST(Aggregate, VectorStatesAreComponentwise) {
  const std::vector<std::vector<double>> xs{{1, 10}, {3, 30}};
  const std::vector<double> ws{1, 3};
  const auto s = aggregate(std::span<const std::vector<double>>(xs), std::span<const double>(ws));
  const auto c0 = oracle::weighted({1, 3}, ws);
  const auto c1 = oracle::weighted({10, 30}, ws);
  EXPECT_NEAR(s.mean[0], c0.mean, 1e-12);
  EXPECT_NEAR(s.mean[1], c1.mean, 1e-12);
  EXPECT_NEAR(s.variance[0], c0.variance, 1e-12);
  EXPECT_NEAR(s.variance[1], c1.variance, 1e-12);
  EXPECT_DOUBLE_EQ(s.max_variance(), s.variance[1]);
}

TEST(Welford, StepwiseMatchesBatch) {
  MeanFieldStats s = welford_update(MeanFieldStats{}, 1.0, 1.0);
  s = welford_update(s, 2.0, 1.0);
  EXPECT_DOUBLE_EQ(s.mean[0], 1.5);
  EXPECT_DOUBLE_EQ(s.variance[0], 0.25);
  EXPECT_DOUBLE_EQ(s.total_weight, 2.0);
  s = welford_update(s, 3.0, 1.0);
  EXPECT_DOUBLE_EQ(s.mean[0], 2.0);
  EXPECT_NEAR(s.variance[0], 2.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(s.total_weight, 3.0);
}

TEST(Welford, PointAtMeanShrinksVariance) {
  const auto prior = agg({1, 3, 8}, {1, 2, 1});
  const auto next = welford_update(prior, prior.mean[0], 2.5);
  EXPECT_NEAR(next.mean[0], prior.mean[0], 1e-12);
  EXPECT_NEAR(next.variance[0], prior.variance[0] * prior.total_weight / (prior.total_weight + 2.5), 1e-12);
}

TEST(Welford, RejectsNonPositiveWeight) {
  const auto prior = agg({1});
  EXPECT_THROW(welford_update(prior, 1.0, 0.0), Error);
  EXPECT_THROW(welford_update(prior, 1.0, -1.0), Error);
}

TEST(Merge, SplitEqualsWhole) {
  const auto m = merge(agg({1, 2}), agg({3}));
  const auto whole = agg({1, 2, 3});
  EXPECT_NEAR(m.mean[0], whole.mean[0], 1e-15);
  EXPECT_NEAR(m.variance[0], whole.variance[0], 1e-15);
  EXPECT_DOUBLE_EQ(m.total_weight, 3.0);
  EXPECT_EQ(m.count, 3u);
}

TEST(Merge, EmptyIsIdentity) {
  const auto x = agg({4, 7}, {1, 2});
  const auto l = merge(x, MeanFieldStats{});
  const auto r = merge(MeanFieldStats{}, x);
  EXPECT_EQ(l.mean, x.mean);
  EXPECT_EQ(l.variance, x.variance);
  EXPECT_EQ(r.mean, x.mean);
  EXPECT_EQ(r.total_weight, x.total_weight);
}

TEST(MeanFieldProperty, RandomizedChainsAndMergesMatchBatchOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> val(-100.0, 100.0), wt(0.01, 10.0);
  std::uniform_int_distribution<int> len(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len(rng);
    std::vector<double> xs(n), ws(n);
    for (int i = 0; i < n; ++i) {
      xs[i] = val(rng);
      ws[i] = wt(rng);
    }
    MeanFieldStats chain;
    for (int i = 0; i < n; ++i) chain = welford_update(chain, xs[i], ws[i]);
    expect_matches_batch(chain, xs, ws, 1e-9);
    ASSERT_GE(chain.variance[0], 0.0);

    // Three-way split merged in two orders.
    const int a = std::uniform_int_distribution<int>(0, n)(rng);
    const int b = std::uniform_int_distribution<int>(a, n)(rng);
    auto part = [&](int lo, int hi) {
      MeanFieldStats s;
      for (int i = lo; i < hi; ++i) s = welford_update(s, xs[i], ws[i]);
      return s;
    };
    const auto p = part(0, a), q = part(a, b), r = part(b, n);
    expect_matches_batch(merge(merge(p, q), r), xs, ws, 1e-9);
    expect_matches_batch(merge(p, merge(q, r)), xs, ws, 1e-9);
    expect_matches_batch(merge(r, merge(q, p)), xs, ws, 1e-9);
  }
}

TEST(MeanFieldProperty, VarianceNeverNegativeUnderCancellation) {
  MeanFieldStats s;
  for (int i = 0; i < 10000; ++i) s = welford_update(s, 1e9 + (i % 2) * 1e-7, 1.0);
  EXPECT_GE(s.variance[0], 0.0);
  MeanFieldStats t;
  for (int i = 0; i < 100; ++i) t = merge(t, agg({1e12}));
  EXPECT_GE(t.variance[0], 0.0);
}

TEST(Scaled, KeepsMomentsChangesWeight) {
  const auto s = agg({1, 5});
  const auto t = scaled(s, 0.5);
  EXPECT_EQ(t.mean, s.mean);
  EXPECT_EQ(t.variance, s.variance);
  EXPECT_DOUBLE_EQ(t.total_weight, 1.0);
  EXPECT_THROW(scaled(s, 0.0), Error);
}

TEST(ErrorBounds, SinglePointArithmetic) {
  MeanFieldStats s{{0.0}, {0.5}, 1.0, 1};
  const auto b = error_bounds(s, nullptr, {2.0, 1.0});
  EXPECT_DOUBLE_EQ(b.single, 0.5);
  EXPECT_FALSE(b.partitioned);
}

TEST(ErrorBounds, ZeroVarianceGivesZero) {
  const auto full = agg({3, 3, 3});
  PartitionedStats p{{group({3}), group({3, 3})}};
  const auto b = error_bounds(full, &p, {});
  EXPECT_DOUBLE_EQ(b.single, 0.0);
  EXPECT_DOUBLE_EQ(*b.partitioned, 0.0);
}

TEST(ErrorBounds, PartitionTightensSplitClusters) {
  const auto full = agg({1, 2, 9, 10});
  PartitionedStats p{{group({1, 2}), group({9, 10})}};
  const auto b = error_bounds(full, &p, {2.0, 1.0});
  EXPECT_NEAR(b.single, 4 * 16.25, 1e-12);
  EXPECT_NEAR(*b.partitioned, 2 * 0.25 + 2 * 0.25, 1e-12);
}

TEST(ErrorBounds, RejectsInvalidParams) {
  const auto full = agg({1, 2});
  EXPECT_THROW(error_bounds(full, nullptr, {0.0, 1.0}), Error);
  EXPECT_THROW(error_bounds(full, nullptr, {1.0, -1.0}), Error);
}

TEST(VarianceDecomposition, TwoClusters) {
  PartitionedStats p{{group({1, 2}), group({9, 10})}};
  const auto d = variance_decomposition(p);
  EXPECT_NEAR(d.within[0], 0.25, 1e-12);
  EXPECT_NEAR(d.between[0], 16.0, 1e-12);
  EXPECT_NEAR(d.total[0], 16.25, 1e-12);
}

TEST(VarianceDecomposition, SingleGroupHasNoBetween) {
  PartitionedStats p{{group({1, 4, 6})}};
  const auto d = variance_decomposition(p);
  EXPECT_NEAR(d.between[0], 0.0, 1e-15);
  EXPECT_NEAR(d.total[0], oracle::weighted({1, 4, 6}, {1, 1, 1}).variance, 1e-12);
}

TEST(VarianceDecomposition, ConstantData) {
  PartitionedStats p{{group({2, 2}), group({2})}};
  const auto d = variance_decomposition(p);
  EXPECT_EQ(d.within[0], 0.0);
  EXPECT_EQ(d.between[0], 0.0);
  EXPECT_EQ(d.total[0], 0.0);
}

TEST(VarianceDecomposition, EmptyPartitionRejected) {
  try {
    variance_decomposition(PartitionedStats{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyPartition);
  }
}

TEST(MeanFieldProperty, TotalVarianceLawAndPartitionedBoundOrdering) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> val(-50.0, 50.0), wt(0.1, 5.0);
  std::uniform_int_distribution<int> groups_n(1, 5), size_n(1, 8);
  for (int trial = 0; trial < 300; ++trial) {
    PartitionedStats p;
    MeanFieldStats full;
    const int g = groups_n(rng);
    for (int k = 0; k < g; ++k) {
      GroupStats gs;
      const int m = size_n(rng);
      for (int i = 0; i < m; ++i) {
        const double x = val(rng), w = wt(rng);
        gs.stats = welford_update(gs.stats, x, w);
        full = welford_update(full, x, w);
        gs.members.push_back(AgentId(static_cast<std::size_t>(k * 10 + i)));
      }
      p.groups.push_back(gs);
    }
    const auto d = variance_decomposition(p);
    EXPECT_TRUE(oracle::rel_close(d.within[0] + d.between[0], d.total[0], 1e-9));
    EXPECT_TRUE(oracle::rel_close(d.total[0], full.variance[0], 1e-9));
    EXPECT_GE(d.between[0], 0.0);
    const auto b = error_bounds(full, &p, {});
    EXPECT_LE(*b.partitioned, b.single * (1 + 1e-12));
  }
}
