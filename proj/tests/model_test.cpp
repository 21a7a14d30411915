#include "itelab/model.hpp"

#include <gtest/gtest.h>

#include <vector>

namespace ite {
namespace {

TEST(LdnsRequestRate, NonCachingIsAggregateClientRate) {
  GranularityInput g{3, 1.0 / 35, 225e3, 15.0, false};
  EXPECT_DOUBLE_EQ(ldns_request_rate(g), 3.0 / 35);
}

TEST(LdnsRequestRate, CachingTakesMinBranch) {
  GranularityInput low{1, 1.0 / 35, 225e3, 15.0, true};
  EXPECT_DOUBLE_EQ(ldns_request_rate(low), 1.0 / 35);  // 1/35 < 1/15

  GranularityInput high{3, 1.0 / 35, 225e3, 15.0, true};
  EXPECT_DOUBLE_EQ(ldns_request_rate(high), 1.0 / 15);  // 3/35 > 1/15
}

TEST(LdnsRequestRate, MonotoneInInputs) {
  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    GranularityInput g;
    g.n = rng.uniform(1, 10);
    g.r = rng.uniform(0.001, 1.0);
    g.s = rng.uniform(1e3, 1e6);
    g.ttl = rng.uniform(1, 600);
    g.caching = rng.uniform01() < 0.5;
    const double base = ldns_request_rate(g);

    GranularityInput more_n = g;
    more_n.n += rng.uniform(0, 5);
    EXPECT_GE(ldns_request_rate(more_n), base);

    GranularityInput more_r = g;
    more_r.r += rng.uniform(0, 0.5);
    EXPECT_GE(ldns_request_rate(more_r), base);

    if (g.caching) {
      GranularityInput more_ttl = g;
      more_ttl.ttl += rng.uniform(0, 600);
      EXPECT_LE(ldns_request_rate(more_ttl), base);
    }
    EXPECT_LE(base, g.n * g.r * (1 + 1e-12));
  }
}

TEST(Granularity, NonCachingIsBytesPerConnection) {
  GranularityInput g{5, 0.2, 225e3, 15.0, false};
  EXPECT_DOUBLE_EQ(granularity_bytes_per_request(g), 225e3);
}

TEST(Granularity, SlowCachingStaysAtBytesPerConnection) {
  GranularityInput g{1, 1.0 / 35, 225e3, 15.0, true};  // n*r < 1/T
  EXPECT_DOUBLE_EQ(granularity_bytes_per_request(g), 225e3);
}

TEST(Granularity, FastCachingAccumulatesOverTtl) {
  GranularityInput g{3, 1.0 / 35, 225e3, 15.0, true};
  EXPECT_DOUBLE_EQ(granularity_bytes_per_request(g), 3.0 * (1.0 / 35) * 225e3 * 15.0);
  EXPECT_NEAR(granularity_bytes_per_request(g), 289.3e3, 0.1e3);
}

// R/lambda * lambda == n*r*s on both branches, and R/lambda >= s with
// equality exactly off the fast-caching branch.
TEST(Granularity, BranchIdentityAndLowerBound) {
  Rng rng(11);
  for (int i = 0; i < 5000; ++i) {
    GranularityInput g;
    g.n = rng.uniform(1, 10);
    g.r = rng.uniform(0.001, 1.0);
    g.s = rng.uniform(1e3, 1e6);
    g.ttl = rng.uniform(1, 600);
    g.caching = rng.uniform01() < 0.5;
    const double lambda = ldns_request_rate(g);
    const double per_request = granularity_bytes_per_request(g);
    const double total_rate = g.n * g.r * g.s;
    EXPECT_NEAR(per_request * lambda, total_rate, total_rate * 1e-12);
    EXPECT_GE(per_request, g.s * (1 - 1e-12));
    const bool fast_caching = g.caching && g.n * g.r >= 1.0 / g.ttl;
    if (!fast_caching) {
      EXPECT_DOUBLE_EQ(per_request, g.s);
    }
  }
}

TEST(PendingLoadRatio, Examples) {
  EXPECT_DOUBLE_EQ(pending_load_ratio(0.0, 123.0), 0.0);
  EXPECT_DOUBLE_EQ(pending_load_ratio(2.0, 0.5), 1.0);  // boundary delta = 1/lambda
  EXPECT_DOUBLE_EQ(pending_load_ratio(3.0, 2.0), 6.0);
  EXPECT_THROW(pending_load_ratio(-1.0, 1.0), std::invalid_argument);
}

TEST(SampleSize, FixedReturnsMeanExactly) {
  SizeDistribution d{SizeKind::fixed, 30e3, 0, 0};
  Rng rng(1);
  for (int i = 0; i < 100; ++i) EXPECT_DOUBLE_EQ(sample_size(d, rng), 30e3);
}

TEST(SampleSize, LognormalRespectsCap) {
  Rng rng(2);
  SizeDistribution d{SizeKind::lognormal_truncated, 225e3, 625e3, 1.5};
  for (int i = 0; i < 20000; ++i) {
    const double s = sample_size(d, rng);
    EXPECT_GT(s, 0.0);
    EXPECT_LE(s, 625e3);
  }
  SizeDistribution wide{SizeKind::lognormal_truncated, 225e3, 1e6, 1.5};
  for (int i = 0; i < 20000; ++i) EXPECT_LE(sample_size(wide, rng), 1e6);
}

TEST(SampleSize, EmpiricalMeanMatchesTruncatedMean) {
  Rng rng(3);
  SizeDistribution d{SizeKind::lognormal_truncated, 225e3, 625e3, 1.5};
  double sum = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) sum += sample_size(d, rng);
  const double expected = truncated_mean(d);
  EXPECT_NEAR(sum / n, expected, 0.05 * expected);
}

TEST(SampleSize, RejectsCapBelowMean) {
  SizeDistribution d{SizeKind::lognormal_truncated, 225e3, 100e3, 1.5};
  Rng rng(4);
  EXPECT_THROW(sample_size(d, rng), std::invalid_argument);
}

TEST(SampleSize, ReproducibleGivenSeed) {
  SizeDistribution d{SizeKind::lognormal_truncated, 225e3, 625e3, 1.5};
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) EXPECT_DOUBLE_EQ(sample_size(d, a), sample_size(d, b));
}

TEST(TruncatedMean, UncappedLognormalKeepsConfiguredMean) {
  SizeDistribution d{SizeKind::lognormal_truncated, 225e3, 1e12, 1.5};
  EXPECT_NEAR(truncated_mean(d), 225e3, 1.0);
  SizeDistribution f{SizeKind::fixed, 30e3, 0, 0};
  EXPECT_DOUBLE_EQ(truncated_mean(f), 30e3);
}

TEST(ClientSession, RequestRateIsClosedLoopApproximation) {
  ClientSession c;
  c.size_dist = SizeDistribution{SizeKind::fixed, 225e3, 0, 0};
  c.sleep_mean_s = 35.0;
  c.path_rate_bps = 1e6;  // transfer = 1.8 s
  EXPECT_NEAR(c.request_rate(), 1.0 / 36.8, 1e-9);
}

TEST(LdnsProfile, ValidatesClientListAndTtl) {
  LdnsProfile p;
  p.client_ids = {1, 2, 3};
  p.effective_ttl_s = 15;
  EXPECT_NO_THROW(p.validate());
  EXPECT_EQ(p.hidden_client_count(), 3u);
  p.client_ids.clear();
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.client_ids = {1};
  p.caching = true;
  p.effective_ttl_s = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace ite
