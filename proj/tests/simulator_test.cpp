#include "itelab/simulator.hpp"

#include <gtest/gtest.h>

#include <map>
#include <sstream>

namespace ite {
namespace {

Scenario small_default() {
  Scenario sc;
  sc.duration_s = 120;
  sc.ldns_count = 12;
  sc.seed = 5;
  return sc;
}

TEST(Simulator, DeterministicTraceForScenarioAndSeed) {
  const Scenario sc = small_default();
  const RunOutput a = run(sc);
  const RunOutput b = run(sc);
  ASSERT_EQ(a.trace.size(), b.trace.size());
  EXPECT_EQ(a.trace, b.trace);
  std::ostringstream csv_a, csv_b;
  write_trace_csv(csv_a, a.trace);
  write_trace_csv(csv_b, b.trace);
  EXPECT_EQ(csv_a.str(), csv_b.str());

  Scenario other = sc;
  other.seed = 6;
  EXPECT_NE(run(other).trace, a.trace);
}

TEST(Simulator, HugeTtlCacheAbsorbsAllRepeats) {
  Scenario sc;
  sc.duration_s = 300;
  sc.ldns_count = 1;
  sc.hidden_clients_min = sc.hidden_clients_max = 1;
  sc.violator_fraction = 0;
  sc.nominal_ttl_s = 1e6;
  sc.sleep_mean_s = 5;
  sc.size_kind = SizeKind::fixed;
  sc.size_mean_bytes = 50e3;
  sc.seed = 3;
  const RunOutput out = run(sc);
  EXPECT_EQ(out.summary.dns_requests, 1);
  EXPECT_GT(out.summary.flows, 10);
}

TEST(Simulator, HiddenClientsShareTheirLdnsCache) {
  Scenario sc;
  sc.duration_s = 200;
  sc.ldns_count = 1;
  sc.hidden_clients_min = sc.hidden_clients_max = 4;
  sc.violator_fraction = 0;
  sc.nominal_ttl_s = 1e6;
  sc.sleep_mean_s = 5;
  sc.seed = 4;
  const RunOutput out = run(sc);
  EXPECT_EQ(out.summary.client_count, 4);
  EXPECT_EQ(out.summary.dns_requests, 1);  // first wake resolves, rest hit
}

TEST(Simulator, NonCachingAlternationBalancesPerfectly) {
  // Two identical clients on distinct non-caching LDNS, back-to-back fixed
  // transfers, RR: the global rotation pins one client per link, so loads
  // match after warm-up.
  Scenario sc;
  sc.duration_s = 200;
  sc.ldns_count = 2;
  sc.hidden_clients_min = sc.hidden_clients_max = 1;
  sc.noncaching_fraction = 1.0;
  sc.sleep_mean_s = 0.001;
  sc.size_kind = SizeKind::fixed;
  sc.size_mean_bytes = 125e3;  // 1 s at 1 Mbps
  sc.path_rate_min_bps = sc.path_rate_max_bps = 1e6;
  sc.delta_kind = DelayModel::Kind::fixed;
  sc.delta_fixed_s = 0;
  sc.policy = Policy::round_robin;
  sc.seed = 7;
  const RunOutput out = run(sc);
  ASSERT_FALSE(out.eps.samples.empty());
  EXPECT_LT(out.eps.median(), 0.02);
  // Every wake is a cache miss.
  std::int64_t starts = 0;
  for (const auto& r : out.trace) starts += r.kind == RecordKind::flow_start;
  EXPECT_EQ(out.summary.dns_requests, starts);
}

TEST(Simulator, MoreLdnsServersBalanceBetter) {
  Scenario small = small_default();
  small.ldns_count = 10;
  small.duration_s = 300;
  Scenario large = small;
  large.ldns_count = 45;
  EXPECT_LT(run(large).eps.median(), run(small).eps.median());
}

TEST(Simulator, ByteConservationPerRunAndPerLink) {
  const RunOutput out = run(small_default());
  std::map<int, std::int64_t> flow_bytes_by_link, byte_records_by_link;
  std::int64_t sampled_total = 0, bytes_total = 0;
  for (const auto& r : out.trace) {
    if (r.kind == RecordKind::flow_start) {
      sampled_total += r.bytes;
      flow_bytes_by_link[r.link] += r.bytes;
    } else if (r.kind == RecordKind::bytes) {
      bytes_total += r.bytes;
      byte_records_by_link[r.link] += r.bytes;
    }
  }
  EXPECT_EQ(sampled_total, bytes_total);
  EXPECT_EQ(flow_bytes_by_link, byte_records_by_link);
  EXPECT_EQ(out.summary.total_bytes, bytes_total);
}

TEST(Simulator, CausalityAndClosedLoop) {
  const RunOutput out = run(small_default());
  std::map<std::int64_t, Tick> last_response_per_ldns;
  std::map<std::int64_t, int> open_flows_per_client;
  Tick prev = 0;
  for (const auto& r : out.trace) {
    EXPECT_GE(r.t, prev);
    prev = r.t;
    switch (r.kind) {
      case RecordKind::dns_response:
        last_response_per_ldns[r.ldns_id] = r.t;
        break;
      case RecordKind::flow_start: {
        // Traffic never precedes the decision that routed it.
        const auto it = last_response_per_ldns.find(r.ldns_id);
        ASSERT_NE(it, last_response_per_ldns.end());
        EXPECT_GE(r.t, it->second);
        EXPECT_EQ(open_flows_per_client[r.client_id], 0);  // closed loop
        open_flows_per_client[r.client_id] = 1;
        break;
      }
      case RecordKind::flow_end:
        EXPECT_EQ(open_flows_per_client[r.client_id], 1);
        open_flows_per_client[r.client_id] = 0;
        break;
      default:
        break;
    }
  }
}

TEST(Simulator, CacheLawHonoringGapsRespectTtl) {
  Scenario sc = small_default();
  sc.violator_fraction = 0;  // everyone honors the nominal 15 s
  sc.duration_s = 300;
  const RunOutput out = run(sc);
  const Tick ttl = from_seconds(sc.nominal_ttl_s);
  std::map<std::int64_t, Tick> last_request;
  for (const auto& r : out.trace) {
    if (r.kind != RecordKind::dns_request) continue;
    const auto it = last_request.find(r.ldns_id);
    if (it != last_request.end()) {
      EXPECT_GE(r.t - it->second, ttl);
    }
    last_request[r.ldns_id] = r.t;
  }
}

TEST(Simulator, MbDecisionsCarryLoadSnapshots) {
  Scenario sc = small_default();
  sc.policy = Policy::measurement_based;
  sc.mb_window_s = 1.0;
  const RunOutput out = run(sc);
  ASSERT_FALSE(out.decisions.empty());
  for (const auto& d : out.decisions) {
    ASSERT_EQ(d.link_loads_bps.size(), 2u);
    EXPECT_LE(d.link_loads_bps[d.chosen_link],
              d.link_loads_bps[1 - d.chosen_link]);
    EXPECT_GT(d.advertised_ttl_s, 0);
  }

  Scenario rr = sc;
  rr.policy = Policy::round_robin;
  for (const auto& d : run(rr).decisions) EXPECT_TRUE(d.link_loads_bps.empty());
}

TEST(Simulator, InvalidScenarioListsViolations) {
  Scenario sc;
  sc.duration_s = -5;
  sc.links = 0;
  try {
    run(sc);
    FAIL() << "expected validation failure";
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("duration_s"), std::string::npos);
    EXPECT_NE(msg.find("links"), std::string::npos);
  }
}

TEST(Simulator, TraceRoundTripsThroughCsv) {
  const RunOutput out = run(small_default());
  std::ostringstream os;
  write_trace_csv(os, out.trace);
  std::istringstream is(os.str());
  const auto back = read_trace_csv(is);
  EXPECT_EQ(back, out.trace);
}

TEST(Simulator, SummaryBytesPerRequestMatchesTrace) {
  const RunOutput out = run(small_default());
  EXPECT_GT(out.summary.dns_requests, 0);
  EXPECT_NEAR(out.summary.bytes_per_dns_request,
              static_cast<double>(out.summary.total_bytes) /
                  static_cast<double>(out.summary.dns_requests),
              1e-9);
  EXPECT_EQ(out.summary.client_count, static_cast<int>(out.clients.size()));
}

}  // namespace
}  // namespace ite
