#include "itelab/replay.hpp"

#include <gtest/gtest.h>

#include <vector>

#include "itelab/simulator.hpp"

namespace ite {
namespace {

// Workload where the latest-decision replay rule coincides exactly with the
// simulator's per-flow routing: one client per LDNS and no caching, so a
// flow can never straddle a later decision of its own LDNS.
Scenario straddle_free_mb_scenario() {
  Scenario sc;
  sc.duration_s = 180;
  sc.ldns_count = 20;
  sc.hidden_clients_min = sc.hidden_clients_max = 1;
  sc.noncaching_fraction = 1.0;
  sc.sleep_mean_s = 8;
  sc.policy = Policy::measurement_based;
  sc.mb_window_s = 10.0;
  sc.seed = 23;
  return sc;
}

TEST(Replay, ReproducesOriginalAssignmentWithMatchingWindow) {
  const Scenario sc = straddle_free_mb_scenario();
  const RunOutput out = run(sc);
  ASSERT_FALSE(out.decisions.empty());

  ReplayConfig cfg;
  cfg.window_s = sc.mb_window_s;
  cfg.small_window_s = sc.small_window_s;
  cfg.span = sc.duration_ticks();
  const ReplayResult res = replay_mb(out.trace, cfg);

  ASSERT_EQ(res.decisions.size(), out.decisions.size());
  for (std::size_t i = 0; i < res.decisions.size(); ++i) {
    EXPECT_EQ(res.decisions[i].chosen_link, out.decisions[i].chosen_link) << "decision " << i;
    EXPECT_EQ(res.decisions[i].ldns_id, out.decisions[i].ldns_id);
    EXPECT_EQ(res.decisions[i].t, out.decisions[i].t);
  }
}

TEST(Replay, MostDecisionsMatchOnDefaultCachingWorkload) {
  // With caching and hidden clients a flow tail can straddle its LDNS's
  // next decision; the replay reassigns those tails, so agreement is close
  // but not guaranteed exact.
  Scenario sc;
  sc.duration_s = 240;
  sc.ldns_count = 20;
  sc.policy = Policy::measurement_based;
  sc.mb_window_s = 10.0;
  sc.seed = 29;
  const RunOutput out = run(sc);
  ReplayConfig cfg;
  cfg.window_s = sc.mb_window_s;
  cfg.span = sc.duration_ticks();
  const ReplayResult res = replay_mb(out.trace, cfg);
  ASSERT_EQ(res.decisions.size(), out.decisions.size());
  std::size_t agree = 0;
  for (std::size_t i = 0; i < res.decisions.size(); ++i) {
    agree += res.decisions[i].chosen_link == out.decisions[i].chosen_link;
  }
  EXPECT_GE(static_cast<double>(agree) / static_cast<double>(res.decisions.size()), 0.95);
}

// Hand-built noiseless CBR-style log: constant per-LDNS byte streams with a
// dns_request at each stream start.
std::vector<TraceRecord> cbr_log_with_decisions(int ldns_count, Tick stream_len) {
  std::vector<TraceRecord> log;
  const Tick w = kDefaultSmallWindow;
  std::vector<std::pair<Tick, Tick>> spans;
  for (int i = 0; i < ldns_count; ++i) {
    const Tick start = i * 7 * w;
    spans.emplace_back(start, start + stream_len);
  }
  Tick span_end = 0;
  for (const auto& [s, e] : spans) span_end = std::max(span_end, e);
  for (Tick t = 0; t <= span_end; t += w) {
    for (int i = 0; i < ldns_count; ++i) {
      if (t == spans[static_cast<std::size_t>(i)].first) {
        log.push_back({t, RecordKind::dns_request, -1, i, -1, 0});
      }
      if (t >= spans[static_cast<std::size_t>(i)].first &&
          t < spans[static_cast<std::size_t>(i)].second) {
        log.push_back({t, RecordKind::bytes, 0, i, i, 12'500});
      }
    }
  }
  return log;
}

// Independent greedy oracle for W = w: at each decision, pick the link with
// the fewest bytes in the current grid cell of the oracle's own assignment,
// rotating a cursor through exact ties.
std::vector<int> greedy_oracle(const std::vector<TraceRecord>& log, int links) {
  std::vector<int> out;
  std::vector<std::pair<Tick, std::int64_t>> events[8];  // (t, bytes) per link
  std::vector<int> assigned(64, -1);
  int cursor = 0;
  const Tick w = kDefaultSmallWindow;
  for (const auto& r : log) {
    if (r.kind == RecordKind::dns_request) {
      const Tick cell = grid_cell(r.t, w);
      std::vector<double> load(static_cast<std::size_t>(links), 0);
      for (int l = 0; l < links; ++l) {
        for (const auto& [t, b] : events[l]) {
          if (grid_cell(t, w) == cell) load[static_cast<std::size_t>(l)] += static_cast<double>(b);
        }
      }
      double best = load[0];
      for (int l = 1; l < links; ++l) best = std::min(best, load[static_cast<std::size_t>(l)]);
      int tied = 0;
      for (int l = 0; l < links; ++l) tied += load[static_cast<std::size_t>(l)] == best;
      int chosen = -1;
      if (tied == 1) {
        for (int l = 0; l < links; ++l) {
          if (load[static_cast<std::size_t>(l)] == best) chosen = l;
        }
      } else {
        for (int k = 0; k < links; ++k) {
          const int l = (cursor + k) % links;
          if (load[static_cast<std::size_t>(l)] == best) {
            chosen = l;
            cursor = (l + 1) % links;
            break;
          }
        }
      }
      assigned[static_cast<std::size_t>(r.ldns_id)] = chosen;
      out.push_back(chosen);
    } else if (r.kind == RecordKind::bytes) {
      const int l = assigned[static_cast<std::size_t>(r.ldns_id)] >= 0
                        ? assigned[static_cast<std::size_t>(r.ldns_id)]
                        : r.link;
      events[l].emplace_back(r.t, r.bytes);
    }
  }
  return out;
}

TEST(Replay, SmallestWindowMatchesGreedyOracleOnNoiselessCbr) {
  const auto log = cbr_log_with_decisions(40, 60 * kDefaultSmallWindow);
  ReplayConfig cfg;
  cfg.window_s = 0.1;
  cfg.timescale_s = 1.0;
  const ReplayResult res = replay_mb(log, cfg);
  const std::vector<int> oracle = greedy_oracle(log, 2);
  ASSERT_EQ(res.decisions.size(), oracle.size());
  ASSERT_LE(oracle.size(), 100u);
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    EXPECT_EQ(res.decisions[i].chosen_link, oracle[i]) << "decision " << i;
  }
}

TEST(Replay, RequiresLdnsAttribution) {
  std::vector<TraceRecord> log = {{0, RecordKind::bytes, 0, -1, 0, 100}};
  ReplayConfig cfg;
  EXPECT_THROW(replay_mb(log, cfg), std::invalid_argument);

  std::vector<TraceRecord> log2 = {{0, RecordKind::dns_request, -1, -1, -1, 0}};
  EXPECT_THROW(replay_mb(log2, cfg), std::invalid_argument);
}

TEST(Replay, ValidatesWindowMultiple) {
  std::vector<TraceRecord> log;
  ReplayConfig cfg;
  cfg.window_s = 0.25;
  EXPECT_THROW(replay_mb(log, cfg), std::invalid_argument);
}

TEST(Replay, BytesBeforeFirstDecisionKeepOriginalLink) {
  std::vector<TraceRecord> log = {
      {0, RecordKind::bytes, 1, 5, 5, 1000},
      {kDefaultSmallWindow / 2, RecordKind::dns_request, -1, 5, -1, 0},
  };
  ReplayConfig cfg;
  cfg.window_s = 0.1;
  const ReplayResult res = replay_mb(log, cfg);
  EXPECT_EQ(res.bytes_per_link[1], 1000);
  ASSERT_EQ(res.decisions.size(), 1u);
  EXPECT_EQ(res.decisions[0].chosen_link, 0);  // link 1 carries the early bytes
}

}  // namespace
}  // namespace ite
