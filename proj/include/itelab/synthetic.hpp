#pragma once

#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "itelab/balancer.hpp"
#include "itelab/monitor.hpp"
#include "itelab/rng.hpp"
#include "itelab/ticks.hpp"
#include "itelab/trace.hpp"

namespace ite {

enum class ArrivalKind : std::uint8_t { periodic, poisson };

// Constant-bit-rate traffic: every flow has the same size and rate and
// transmits fixed-size packets strictly periodically; the only variability
// in the aggregate is flow start/finish churn. Each flow is routed once, at
// its arrival, by the configured policy.
struct CbrConfig {
  int flow_count = 200;
  std::int64_t flow_size_bytes = 1'000'000;
  double flow_rate_bps = 2e6;
  std::int64_t packet_bytes = 1500;
  ArrivalKind arrival = ArrivalKind::poisson;
  double arrival_mean_gap_s = 0.5;
  int links = 2;
  Policy policy = Policy::measurement_based;
  double mb_window_s = 0.1;
  double small_window_s = 0.1;
  std::uint64_t seed = 1;
};

// Aggregate of Pareto renewal processes: each source emits fixed-size
// packets with i.i.d. Pareto inter-arrival gaps and never finishes, so the
// log carries byte records only (no flow churn). Sources appear over time
// and are routed once each, at their start.
struct ParetoConfig {
  int source_count = 24;
  double shape = 1.5;  // alpha > 1 so the mean gap is finite
  double mean_gap_s = 0.02;
  std::int64_t packet_bytes = 1500;
  double source_arrival_mean_gap_s = 10.0;
  double duration_s = 300.0;
  int links = 2;
  Policy policy = Policy::measurement_based;
  double mb_window_s = 1.0;
  double small_window_s = 0.1;
  std::uint64_t seed = 1;
};

namespace synthetic_detail {

struct Event {
  Tick t;
  std::uint8_t klass;  // 0 = packet, 1 = flow/source arrival
  std::uint64_t seq;
  std::int32_t idx;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    if (a.klass != b.klass) return a.klass > b.klass;
    return a.seq > b.seq;
  }
};

inline int window_count(double W_s, double w_s) {
  const double ratio = W_s / w_s;
  const auto n = std::llround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument("synthetic: window must be a positive multiple of the small window");
  }
  return static_cast<int>(n);
}

}  // namespace synthetic_detail

inline std::vector<TraceRecord> synthetic_cbr(const CbrConfig& cfg) {
  if (cfg.flow_count < 1 || cfg.flow_size_bytes <= 0 || cfg.packet_bytes <= 0 ||
      !(cfg.flow_rate_bps > 0) || !(cfg.arrival_mean_gap_s > 0)) {
    throw std::invalid_argument("synthetic_cbr: sizes, rates and gaps must be > 0");
  }
  using namespace synthetic_detail;
  const Tick w = from_seconds(cfg.small_window_s);
  const int n = window_count(cfg.mb_window_s, cfg.small_window_s);
  Balancer balancer(cfg.policy, cfg.links, cfg.seed);
  std::vector<LinkMonitor> monitors;
  for (int i = 0; i < cfg.links; ++i) monitors.emplace_back(i, w, n);

  Rng arrivals(mix_seed(cfg.seed, "cbr-arrivals"));
  const Tick period = std::max<Tick>(
      1, std::llround(static_cast<double>(cfg.packet_bytes) * 8.0 / cfg.flow_rate_bps *
                      static_cast<double>(kTicksPerSecond)));

  struct Flow {
    int link = 0;
    Tick next_packet = 0;
    std::int64_t remaining = 0;
  };
  std::vector<Flow> flows(static_cast<std::size_t>(cfg.flow_count));

  std::priority_queue<Event, std::vector<Event>, EventAfter> queue;
  std::uint64_t seq = 0;
  Tick at = 0;
  for (int i = 0; i < cfg.flow_count; ++i) {
    if (i > 0) {
      const double gap = cfg.arrival == ArrivalKind::periodic
                             ? cfg.arrival_mean_gap_s
                             : arrivals.exponential(cfg.arrival_mean_gap_s);
      at += std::max<Tick>(1, from_seconds(gap));
    }
    queue.push(Event{at, 1, seq++, i});
  }

  std::vector<TraceRecord> log;
  while (!queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    Flow& f = flows[static_cast<std::size_t>(ev.idx)];
    if (ev.klass == 1) {
      std::vector<double> loads;
      if (cfg.policy == Policy::measurement_based) {
        loads.reserve(monitors.size());
        for (auto& m : monitors) loads.push_back(m.utilization_bps(ev.t));
      }
      f.link = balancer.decide(loads);
      f.remaining = cfg.flow_size_bytes;
      f.next_packet = ev.t;
      log.push_back({ev.t, RecordKind::flow_start, f.link, ev.idx, ev.idx, cfg.flow_size_bytes});
      queue.push(Event{ev.t, 0, seq++, ev.idx});
    } else {
      const std::int64_t b = std::min(cfg.packet_bytes, f.remaining);
      log.push_back({ev.t, RecordKind::bytes, f.link, ev.idx, ev.idx, b});
      monitors[static_cast<std::size_t>(f.link)].record(ev.t, b);
      f.remaining -= b;
      if (f.remaining > 0) {
        queue.push(Event{ev.t + period, 0, seq++, ev.idx});
      } else {
        log.push_back({ev.t, RecordKind::flow_end, f.link, ev.idx, ev.idx, 0});
      }
    }
  }
  return log;
}

inline std::vector<TraceRecord> synthetic_pareto(const ParetoConfig& cfg) {
  if (cfg.shape <= 1.0) {
    throw std::invalid_argument("synthetic_pareto: shape must be > 1 for a finite mean gap");
  }
  if (cfg.source_count < 1 || cfg.packet_bytes <= 0 || !(cfg.mean_gap_s > 0) ||
      !(cfg.duration_s > 0) || !(cfg.source_arrival_mean_gap_s > 0)) {
    throw std::invalid_argument("synthetic_pareto: counts, sizes and gaps must be > 0");
  }
  using namespace synthetic_detail;
  const Tick w = from_seconds(cfg.small_window_s);
  const int n = window_count(cfg.mb_window_s, cfg.small_window_s);
  const Tick duration = from_seconds(cfg.duration_s);
  Balancer balancer(cfg.policy, cfg.links, cfg.seed);
  std::vector<LinkMonitor> monitors;
  for (int i = 0; i < cfg.links; ++i) monitors.emplace_back(i, w, n);

  // Pareto minimum for the requested mean: E[gap] = xm * a/(a-1).
  const double xm = cfg.mean_gap_s * (cfg.shape - 1.0) / cfg.shape;

  struct Source {
    int link = 0;
    Rng gaps;
    Source() : gaps(0) {}
  };
  std::vector<Source> sources(static_cast<std::size_t>(cfg.source_count));
  for (int i = 0; i < cfg.source_count; ++i) {
    sources[static_cast<std::size_t>(i)].gaps =
        Rng(mix_seed(cfg.seed, "pareto-gaps", static_cast<std::uint64_t>(i)));
  }

  std::priority_queue<Event, std::vector<Event>, EventAfter> queue;
  std::uint64_t seq = 0;
  Rng arrivals(mix_seed(cfg.seed, "pareto-arrivals"));
  Tick at = 0;
  for (int i = 0; i < cfg.source_count; ++i) {
    if (i > 0) at += std::max<Tick>(1, from_seconds(arrivals.exponential(cfg.source_arrival_mean_gap_s)));
    if (at <= duration) queue.push(Event{at, 1, seq++, i});
  }

  std::vector<TraceRecord> log;
  while (!queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    if (ev.t > duration) continue;
    Source& s = sources[static_cast<std::size_t>(ev.idx)];
    if (ev.klass == 1) {
      std::vector<double> loads;
      if (cfg.policy == Policy::measurement_based) {
        loads.reserve(monitors.size());
        for (auto& m : monitors) loads.push_back(m.utilization_bps(ev.t));
      }
      s.link = balancer.decide(loads);
      queue.push(Event{ev.t, 0, seq++, ev.idx});
    } else {
      log.push_back({ev.t, RecordKind::bytes, s.link, ev.idx, ev.idx, cfg.packet_bytes});
      monitors[static_cast<std::size_t>(s.link)].record(ev.t, cfg.packet_bytes);
      const Tick gap = std::max<Tick>(1, from_seconds(s.gaps.pareto(xm, cfg.shape)));
      queue.push(Event{ev.t + gap, 0, seq++, ev.idx});
    }
  }
  return log;
}

}  // namespace ite
