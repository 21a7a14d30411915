#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "itelab/balancer.hpp"
#include "itelab/monitor.hpp"
#include "itelab/ticks.hpp"
#include "itelab/trace.hpp"

namespace ite {

struct ReplayConfig {
  double window_s = 10.0;       // hypothetical MB window W
  double small_window_s = 0.1;  // grid the log's byte records live on
  double timescale_s = 20.0;    // I for the output error series
  double step_s = 1.0;
  int links = 2;
  Tick span = -1;  // -1 = last record time
};

struct ReplayResult {
  ErrorSeries eps;
  std::vector<BalancerDecision> decisions;
  std::vector<std::int64_t> bytes_per_link;
};

// Re-runs a hypothetical MB balancer with window W over a recorded trace:
// at each LDNS's dns_request instants it decides from monitors built over
// the *reassigned* traffic, and every byte an LDNS contributes between two
// of its decisions follows the latest one. Bytes seen before an LDNS's
// first replayed decision keep their original link.
inline ReplayResult replay_mb(std::span<const TraceRecord> log, const ReplayConfig& cfg) {
  const Tick w = from_seconds(cfg.small_window_s);
  const double ratio = cfg.window_s / cfg.small_window_s;
  const auto n = std::llround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9) {
    throw std::invalid_argument("replay: W must be a positive multiple of the small window");
  }
  if (cfg.links < 2) throw std::invalid_argument("replay: need >= 2 links");

  Balancer balancer(Policy::measurement_based, cfg.links);
  std::vector<LinkMonitor> monitors;
  for (int i = 0; i < cfg.links; ++i) monitors.emplace_back(i, w, static_cast<int>(n));

  std::unordered_map<std::int64_t, int> assigned;
  std::vector<TraceRecord> reassigned;
  ReplayResult out;
  out.bytes_per_link.assign(static_cast<std::size_t>(cfg.links), 0);

  Tick prev = INT64_MIN;
  std::vector<double> loads(static_cast<std::size_t>(cfg.links));
  for (const TraceRecord& r : log) {
    if (r.t < prev) throw std::invalid_argument("replay: trace not time-ordered");
    prev = r.t;
    switch (r.kind) {
      case RecordKind::dns_request: {
        if (r.ldns_id < 0) {
          throw std::invalid_argument("replay: dns_request without LDNS attribution");
        }
        for (int i = 0; i < cfg.links; ++i) {
          loads[static_cast<std::size_t>(i)] =
              monitors[static_cast<std::size_t>(i)].utilization_bps(r.t);
        }
        BalancerDecision d;
        d.t = r.t;
        d.ldns_id = r.ldns_id;
        d.link_loads_bps = loads;
        d.chosen_link = balancer.decide(loads);
        assigned[r.ldns_id] = d.chosen_link;
        out.decisions.push_back(std::move(d));
        break;
      }
      case RecordKind::bytes: {
        if (r.ldns_id < 0) {
          throw std::invalid_argument("replay: byte record without LDNS attribution");
        }
        int link;
        const auto it = assigned.find(r.ldns_id);
        if (it != assigned.end()) {
          link = it->second;
        } else if (r.link >= 0 && r.link < cfg.links) {
          link = r.link;
        } else {
          throw std::invalid_argument("replay: bytes precede any decision and carry no link");
        }
        monitors[static_cast<std::size_t>(link)].record(r.t, r.bytes);
        out.bytes_per_link[static_cast<std::size_t>(link)] += r.bytes;
        reassigned.push_back({r.t, RecordKind::bytes, link, r.ldns_id, r.client_id, r.bytes});
        break;
      }
      default:
        break;
    }
  }

  out.eps = error_series(reassigned, cfg.timescale_s, cfg.step_s, cfg.span);
  return out;
}

}  // namespace ite
