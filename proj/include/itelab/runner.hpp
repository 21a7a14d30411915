#pragma once

#include "itelab/scenario.hpp"
#include "itelab/simulator.hpp"
#include "itelab/synthetic.hpp"

namespace ite {

inline CbrConfig cbr_config_from(const Scenario& sc) {
  CbrConfig cfg;
  cfg.flow_count = sc.cbr_flow_count;
  cfg.flow_size_bytes = static_cast<std::int64_t>(std::llround(sc.cbr_flow_size_bytes));
  cfg.flow_rate_bps = sc.cbr_flow_rate_bps;
  cfg.packet_bytes = sc.cbr_packet_bytes;
  cfg.arrival = sc.cbr_poisson_arrivals ? ArrivalKind::poisson : ArrivalKind::periodic;
  cfg.arrival_mean_gap_s = sc.cbr_arrival_mean_gap_s;
  cfg.links = sc.links;
  cfg.policy = sc.policy;
  cfg.mb_window_s = sc.mb_window_s;
  cfg.small_window_s = sc.small_window_s;
  cfg.seed = sc.seed;
  return cfg;
}

inline ParetoConfig pareto_config_from(const Scenario& sc) {
  ParetoConfig cfg;
  cfg.source_count = sc.pareto_source_count;
  cfg.shape = sc.pareto_shape;
  cfg.mean_gap_s = sc.pareto_mean_gap_s;
  cfg.packet_bytes = sc.pareto_packet_bytes;
  cfg.source_arrival_mean_gap_s = sc.pareto_source_arrival_mean_gap_s;
  cfg.duration_s = sc.duration_s;
  cfg.links = sc.links;
  cfg.policy = sc.policy;
  cfg.mb_window_s = sc.mb_window_s;
  cfg.small_window_s = sc.small_window_s;
  cfg.seed = sc.seed;
  return cfg;
}

// Runs whichever traffic model the scenario selects. The synthetic models
// produce trace + error series only (no DNS decisions to log).
inline RunOutput run_scenario(const Scenario& sc) {
  if (sc.traffic_model == TrafficModel::closed_loop) return run(sc);
  sc.validate_or_throw();

  RunOutput out;
  Tick span = sc.duration_ticks();
  if (sc.traffic_model == TrafficModel::cbr) {
    out.trace = synthetic_cbr(cbr_config_from(sc));
    span = out.trace.empty() ? 0 : out.trace.back().t;  // flows drain fully
    out.summary.flows = sc.cbr_flow_count;
  } else {
    out.trace = synthetic_pareto(pareto_config_from(sc));
    out.summary.flows = sc.pareto_source_count;
  }
  out.eps = error_series(out.trace, sc.timescale_s, sc.eps_step_s, span);

  RunSummary& s = out.summary;
  s.name = sc.name;
  s.duration_s = to_seconds(span);
  s.bytes_per_link.assign(static_cast<std::size_t>(sc.links), 0);
  for (const TraceRecord& r : out.trace) {
    if (r.kind == RecordKind::bytes && r.link >= 0) {
      s.bytes_per_link[static_cast<std::size_t>(r.link)] += r.bytes;
      s.total_bytes += r.bytes;
    }
  }
  s.median_epsilon = out.eps.samples.empty() ? 0.0 : out.eps.median();
  return out;
}

}  // namespace ite
