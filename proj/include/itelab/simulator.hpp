#pragma once

#include <cstdint>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "itelab/balancer.hpp"
#include "itelab/model.hpp"
#include "itelab/monitor.hpp"
#include "itelab/rng.hpp"
#include "itelab/scenario.hpp"
#include "itelab/ticks.hpp"
#include "itelab/trace.hpp"

namespace ite {

// One in-flight transfer in the fluid model: size drains linearly at `rate`
// between start_t and end_t, chunked on the w grid.
struct FlowState {
  std::int64_t flow_id = 0;
  std::int64_t client_id = 0;
  int link = 0;
  std::int64_t size_bytes = 0;
  double rate_bps = 0.0;
  Tick dns_decision_t = 0;
  Tick start_t = 0;
  Tick end_t = 0;
};

struct RunSummary {
  std::string name;
  double duration_s = 0.0;
  int ldns_count = 0;
  int client_count = 0;
  std::int64_t dns_requests = 0;
  std::int64_t flows = 0;
  std::int64_t total_bytes = 0;
  std::vector<std::int64_t> bytes_per_link;
  double bytes_per_dns_request = 0.0;
  double realized_request_rate = 0.0;  // connections per second per client
  double median_epsilon = 0.0;
};

struct RunOutput {
  std::vector<TraceRecord> trace;
  ErrorSeries eps;
  std::vector<BalancerDecision> decisions;
  RunSummary summary;
  std::vector<LdnsProfile> ldns;
  std::vector<ClientSession> clients;
  std::vector<int> client_slot;  // per-client index within its LDNS
};

namespace sim_detail {

struct Event {
  Tick t;
  std::uint8_t klass;  // 0 = flow activity, 1 = client wake; flow bytes
                       // stamped at a tick are visible to decisions at it
  std::uint64_t seq;
  enum class Type : std::uint8_t { flow_chunk, flow_end, client_wake } type;
  std::int32_t idx;
};

struct EventAfter {
  bool operator()(const Event& a, const Event& b) const {
    if (a.t != b.t) return a.t > b.t;
    if (a.klass != b.klass) return a.klass > b.klass;
    return a.seq > b.seq;
  }
};

struct SimLdns {
  bool caching = true;
  Tick effective_ttl = 0;
  TtlAssignment ttl;
  bool has_entry = false;
  int link = 0;
  Tick entry_t = 0;
  Tick expiry = 0;
};

struct SimClient {
  std::int64_t id = 0;
  int ldns = 0;
  int slot = 0;
  double rate_bps = 0.0;
  double rtt_s = 0.0;
  Tick delta = 0;
  Rng loop{0};
};

// Bytes transferred by τ relative to flow start, linear in time; exact at
// the endpoints so per-cell chunks sum to size_bytes.
inline std::int64_t cumulative_bytes(const FlowState& f, Tick tau) {
  if (tau <= f.start_t) return 0;
  if (tau >= f.end_t) return f.size_bytes;
  const __int128 num = static_cast<__int128>(f.size_bytes) * (tau - f.start_t);
  return static_cast<std::int64_t>(num / (f.end_t - f.start_t));
}

}  // namespace sim_detail

// Discrete-event run of one scenario: closed-loop clients behind caching
// LDNS servers, resolution via the configured balancer, fluid transfers
// chunked on the 100 ms grid. Deterministic for a given (scenario, seed):
// every random stream is keyed by (seed, role, entity), so the client
// timeline is identical across balancing policies and the comparison
// between policies is paired.
inline RunOutput run(const Scenario& sc) {
  sc.validate_or_throw();
  using namespace sim_detail;

  const Tick duration = sc.duration_ticks();
  const Tick w = from_seconds(sc.small_window_s);
  const int n_windows = static_cast<int>(std::llround(sc.mb_window_s / sc.small_window_s));
  const SizeDistribution size_dist = sc.size_distribution();
  const DelayModel delay = sc.delay_model();
  const std::int64_t cap_bytes =
      size_dist.kind == SizeKind::lognormal_truncated
          ? static_cast<std::int64_t>(std::llround(size_dist.truncation_cap_bytes))
          : INT64_MAX;

  RunOutput out;
  TtlPolicy ttl_policy(sc.ttl_config(), sc.seed);
  Balancer balancer(sc.policy, sc.links, sc.seed);
  std::vector<LinkMonitor> monitors;
  monitors.reserve(static_cast<std::size_t>(sc.links));
  for (int i = 0; i < sc.links; ++i) {
    monitors.emplace_back(i, w, n_windows, DirectionPolicy::both);
  }

  // Population. Entity streams are keyed by (ldns index, slot) so that a
  // prefix of the population is shared between scenarios that differ only
  // in ldns_count.
  std::vector<SimLdns> ldns(static_cast<std::size_t>(sc.ldns_count));
  std::vector<SimClient> clients;
  for (int i = 0; i < sc.ldns_count; ++i) {
    SimLdns& L = ldns[static_cast<std::size_t>(i)];
    L.ttl = ttl_policy.assignment_for(i);
    L.effective_ttl = from_seconds(L.ttl.effective_s);
    Rng cache_rng(mix_seed(sc.seed, "caching", static_cast<std::uint64_t>(i)));
    L.caching = !(cache_rng.uniform01() < sc.noncaching_fraction);

    Rng count_rng(mix_seed(sc.seed, "nclients", static_cast<std::uint64_t>(i)));
    int n_clients;
    if (sc.hidden_clients_kind == HiddenClientsKind::uniform) {
      n_clients = static_cast<int>(count_rng.uniform_int(sc.hidden_clients_min, sc.hidden_clients_max));
    } else {
      const double x = count_rng.pareto(1.0, sc.hidden_clients_pareto_shape);
      n_clients = static_cast<int>(std::min<double>(sc.hidden_clients_cap, std::floor(x)));
      n_clients = std::max(1, n_clients);
    }

    LdnsProfile prof;
    prof.id = i;
    prof.honors_ttl = !L.ttl.violator;
    prof.caching = L.caching;
    prof.effective_ttl_s = L.ttl.effective_s;
    for (int j = 0; j < n_clients; ++j) {
      SimClient c;
      c.id = static_cast<std::int64_t>(clients.size());
      c.ldns = i;
      c.slot = j;
      Rng path(mix_seed(sc.seed, "path", static_cast<std::uint64_t>(i),
                        static_cast<std::uint64_t>(j)));
      c.rate_bps = path.log_uniform(sc.path_rate_min_bps, sc.path_rate_max_bps);
      c.rtt_s = path.uniform(sc.path_rtt_min_s, sc.path_rtt_max_s);
      c.delta = from_seconds(delay.delta_s(c.rtt_s));
      c.loop = Rng(mix_seed(sc.seed, "loop", static_cast<std::uint64_t>(i),
                            static_cast<std::uint64_t>(j)));
      prof.client_ids.push_back(c.id);

      ClientSession session;
      session.id = c.id;
      session.ldns_id = i;
      session.size_dist = size_dist;
      session.sleep_mean_s = sc.sleep_mean_s;
      session.path_rtt_s = c.rtt_s;
      session.path_rate_bps = c.rate_bps;
      out.clients.push_back(session);
      out.client_slot.push_back(j);
      clients.push_back(std::move(c));
    }
    out.ldns.push_back(std::move(prof));
  }

  std::priority_queue<Event, std::vector<Event>, EventAfter> queue;
  std::uint64_t seq = 0;
  auto push = [&queue, &seq](Tick t, std::uint8_t klass, Event::Type type, std::int32_t idx) {
    queue.push(Event{t, klass, seq++, type, idx});
  };

  std::vector<FlowState> flows;
  std::vector<bool> flow_started;

  for (std::size_t c = 0; c < clients.size(); ++c) {
    const Tick wake = from_seconds(clients[c].loop.exponential(sc.sleep_mean_s));
    if (wake <= duration) push(wake, 1, Event::Type::client_wake, static_cast<std::int32_t>(c));
  }

  std::int64_t dns_requests = 0;
  std::vector<std::int64_t> bytes_per_link(static_cast<std::size_t>(sc.links), 0);

  auto emit_chunk = [&](std::int32_t fi, Tick tau) {
    FlowState& f = flows[static_cast<std::size_t>(fi)];
    if (!flow_started[static_cast<std::size_t>(fi)]) {
      flow_started[static_cast<std::size_t>(fi)] = true;
      out.trace.push_back({tau, RecordKind::flow_start, f.link,
                           out.clients[static_cast<std::size_t>(f.client_id)].ldns_id,
                           f.client_id, f.size_bytes});
    }
    const Tick boundary = (grid_cell(tau, w) + 1) * w;
    const Tick chunk_end = std::min(f.end_t, boundary);
    const std::int64_t b = cumulative_bytes(f, chunk_end) - cumulative_bytes(f, tau);
    if (b > 0) {
      out.trace.push_back({tau, RecordKind::bytes, f.link,
                           out.clients[static_cast<std::size_t>(f.client_id)].ldns_id,
                           f.client_id, b});
      monitors[static_cast<std::size_t>(f.link)].record(tau, b);
      bytes_per_link[static_cast<std::size_t>(f.link)] += b;
    }
    if (chunk_end < f.end_t) {
      push(chunk_end, 0, Event::Type::flow_chunk, fi);
    } else {
      push(f.end_t, 0, Event::Type::flow_end, fi);
    }
  };

  while (!queue.empty()) {
    const Event ev = queue.top();
    queue.pop();
    switch (ev.type) {
      case Event::Type::flow_chunk:
        emit_chunk(ev.idx, ev.t);
        break;

      case Event::Type::flow_end: {
        const FlowState& f = flows[static_cast<std::size_t>(ev.idx)];
        const SimClient& c = clients[static_cast<std::size_t>(f.client_id)];
        out.trace.push_back({ev.t, RecordKind::flow_end, f.link,
                             static_cast<std::int64_t>(c.ldns), f.client_id, 0});
        const Tick wake =
            ev.t + from_seconds(clients[static_cast<std::size_t>(f.client_id)].loop.exponential(
                       sc.sleep_mean_s));
        if (wake <= duration) {
          push(wake, 1, Event::Type::client_wake, static_cast<std::int32_t>(f.client_id));
        }
        break;
      }

      case Event::Type::client_wake: {
        SimClient& c = clients[static_cast<std::size_t>(ev.idx)];
        SimLdns& L = ldns[static_cast<std::size_t>(c.ldns)];
        const Tick t = ev.t;

        int link;
        Tick decision_t;
        const bool hit = L.caching && L.has_entry && t < L.expiry;
        if (hit) {
          link = L.link;
          decision_t = L.entry_t;
        } else {
          out.trace.push_back({t, RecordKind::dns_request, -1,
                               static_cast<std::int64_t>(c.ldns), -1, 0});
          ++dns_requests;
          BalancerDecision d;
          d.t = t;
          d.ldns_id = c.ldns;
          d.advertised_ttl_s = L.ttl.advertised_s;
          if (sc.policy == Policy::measurement_based) {
            d.link_loads_bps.reserve(monitors.size());
            for (auto& m : monitors) d.link_loads_bps.push_back(m.utilization_bps(t));
          }
          d.chosen_link = balancer.decide(d.link_loads_bps);
          link = d.chosen_link;
          decision_t = t;
          out.trace.push_back({t, RecordKind::dns_response, link,
                               static_cast<std::int64_t>(c.ldns), -1, 0});
          out.decisions.push_back(std::move(d));
          L.has_entry = true;
          L.link = link;
          L.entry_t = t;
          L.expiry = t + L.effective_ttl;
        }

        // Size draw then sleep draw at flow end keeps the per-client stream
        // order fixed, so the timeline is policy-independent.
        double sampled = sample_size(size_dist, c.loop);
        std::int64_t size = std::max<std::int64_t>(1, std::llround(sampled));
        size = std::min(size, cap_bytes);
        const double rate =
            sc.flow_rate_cap_bps > 0 ? std::min(c.rate_bps, sc.flow_rate_cap_bps) : c.rate_bps;
        FlowState f;
        f.flow_id = static_cast<std::int64_t>(flows.size());
        f.client_id = c.id;
        f.link = link;
        f.size_bytes = size;
        f.rate_bps = rate;
        f.dns_decision_t = decision_t;
        f.start_t = t + c.delta;
        f.end_t = f.start_t +
                  std::max<Tick>(1, std::llround(static_cast<double>(size) * 8.0 / rate *
                                                 static_cast<double>(kTicksPerSecond)));
        flows.push_back(f);
        flow_started.push_back(false);
        push(f.start_t, 0, Event::Type::flow_chunk, static_cast<std::int32_t>(flows.size() - 1));
        break;
      }
    }
  }

  out.eps = error_series(out.trace, sc.timescale_s, sc.eps_step_s, duration);

  RunSummary& s = out.summary;
  s.name = sc.name;
  s.duration_s = sc.duration_s;
  s.ldns_count = sc.ldns_count;
  s.client_count = static_cast<int>(clients.size());
  s.dns_requests = dns_requests;
  s.flows = static_cast<std::int64_t>(flows.size());
  s.bytes_per_link = bytes_per_link;
  for (const auto b : bytes_per_link) s.total_bytes += b;
  s.bytes_per_dns_request =
      dns_requests > 0 ? static_cast<double>(s.total_bytes) / static_cast<double>(dns_requests) : 0.0;
  s.realized_request_rate = static_cast<double>(s.flows) /
                            (sc.duration_s * static_cast<double>(std::max(1, s.client_count)));
  s.median_epsilon = out.eps.samples.empty() ? 0.0 : out.eps.median();
  return out;
}

inline void write_summary_csv(std::ostream& os, const RunSummary& s) {
  os << "key,value\n";
  os << "name," << s.name << '\n';
  char buf[64];
  auto emit = [&os, &buf](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    os << key << ',' << buf << '\n';
  };
  emit("duration_s", s.duration_s);
  os << "ldns_count," << s.ldns_count << '\n';
  os << "client_count," << s.client_count << '\n';
  os << "dns_requests," << s.dns_requests << '\n';
  os << "flows," << s.flows << '\n';
  os << "total_bytes," << s.total_bytes << '\n';
  for (std::size_t i = 0; i < s.bytes_per_link.size(); ++i) {
    os << "bytes_link_" << i << ',' << s.bytes_per_link[i] << '\n';
  }
  emit("bytes_per_dns_request", s.bytes_per_dns_request);
  emit("realized_request_rate", s.realized_request_rate);
  emit("median_epsilon", s.median_epsilon);
}

inline void write_summary_csv(const std::string& path, const RunSummary& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("summary: cannot open '" + path + "'");
  write_summary_csv(os, s);
}

}  // namespace ite
