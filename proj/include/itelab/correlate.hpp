#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "itelab/analysis.hpp"
#include "itelab/scenario.hpp"
#include "itelab/simulator.hpp"

namespace ite {

// Deterministic addressing plan for the correlation logs. Each LDNS owns a
// /24 and its clients live in a *different* /24 mapped to the same origin
// AS (the real-world case the AS-origin rule exists for). When
// correlation_shared_as_every = N, every Nth LDNS shares its AS with its
// predecessor, which makes all of both servers' clients ambiguous under the
// association rule.
inline std::uint32_t ldns_address(int ldns_index) {
  return 0x0A000000u | ((static_cast<std::uint32_t>(ldns_index) & 0x3FFFu) << 8) | 1u;
}

inline std::uint32_t client_address(int ldns_index, int slot) {
  return 0x0A800000u | ((static_cast<std::uint32_t>(ldns_index) & 0x3FFFu) << 8) |
         (2u + static_cast<std::uint32_t>(slot));
}

inline std::uint32_t origin_as_for_ldns(int ldns_index, int shared_as_every) {
  int group = ldns_index;
  if (shared_as_every > 0 && ldns_index > 0 && ldns_index % shared_as_every == shared_as_every - 1) {
    group = ldns_index - 1;
  }
  return 64500u + static_cast<std::uint32_t>(group);
}

struct GroundTruthEntry {
  Tick t = 0;
  std::uint32_t client_addr = 0;
  std::uint32_t ldns_addr = 0;
};

struct CorrelationLogs {
  std::vector<DnsLogEntry> dns;
  std::vector<FlowLogEntry> flows;
  std::vector<PrefixEntry> prefixes;
  std::vector<GroundTruthEntry> truth;
};

inline constexpr std::string_view kCorrelationQname = "svc.itelab.test.";

inline CorrelationLogs make_correlation_logs(const Scenario& sc, const RunOutput& out) {
  CorrelationLogs logs;
  for (int i = 0; i < sc.ldns_count; ++i) {
    const std::uint32_t asn = origin_as_for_ldns(i, sc.correlation_shared_as_every);
    logs.prefixes.push_back({PrefixTable::mask(ldns_address(i), 24), 24, asn});
    logs.prefixes.push_back({PrefixTable::mask(client_address(i, 0), 24), 24, asn});
  }
  for (const TraceRecord& r : out.trace) {
    if (r.kind == RecordKind::dns_request) {
      logs.dns.push_back({r.t, ldns_address(static_cast<int>(r.ldns_id)),
                          std::string(kCorrelationQname)});
    } else if (r.kind == RecordKind::flow_start) {
      const int slot = out.client_slot[static_cast<std::size_t>(r.client_id)];
      const std::uint32_t caddr = client_address(static_cast<int>(r.ldns_id), slot);
      logs.flows.push_back({r.t, caddr, r.bytes});
      logs.truth.push_back({r.t, caddr, ldns_address(static_cast<int>(r.ldns_id))});
    }
  }
  return logs;
}

inline void write_dns_log_csv(std::ostream& os, std::span<const DnsLogEntry> log) {
  os << kDnsLogHeader << '\n';
  for (const auto& e : log) {
    os << format_seconds(e.t) << ',' << format_ipv4(e.ldns_addr) << ',' << e.qname << '\n';
  }
}

inline void write_flow_log_csv(std::ostream& os, std::span<const FlowLogEntry> log) {
  os << kFlowLogHeader << '\n';
  for (const auto& e : log) {
    os << format_seconds(e.t) << ',' << format_ipv4(e.client_addr) << ',' << e.bytes << '\n';
  }
}

inline void write_prefix_table(std::ostream& os, std::span<const PrefixEntry> entries) {
  for (const auto& e : entries) {
    os << format_ipv4(e.prefix) << '/' << e.length << ',' << e.origin_as << '\n';
  }
}

inline constexpr std::string_view kTruthHeader = "t,client_addr,ldns_addr";

inline void write_truth_csv(std::ostream& os, std::span<const GroundTruthEntry> truth) {
  os << kTruthHeader << '\n';
  for (const auto& e : truth) {
    os << format_seconds(e.t) << ',' << format_ipv4(e.client_addr) << ','
       << format_ipv4(e.ldns_addr) << '\n';
  }
}

inline std::vector<GroundTruthEntry> read_truth_csv(std::istream& is) {
  std::vector<GroundTruthEntry> out;
  std::string line;
  if (!std::getline(is, line) || line != kTruthHeader) {
    throw std::invalid_argument("truth log: missing '" + std::string(kTruthHeader) + "' header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 3) throw std::invalid_argument("truth log: expected 3 fields");
    out.push_back({detail::parse_time(f[0]), parse_ipv4(f[1]), parse_ipv4(f[2])});
  }
  return out;
}

template <typename WriteFn>
inline void write_file(const std::string& path, WriteFn&& fn) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open '" + path + "' for writing");
  fn(os);
}

}  // namespace ite
