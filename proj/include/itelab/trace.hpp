#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "itelab/ticks.hpp"

namespace ite {

enum class RecordKind : std::uint8_t {
  dns_request,
  dns_response,
  flow_start,
  bytes,
  flow_end,
};

constexpr std::string_view kind_name(RecordKind k) {
  switch (k) {
    case RecordKind::dns_request: return "dns_request";
    case RecordKind::dns_response: return "dns_response";
    case RecordKind::flow_start: return "flow_start";
    case RecordKind::bytes: return "bytes";
    case RecordKind::flow_end: return "flow_end";
  }
  return "?";
}

inline RecordKind kind_from_name(std::string_view s) {
  if (s == "dns_request") return RecordKind::dns_request;
  if (s == "dns_response") return RecordKind::dns_response;
  if (s == "flow_start") return RecordKind::flow_start;
  if (s == "bytes") return RecordKind::bytes;
  if (s == "flow_end") return RecordKind::flow_end;
  throw std::invalid_argument("trace: unknown record kind '" + std::string(s) + "'");
}

// Unified event record shared by simulator output, replay input and the
// analysis pipeline. Fields that do not apply hold -1 and serialize empty.
struct TraceRecord {
  Tick t = 0;
  RecordKind kind = RecordKind::bytes;
  int link = -1;
  std::int64_t ldns_id = -1;
  std::int64_t client_id = -1;
  std::int64_t bytes = 0;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

inline constexpr std::string_view kTraceCsvHeader = "t,kind,link,ldns_id,client_id,bytes";

inline void append_trace_csv_row(std::string& out, const TraceRecord& r) {
  out += format_seconds(r.t);
  out += ',';
  out += kind_name(r.kind);
  out += ',';
  if (r.link >= 0) out += std::to_string(r.link);
  out += ',';
  if (r.ldns_id >= 0) out += std::to_string(r.ldns_id);
  out += ',';
  if (r.client_id >= 0) out += std::to_string(r.client_id);
  out += ',';
  out += std::to_string(r.bytes);
  out += '\n';
}

inline void write_trace_csv(std::ostream& os, std::span<const TraceRecord> records) {
  os << kTraceCsvHeader << '\n';
  std::string buf;
  for (const TraceRecord& r : records) {
    buf.clear();
    append_trace_csv_row(buf, r);
    os << buf;
  }
}

inline void write_trace_csv(const std::string& path, std::span<const TraceRecord> records) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("trace: cannot open '" + path + "' for writing");
  write_trace_csv(os, records);
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line, char sep = ',') {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline std::int64_t parse_i64(std::string_view s, std::string_view what) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("trace: bad " + std::string(what) + " field '" + std::string(s) + "'");
  }
  return v;
}

// "<sec>.<6-digit frac>" (or bare seconds) to ticks, exactly.
inline Tick parse_time(std::string_view s) {
  const std::size_t dot = s.find('.');
  if (dot == std::string_view::npos) return parse_i64(s, "time") * kTicksPerSecond;
  const std::int64_t whole = parse_i64(s.substr(0, dot), "time");
  std::string_view frac = s.substr(dot + 1);
  if (frac.empty() || frac.size() > 6) throw std::invalid_argument("trace: bad time fraction");
  std::int64_t f = parse_i64(frac, "time");
  for (std::size_t i = frac.size(); i < 6; ++i) f *= 10;
  return whole * kTicksPerSecond + (whole < 0 ? -f : f);
}

}  // namespace detail

inline std::vector<TraceRecord> read_trace_csv(std::istream& is) {
  std::vector<TraceRecord> out;
  std::string line;
  if (!std::getline(is, line)) return out;
  if (line != kTraceCsvHeader) throw std::invalid_argument("trace: missing header row");
  Tick prev = INT64_MIN;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 6) {
      throw std::invalid_argument("trace: line " + std::to_string(lineno) + ": expected 6 fields");
    }
    TraceRecord r;
    r.t = detail::parse_time(f[0]);
    r.kind = kind_from_name(f[1]);
    r.link = f[2].empty() ? -1 : static_cast<int>(detail::parse_i64(f[2], "link"));
    r.ldns_id = f[3].empty() ? -1 : detail::parse_i64(f[3], "ldns_id");
    r.client_id = f[4].empty() ? -1 : detail::parse_i64(f[4], "client_id");
    r.bytes = detail::parse_i64(f[5], "bytes");
    if (r.t < prev) {
      throw std::invalid_argument("trace: line " + std::to_string(lineno) + ": time goes backwards");
    }
    prev = r.t;
    out.push_back(r);
  }
  return out;
}

inline std::vector<TraceRecord> read_trace_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("trace: cannot open '" + path + "'");
  return read_trace_csv(is);
}

}  // namespace ite
