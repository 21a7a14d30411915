#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "itelab/stats.hpp"
#include "itelab/ticks.hpp"
#include "itelab/trace.hpp"

namespace ite {

inline std::uint32_t parse_ipv4(std::string_view s) {
  std::array<std::uint32_t, 4> oct{};
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    if (pos >= s.size()) throw std::invalid_argument("bad IPv4 '" + std::string(s) + "'");
    std::uint32_t v = 0;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      v = v * 10 + static_cast<std::uint32_t>(s[pos] - '0');
      ++pos;
      ++digits;
      if (v > 255 || digits > 3) throw std::invalid_argument("bad IPv4 '" + std::string(s) + "'");
    }
    if (digits == 0) throw std::invalid_argument("bad IPv4 '" + std::string(s) + "'");
    oct[static_cast<std::size_t>(i)] = v;
    if (i < 3) {
      if (pos >= s.size() || s[pos] != '.') throw std::invalid_argument("bad IPv4 '" + std::string(s) + "'");
      ++pos;
    }
  }
  if (pos != s.size()) throw std::invalid_argument("bad IPv4 '" + std::string(s) + "'");
  return (oct[0] << 24) | (oct[1] << 16) | (oct[2] << 8) | oct[3];
}

inline std::string format_ipv4(std::uint32_t a) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", a >> 24, (a >> 16) & 255, (a >> 8) & 255, a & 255);
  return buf;
}

struct PrefixEntry {
  std::uint32_t prefix = 0;
  int length = 0;
  std::uint32_t origin_as = 0;
};

// Longest-prefix-match table mapping IPv4 addresses to their origin AS.
// Entries are bucketed per prefix length; lookup probes lengths from /32
// down and returns the first (longest) hit.
class PrefixTable {
 public:
  void add(std::uint32_t prefix, int length, std::uint32_t origin_as) {
    if (length < 0 || length > 32) throw std::invalid_argument("prefix length outside [0,32]");
    const std::uint32_t masked = mask(prefix, length);
    auto& bucket = by_length_[static_cast<std::size_t>(length)];
    if (!bucket.emplace(masked, origin_as).second) {
      throw std::invalid_argument("duplicate prefix " + format_ipv4(masked) + "/" +
                                  std::to_string(length));
    }
    ++size_;
  }

  std::optional<std::uint32_t> lookup(std::uint32_t addr) const {
    for (int len = 32; len >= 0; --len) {
      const auto& bucket = by_length_[static_cast<std::size_t>(len)];
      if (bucket.empty()) continue;
      const auto it = bucket.find(mask(addr, len));
      if (it != bucket.end()) return it->second;
    }
    return std::nullopt;
  }

  std::size_t size() const { return size_; }

  static std::uint32_t mask(std::uint32_t addr, int length) {
    if (length == 0) return 0;
    return addr & (0xFFFFFFFFu << (32 - length));
  }

 private:
  std::array<std::unordered_map<std::uint32_t, std::uint32_t>, 33> by_length_;
  std::size_t size_ = 0;
};

inline std::optional<std::uint32_t> lpm(std::uint32_t addr, const PrefixTable& table) {
  return table.lookup(addr);
}

// One line per entry: `a.b.c.d/len,asn`.
inline PrefixTable load_prefix_table(std::istream& is) {
  PrefixTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t slash = line.find('/');
    const std::size_t comma = line.find(',');
    if (slash == std::string::npos || comma == std::string::npos || comma < slash) {
      throw std::invalid_argument("prefix table line " + std::to_string(lineno) + ": bad format");
    }
    const std::uint32_t prefix = parse_ipv4(std::string_view(line).substr(0, slash));
    const int len = static_cast<int>(detail::parse_i64(
        std::string_view(line).substr(slash + 1, comma - slash - 1), "prefix length"));
    const std::uint32_t asn = static_cast<std::uint32_t>(
        detail::parse_i64(std::string_view(line).substr(comma + 1), "asn"));
    table.add(prefix, len, asn);
  }
  return table;
}

inline PrefixTable load_prefix_table(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("prefix table: cannot open '" + path + "'");
  return load_prefix_table(is);
}

struct DnsLogEntry {
  Tick t = 0;
  std::uint32_t ldns_addr = 0;
  std::string qname;
};

struct FlowLogEntry {
  Tick t = 0;
  std::uint32_t client_addr = 0;
  std::int64_t bytes = 0;
};

inline constexpr std::string_view kDnsLogHeader = "t,ldns_addr,qname";
inline constexpr std::string_view kFlowLogHeader = "t,client_addr,bytes";

inline std::vector<DnsLogEntry> read_dns_log_csv(std::istream& is) {
  std::vector<DnsLogEntry> out;
  std::string line;
  if (!std::getline(is, line) || line != kDnsLogHeader) {
    throw std::invalid_argument("dns log: missing '" + std::string(kDnsLogHeader) + "' header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 3) throw std::invalid_argument("dns log: expected 3 fields");
    out.push_back({detail::parse_time(f[0]), parse_ipv4(f[1]), std::string(f[2])});
  }
  return out;
}

inline std::vector<FlowLogEntry> read_flow_log_csv(std::istream& is) {
  std::vector<FlowLogEntry> out;
  std::string line;
  if (!std::getline(is, line) || line != kFlowLogHeader) {
    throw std::invalid_argument("flow log: missing '" + std::string(kFlowLogHeader) + "' header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = detail::split_csv(line);
    if (f.size() != 3) throw std::invalid_argument("flow log: expected 3 fields");
    out.push_back({detail::parse_time(f[0]), parse_ipv4(f[1]), detail::parse_i64(f[2], "bytes")});
  }
  return out;
}

struct AssociationPair {
  std::size_t flow_index = 0;
  std::uint32_t ldns_addr = 0;
  Tick dns_t = 0;
};

struct AssociationResult {
  std::vector<AssociationPair> pairs;
  std::int64_t ignored_no_ldns = 0;
  std::int64_t ignored_ambiguous = 0;
  double coverage_fraction = 0.0;
};

// The origin-AS correlation rule: a client request is matched to the most
// recent earlier DNS request from an LDNS in the same origin AS. Zero
// candidate LDNS servers (including clients whose AS is unknown or whose
// requests precede all DNS activity) are counted as ignored_no_ldns; more
// than one candidate is ignored_ambiguous.
inline AssociationResult associate(std::span<const DnsLogEntry> dns_log,
                                   std::span<const FlowLogEntry> flow_log,
                                   const PrefixTable& table) {
  struct AsState {
    std::map<std::uint32_t, Tick> last_seen;  // ldns addr -> most recent t
  };
  std::unordered_map<std::uint32_t, AsState> by_as;

  AssociationResult res;
  std::size_t di = 0;
  Tick prev_dns = INT64_MIN, prev_flow = INT64_MIN;
  for (std::size_t fi = 0; fi < flow_log.size(); ++fi) {
    const FlowLogEntry& flow = flow_log[fi];
    if (flow.t < prev_flow) throw std::invalid_argument("associate: flow log not time-ordered");
    prev_flow = flow.t;
    while (di < dns_log.size() && dns_log[di].t < flow.t) {
      if (dns_log[di].t < prev_dns) throw std::invalid_argument("associate: dns log not time-ordered");
      prev_dns = dns_log[di].t;
      const auto asn = table.lookup(dns_log[di].ldns_addr);
      if (asn) by_as[*asn].last_seen[dns_log[di].ldns_addr] = dns_log[di].t;
      ++di;
    }
    const auto asn = table.lookup(flow.client_addr);
    if (!asn) {
      ++res.ignored_no_ldns;
      continue;
    }
    const auto it = by_as.find(*asn);
    if (it == by_as.end() || it->second.last_seen.empty()) {
      ++res.ignored_no_ldns;
      continue;
    }
    if (it->second.last_seen.size() > 1) {
      ++res.ignored_ambiguous;
      continue;
    }
    const auto& [ldns_addr, t] = *it->second.last_seen.begin();
    res.pairs.push_back({fi, ldns_addr, t});
  }
  res.coverage_fraction =
      flow_log.empty() ? 0.0
                       : static_cast<double>(res.pairs.size()) / static_cast<double>(flow_log.size());
  return res;
}

struct MinGapReport {
  std::vector<std::pair<std::uint32_t, double>> per_ldns;  // (addr, min gap seconds)
  std::vector<std::uint32_t> single_request;               // gap undefined

  double fraction_with_gap_at_least(double ttl_s) const {
    if (per_ldns.empty()) return 0.0;
    std::int64_t n = 0;
    for (const auto& [addr, gap] : per_ldns) n += gap >= ttl_s;
    return static_cast<double>(n) / static_cast<double>(per_ldns.size());
  }
};

// Minimum inter-arrival per LDNS; servers with a single request have no
// defined gap and are reported separately.
inline MinGapReport min_interarrival_per_ldns(std::span<const DnsLogEntry> dns_log) {
  std::map<std::uint32_t, std::pair<Tick, Tick>> state;  // addr -> (last t, min gap)
  Tick prev = INT64_MIN;
  for (const DnsLogEntry& e : dns_log) {
    if (e.t < prev) throw std::invalid_argument("min_interarrival: log not time-ordered");
    prev = e.t;
    const auto it = state.find(e.ldns_addr);
    if (it == state.end()) {
      state.emplace(e.ldns_addr, std::make_pair(e.t, INT64_MAX));
    } else {
      it->second.second = std::min(it->second.second, e.t - it->second.first);
      it->second.first = e.t;
    }
  }
  MinGapReport out;
  for (const auto& [addr, st] : state) {
    if (st.second == INT64_MAX) {
      out.single_request.push_back(addr);
    } else {
      out.per_ldns.emplace_back(addr, to_seconds(st.second));
    }
  }
  return out;
}

enum class FitFamily : std::uint8_t { pareto, lognormal };

struct FitResult {
  FitFamily family = FitFamily::pareto;
  // pareto: shape (alpha) and scale (xm); lognormal: mu and sigma.
  double shape_or_mu = 0.0;
  double scale_or_sigma = 0.0;
  // Residual sum of squares between model and empirical CCDF, comparable
  // across families.
  double goodness = 0.0;
};

// CCDF regression fits, the way the measured distributions are fitted in
// the trace study: Pareto as a straight line in log-log CCDF space,
// lognormal as a straight line in probit-vs-log space. Hazen plotting
// positions keep both tails usable.
inline FitResult fit_distribution(std::span<const double> samples, FitFamily family) {
  if (samples.size() < 10) throw std::invalid_argument("fit: need >= 10 samples");
  std::vector<double> x(samples.begin(), samples.end());
  for (double v : x) {
    if (!(v > 0)) throw std::invalid_argument("fit: samples must be > 0");
  }
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) {
    throw std::invalid_argument("fit: degenerate sample (zero variance)");
  }
  const std::size_t n = x.size();
  std::vector<double> log_x(n), ccdf(n);
  for (std::size_t i = 0; i < n; ++i) {
    log_x[i] = std::log(x[i]);
    ccdf[i] = 1.0 - (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  }

  FitResult res;
  res.family = family;
  if (family == FitFamily::pareto) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = std::log(ccdf[i]);
    const LinearFit f = least_squares(log_x, y);  // ln CCDF = alpha ln xm - alpha ln x
    const double alpha = -f.slope;
    res.shape_or_mu = alpha;
    res.scale_or_sigma = std::exp(f.intercept / alpha);
  } else {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = normal_quantile(1.0 - ccdf[i]);
    const LinearFit f = least_squares(log_x, y);  // probit(CDF) = (ln x - mu)/sigma
    res.scale_or_sigma = 1.0 / f.slope;
    res.shape_or_mu = -f.intercept / f.slope;
  }
  if (!(res.scale_or_sigma > 0) && family == FitFamily::lognormal) {
    throw std::invalid_argument("fit: lognormal sigma came out non-positive");
  }
  if (family == FitFamily::pareto && !(res.shape_or_mu > 0)) {
    throw std::invalid_argument("fit: pareto shape came out non-positive");
  }

  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double model;
    if (family == FitFamily::pareto) {
      model = x[i] <= res.scale_or_sigma
                  ? 1.0
                  : std::pow(res.scale_or_sigma / x[i], res.shape_or_mu);
    } else {
      model = 1.0 - normal_cdf((log_x[i] - res.shape_or_mu) / res.scale_or_sigma);
    }
    const double d = model - ccdf[i];
    rss += d * d;
  }
  res.goodness = rss;
  return res;
}

struct MedianCi {
  double median = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool degraded = false;  // widest order-statistic interval could not reach
                          // the requested confidence
};

// Distribution-free (sign-test) confidence interval for the median: the
// symmetric pair of order statistics (x_(k), x_(n+1-k)) with the largest k
// whose binomial tail stays within (1-confidence)/2.
inline MedianCi median_ci(std::span<const double> samples, double confidence = 0.99) {
  if (samples.size() < 8) throw std::invalid_argument("median_ci: need >= 8 samples");
  if (!(confidence > 0 && confidence < 1)) {
    throw std::invalid_argument("median_ci: confidence outside (0,1)");
  }
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const std::int64_t n = static_cast<std::int64_t>(x.size());
  const double tail = (1.0 - confidence) / 2.0;

  std::int64_t k = 0;  // 1-based order statistic index
  for (std::int64_t cand = 1; cand <= n / 2; ++cand) {
    if (binomial_half_cdf(cand - 1, n) <= tail) {
      k = cand;
    } else {
      break;
    }
  }
  MedianCi out;
  if (k == 0) {
    out.degraded = true;
    k = 1;
  }
  out.lower = x[static_cast<std::size_t>(k - 1)];
  out.upper = x[static_cast<std::size_t>(n - k)];
  out.median = n % 2 == 1 ? x[static_cast<std::size_t>(n / 2)]
                          : 0.5 * (x[static_cast<std::size_t>(n / 2 - 1)] +
                                   x[static_cast<std::size_t>(n / 2)]);
  return out;
}

// Sorted samples with Hazen CDF positions, for plotting.
inline void write_cdf_csv(std::ostream& os, std::span<const double> samples,
                          std::string_view value_column = "value") {
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  os << value_column << ",cdf\n";
  char buf[64];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f,%.6f\n", x[i],
                  (static_cast<double>(i) + 0.5) / static_cast<double>(x.size()));
    os << buf;
  }
}

}  // namespace ite
