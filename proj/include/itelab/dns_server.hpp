#pragma once

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "itelab/analysis.hpp"  // parse_ipv4 / format_ipv4
#include "itelab/balancer.hpp"
#include "itelab/dns_wire.hpp"
#include "itelab/monitor.hpp"
#include "itelab/trace.hpp"

namespace ite {

// Zone served by the authoritative responder: one name, one address per
// access link.
struct ZoneConfig {
  std::string zone_name = "svc.itelab.test";
  std::vector<std::uint32_t> addresses;
  double nominal_ttl_s = 15.0;
  double violator_fraction = 0.4;
  ViolationMode violation_mode = ViolationMode::advertised;
  std::int64_t violator_ttl_min_s = 5;
  std::int64_t violator_ttl_max_s = 600;

  void validate() const {
    if (zone_name.empty()) throw std::invalid_argument("zone: empty zone_name");
    if (addresses.size() < 2) throw std::invalid_argument("zone: need >= 2 link addresses");
    for (std::size_t i = 0; i < addresses.size(); ++i) {
      for (std::size_t j = i + 1; j < addresses.size(); ++j) {
        if (addresses[i] == addresses[j]) {
          throw std::invalid_argument("zone: link addresses must be distinct");
        }
      }
    }
    if (!(nominal_ttl_s > 0)) throw std::invalid_argument("zone: nominal_ttl_s must be > 0");
  }

  TtlPolicy::Config ttl_config() const {
    return TtlPolicy::Config{nominal_ttl_s, violator_fraction, violation_mode,
                             violator_ttl_min_s, violator_ttl_max_s};
  }
};

inline constexpr std::string_view kZoneHeader = "itelab-zone v1";

inline ZoneConfig parse_zone_config(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kZoneHeader) {
    throw std::invalid_argument("zone: missing '" + std::string(kZoneHeader) + "' header");
  }
  ZoneConfig zc;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::size_t sp = line.find(' ');
    if (sp == std::string::npos) {
      throw std::invalid_argument("zone line " + std::to_string(lineno) + ": expected 'key value'");
    }
    const std::string key = line.substr(0, sp);
    const std::string value = line.substr(sp + 1);
    if (key == "zone_name") {
      zc.zone_name = value;
    } else if (key == "address") {
      zc.addresses.push_back(parse_ipv4(value));
    } else if (key == "nominal_ttl_s") {
      zc.nominal_ttl_s = std::stod(value);
    } else if (key == "violator_fraction") {
      zc.violator_fraction = std::stod(value);
    } else if (key == "violation_mode") {
      if (value == "advertised") zc.violation_mode = ViolationMode::advertised;
      else if (value == "ignored") zc.violation_mode = ViolationMode::ignored;
      else throw std::invalid_argument("zone line " + std::to_string(lineno) + ": bad violation_mode");
    } else if (key == "violator_ttl_min_s") {
      zc.violator_ttl_min_s = std::stoll(value);
    } else if (key == "violator_ttl_max_s") {
      zc.violator_ttl_max_s = std::stoll(value);
    } else {
      throw std::invalid_argument("zone line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
  }
  return zc;
}

inline ZoneConfig load_zone_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("zone: cannot open '" + path + "'");
  return parse_zone_config(is);
}

// Source of per-link byte counts for live serving. advance_to() applies all
// traffic up to the given server-relative time to the monitors.
class MonitorFeed {
 public:
  virtual ~MonitorFeed() = default;
  virtual void advance_to(Tick now, std::vector<LinkMonitor>& monitors) = 0;
};

// Drives monitors from a recorded trace's byte records, mapping trace time
// onto server uptime. Lets live mode run without privileged capture.
class TraceMonitorFeed : public MonitorFeed {
 public:
  explicit TraceMonitorFeed(std::vector<TraceRecord> records) : records_(std::move(records)) {}

  void advance_to(Tick now, std::vector<LinkMonitor>& monitors) override {
    while (next_ < records_.size() && records_[next_].t <= now) {
      const TraceRecord& r = records_[next_++];
      if (r.kind == RecordKind::bytes && r.link >= 0 &&
          r.link < static_cast<int>(monitors.size())) {
        monitors[static_cast<std::size_t>(r.link)].record(r.t, r.bytes);
      }
    }
  }

 private:
  std::vector<TraceRecord> records_;
  std::size_t next_ = 0;
};

struct ServerStats {
  std::atomic<std::int64_t> queries_total{0};
  std::atomic<std::int64_t> parse_errors{0};
  std::atomic<std::int64_t> refused{0};
  std::atomic<std::int64_t> nxdomain{0};
  std::atomic<std::int64_t> noerror_empty{0};
  std::atomic<std::int64_t> log_dropped{0};
  std::vector<std::unique_ptr<std::atomic<std::int64_t>>> decisions_per_link;

  std::string to_text() const {
    std::ostringstream os;
    os << "queries_total " << queries_total.load() << '\n';
    os << "parse_errors " << parse_errors.load() << '\n';
    os << "refused " << refused.load() << '\n';
    os << "nxdomain " << nxdomain.load() << '\n';
    os << "noerror_empty " << noerror_empty.load() << '\n';
    for (std::size_t i = 0; i < decisions_per_link.size(); ++i) {
      os << "decisions_link_" << i << ' ' << decisions_per_link[i]->load() << '\n';
    }
    os << "log_dropped " << log_dropped.load() << '\n';
    return os.str();
  }
};

struct DnsServerConfig {
  ZoneConfig zone;
  Policy policy = Policy::round_robin;
  double mb_window_s = 10.0;
  double small_window_s = 0.1;
  std::uint64_t seed = 1;
  std::string bind_address = "127.0.0.1";
  std::uint16_t port = 0;  // 0 = ephemeral
  std::string decision_log_path;  // empty = no log file
};

// Minimal authoritative nameserver over UDP. Single poll loop; the only
// cross-request state is the balancer cursor and the monitors, both updated
// under one lock (snapshot-then-update). Decision logging is asynchronous
// over a bounded queue that drops rather than blocks the handler.
class DnsServer {
 public:
  DnsServer(DnsServerConfig cfg, std::unique_ptr<MonitorFeed> feed = nullptr)
      : cfg_(std::move(cfg)),
        feed_(std::move(feed)),
        balancer_(cfg_.policy, static_cast<int>(cfg_.zone.addresses.size()), cfg_.seed),
        ttl_policy_(cfg_.zone.ttl_config(), cfg_.seed) {
    cfg_.zone.validate();
    const Tick w = from_seconds(cfg_.small_window_s);
    const double ratio = cfg_.mb_window_s / cfg_.small_window_s;
    const auto n = std::llround(ratio);
    if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-9) {
      throw std::invalid_argument("server: W must be a positive multiple of the small window");
    }
    for (std::size_t i = 0; i < cfg_.zone.addresses.size(); ++i) {
      monitors_.emplace_back(static_cast<int>(i), w, static_cast<int>(n));
      stats_.decisions_per_link.push_back(std::make_unique<std::atomic<std::int64_t>>(0));
    }
  }

  ~DnsServer() {
    stop();
    if (fd_ >= 0) ::close(fd_);
  }

  void bind() {
    fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
    if (fd_ < 0) throw std::runtime_error("server: socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(parse_ipv4(cfg_.bind_address));
    addr.sin_port = htons(cfg_.port);
    if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
      throw std::runtime_error("server: cannot bind " + cfg_.bind_address + ":" +
                               std::to_string(cfg_.port));
    }
    socklen_t len = sizeof(addr);
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0) {
      throw std::runtime_error("server: getsockname() failed");
    }
    port_ = ntohs(addr.sin_port);
  }

  std::uint16_t port() const { return port_; }
  const ServerStats& stats() const { return stats_; }

  // Offline twin of the live decision path, for parity checks: same
  // monitors, balancer and TTL policy, no socket.
  struct OfflineAnswer {
    int link;
    double ttl_s;
  };
  OfflineAnswer decide_offline(Tick now, std::uint32_t source_addr) {
    std::lock_guard<std::mutex> lk(decide_mu_);
    return decide_locked(now, source_addr);
  }

  void stop() {
    stopping_.store(true);
    log_cv_.notify_all();
  }

  // Serves until stop(); requires bind() first. Transient socket errors are
  // retried with bounded backoff.
  void run() {
    if (fd_ < 0) throw std::logic_error("server: run() before bind()");
    start_ = std::chrono::steady_clock::now();
    std::thread writer;
    if (!cfg_.decision_log_path.empty()) {
      writer = std::thread([this] { log_writer_loop(); });
    }
    std::uint8_t buf[1500];
    int consecutive_errors = 0;
    while (!stopping_.load()) {
      pollfd pfd{fd_, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, 50);
      if (pr < 0) {
        if (errno == EINTR) continue;
        if (++consecutive_errors > 16) break;
        ::usleep(1000u << std::min(consecutive_errors, 10));
        continue;
      }
      if (pr == 0 || !(pfd.revents & POLLIN)) continue;
      sockaddr_in src{};
      socklen_t srclen = sizeof(src);
      const ssize_t got = ::recvfrom(fd_, buf, sizeof(buf), 0,
                                     reinterpret_cast<sockaddr*>(&src), &srclen);
      if (got < 0) {
        if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) continue;
        if (++consecutive_errors > 16) break;
        continue;
      }
      consecutive_errors = 0;
      handle_datagram({buf, static_cast<std::size_t>(got)}, src);
    }
    if (writer.joinable()) writer.join();
  }

 private:
  Tick now_ticks() const {
    return std::chrono::duration_cast<std::chrono::microseconds>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

  OfflineAnswer decide_locked(Tick now, std::uint32_t source_addr) {
    const std::int64_t ldns_id = static_cast<std::int64_t>(source_addr);
    const double ttl = ttl_policy_.advertised_ttl_for(ldns_id);
    std::vector<double> loads;
    if (cfg_.policy == Policy::measurement_based) {
      if (feed_) feed_->advance_to(now, monitors_);
      loads.reserve(monitors_.size());
      for (auto& m : monitors_) loads.push_back(m.utilization_bps(now));
    }
    const int link = balancer_.decide(loads);
    return {link, ttl};
  }

  void handle_datagram(std::span<const std::uint8_t> datagram, const sockaddr_in& src) {
    stats_.queries_total.fetch_add(1);
    const dns::ParseResult parsed = dns::parse_query(datagram);
    if (parsed.status == dns::ParseStatus::malformed) {
      stats_.parse_errors.fetch_add(1);
      return;
    }
    if (parsed.status == dns::ParseStatus::refused) {
      stats_.refused.fetch_add(1);
      send_to(dns::build_refused(parsed.query.id), src);
      return;
    }
    const dns::DnsQuery& q = parsed.query;
    if (!dns::qname_equal_ci(q.qname, cfg_.zone.zone_name)) {
      stats_.nxdomain.fetch_add(1);
      send_to(dns::build_nxdomain(q), src);
      return;
    }
    if (q.qtype != dns::kTypeA || q.qclass != dns::kClassIn) {
      stats_.noerror_empty.fetch_add(1);
      send_to(dns::build_noerror_empty(q), src);
      return;
    }

    const std::uint32_t source_addr = ntohl(src.sin_addr.s_addr);
    const Tick now = now_ticks();
    OfflineAnswer ans;
    {
      std::lock_guard<std::mutex> lk(decide_mu_);
      ans = decide_locked(now, source_addr);
    }
    stats_.decisions_per_link[static_cast<std::size_t>(ans.link)]->fetch_add(1);
    send_to(dns::build_response(q, cfg_.zone.addresses[static_cast<std::size_t>(ans.link)],
                                static_cast<std::uint32_t>(std::llround(ans.ttl_s))),
            src);
    if (!cfg_.decision_log_path.empty()) {
      enqueue_log_row(now, source_addr, ans);
    }
  }

  void send_to(const std::vector<std::uint8_t>& payload, const sockaddr_in& dst) {
    (void)::sendto(fd_, payload.data(), payload.size(), 0,
                   reinterpret_cast<const sockaddr*>(&dst), sizeof(dst));
  }

  void enqueue_log_row(Tick now, std::uint32_t source, const OfflineAnswer& ans) {
    std::ostringstream row;
    row << format_seconds(now) << ',' << format_ipv4(source) << ',' << ans.link << ','
        << ans.ttl_s;
    std::lock_guard<std::mutex> lk(log_mu_);
    if (log_queue_.size() >= kLogQueueLimit) {
      stats_.log_dropped.fetch_add(1);
      return;
    }
    log_queue_.push_back(row.str());
    log_cv_.notify_one();
  }

  void log_writer_loop() {
    std::ofstream os(cfg_.decision_log_path, std::ios::binary);
    os << "t_seconds,ldns_addr,chosen_link,advertised_ttl\n";
    while (true) {
      std::deque<std::string> batch;
      {
        std::unique_lock<std::mutex> lk(log_mu_);
        log_cv_.wait_for(lk, std::chrono::milliseconds(200),
                         [this] { return stopping_.load() || !log_queue_.empty(); });
        batch.swap(log_queue_);
        if (batch.empty() && stopping_.load()) break;
      }
      for (const auto& row : batch) os << row << '\n';
      os.flush();
    }
  }

  static constexpr std::size_t kLogQueueLimit = 8192;

  DnsServerConfig cfg_;
  std::unique_ptr<MonitorFeed> feed_;
  Balancer balancer_;
  TtlPolicy ttl_policy_;
  std::vector<LinkMonitor> monitors_;
  ServerStats stats_;
  std::mutex decide_mu_;

  std::mutex log_mu_;
  std::condition_variable log_cv_;
  std::deque<std::string> log_queue_;

  std::atomic<bool> stopping_{false};
  std::chrono::steady_clock::time_point start_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace ite
