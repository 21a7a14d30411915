#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "itelab/ticks.hpp"
#include "itelab/trace.hpp"

namespace ite {

enum class Direction : std::uint8_t { ingress, egress };
enum class DirectionPolicy : std::uint8_t { ingress, egress, both };

// Per-link sliding-window byte accounting: W = n*w, n small windows of
// width w, advancing in steps of w. A query mid-window uses the partially
// filled current window plus the n-1 most recent complete ones. The grid is
// aligned to the monitor's origin (experiment start).
class LinkMonitor {
 public:
  LinkMonitor(int link_id, Tick small_window_w, int window_count_n,
              DirectionPolicy policy = DirectionPolicy::both, Tick origin = 0)
      : link_id_(link_id),
        w_(small_window_w),
        n_(window_count_n),
        policy_(policy),
        origin_(origin),
        ring_(static_cast<std::size_t>(window_count_n), 0) {
    if (w_ <= 0) throw std::invalid_argument("monitor: small window w must be > 0");
    if (n_ <= 0) throw std::invalid_argument("monitor: window count n must be > 0");
  }

  int link_id() const { return link_id_; }
  Tick small_window() const { return w_; }
  int window_count() const { return n_; }
  Tick window_span() const { return w_ * n_; }  // W
  double window_span_seconds() const { return to_seconds(window_span()); }
  DirectionPolicy direction_policy() const { return policy_; }
  Tick current_window_start() const { return origin_ + cur_cell_ * w_; }

  // Adds bytes observed at t. Records more than one small window in the
  // past indicate a broken event feed and are rejected.
  void record(Tick t, std::int64_t bytes, Direction dir = Direction::egress) {
    if (bytes < 0) throw std::invalid_argument("monitor: negative byte count");
    if (!matches(dir)) return;
    const Tick cell = grid_cell(t - origin_, w_);
    if (cell < cur_cell_ - 1) {
      throw std::runtime_error("monitor: out-of-order record beyond one small window");
    }
    advance_to(cell);
    ring_[slot(std::min(cell, cur_cell_))] += bytes;
    total_ += bytes;
  }

  // Load over (t - W, t] in bits per second, on the w grid: the cell
  // containing t plus the n-1 cells before it.
  double utilization_bps(Tick t) {
    const Tick cell = grid_cell(t - origin_, w_);
    if (cell < cur_cell_) {
      throw std::runtime_error("monitor: utilization query behind the observed window");
    }
    advance_to(cell);
    return static_cast<double>(total_) * 8.0 / window_span_seconds();
  }

  std::int64_t bytes_in_window() const { return total_; }

 private:
  bool matches(Direction dir) const {
    if (policy_ == DirectionPolicy::both) return true;
    return (policy_ == DirectionPolicy::ingress) == (dir == Direction::ingress);
  }

  std::size_t slot(Tick cell) const {
    Tick m = cell % n_;
    if (m < 0) m += n_;
    return static_cast<std::size_t>(m);
  }

  void advance_to(Tick cell) {
    if (cell <= cur_cell_) return;
    const Tick steps = cell - cur_cell_;
    if (steps >= n_) {
      std::fill(ring_.begin(), ring_.end(), 0);
      total_ = 0;
    } else {
      for (Tick c = cur_cell_ + 1; c <= cell; ++c) {
        total_ -= ring_[slot(c)];
        ring_[slot(c)] = 0;
      }
    }
    cur_cell_ = cell;
  }

  int link_id_;
  Tick w_;
  int n_;
  DirectionPolicy policy_;
  Tick origin_;
  std::vector<std::int64_t> ring_;
  std::int64_t total_ = 0;
  Tick cur_cell_ = 0;
};

// Relative load-balancing error |u1 - u2| / (u1 + u2). Both idle is defined
// as perfectly balanced (the raw formula is 0/0 there).
inline double error_metric(double u1, double u2) {
  if (u1 < 0 || u2 < 0) throw std::invalid_argument("error_metric: negative utilization");
  const double sum = u1 + u2;
  if (sum == 0.0) return 0.0;
  return std::abs(u1 - u2) / sum;
}

// epsilon_I(t) samples, one per step, t covering [I, span - I].
struct ErrorSeries {
  double timescale_s = 20.0;
  double step_s = 1.0;
  struct Sample {
    Tick t;
    double epsilon;
  };
  std::vector<Sample> samples;

  double median() const {
    if (samples.empty()) throw std::domain_error("error series: no samples");
    std::vector<double> eps;
    eps.reserve(samples.size());
    for (const auto& s : samples) eps.push_back(s.epsilon);
    std::sort(eps.begin(), eps.end());
    const std::size_t n = eps.size();
    return n % 2 == 1 ? eps[n / 2] : 0.5 * (eps[n / 2 - 1] + eps[n / 2]);
  }
};

// Recomputes epsilon_I(t) every step from a time-ordered trace. Link loads
// come from byte records only; the window of length I starting at t is
// [t, t+I). The first I seconds are warm-up and excluded, and every window
// must lie inside the observed span, so t runs over [I, span-I]. Fewer than
// one full window of data yields an empty series.
inline ErrorSeries error_series(std::span<const TraceRecord> records, double timescale_s,
                                double step_s = 1.0, Tick span = -1) {
  if (!(timescale_s > 0)) throw std::invalid_argument("error_series: timescale must be > 0");
  if (!(step_s > 0)) throw std::invalid_argument("error_series: step must be > 0");
  const Tick step = from_seconds(step_s);
  const Tick window = from_seconds(timescale_s);
  if (span < 0) {
    span = 0;
    for (const TraceRecord& r : records) span = std::max(span, r.t);
  }

  ErrorSeries out;
  out.timescale_s = timescale_s;
  out.step_s = step_s;
  if (span < 2 * window) return out;

  // Per-step byte buckets per link; bucket k covers [k*step, (k+1)*step).
  const std::size_t buckets = static_cast<std::size_t>(span / step) + 1;
  std::vector<std::int64_t> link0(buckets, 0), link1(buckets, 0);
  Tick prev = INT64_MIN;
  for (const TraceRecord& r : records) {
    if (r.t < prev) throw std::invalid_argument("error_series: records not time-ordered");
    prev = r.t;
    if (r.kind != RecordKind::bytes || r.link < 0) continue;
    if (r.link > 1) throw std::invalid_argument("error_series: epsilon is defined for links {0,1}");
    const std::size_t b = static_cast<std::size_t>(grid_cell(r.t, step));
    if (b >= buckets) continue;
    (r.link == 0 ? link0 : link1)[b] += r.bytes;
  }

  std::vector<std::int64_t> cum0(buckets + 1, 0), cum1(buckets + 1, 0);
  for (std::size_t i = 0; i < buckets; ++i) {
    cum0[i + 1] = cum0[i] + link0[i];
    cum1[i + 1] = cum1[i] + link1[i];
  }

  const std::int64_t per_window = window / step;
  for (Tick t = window; t + window <= span; t += step) {
    const std::int64_t b = t / step;
    const std::int64_t hi = std::min<std::int64_t>(b + per_window, static_cast<std::int64_t>(buckets));
    const double u0 = static_cast<double>(cum0[hi] - cum0[b]);
    const double u1 = static_cast<double>(cum1[hi] - cum1[b]);
    out.samples.push_back({t, error_metric(u0, u1)});
  }
  return out;
}

inline void write_error_series_csv(std::ostream& os, const ErrorSeries& es) {
  os << "t_seconds,epsilon\n";
  char buf[64];
  for (const auto& s : es.samples) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f\n", format_seconds(s.t).c_str(), s.epsilon);
    os << buf;
  }
}

inline void write_error_series_csv(const std::string& path, const ErrorSeries& es) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("error series: cannot open '" + path + "'");
  write_error_series_csv(os, es);
}

inline ErrorSeries read_error_series_csv(std::istream& is, double timescale_s = 0.0,
                                         double step_s = 1.0) {
  ErrorSeries es;
  es.timescale_s = timescale_s;
  es.step_s = step_s;
  std::string line;
  if (!std::getline(is, line) || line != "t_seconds,epsilon") {
    throw std::invalid_argument("error series: missing 't_seconds,epsilon' header");
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) throw std::invalid_argument("error series: bad row");
    es.samples.push_back({detail::parse_time(std::string_view(line).substr(0, comma)),
                          std::stod(line.substr(comma + 1))});
  }
  return es;
}

}  // namespace ite
