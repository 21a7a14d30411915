#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>

namespace ite {

// All engine time is integer microseconds. The paper's measurement grid
// (w = 100 ms small windows, 100 ms replay intervals) must align exactly
// across simulator, monitor and replay; integer ticks make the grid and
// the trace files bit-reproducible.
using Tick = std::int64_t;

inline constexpr Tick kTicksPerSecond = 1'000'000;
inline constexpr Tick kDefaultSmallWindow = 100'000;  // w = 100 ms

constexpr double to_seconds(Tick t) {
  return static_cast<double>(t) / static_cast<double>(kTicksPerSecond);
}

inline Tick from_seconds(double s) {
  return static_cast<Tick>(std::llround(s * static_cast<double>(kTicksPerSecond)));
}

// Index of the grid cell [k*w, (k+1)*w) containing t. Negative t floors.
constexpr Tick grid_cell(Tick t, Tick w) {
  Tick q = t / w;
  if (t % w != 0 && t < 0) --q;
  return q;
}

// Seconds with fixed 6 decimals; microsecond ticks round-trip exactly.
inline std::string format_seconds(Tick t) {
  const char* sign = "";
  if (t < 0) {
    sign = "-";
    t = -t;
  }
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%s%lld.%06lld", sign,
                static_cast<long long>(t / kTicksPerSecond),
                static_cast<long long>(t % kTicksPerSecond));
  return buf;
}

}  // namespace ite
