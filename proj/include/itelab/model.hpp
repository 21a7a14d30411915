#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "itelab/rng.hpp"
#include "itelab/stats.hpp"

namespace ite {

enum class SizeKind { fixed, lognormal_truncated };

// Transfer size model. The lognormal is parameterized by its arithmetic
// mean and log-scale sigma; mu = ln(mean) - sigma^2/2. Samples above the
// cap are clamped to it, not resampled, so the upper mass stays at the cap
// the way a byte-capped deployment would see it.
struct SizeDistribution {
  SizeKind kind = SizeKind::fixed;
  double mean_bytes = 225e3;
  double truncation_cap_bytes = 625e3;  // lognormal only
  double sigma = 1.5;                   // lognormal only

  void validate() const {
    if (!(mean_bytes > 0)) throw std::invalid_argument("size: mean_bytes must be > 0");
    if (kind == SizeKind::lognormal_truncated) {
      if (!(sigma > 0)) throw std::invalid_argument("size: sigma must be > 0");
      if (!(truncation_cap_bytes >= mean_bytes)) {
        throw std::invalid_argument("size: truncation cap below configured mean");
      }
    }
  }

  double location_mu() const { return std::log(mean_bytes) - 0.5 * sigma * sigma; }
};

inline double sample_size(const SizeDistribution& d, Rng& rng) {
  d.validate();
  if (d.kind == SizeKind::fixed) return d.mean_bytes;
  const double x = rng.lognormal(d.location_mu(), d.sigma);
  return std::min(x, d.truncation_cap_bytes);
}

// E[min(X, cap)] for the configured distribution; the realized mean after
// clamping, used to hold aggregate load fixed across size sweeps.
inline double truncated_mean(const SizeDistribution& d) {
  d.validate();
  if (d.kind == SizeKind::fixed) return d.mean_bytes;
  const double mu = d.location_mu();
  const double s = d.sigma;
  const double c = d.truncation_cap_bytes;
  const double a = (std::log(c) - mu) / s;
  return d.mean_bytes * normal_cdf(a - s) + c * (1.0 - normal_cdf(a));
}

// One remote LDNS server. effective_ttl_s is the TTL the LDNS actually
// applies; it is fixed for the LDNS's lifetime.
struct LdnsProfile {
  std::int64_t id = 0;
  bool honors_ttl = true;
  bool caching = true;
  double effective_ttl_s = 15.0;
  std::vector<std::int64_t> client_ids;

  std::size_t hidden_client_count() const { return client_ids.size(); }

  void validate() const {
    if (client_ids.empty()) throw std::invalid_argument("ldns: needs >= 1 hidden client");
    if (caching && !(effective_ttl_s > 0)) {
      throw std::invalid_argument("ldns: caching requires effective_ttl > 0");
    }
  }
};

// Closed-loop client: download, sleep, repeat.
struct ClientSession {
  std::int64_t id = 0;
  std::int64_t ldns_id = 0;
  SizeDistribution size_dist;
  double sleep_mean_s = 35.0;
  double path_rtt_s = 0.1;
  double path_rate_bps = 1e6;

  // Configured open-loop approximation of the realized connection rate:
  // 1 / (mean sleep + mean transfer duration).
  double request_rate() const {
    const double transfer_s = truncated_mean(size_dist) * 8.0 / path_rate_bps;
    return 1.0 / (sleep_mean_s + transfer_s);
  }

  void validate() const {
    if (!(path_rtt_s > 0)) throw std::invalid_argument("client: path_rtt must be > 0");
    if (!(path_rate_bps > 0)) throw std::invalid_argument("client: path_rate must be > 0");
  }
};

// Inputs to the per-LDNS granularity model: n clients behind one LDNS,
// each opening connections at rate r for s bytes, TTL T if caching.
struct GranularityInput {
  double n = 1;        // clients per LDNS
  double r = 1.0 / 35; // connections per second per client
  double s = 225e3;    // bytes per connection
  double ttl = 15.0;   // seconds, used when caching
  bool caching = true;

  void validate() const {
    if (!(n > 0) || !(r > 0) || !(s > 0) || !(ttl > 0)) {
      throw std::invalid_argument("granularity: all numeric fields must be > 0");
    }
  }
};

// DNS request rate from one LDNS: n*r if non-caching, min{n*r, 1/T} if the
// LDNS caches with TTL T.
inline double ldns_request_rate(const GranularityInput& g) {
  g.validate();
  const double nr = g.n * g.r;
  return g.caching ? std::min(nr, 1.0 / g.ttl) : nr;
}

// Bytes of traffic steered per DNS decision, R/lambda with R = n*r*s:
// s when non-caching or n*r < 1/T, n*r*s*T otherwise.
inline double granularity_bytes_per_request(const GranularityInput& g) {
  g.validate();
  if (!g.caching || g.n * g.r < 1.0 / g.ttl) return g.s;
  return g.n * g.r * g.s * g.ttl;
}

// delta*lambda: DNS requests routed while one request's traffic is still in
// flight. Above 1 the balancer cannot amortize committed-but-unarrived load.
inline double pending_load_ratio(double delta_s, double lambda_per_s) {
  if (delta_s < 0 || lambda_per_s < 0) {
    throw std::invalid_argument("pending_load_ratio: negative input");
  }
  return delta_s * lambda_per_s;
}

}  // namespace ite
