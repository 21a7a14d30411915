#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "itelab/rng.hpp"
#include "itelab/ticks.hpp"

namespace ite {

enum class Policy : std::uint8_t { round_robin, measurement_based, random_choice, static_pin };

inline std::string policy_name(Policy p) {
  switch (p) {
    case Policy::round_robin: return "rr";
    case Policy::measurement_based: return "mb";
    case Policy::random_choice: return "random";
    case Policy::static_pin: return "static";
  }
  return "?";
}

inline Policy policy_from_name(std::string_view s) {
  if (s == "rr" || s == "round_robin") return Policy::round_robin;
  if (s == "mb" || s == "measurement_based") return Policy::measurement_based;
  if (s == "random") return Policy::random_choice;
  if (s == "static") return Policy::static_pin;
  throw std::invalid_argument("unknown policy '" + std::string(s) + "'");
}

// One resolution outcome. link_loads_bps is the per-link snapshot the
// decision was taken on; empty for RR.
struct BalancerDecision {
  Tick t = 0;
  std::int64_t ldns_id = -1;
  int chosen_link = 0;
  double advertised_ttl_s = 0.0;
  std::vector<double> link_loads_bps;
};

// Resolution-time link selection. RR rotates a cursor; MB picks the argmin
// of the supplied load snapshot, breaking exact ties by rotating the same
// cursor through the tied set. decide() never touches the monitors that
// produced the snapshot, so measurement and control stay decoupled.
class Balancer {
 public:
  Balancer(Policy policy, int link_count, std::uint64_t seed = 0)
      : policy_(policy), link_count_(link_count), rng_(mix_seed(seed, "balancer")) {
    if (link_count_ < 2) throw std::invalid_argument("balancer: need >= 2 links");
  }

  Policy policy() const { return policy_; }
  int link_count() const { return link_count_; }
  int rr_cursor() const { return cursor_; }

  int decide(std::initializer_list<double> loads_bps) {
    return decide(std::span<const double>(loads_bps.begin(), loads_bps.size()));
  }

  // loads_bps must have link_count entries for MB; it is ignored by the
  // other policies.
  int decide(std::span<const double> loads_bps) {
    switch (policy_) {
      case Policy::round_robin: {
        const int link = cursor_;
        cursor_ = (cursor_ + 1) % link_count_;
        return link;
      }
      case Policy::measurement_based: {
        if (static_cast<int>(loads_bps.size()) != link_count_) {
          throw std::invalid_argument("balancer: MB needs one load per link");
        }
        double min_load = loads_bps[0];
        for (int i = 1; i < link_count_; ++i) min_load = std::min(min_load, loads_bps[i]);
        int tied = 0;
        for (int i = 0; i < link_count_; ++i) tied += loads_bps[i] == min_load;
        if (tied == 1) {
          for (int i = 0; i < link_count_; ++i) {
            if (loads_bps[i] == min_load) return i;
          }
        }
        // Exact tie: first tied link at or after the cursor, cyclically,
        // then advance past it so repeated ties rotate.
        for (int k = 0; k < link_count_; ++k) {
          const int i = (cursor_ + k) % link_count_;
          if (loads_bps[i] == min_load) {
            cursor_ = (i + 1) % link_count_;
            return i;
          }
        }
        return 0;  // unreachable
      }
      case Policy::random_choice:
        return static_cast<int>(rng_.uniform_int(0, link_count_ - 1));
      case Policy::static_pin:
        return 0;
    }
    return 0;
  }

 private:
  Policy policy_;
  int link_count_;
  int cursor_ = 0;
  Rng rng_;
};

enum class ViolationMode : std::uint8_t {
  // Violators are advertised a per-LDNS TTL drawn once from U[min,max] and
  // honor it (violation emulated through diverse advertised TTLs).
  advertised,
  // Violators are advertised the nominal TTL and ignore it, applying their
  // own per-LDNS U[min,max] TTL instead.
  ignored,
};

struct TtlAssignment {
  bool violator = false;
  double advertised_s = 15.0;
  double effective_s = 15.0;
};

// Per-LDNS TTL assignment: honoring LDNS get the nominal TTL; the
// configured violator fraction gets a TTL drawn once from the violator
// range. Assignment happens on first sight and is fixed afterwards, so the
// same LDNS always sees the same TTL.
class TtlPolicy {
 public:
  struct Config {
    double nominal_ttl_s = 15.0;
    double violator_fraction = 0.4;
    ViolationMode mode = ViolationMode::advertised;
    std::int64_t violator_ttl_min_s = 5;
    std::int64_t violator_ttl_max_s = 600;
  };

  TtlPolicy(Config cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
    if (cfg_.violator_fraction < 0 || cfg_.violator_fraction > 1) {
      throw std::invalid_argument("ttl policy: violator fraction outside [0,1]");
    }
    if (!(cfg_.nominal_ttl_s > 0)) throw std::invalid_argument("ttl policy: nominal TTL must be > 0");
    if (cfg_.violator_ttl_min_s <= 0 || cfg_.violator_ttl_max_s < cfg_.violator_ttl_min_s) {
      throw std::invalid_argument("ttl policy: bad violator TTL range");
    }
  }

  const Config& config() const { return cfg_; }

  const TtlAssignment& assignment_for(std::int64_t ldns_id) {
    auto it = assigned_.find(ldns_id);
    if (it != assigned_.end()) return it->second;
    // Draw from a per-LDNS stream so assignments do not depend on the
    // order LDNS servers first appear.
    Rng rng(mix_seed(seed_, "ttl", static_cast<std::uint64_t>(ldns_id)));
    TtlAssignment a;
    a.violator = rng.uniform01() < cfg_.violator_fraction;
    if (!a.violator) {
      a.advertised_s = a.effective_s = cfg_.nominal_ttl_s;
    } else {
      const double drawn = static_cast<double>(
          rng.uniform_int(cfg_.violator_ttl_min_s, cfg_.violator_ttl_max_s));
      a.effective_s = drawn;
      a.advertised_s = cfg_.mode == ViolationMode::advertised ? drawn : cfg_.nominal_ttl_s;
    }
    return assigned_.emplace(ldns_id, a).first->second;
  }

  double advertised_ttl_for(std::int64_t ldns_id) { return assignment_for(ldns_id).advertised_s; }

 private:
  Config cfg_;
  std::uint64_t seed_;
  std::map<std::int64_t, TtlAssignment> assigned_;
};

// Decision log, written as CSV with one load column per link (the spec's
// two-link schema `t_seconds,ldns_id,chosen_link,advertised_ttl,load0_bps,
// load1_bps` extended with loadK columns when more links exist). Load cells
// are empty for decisions taken without a snapshot (RR).
inline void write_decision_csv(std::ostream& os, std::span<const BalancerDecision> log,
                               int link_count) {
  os << "t_seconds,ldns_id,chosen_link,advertised_ttl";
  for (int i = 0; i < link_count; ++i) os << ",load" << i << "_bps";
  os << '\n';
  char num[64];
  for (const BalancerDecision& d : log) {
    os << format_seconds(d.t) << ',' << d.ldns_id << ',' << d.chosen_link << ',';
    std::snprintf(num, sizeof(num), "%.6f", d.advertised_ttl_s);
    os << num;
    for (int i = 0; i < link_count; ++i) {
      os << ',';
      if (i < static_cast<int>(d.link_loads_bps.size())) {
        std::snprintf(num, sizeof(num), "%.6f", d.link_loads_bps[i]);
        os << num;
      }
    }
    os << '\n';
  }
}

inline void write_decision_csv(const std::string& path, std::span<const BalancerDecision> log,
                               int link_count) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("decision log: cannot open '" + path + "'");
  write_decision_csv(os, log, link_count);
}

}  // namespace ite
