#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "itelab/balancer.hpp"
#include "itelab/model.hpp"
#include "itelab/ticks.hpp"

namespace ite {

// Decision-to-traffic delay: the lag between a resolution and the arrival
// of its traffic (DNS response, TCP handshake, slow start). Either a fixed
// delta or a multiple of the client's path RTT.
struct DelayModel {
  enum class Kind : std::uint8_t { fixed, rtt_derived };
  Kind kind = Kind::rtt_derived;
  double fixed_delta_s = 0.0;
  double rtt_multiplier = 3.0;

  double delta_s(double path_rtt_s) const {
    return kind == Kind::fixed ? fixed_delta_s : rtt_multiplier * path_rtt_s;
  }
};

enum class HiddenClientsKind : std::uint8_t { uniform, pareto };

// Which generator drives the run: the closed-loop DNS workload, or one of
// the two synthetic models used for the staleness-vs-variance study.
enum class TrafficModel : std::uint8_t { closed_loop, cbr, pareto };

// One experiment configuration. Serializes to the versioned key-value
// scenario format; `variant` lines override base fields per named variant.
struct Scenario {
  std::string name = "scenario";
  TrafficModel traffic_model = TrafficModel::closed_loop;
  double duration_s = 600.0;
  int links = 2;
  int ldns_count = 46;

  HiddenClientsKind hidden_clients_kind = HiddenClientsKind::uniform;
  int hidden_clients_min = 1;
  int hidden_clients_max = 5;
  double hidden_clients_pareto_shape = 1.2;
  int hidden_clients_cap = 50;

  double violator_fraction = 0.4;
  ViolationMode violation_mode = ViolationMode::advertised;
  double nominal_ttl_s = 15.0;
  std::int64_t violator_ttl_min_s = 5;
  std::int64_t violator_ttl_max_s = 600;
  double noncaching_fraction = 0.0;

  double sleep_mean_s = 35.0;
  SizeKind size_kind = SizeKind::lognormal_truncated;
  double size_mean_bytes = 225e3;
  double size_sigma = 1.5;
  double size_cap_bytes = 625e3;

  double path_rate_min_bps = 5e5;
  double path_rate_max_bps = 1e7;
  double path_rtt_min_s = 0.010;
  double path_rtt_max_s = 0.300;
  double flow_rate_cap_bps = 0.0;  // 0 = uncapped

  DelayModel::Kind delta_kind = DelayModel::Kind::rtt_derived;
  double delta_fixed_s = 0.0;
  double delta_rtt_multiplier = 3.0;

  Policy policy = Policy::round_robin;
  double mb_window_s = 10.0;
  double small_window_s = 0.1;
  double timescale_s = 20.0;
  double eps_step_s = 1.0;

  std::uint64_t seed = 1;
  bool emit_correlation_logs = false;
  int correlation_shared_as_every = 0;  // every Nth LDNS shares an AS; 0 = off

  // Synthetic CBR model (traffic_model cbr).
  int cbr_flow_count = 200;
  double cbr_flow_size_bytes = 1e6;
  double cbr_flow_rate_bps = 2e6;
  int cbr_packet_bytes = 1500;
  bool cbr_poisson_arrivals = true;
  double cbr_arrival_mean_gap_s = 0.5;

  // Synthetic Pareto renewal model (traffic_model pareto).
  int pareto_source_count = 24;
  double pareto_shape = 1.5;
  double pareto_mean_gap_s = 0.02;
  int pareto_packet_bytes = 1500;
  double pareto_source_arrival_mean_gap_s = 10.0;

  struct Variant {
    std::string name;
    std::vector<std::pair<std::string, std::string>> overrides;
    friend bool operator==(const Variant&, const Variant&) = default;
  };
  std::vector<Variant> variants;

  friend bool operator==(const Scenario&, const Scenario&) = default;

  SizeDistribution size_distribution() const {
    return SizeDistribution{size_kind, size_mean_bytes, size_cap_bytes, size_sigma};
  }
  DelayModel delay_model() const { return DelayModel{delta_kind, delta_fixed_s, delta_rtt_multiplier}; }
  TtlPolicy::Config ttl_config() const {
    return TtlPolicy::Config{nominal_ttl_s, violator_fraction, violation_mode,
                             violator_ttl_min_s, violator_ttl_max_s};
  }
  Tick duration_ticks() const { return from_seconds(duration_s); }

  // Every violated field, not just the first.
  std::vector<std::string> validate() const;
  void validate_or_throw() const;
};

namespace scenario_detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct Field {
  std::string_view key;
  std::function<std::string(const Scenario&)> get;
  std::function<void(Scenario&, std::string_view)> set;
};

inline double parse_double(std::string_view s) {
  try {
    std::size_t used = 0;
    const std::string tmp(s);
    const double v = std::stod(tmp, &used);
    if (used != tmp.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("bad numeric value '" + std::string(s) + "'");
  }
}

inline std::int64_t parse_int(std::string_view s) {
  std::int64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("bad integer value '" + std::string(s) + "'");
  }
  return v;
}

inline std::uint64_t parse_uint(std::string_view s) {
  std::uint64_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    throw std::invalid_argument("bad unsigned value '" + std::string(s) + "'");
  }
  return v;
}

inline bool parse_bool(std::string_view s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("bad boolean value '" + std::string(s) + "'");
}

#define ITELAB_SCN_D(keyname, member)                                          \
  Field{keyname, [](const Scenario& s) { return format_double(s.member); },    \
        [](Scenario& s, std::string_view v) { s.member = parse_double(v); }}
#define ITELAB_SCN_I(keyname, member)                                          \
  Field{keyname, [](const Scenario& s) { return std::to_string(s.member); },   \
        [](Scenario& s, std::string_view v) {                                  \
          s.member = static_cast<decltype(s.member)>(parse_int(v));            \
        }}
#define ITELAB_SCN_B(keyname, member)                                          \
  Field{keyname,                                                               \
        [](const Scenario& s) { return std::string(s.member ? "true" : "false"); }, \
        [](Scenario& s, std::string_view v) { s.member = parse_bool(v); }}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      Field{"name", [](const Scenario& s) { return s.name; },
            [](Scenario& s, std::string_view v) { s.name = std::string(v); }},
      Field{"traffic_model",
            [](const Scenario& s) {
              switch (s.traffic_model) {
                case TrafficModel::cbr: return std::string("cbr");
                case TrafficModel::pareto: return std::string("pareto");
                default: return std::string("closed_loop");
              }
            },
            [](Scenario& s, std::string_view v) {
              if (v == "closed_loop") s.traffic_model = TrafficModel::closed_loop;
              else if (v == "cbr") s.traffic_model = TrafficModel::cbr;
              else if (v == "pareto") s.traffic_model = TrafficModel::pareto;
              else throw std::invalid_argument("bad traffic_model '" + std::string(v) + "'");
            }},
      ITELAB_SCN_D("duration_s", duration_s),
      ITELAB_SCN_I("links", links),
      ITELAB_SCN_I("ldns_count", ldns_count),
      Field{"hidden_clients_kind",
            [](const Scenario& s) {
              return std::string(s.hidden_clients_kind == HiddenClientsKind::uniform ? "uniform"
                                                                                     : "pareto");
            },
            [](Scenario& s, std::string_view v) {
              if (v == "uniform") s.hidden_clients_kind = HiddenClientsKind::uniform;
              else if (v == "pareto") s.hidden_clients_kind = HiddenClientsKind::pareto;
              else throw std::invalid_argument("bad hidden_clients_kind '" + std::string(v) + "'");
            }},
      ITELAB_SCN_I("hidden_clients_min", hidden_clients_min),
      ITELAB_SCN_I("hidden_clients_max", hidden_clients_max),
      ITELAB_SCN_D("hidden_clients_pareto_shape", hidden_clients_pareto_shape),
      ITELAB_SCN_I("hidden_clients_cap", hidden_clients_cap),
      ITELAB_SCN_D("violator_fraction", violator_fraction),
      Field{"violation_mode",
            [](const Scenario& s) {
              return std::string(s.violation_mode == ViolationMode::advertised ? "advertised"
                                                                               : "ignored");
            },
            [](Scenario& s, std::string_view v) {
              if (v == "advertised") s.violation_mode = ViolationMode::advertised;
              else if (v == "ignored") s.violation_mode = ViolationMode::ignored;
              else throw std::invalid_argument("bad violation_mode '" + std::string(v) + "'");
            }},
      ITELAB_SCN_D("nominal_ttl_s", nominal_ttl_s),
      ITELAB_SCN_I("violator_ttl_min_s", violator_ttl_min_s),
      ITELAB_SCN_I("violator_ttl_max_s", violator_ttl_max_s),
      ITELAB_SCN_D("noncaching_fraction", noncaching_fraction),
      ITELAB_SCN_D("sleep_mean_s", sleep_mean_s),
      Field{"size_kind",
            [](const Scenario& s) {
              return std::string(s.size_kind == SizeKind::fixed ? "fixed" : "lognormal");
            },
            [](Scenario& s, std::string_view v) {
              if (v == "fixed") s.size_kind = SizeKind::fixed;
              else if (v == "lognormal") s.size_kind = SizeKind::lognormal_truncated;
              else throw std::invalid_argument("bad size_kind '" + std::string(v) + "'");
            }},
      ITELAB_SCN_D("size_mean_bytes", size_mean_bytes),
      ITELAB_SCN_D("size_sigma", size_sigma),
      ITELAB_SCN_D("size_cap_bytes", size_cap_bytes),
      ITELAB_SCN_D("path_rate_min_bps", path_rate_min_bps),
      ITELAB_SCN_D("path_rate_max_bps", path_rate_max_bps),
      ITELAB_SCN_D("path_rtt_min_s", path_rtt_min_s),
      ITELAB_SCN_D("path_rtt_max_s", path_rtt_max_s),
      ITELAB_SCN_D("flow_rate_cap_bps", flow_rate_cap_bps),
      Field{"delta_kind",
            [](const Scenario& s) {
              return std::string(s.delta_kind == DelayModel::Kind::fixed ? "fixed" : "rtt");
            },
            [](Scenario& s, std::string_view v) {
              if (v == "fixed") s.delta_kind = DelayModel::Kind::fixed;
              else if (v == "rtt") s.delta_kind = DelayModel::Kind::rtt_derived;
              else throw std::invalid_argument("bad delta_kind '" + std::string(v) + "'");
            }},
      ITELAB_SCN_D("delta_fixed_s", delta_fixed_s),
      ITELAB_SCN_D("delta_rtt_multiplier", delta_rtt_multiplier),
      Field{"policy", [](const Scenario& s) { return policy_name(s.policy); },
            [](Scenario& s, std::string_view v) { s.policy = policy_from_name(v); }},
      ITELAB_SCN_D("mb_window_s", mb_window_s),
      ITELAB_SCN_D("small_window_s", small_window_s),
      ITELAB_SCN_D("timescale_s", timescale_s),
      ITELAB_SCN_D("eps_step_s", eps_step_s),
      Field{"seed", [](const Scenario& s) { return std::to_string(s.seed); },
            [](Scenario& s, std::string_view v) { s.seed = parse_uint(v); }},
      ITELAB_SCN_B("emit_correlation_logs", emit_correlation_logs),
      ITELAB_SCN_I("correlation_shared_as_every", correlation_shared_as_every),
      ITELAB_SCN_I("cbr_flow_count", cbr_flow_count),
      ITELAB_SCN_D("cbr_flow_size_bytes", cbr_flow_size_bytes),
      ITELAB_SCN_D("cbr_flow_rate_bps", cbr_flow_rate_bps),
      ITELAB_SCN_I("cbr_packet_bytes", cbr_packet_bytes),
      ITELAB_SCN_B("cbr_poisson_arrivals", cbr_poisson_arrivals),
      ITELAB_SCN_D("cbr_arrival_mean_gap_s", cbr_arrival_mean_gap_s),
      ITELAB_SCN_I("pareto_source_count", pareto_source_count),
      ITELAB_SCN_D("pareto_shape", pareto_shape),
      ITELAB_SCN_D("pareto_mean_gap_s", pareto_mean_gap_s),
      ITELAB_SCN_I("pareto_packet_bytes", pareto_packet_bytes),
      ITELAB_SCN_D("pareto_source_arrival_mean_gap_s", pareto_source_arrival_mean_gap_s),
  };
  return table;
}

#undef ITELAB_SCN_D
#undef ITELAB_SCN_I
#undef ITELAB_SCN_B

inline const Field* find_field(std::string_view key) {
  for (const Field& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace scenario_detail

inline constexpr std::string_view kScenarioHeader = "itelab-scenario v1";

inline std::string serialize_scenario(const Scenario& sc) {
  std::string out(kScenarioHeader);
  out += '\n';
  for (const auto& f : scenario_detail::fields()) {
    out += f.key;
    out += ' ';
    out += f.get(sc);
    out += '\n';
  }
  for (const auto& v : sc.variants) {
    out += "variant ";
    out += v.name;
    out += ' ';
    bool first = true;
    for (const auto& [k, val] : v.overrides) {
      if (!first) out += ',';
      first = false;
      out += k;
      out += '=';
      out += val;
    }
    out += '\n';
  }
  return out;
}

inline Scenario parse_scenario(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kScenarioHeader) {
    throw std::invalid_argument("scenario: missing '" + std::string(kScenarioHeader) + "' header");
  }
  Scenario sc;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    std::string_view sv(line);
    while (!sv.empty() && (sv.back() == '\r' || sv.back() == ' ')) sv.remove_suffix(1);
    while (!sv.empty() && sv.front() == ' ') sv.remove_prefix(1);
    if (sv.empty() || sv.front() == '#') continue;
    const std::size_t sp = sv.find(' ');
    if (sp == std::string_view::npos) {
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": expected 'key value'");
    }
    const std::string_view key = sv.substr(0, sp);
    std::string_view value = sv.substr(sp + 1);
    while (!value.empty() && value.front() == ' ') value.remove_prefix(1);
    if (key == "variant") {
      const std::size_t sp2 = value.find(' ');
      if (sp2 == std::string_view::npos) {
        throw std::invalid_argument("scenario line " + std::to_string(lineno) +
                                    ": variant needs a name and overrides");
      }
      Scenario::Variant var;
      var.name = std::string(value.substr(0, sp2));
      std::string_view rest = value.substr(sp2 + 1);
      while (!rest.empty()) {
        const std::size_t comma = rest.find(',');
        const std::string_view item = rest.substr(0, comma);
        const std::size_t eq = item.find('=');
        if (eq == std::string_view::npos || eq == 0) {
          throw std::invalid_argument("scenario line " + std::to_string(lineno) +
                                      ": variant override must be key=value");
        }
        const std::string_view okey = item.substr(0, eq);
        if (scenario_detail::find_field(okey) == nullptr) {
          throw std::invalid_argument("scenario line " + std::to_string(lineno) +
                                      ": unknown variant key '" + std::string(okey) + "'");
        }
        var.overrides.emplace_back(std::string(okey), std::string(item.substr(eq + 1)));
        if (comma == std::string_view::npos) break;
        rest = rest.substr(comma + 1);
      }
      sc.variants.push_back(std::move(var));
      continue;
    }
    const scenario_detail::Field* f = scenario_detail::find_field(key);
    if (f == nullptr) {
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": unknown key '" +
                                  std::string(key) + "'");
    }
    try {
      f->set(sc, value);
    } catch (const std::exception& e) {
      throw std::invalid_argument("scenario line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return sc;
}

inline Scenario parse_scenario(const std::string& text) {
  std::istringstream is(text);
  return parse_scenario(is);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("scenario: cannot open '" + path + "'");
  return parse_scenario(is);
}

// Base scenario with one variant's overrides applied. The result carries
// the variant's name and no variant list of its own.
inline Scenario materialize_variant(const Scenario& base, const Scenario::Variant& var) {
  Scenario sc = base;
  sc.variants.clear();
  sc.name = base.name + "." + var.name;
  for (const auto& [key, value] : var.overrides) {
    const scenario_detail::Field* f = scenario_detail::find_field(key);
    if (f == nullptr) throw std::invalid_argument("variant: unknown key '" + key + "'");
    f->set(sc, value);
  }
  return sc;
}

inline std::vector<std::string> Scenario::validate() const {
  std::vector<std::string> bad;
  auto require = [&bad](bool ok, const char* msg) {
    if (!ok) bad.emplace_back(msg);
  };
  require(duration_s > 0, "duration_s must be > 0");
  require(links >= 2, "links must be >= 2");
  require(ldns_count >= 1, "ldns_count must be >= 1");
  require(hidden_clients_min >= 1, "hidden_clients_min must be >= 1");
  require(hidden_clients_max >= hidden_clients_min,
          "hidden_clients_max must be >= hidden_clients_min");
  require(hidden_clients_pareto_shape > 0, "hidden_clients_pareto_shape must be > 0");
  require(hidden_clients_cap >= 1, "hidden_clients_cap must be >= 1");
  require(violator_fraction >= 0 && violator_fraction <= 1,
          "violator_fraction must be in [0,1]");
  require(nominal_ttl_s > 0, "nominal_ttl_s must be > 0");
  require(violator_ttl_min_s > 0, "violator_ttl_min_s must be > 0");
  require(violator_ttl_max_s >= violator_ttl_min_s,
          "violator_ttl_max_s must be >= violator_ttl_min_s");
  require(noncaching_fraction >= 0 && noncaching_fraction <= 1,
          "noncaching_fraction must be in [0,1]");
  require(sleep_mean_s > 0, "sleep_mean_s must be > 0");
  require(size_mean_bytes > 0, "size_mean_bytes must be > 0");
  if (size_kind == SizeKind::lognormal_truncated) {
    require(size_sigma > 0, "size_sigma must be > 0");
    require(size_cap_bytes >= size_mean_bytes, "size_cap_bytes must be >= size_mean_bytes");
  }
  require(path_rate_min_bps > 0, "path_rate_min_bps must be > 0");
  require(path_rate_max_bps >= path_rate_min_bps,
          "path_rate_max_bps must be >= path_rate_min_bps");
  require(path_rtt_min_s > 0, "path_rtt_min_s must be > 0");
  require(path_rtt_max_s >= path_rtt_min_s, "path_rtt_max_s must be >= path_rtt_min_s");
  require(flow_rate_cap_bps >= 0, "flow_rate_cap_bps must be >= 0");
  require(delta_fixed_s >= 0, "delta_fixed_s must be >= 0");
  require(delta_rtt_multiplier >= 0, "delta_rtt_multiplier must be >= 0");
  require(small_window_s > 0, "small_window_s must be > 0");
  require(mb_window_s >= small_window_s, "mb_window_s must be >= small_window_s");
  if (small_window_s > 0 && mb_window_s >= small_window_s) {
    const double ratio = mb_window_s / small_window_s;
    require(std::abs(ratio - std::llround(ratio)) < 1e-9,
            "mb_window_s must be an integer multiple of small_window_s");
  }
  require(timescale_s > 0, "timescale_s must be > 0");
  require(eps_step_s > 0, "eps_step_s must be > 0");
  require(correlation_shared_as_every >= 0, "correlation_shared_as_every must be >= 0");
  if (traffic_model == TrafficModel::cbr) {
    require(cbr_flow_count >= 1, "cbr_flow_count must be >= 1");
    require(cbr_flow_size_bytes > 0, "cbr_flow_size_bytes must be > 0");
    require(cbr_flow_rate_bps > 0, "cbr_flow_rate_bps must be > 0");
    require(cbr_packet_bytes >= 1, "cbr_packet_bytes must be >= 1");
    require(cbr_arrival_mean_gap_s > 0, "cbr_arrival_mean_gap_s must be > 0");
  }
  if (traffic_model == TrafficModel::pareto) {
    require(pareto_source_count >= 1, "pareto_source_count must be >= 1");
    require(pareto_shape > 1, "pareto_shape must be > 1");
    require(pareto_mean_gap_s > 0, "pareto_mean_gap_s must be > 0");
    require(pareto_packet_bytes >= 1, "pareto_packet_bytes must be >= 1");
    require(pareto_source_arrival_mean_gap_s > 0, "pareto_source_arrival_mean_gap_s must be > 0");
  }
  return bad;
}

inline void Scenario::validate_or_throw() const {
  const auto bad = validate();
  if (bad.empty()) return;
  std::string msg = "invalid scenario:";
  for (const auto& b : bad) {
    msg += "\n  - ";
    msg += b;
  }
  throw std::invalid_argument(msg);
}

// FNV-1a over the canonical serialization; changes iff any field changes.
inline std::uint64_t scenario_digest(const Scenario& sc) {
  const std::string text = serialize_scenario(sc);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string scenario_digest_hex(const Scenario& sc) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(scenario_digest(sc)));
  return buf;
}

}  // namespace ite
