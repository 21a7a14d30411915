#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "itelab/analysis.hpp"
#include "itelab/correlate.hpp"
#include "itelab/dns_server.hpp"
#include "itelab/replay.hpp"
#include "itelab/runner.hpp"

namespace ite::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultSeed = 7;

// Default output root: --out flag, else $ITELAB_OUT, else ./out.
inline std::string default_out_root() {
  if (const char* env = std::getenv("ITELAB_OUT"); env != nullptr && *env != '\0') {
    return env;
  }
  return "out";
}

inline void write_manifest(const std::string& path, const std::string& command,
                           const std::string& digest_hex, std::uint64_t seed,
                           const std::vector<std::string>& outputs, double wall_s) {
  nlohmann::json j;
  j["tool"] = "itelab";
  j["version"] = kToolVersion;
  j["command"] = command;
  j["scenario_digest"] = digest_hex;
  j["seed"] = seed;
  j["outputs"] = outputs;
  j["wall_seconds"] = wall_s;
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("manifest: cannot open '" + path + "'");
  os << j.dump(2) << '\n';
}

namespace cli_detail {

inline std::string fmt_w(double w) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", w);
  return buf;
}

struct VariantOutcome {
  std::string name;
  std::string dir;
  double median_epsilon = 0.0;
};

}  // namespace cli_detail

// Runs a scenario (every variant, or the base when none) and writes trace,
// error series, decision log, summary and manifest per variant under
// out_dir/<variant>/.
inline int cmd_simulate(const std::string& scenario_path, std::optional<std::uint64_t> seed,
                        const std::string& out_dir, std::ostream& diag = std::cerr) {
  namespace fs = std::filesystem;
  Scenario base;
  try {
    base = load_scenario(scenario_path);
  } catch (const std::invalid_argument& e) {
    diag << "itelab simulate: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    diag << "itelab simulate: " << e.what() << '\n';
    return kExitRuntime;
  }
  if (seed) base.seed = *seed;

  std::vector<Scenario> runs;
  if (base.variants.empty()) {
    runs.push_back(base);
  } else {
    for (const auto& v : base.variants) runs.push_back(materialize_variant(base, v));
  }

  for (const Scenario& sc : runs) {
    const auto bad = sc.validate();
    if (!bad.empty()) {
      diag << "itelab simulate: scenario '" << sc.name << "' is invalid:\n";
      for (const auto& b : bad) diag << "  - " << b << '\n';
      return kExitValidation;
    }
  }

  try {
    for (const Scenario& sc : runs) {
      const auto t0 = std::chrono::steady_clock::now();
      const RunOutput out = run_scenario(sc);
      const fs::path dir = fs::path(out_dir) / sc.name;
      fs::create_directories(dir);
      std::vector<std::string> outputs;
      auto out_path = [&dir, &outputs](const char* name) {
        const std::string p = (dir / name).string();
        outputs.push_back(p);
        return p;
      };

      write_trace_csv(out_path("trace.csv"), out.trace);
      write_error_series_csv(out_path("error_series.csv"), out.eps);
      write_summary_csv(out_path("summary.csv"), out.summary);
      if (sc.traffic_model == TrafficModel::closed_loop) {
        write_decision_csv(out_path("decisions.csv"), out.decisions, sc.links);
      }
      {
        std::ofstream os(out_path("scenario.scn"), std::ios::binary);
        os << serialize_scenario(sc);
      }
      if (sc.emit_correlation_logs && sc.traffic_model == TrafficModel::closed_loop) {
        const CorrelationLogs logs = make_correlation_logs(sc, out);
        write_file(out_path("dns_log.csv"), [&logs](std::ostream& os) { write_dns_log_csv(os, logs.dns); });
        write_file(out_path("flow_log.csv"),
                   [&logs](std::ostream& os) { write_flow_log_csv(os, logs.flows); });
        write_file(out_path("prefixes.txt"),
                   [&logs](std::ostream& os) { write_prefix_table(os, logs.prefixes); });
        write_file(out_path("ground_truth.csv"),
                   [&logs](std::ostream& os) { write_truth_csv(os, logs.truth); });
      }
      const double wall =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      write_manifest((dir / "manifest.json").string(), "simulate", scenario_digest_hex(sc),
                     sc.seed, outputs, wall);
      diag << sc.name << ": dns_requests=" << out.summary.dns_requests
           << " flows=" << out.summary.flows << " median_epsilon=" << out.summary.median_epsilon
           << '\n';
    }
  } catch (const std::invalid_argument& e) {
    diag << "itelab simulate: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    diag << "itelab simulate: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// Replays a recorded trace under hypothetical MB windows; writes one error
// series per W plus a `W,median_epsilon` summary.
inline int cmd_replay(const std::string& trace_path, const std::vector<double>& windows,
                      double timescale_s, const std::string& out_dir,
                      std::ostream& diag = std::cerr) {
  namespace fs = std::filesystem;
  if (windows.empty()) {
    diag << "itelab replay: empty window list, nothing to do\n";
    return kExitOk;
  }
  try {
    const std::vector<TraceRecord> trace = read_trace_csv(trace_path);
    fs::create_directories(out_dir);
    std::ofstream summary(fs::path(out_dir) / "replay_summary.csv", std::ios::binary);
    summary << "W,median_epsilon\n";
    for (const double w : windows) {
      ReplayConfig cfg;
      cfg.window_s = w;
      cfg.timescale_s = timescale_s;
      const ReplayResult res = replay_mb(trace, cfg);
      const std::string name = "replay_eps_W" + cli_detail::fmt_w(w) + ".csv";
      write_error_series_csv((fs::path(out_dir) / name).string(), res.eps);
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%g,%.6f\n", w,
                    res.eps.samples.empty() ? 1.0 : res.eps.median());
      summary << buf;
      diag << "W=" << w << ": decisions=" << res.decisions.size()
           << " median_epsilon=" << (res.eps.samples.empty() ? 1.0 : res.eps.median()) << '\n';
    }
  } catch (const std::invalid_argument& e) {
    diag << "itelab replay: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    diag << "itelab replay: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// The trace-study pipeline: LDNS/client association by origin AS, minimum
// inter-arrival distribution, clients-per-LDNS and bytes-per-client fits.
inline int cmd_analyze(const std::string& dns_log_path, const std::string& flow_log_path,
                       const std::string& prefix_path, const std::string& out_dir,
                       const std::optional<std::string>& truth_path = std::nullopt,
                       double advertised_ttl_s = 15.0, std::ostream& diag = std::cerr) {
  namespace fs = std::filesystem;
  try {
    std::ifstream dns_is(dns_log_path, std::ios::binary);
    if (!dns_is) throw std::runtime_error("cannot open '" + dns_log_path + "'");
    std::ifstream flow_is(flow_log_path, std::ios::binary);
    if (!flow_is) throw std::runtime_error("cannot open '" + flow_log_path + "'");
    const auto dns_log = read_dns_log_csv(dns_is);
    const auto flow_log = read_flow_log_csv(flow_is);
    const PrefixTable table = load_prefix_table(prefix_path);

    fs::create_directories(out_dir);
    const AssociationResult assoc = associate(dns_log, flow_log, table);

    {
      std::ofstream os(fs::path(out_dir) / "pairs.csv", std::ios::binary);
      os << "flow_index,flow_t,client_addr,ldns_addr,dns_t\n";
      for (const auto& p : assoc.pairs) {
        os << p.flow_index << ',' << format_seconds(flow_log[p.flow_index].t) << ','
           << format_ipv4(flow_log[p.flow_index].client_addr) << ',' << format_ipv4(p.ldns_addr)
           << ',' << format_seconds(p.dns_t) << '\n';
      }
    }

    const MinGapReport gaps = min_interarrival_per_ldns(dns_log);
    {
      std::vector<double> gap_samples;
      for (const auto& [addr, g] : gaps.per_ldns) gap_samples.push_back(g);
      std::ofstream os(fs::path(out_dir) / "min_interarrival_cdf.csv", std::ios::binary);
      write_cdf_csv(os, gap_samples, "min_gap_seconds");
    }

    // Clients per LDNS (from associated pairs) and bytes per client.
    std::map<std::uint32_t, std::set<std::uint32_t>> clients_of;
    for (const auto& p : assoc.pairs) {
      clients_of[p.ldns_addr].insert(flow_log[p.flow_index].client_addr);
    }
    std::vector<double> clients_per_ldns;
    for (const auto& [addr, clients] : clients_of) {
      clients_per_ldns.push_back(static_cast<double>(clients.size()));
    }
    std::map<std::uint32_t, double> bytes_of;
    for (const auto& f : flow_log) bytes_of[f.client_addr] += static_cast<double>(f.bytes);
    std::vector<double> bytes_per_client;
    for (const auto& [addr, b] : bytes_of) bytes_per_client.push_back(b);

    {
      std::ofstream os(fs::path(out_dir) / "clients_per_ldns_cdf.csv", std::ios::binary);
      write_cdf_csv(os, clients_per_ldns, "clients");
    }
    {
      std::ofstream os(fs::path(out_dir) / "bytes_per_client_cdf.csv", std::ios::binary);
      write_cdf_csv(os, bytes_per_client, "bytes");
    }

    std::ofstream fits(fs::path(out_dir) / "fits.csv", std::ios::binary);
    fits << "metric,family,param1,param2,goodness,selected\n";
    auto fit_metric = [&fits, &diag](const std::string& metric, const std::vector<double>& samples) {
      if (samples.size() < 10) {
        diag << "itelab analyze: skipping " << metric << " fits (" << samples.size()
             << " samples)\n";
        return;
      }
      try {
        const FitResult p = fit_distribution(samples, FitFamily::pareto);
        const FitResult l = fit_distribution(samples, FitFamily::lognormal);
        char buf[160];
        std::snprintf(buf, sizeof(buf), "%s,pareto,%.6g,%.6g,%.6g,%s\n", metric.c_str(),
                      p.shape_or_mu, p.scale_or_sigma, p.goodness,
                      p.goodness <= l.goodness ? "true" : "false");
        fits << buf;
        std::snprintf(buf, sizeof(buf), "%s,lognormal,%.6g,%.6g,%.6g,%s\n", metric.c_str(),
                      l.shape_or_mu, l.scale_or_sigma, l.goodness,
                      l.goodness < p.goodness ? "true" : "false");
        fits << buf;
      } catch (const std::invalid_argument& e) {
        diag << "itelab analyze: " << metric << " fit degenerate: " << e.what() << '\n';
      }
    };
    fit_metric("clients_per_ldns", clients_per_ldns);
    fit_metric("bytes_per_client", bytes_per_client);

    // Ground-truth check when the simulator's truth file is supplied.
    std::int64_t truth_correct = -1, truth_errors = -1;
    if (truth_path) {
      std::ifstream tis(*truth_path, std::ios::binary);
      if (!tis) throw std::runtime_error("cannot open '" + *truth_path + "'");
      const auto truth = read_truth_csv(tis);
      if (truth.size() != flow_log.size()) {
        throw std::invalid_argument("truth file rows do not match flow log rows");
      }
      truth_correct = 0;
      truth_errors = 0;
      for (const auto& p : assoc.pairs) {
        if (p.ldns_addr == truth[p.flow_index].ldns_addr) {
          ++truth_correct;
        } else {
          ++truth_errors;
        }
      }
    }

    {
      std::ofstream os(fs::path(out_dir) / "association_summary.csv", std::ios::binary);
      os << "key,value\n";
      os << "client_requests," << flow_log.size() << '\n';
      os << "pairs," << assoc.pairs.size() << '\n';
      os << "ignored_no_ldns," << assoc.ignored_no_ldns << '\n';
      os << "ignored_ambiguous," << assoc.ignored_ambiguous << '\n';
      char buf[64];
      std::snprintf(buf, sizeof(buf), "coverage_fraction,%.6f\n", assoc.coverage_fraction);
      os << buf;
      os << "ldns_with_min_gap," << gaps.per_ldns.size() << '\n';
      os << "ldns_single_request," << gaps.single_request.size() << '\n';
      std::snprintf(buf, sizeof(buf), "fraction_gap_ge_ttl,%.6f\n",
                    gaps.fraction_with_gap_at_least(advertised_ttl_s));
      os << buf;
      if (truth_correct >= 0) {
        os << "truth_correct," << truth_correct << '\n';
        os << "truth_errors," << truth_errors << '\n';
      }
    }
    diag << "analyze: " << assoc.pairs.size() << "/" << flow_log.size()
         << " associated (coverage " << assoc.coverage_fraction << ")\n";
  } catch (const std::invalid_argument& e) {
    diag << "itelab analyze: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    diag << "itelab analyze: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

// Long-running authoritative service. Writes the bound port to
// out_dir/server_port.txt once listening, serves until `stop` (or a
// signal wired by the caller) and dumps stats + decision log on exit.
inline int cmd_serve(const std::string& zone_path, const std::string& policy_name,
                     std::uint16_t port, const std::optional<std::string>& feed_path,
                     const std::string& out_dir, std::uint64_t seed,
                     std::atomic<bool>* stop = nullptr, std::ostream& diag = std::cerr) {
  namespace fs = std::filesystem;
  DnsServerConfig cfg;
  try {
    cfg.zone = load_zone_config(zone_path);
    cfg.zone.validate();
    cfg.policy = policy_from_name(policy_name);
    cfg.port = port;
    cfg.seed = seed;
    fs::create_directories(out_dir);
    cfg.decision_log_path = (fs::path(out_dir) / "server_decisions.csv").string();
  } catch (const std::invalid_argument& e) {
    diag << "itelab serve: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    diag << "itelab serve: " << e.what() << '\n';
    return kExitRuntime;
  }

  std::unique_ptr<MonitorFeed> feed;
  if (feed_path) {
    try {
      feed = std::make_unique<TraceMonitorFeed>(read_trace_csv(*feed_path));
    } catch (const std::invalid_argument& e) {
      diag << "itelab serve: feed: " << e.what() << '\n';
      return kExitValidation;
    } catch (const std::exception& e) {
      diag << "itelab serve: feed: " << e.what() << '\n';
      return kExitRuntime;
    }
  }

  try {
    DnsServer server(cfg, std::move(feed));
    server.bind();
    {
      std::ofstream os(fs::path(out_dir) / "server_port.txt", std::ios::binary);
      os << server.port() << '\n';
    }
    diag << "itelab serve: listening on " << cfg.zone.zone_name << " udp/" << server.port()
         << " policy=" << policy_name << '\n';
    std::thread waiter;
    if (stop != nullptr) {
      waiter = std::thread([stop, &server] {
        while (!stop->load()) std::this_thread::sleep_for(std::chrono::milliseconds(10));
        server.stop();
      });
    }
    server.run();
    if (waiter.joinable()) waiter.join();
    std::ofstream os(fs::path(out_dir) / "server_stats.txt", std::ios::binary);
    os << server.stats().to_text();
    diag << server.stats().to_text();
  } catch (const std::exception& e) {
    diag << "itelab serve: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace ite::cli
