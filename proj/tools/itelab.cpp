// itelab: DNS-based ingress traffic engineering laboratory.
//
// Subcommands:
//   simulate  run a scenario file (every variant) through the event-driven
//             workload model and write trace / error-series / decision CSVs
//   replay    re-run hypothetical MB balancing over a recorded trace for a
//             list of window sizes W
//   analyze   LDNS/client correlation, minimum inter-arrival and
//             distribution fits over DNS + flow logs
//   serve     run the authoritative UDP nameserver with RR or MB balancing

#include <csignal>
#include <iostream>

#include <CLI11.hpp>

#include "itelab/cli.hpp"

namespace {
std::atomic<bool> g_stop{false};
void handle_signal(int) { g_stop.store(true); }
}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DNS-based ingress traffic engineering laboratory"};
  app.require_subcommand(1);

  std::string scenario_path;
  std::string trace_path;
  std::string out_dir = ite::cli::default_out_root();
  std::uint64_t seed = ite::cli::kDefaultSeed;
  bool seed_given = false;
  std::vector<double> windows;
  double timescale = 20.0;

  auto* simulate = app.add_subcommand("simulate", "run a scenario file");
  simulate->add_option("--scenario", scenario_path, "scenario file (.scn)")->required();
  simulate->add_option("--seed", seed, "override the scenario seed")
      ->each([&seed_given](const std::string&) { seed_given = true; });
  simulate->add_option("--out", out_dir, "output directory (default $ITELAB_OUT or ./out)");

  auto* replay = app.add_subcommand("replay", "replay MB decisions over a trace");
  replay->add_option("trace", trace_path, "trace CSV with LDNS attribution")->required();
  replay->add_option("--window", windows, "hypothetical W values in seconds (repeatable)");
  replay->add_option("--timescale", timescale, "averaging timescale I in seconds");
  replay->add_option("--out", out_dir, "output directory");

  std::string dns_log, flow_log, prefix_table, truth_path;
  double advertised_ttl = 15.0;
  auto* analyze = app.add_subcommand("analyze", "correlate DNS and flow logs");
  analyze->add_option("dns_log", dns_log, "DNS log CSV (t,ldns_addr,qname)")->required();
  analyze->add_option("flow_log", flow_log, "flow log CSV (t,client_addr,bytes)")->required();
  analyze->add_option("prefix_table", prefix_table, "prefix-to-AS table (prefix/len,asn)")
      ->required();
  analyze->add_option("--truth", truth_path, "simulator ground-truth CSV to check against");
  analyze->add_option("--ttl", advertised_ttl, "advertised TTL for the honoring estimate");
  analyze->add_option("--out", out_dir, "output directory");

  std::string zone_path, policy = "rr", feed_path;
  std::uint16_t port = 0;
  auto* serve = app.add_subcommand("serve", "run the authoritative nameserver");
  serve->add_option("--zone", zone_path, "zone config file")->required();
  serve->add_option("--policy", policy, "rr or mb")
      ->check(CLI::IsMember({"rr", "mb", "random", "static"}));
  serve->add_option("--port", port, "UDP port (0 = ephemeral, written to server_port.txt)");
  serve->add_option("--feed", feed_path, "trace CSV driving the link monitors");
  serve->add_option("--seed", seed, "TTL-assignment / tie-break seed");
  serve->add_option("--out", out_dir, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ite::cli::kExitValidation;
  }

  if (simulate->parsed()) {
    return ite::cli::cmd_simulate(scenario_path,
                                  seed_given ? std::optional<std::uint64_t>(seed) : std::nullopt,
                                  out_dir);
  }
  if (replay->parsed()) {
    return ite::cli::cmd_replay(trace_path, windows, timescale, out_dir);
  }
  if (analyze->parsed()) {
    return ite::cli::cmd_analyze(dns_log, flow_log, prefix_table, out_dir,
                                 truth_path.empty() ? std::nullopt
                                                    : std::optional<std::string>(truth_path),
                                 advertised_ttl);
  }
  if (serve->parsed()) {
    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    return ite::cli::cmd_serve(zone_path, policy, port,
                               feed_path.empty() ? std::nullopt
                                                 : std::optional<std::string>(feed_path),
                               out_dir, seed, &g_stop);
  }
  return ite::cli::kExitValidation;
}
