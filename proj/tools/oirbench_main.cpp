#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "oirbench/config.hpp"
#include "oirbench/federated.hpp"
#include "oirbench/ledger.hpp"
#include "oirbench/remote.hpp"
#include "oirbench/runner.hpp"
#include "oirbench/service.hpp"

namespace {

volatile std::sig_atomic_t g_stop = 0;

extern "C" void handle_signal(int) { g_stop = 1; }

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;

struct CliArgs {
  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string out_dir;
  std::string mode;
};

/// Seed precedence: --seed beats OIRBENCH_SEED beats the config file.
bool apply_seed_overrides(const CliArgs& args, oirbench::RunConfig& cfg, std::string& err) {
  if (const char* env = std::getenv("OIRBENCH_SEED")) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || end == env || *end != '\0') {
      err = "OIRBENCH_SEED is not an unsigned integer: " + std::string(env);
      return false;
    }
    cfg.seed = static_cast<std::uint64_t>(v);
  }
  if (args.seed_set) cfg.seed = args.seed;
  return true;
}

int cmd_run(const CliArgs& args) {
  oirbench::RunConfig cfg;
  try {
    cfg = oirbench::load_run_config(args.config_path);
    std::string err;
    if (!apply_seed_overrides(args, cfg, err)) {
      std::cerr << "oirbench: " << err << '\n';
      return kExitConfig;
    }
    if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
    if (!args.mode.empty()) {
      if (args.mode == "virtual") cfg.mode = oirbench::RunMode::Virtual;
      else if (args.mode == "wall") cfg.mode = oirbench::RunMode::Wall;
      else throw oirbench::ConfigError("--mode must be virtual or wall");
    }
    cfg.validate();
  } catch (const oirbench::ConfigError& e) {
    std::cerr << "oirbench: config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    const oirbench::BenchReport report = oirbench::run_benchmark(cfg);
    const oirbench::ReportPaths paths = oirbench::write_reports(report, cfg.out_dir);
    for (const oirbench::RoundMetrics& r : report.rounds) {
      std::cout << "round " << r.round << ": committed " << r.committed << "/" << r.sent
                << ", throughput " << r.throughput_tps << " tps";
      if (r.has_latency) std::cout << ", p50 " << r.p50_ms << " ms";
      std::cout << '\n';
    }
    std::cout << "mean: loss_rate " << report.mean.loss_rate << ", throughput "
              << report.mean.throughput_tps << " tps";
    if (report.mean.has_latency) {
      std::cout << ", p50 " << report.mean.p50_ms << " ms, p90 " << report.mean.p90_ms << " ms";
    }
    std::cout << '\n';
    std::cout << "wrote " << paths.csv << " and " << paths.json << std::endl;
    return kExitOk;
  } catch (const oirbench::BackendUnavailable& e) {
    std::cerr << "oirbench: backend failure: " << e.what() << '\n';
    return kExitBackend;
  } catch (const std::exception& e) {
    std::cerr << "oirbench: run failed: " << e.what() << '\n';
    return kExitBackend;
  }
}

template <typename Backend>
int serve_loop(Backend& backend, const oirbench::RunConfig& cfg) {
  oirbench::ServiceRunner runner;
  if (!runner.start(backend, cfg.service.host, cfg.service.port)) {
    std::cerr << "oirbench: cannot bind " << cfg.service.host << ":" << cfg.service.port << '\n';
    return kExitBackend;
  }
  std::cout << "listening on http://" << cfg.service.host << ":" << runner.port() << std::endl;
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  runner.stop();
  return kExitOk;
}

int cmd_serve(const CliArgs& args) {
  oirbench::RunConfig cfg;
  try {
    cfg = oirbench::load_run_config(args.config_path);
    std::string err;
    if (!apply_seed_overrides(args, cfg, err)) {
      std::cerr << "oirbench: " << err << '\n';
      return kExitConfig;
    }
    if (cfg.backend == oirbench::BackendKind::Remote) {
      throw oirbench::ConfigError("serve requires a federated or ledger backend");
    }
    cfg.validate();
  } catch (const oirbench::ConfigError& e) {
    std::cerr << "oirbench: config error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  const std::uint64_t seed = oirbench::RngStream::derive_seed(cfg.seed, "service");
  try {
    if (cfg.backend == oirbench::BackendKind::Federated) {
      oirbench::FederatedLive backend(cfg.federated, seed, cfg.service.inject_delays);
      return serve_loop(backend, cfg);
    }
    oirbench::LedgerLive backend(cfg.ledger, seed, cfg.service.inject_delays);
    return serve_loop(backend, cfg);
  } catch (const std::exception& e) {
    std::cerr << "oirbench: serve failed: " << e.what() << '\n';
    return kExitBackend;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"operational intent registration benchmark"};
  app.require_subcommand(1);

  CliArgs run_args;
  CLI::App* run = app.add_subcommand("run", "execute a benchmark and write reports");
  run->add_option("--config", run_args.config_path, "config file (JSON)")->required();
  run->add_option("--seed", run_args.seed, "override the seed")
      ->each([&run_args](const std::string&) { run_args.seed_set = true; });
  run->add_option("--out-dir", run_args.out_dir, "override the report directory");
  run->add_option("--mode", run_args.mode, "override the run mode (virtual|wall)");

  CliArgs serve_args;
  CLI::App* serve = app.add_subcommand("serve", "expose a backend over HTTP");
  serve->add_option("--config", serve_args.config_path, "config file (JSON)")->required();
  serve->add_option("--seed", serve_args.seed, "override the seed")
      ->each([&serve_args](const std::string&) { serve_args.seed_set = true; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (run->parsed()) return cmd_run(run_args);
  return cmd_serve(serve_args);
}
