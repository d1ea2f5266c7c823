#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "oirbench/bench.hpp"
#include "oirbench/config.hpp"
#include "oirbench/federated.hpp"
#include "oirbench/ledger.hpp"
#include "oirbench/metrics.hpp"
#include "oirbench/remote.hpp"
#include "oirbench/report.hpp"
#include "oirbench/rng.hpp"
#include "oirbench/sim.hpp"
#include "oirbench/workload.hpp"

namespace oirbench {

namespace runner_detail {

/// Rounds share nothing: fresh seeds per round and, because a remote
/// registry can't be wiped between rounds, window bases far enough apart
/// that rounds never overlap in time.
inline WorkloadSpec round_spec(const RunConfig& cfg, int round, TimeInstant& t0) {
  WorkloadSpec spec = cfg.workload;
  const std::uint64_t round_seed =
      RngStream::derive_seed(cfg.seed, "round." + std::to_string(round));
  spec.seed = RngStream::derive_seed(round_seed, "workload");
  const Duration stride = spec.window_duration + spec.gap;
  t0 = static_cast<TimeInstant>(round - 1) * static_cast<TimeInstant>(spec.n_tx + 1) * stride;
  return spec;
}

inline std::uint64_t backend_seed(const RunConfig& cfg, int round) {
  const std::uint64_t round_seed =
      RngStream::derive_seed(cfg.seed, "round." + std::to_string(round));
  return RngStream::derive_seed(round_seed, "backend");
}

}  // namespace runner_detail

inline std::vector<TxRecord> run_one_round(const RunConfig& cfg, int round) {
  TimeInstant t0 = 0;
  const WorkloadSpec spec = runner_detail::round_spec(cfg, round, t0);
  const std::vector<CreateOirRequest> reqs = generate_workload(spec, t0);
  const std::uint64_t bseed = runner_detail::backend_seed(cfg, round);

  if (cfg.mode == RunMode::Virtual) {
    Simulation sim;
    if (cfg.backend == BackendKind::Federated) {
      FederatedSim backend(sim, cfg.federated, bseed);
      return run_round_virtual(
          sim, [&backend](const CreateOirRequest& r, auto done) { backend.submit(r, done); },
          reqs, spec.rate_tps, spec.workers);
    }
    LedgerSim backend(sim, cfg.ledger, bseed);
    return run_round_virtual(
        sim, [&backend](const CreateOirRequest& r, auto done) { backend.submit(r, done); },
        reqs, spec.rate_tps, spec.workers);
  }

  if (cfg.backend == BackendKind::Federated) {
    FederatedLive backend(cfg.federated, bseed, cfg.service.inject_delays);
    return run_round_wall(
        [&backend](const CreateOirRequest& r, int) {
          return WallResult{backend.submit_blocking(r).outcome, std::nullopt};
        },
        reqs, spec.rate_tps, spec.workers);
  }
  if (cfg.backend == BackendKind::Ledger) {
    LedgerLive backend(cfg.ledger, bseed, cfg.service.inject_delays);
    return run_round_wall(
        [&backend](const CreateOirRequest& r, int) {
          return WallResult{backend.submit_blocking(r).outcome, std::nullopt};
        },
        reqs, spec.rate_tps, spec.workers);
  }
  RemoteBackend backend(cfg.remote_url, spec.workers, cfg.remote_deadline);
  return run_round_wall(
      [&backend](const CreateOirRequest& r, int worker) { return backend.submit(r, worker); },
      reqs, spec.rate_tps, spec.workers);
}

inline BenchReport run_benchmark(const RunConfig& cfg) {
  cfg.validate();
  BenchReport report;
  report.backend = std::string(to_string(cfg.backend));
  report.mode = std::string(to_string(cfg.mode));
  report.seed = cfg.seed;
  report.rate_tps = cfg.workload.rate_tps;
  report.n_tx = cfg.workload.n_tx;
  report.config_echo = to_json(cfg);
  report.rounds.reserve(static_cast<std::size_t>(cfg.rounds));
  for (int round = 1; round <= cfg.rounds; ++round) {
    report.rounds.push_back(aggregate(run_one_round(cfg, round), round));
  }
  report.mean = summarize(report.rounds);
  return report;
}

struct ReportPaths {
  std::string csv;
  std::string json;
};

inline ReportPaths write_reports(const BenchReport& report, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ReportPaths paths;
  paths.csv = (fs::path(out_dir) / "report.csv").string();
  paths.json = (fs::path(out_dir) / "report.json").string();
  {
    std::ofstream csv(paths.csv, std::ios::binary);
    csv << to_csv(report);
  }
  {
    std::ofstream json(paths.json, std::ios::binary);
    json << report_to_json(report).dump(2) << '\n';
  }
  return paths;
}

}  // namespace oirbench
