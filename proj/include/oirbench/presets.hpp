#pragma once

#include <vector>

#include "oirbench/config.hpp"

namespace oirbench {

/// Shipped calibration presets. The delay parameters are tuned so the
/// virtual-mode sweep reproduces the published latency/loss trends at desk
/// scale; none of them are measurements, and the shipped config files in
/// configs/ mirror these values byte for byte.

inline WorkloadSpec preset_workload(double rate_tps) {
  WorkloadSpec w;
  w.n_tx = 2000;
  w.rate_tps = rate_tps;
  w.workers = 2;
  w.window_duration = seconds(60);
  w.gap = seconds(1);
  w.conflict_fraction = 0.0;
  return w;
}

inline FederatedConfig preset_federated_backend() {
  FederatedConfig f;
  f.network_delay = DelayDistribution::log_normal(millis(4), 0.3);
  f.service_time = DelayDistribution::log_normal(millis(85), 0.58);
  f.concurrency_limit = 4;
  f.queue_capacity = 16;
  f.request_deadline = seconds(30);
  return f;
}

inline LedgerConfig preset_ledger_backend() {
  LedgerConfig l;
  l.network_delay = DelayDistribution::log_normal(millis(4), 0.3);
  l.endorse_time = DelayDistribution::log_normal(millis(60), 0.35);
  l.num_endorsers = 2;
  l.order_queue_capacity = 620;
  l.max_message_count = 10;
  l.batch_timeout = seconds(2);
  l.commit_time = DelayDistribution::log_normal(millis(168), 1.25);
  l.per_tx_validate = DelayDistribution::constant(millis(4));
  l.request_deadline = seconds(30);
  l.strict_phantom_check = false;
  return l;
}

inline RunConfig calibrated_run(BackendKind backend, double rate_tps) {
  RunConfig cfg;
  cfg.backend = backend;
  cfg.mode = RunMode::Virtual;
  cfg.seed = 42;
  cfg.rounds = 10;
  cfg.out_dir = "reports";
  cfg.federated = preset_federated_backend();
  cfg.ledger = preset_ledger_backend();
  cfg.workload = preset_workload(rate_tps);
  return cfg;
}

inline RunConfig calibrated_federated_run(double rate_tps = 30.0) {
  return calibrated_run(BackendKind::Federated, rate_tps);
}

inline RunConfig calibrated_ledger_run(double rate_tps = 30.0) {
  return calibrated_run(BackendKind::Ledger, rate_tps);
}

/// Demand anchors: peak-hour and average offered load for a large urban
/// deployment, run against the federated preset by default.
inline RunConfig demand_peak_run() { return calibrated_run(BackendKind::Federated, 27.8); }
inline RunConfig demand_average_run() { return calibrated_run(BackendKind::Federated, 9.28); }

inline std::vector<double> sweep_rates() { return {10.0, 20.0, 30.0, 40.0, 50.0}; }

}  // namespace oirbench
