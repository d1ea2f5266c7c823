#pragma once

#include <chrono>
#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <thread>
#include <vector>

#include "oirbench/metrics.hpp"
#include "oirbench/oir.hpp"
#include "oirbench/sim.hpp"
#include "oirbench/time.hpp"
#include "oirbench/workload.hpp"

namespace oirbench {

/// What a wall-clock submit reports back. latency_override replaces the
/// measured duration when the backend never produced a response (a
/// connection failure counts as the full deadline, without waiting it out).
struct WallResult {
  TxOutcome outcome = TxOutcome::Committed;
  std::optional<Duration> latency_override;
};

/// Drives one open-loop round in virtual time. `submit` must accept
/// (const CreateOirRequest&, std::function<void(TxOutcome, TimeInstant)>)
/// and call the completion exactly once.
template <typename SubmitFn>
std::vector<TxRecord> run_round_virtual(Simulation& sim, SubmitFn&& submit,
                                        const std::vector<CreateOirRequest>& reqs,
                                        double rate_tps, int workers) {
  const int n = static_cast<int>(reqs.size());
  const auto schedule = arrival_schedule(n, rate_tps, workers);
  std::vector<TxRecord> records(static_cast<std::size_t>(n));
  std::size_t completed = 0;
  for (std::size_t w = 0; w < schedule.size(); ++w) {
    for (const auto& [i, at] : schedule[w]) {
      sim.schedule_at(at, [&, i, w] {
        TxRecord& rec = records[static_cast<std::size_t>(i)];
        rec.tx_id = reqs[static_cast<std::size_t>(i)].id;
        rec.worker_id = static_cast<int>(w);
        rec.submit_at = sim.now();
        submit(reqs[static_cast<std::size_t>(i)],
               [&rec, &completed](TxOutcome outcome, TimeInstant complete_at) {
                 rec.outcome = outcome;
                 rec.complete_at = complete_at;
                 ++completed;
               });
      });
    }
  }
  sim.run_all();
  if (completed != static_cast<std::size_t>(n)) {
    throw std::logic_error("round lost transactions: " + std::to_string(completed) + " of " +
                           std::to_string(n));
  }
  return records;
}

/// Drives one open-loop round against a live backend with W worker threads.
/// `submit` must accept (const CreateOirRequest&, int worker) and block
/// until the transaction resolves, returning a WallResult.
template <typename SubmitFn>
std::vector<TxRecord> run_round_wall(SubmitFn&& submit, const std::vector<CreateOirRequest>& reqs,
                                     double rate_tps, int workers) {
  const int n = static_cast<int>(reqs.size());
  const auto schedule = arrival_schedule(n, rate_tps, workers);
  std::vector<TxRecord> records(static_cast<std::size_t>(n));
  const auto anchor = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  threads.reserve(schedule.size());
  for (std::size_t w = 0; w < schedule.size(); ++w) {
    threads.emplace_back([&, w] {
      for (const auto& [i, at] : schedule[w]) {
        std::this_thread::sleep_until(anchor + std::chrono::microseconds(at));
        TxRecord& rec = records[static_cast<std::size_t>(i)];
        rec.tx_id = reqs[static_cast<std::size_t>(i)].id;
        rec.worker_id = static_cast<int>(w);
        const auto started = std::chrono::steady_clock::now();
        rec.submit_at = std::chrono::duration_cast<std::chrono::microseconds>(started - anchor).count();
        const WallResult res = submit(reqs[static_cast<std::size_t>(i)], static_cast<int>(w));
        rec.outcome = res.outcome;
        if (res.latency_override) {
          rec.complete_at = rec.submit_at + *res.latency_override;
        } else {
          const auto ended = std::chrono::steady_clock::now();
          rec.complete_at =
              std::chrono::duration_cast<std::chrono::microseconds>(ended - anchor).count();
        }
      }
    });
  }
  for (std::thread& t : threads) t.join();
  return records;
}

}  // namespace oirbench
