#pragma once

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ranges>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "oirbench/metrics.hpp"
#include "oirbench/oir.hpp"
#include "oirbench/rng.hpp"
#include "oirbench/sim.hpp"
#include "oirbench/time.hpp"

namespace oirbench {

struct FederatedConfig {
  DelayDistribution network_delay = DelayDistribution::constant(0);
  DelayDistribution service_time = DelayDistribution::constant(millis(80));
  int concurrency_limit = 4;
  int queue_capacity = 1024;
  Duration request_deadline = seconds(30);

  void validate() const {
    network_delay.validate();
    service_time.validate();
    if (concurrency_limit < 1) throw std::invalid_argument("concurrency_limit must be >= 1");
    if (queue_capacity < 0) throw std::invalid_argument("queue_capacity must be >= 0");
    if (request_deadline <= 0) throw std::invalid_argument("request_deadline must be positive");
  }
};

/// Outcome of one blocking submit against a wall-clock backend.
struct LiveSubmitResult {
  TxOutcome outcome = TxOutcome::Committed;
  std::vector<std::string> conflicts;
  std::optional<OperationalIntentReference> oir;
};

struct InsertResult {
  std::vector<std::string> conflicts;  // empty means the insert happened
  std::optional<OperationalIntentReference> oir;
};

/// Strongly consistent OIR store. check_and_insert is the single atomic
/// step that upholds the registry-wide deconfliction invariant, so it is
/// safe to call from concurrent workers.
class Registry {
 public:
  InsertResult check_and_insert(const CreateOirRequest& req) {
    std::lock_guard lock(mu_);
    InsertResult res;
    res.conflicts = check_conflicts(req.volume, std::views::values(oirs_));
    if (auto it = oirs_.find(req.id); it != oirs_.end()) {
      // A live id can never be re-created; surface it as a conflict even
      // when the volumes are disjoint.
      if (std::find(res.conflicts.begin(), res.conflicts.end(), req.id) == res.conflicts.end()) {
        res.conflicts.push_back(req.id);
        std::sort(res.conflicts.begin(), res.conflicts.end());
      }
    }
    if (!res.conflicts.empty()) return res;
    res.oir = make_oir(req);
    oirs_.emplace(req.id, *res.oir);
    return res;
  }

  std::optional<OperationalIntentReference> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = oirs_.find(id);
    if (it == oirs_.end()) return std::nullopt;
    return it->second;
  }

  DeleteStatus remove(const std::string& id, const std::string& ovn) {
    std::lock_guard lock(mu_);
    auto it = oirs_.find(id);
    if (it == oirs_.end()) return DeleteStatus::NotFound;
    if (it->second.ovn != ovn) return DeleteStatus::VersionMismatch;
    oirs_.erase(it);
    return DeleteStatus::Ok;
  }

  std::vector<OperationalIntentReference> query(const Volume4D& area) const {
    std::lock_guard lock(mu_);
    std::vector<OperationalIntentReference> out;
    for (const auto& [id, oir] : oirs_) {
      if (volumes_conflict(area, oir.volume)) out.push_back(oir);
    }
    return out;
  }

  std::vector<OperationalIntentReference> snapshot() const {
    std::lock_guard lock(mu_);
    std::vector<OperationalIntentReference> out;
    out.reserve(oirs_.size());
    for (const auto& [id, oir] : oirs_) out.push_back(oir);
    return out;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return oirs_.size();
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, OperationalIntentReference> oirs_;
};

/// Virtual-time federated pipeline: inbound network delay, bounded waiting
/// room in front of C service slots, atomic check-and-insert at service end,
/// outbound network delay. Single-threaded over the event loop.
class FederatedSim {
 public:
  using CompletionFn = std::function<void(TxOutcome, TimeInstant)>;

  FederatedSim(Simulation& sim, FederatedConfig cfg, std::uint64_t seed)
      : sim_(sim),
        cfg_(std::move(cfg)),
        net_in_(RngStream::derive(seed, "fed.net_in")),
        net_out_(RngStream::derive(seed, "fed.net_out")),
        service_(RngStream::derive(seed, "fed.service")) {
    cfg_.validate();
  }

  void submit(const CreateOirRequest& req, CompletionFn done) {
    auto item = std::make_shared<Item>();
    item->req = req;
    item->submit_at = sim_.now();
    item->deadline_at = item->submit_at + cfg_.request_deadline;
    item->done = std::move(done);
    sim_.schedule_after(cfg_.network_delay.sample(net_in_), [this, item] { arrive(item); });
  }

  const Registry& registry() const { return registry_; }
  Registry& registry() { return registry_; }

 private:
  struct Item {
    CreateOirRequest req;
    TimeInstant submit_at = 0;
    TimeInstant deadline_at = 0;
    CompletionFn done;
  };
  using ItemPtr = std::shared_ptr<Item>;

  void arrive(const ItemPtr& item) {
    if (item->deadline_at <= sim_.now()) {
      item->done(TxOutcome::TimedOut, item->deadline_at);
    } else if (busy_slots_ < cfg_.concurrency_limit) {
      start_service(item);
    } else if (static_cast<int>(waiting_.size()) < cfg_.queue_capacity) {
      waiting_.push_back(item);
    } else {
      finish(item, TxOutcome::Dropped, sim_.now() + cfg_.network_delay.sample(net_out_));
    }
  }

  void start_service(const ItemPtr& item) {
    ++busy_slots_;
    const Duration svc = cfg_.service_time.sample(service_);
    const Duration out = cfg_.network_delay.sample(net_out_);
    const TimeInstant svc_end = sim_.now() + svc;
    const TimeInstant completion = svc_end + out;
    if (completion > item->deadline_at) {
      // The slot abandons the request at its deadline and the registry is
      // never touched, so a timeout is always a clean loss.
      const TimeInstant release_at = std::min(svc_end, item->deadline_at);
      sim_.schedule_at(release_at, [this] { release_slot(); });
      finish(item, TxOutcome::TimedOut, item->deadline_at);
      return;
    }
    sim_.schedule_at(svc_end, [this, item, completion] {
      const TxOutcome outcome = registry_.check_and_insert(item->req).conflicts.empty()
                                    ? TxOutcome::Committed
                                    : TxOutcome::RejectedConflict;
      release_slot();
      finish(item, outcome, completion);
    });
  }

  void release_slot() {
    --busy_slots_;
    while (!waiting_.empty() && busy_slots_ < cfg_.concurrency_limit) {
      ItemPtr next = waiting_.front();
      waiting_.pop_front();
      if (next->deadline_at <= sim_.now()) {
        next->done(TxOutcome::TimedOut, next->deadline_at);
        continue;
      }
      start_service(next);
    }
  }

  void finish(const ItemPtr& item, TxOutcome outcome, TimeInstant completion) {
    if (completion > item->deadline_at) {
      outcome = TxOutcome::TimedOut;
      completion = item->deadline_at;
    }
    if (completion <= sim_.now()) {
      item->done(outcome, completion);
    } else {
      sim_.schedule_at(completion, [item, outcome, completion] { item->done(outcome, completion); });
    }
  }

  Simulation& sim_;
  FederatedConfig cfg_;
  Registry registry_;
  RngStream net_in_, net_out_, service_;
  int busy_slots_ = 0;
  std::deque<ItemPtr> waiting_;
};

/// Wall-clock federated pipeline. Same admission discipline as the virtual
/// engine; delay sleeps happen only when inject_delays is set, otherwise the
/// real conflict scan is the service cost.
class FederatedLive {
 public:
  FederatedLive(FederatedConfig cfg, std::uint64_t seed, bool inject_delays)
      : cfg_(std::move(cfg)),
        inject_delays_(inject_delays),
        net_in_(RngStream::derive(seed, "fed.net_in")),
        net_out_(RngStream::derive(seed, "fed.net_out")),
        service_(RngStream::derive(seed, "fed.service")) {
    cfg_.validate();
  }

  LiveSubmitResult submit_blocking(const CreateOirRequest& req) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::microseconds(cfg_.request_deadline);
    if (inject_delays_) sleep_for(sample(net_in_, cfg_.network_delay));
    if (!acquire_slot(deadline)) {
      // Distinguish a full waiting room from an expired wait.
      if (std::chrono::steady_clock::now() >= deadline) return {TxOutcome::TimedOut, {}, {}};
      if (inject_delays_) sleep_for(sample(net_out_, cfg_.network_delay));
      return {TxOutcome::Dropped, {}, {}};
    }
    if (inject_delays_) sleep_for(sample(service_, cfg_.service_time));
    const Duration outbound = inject_delays_ ? sample(net_out_, cfg_.network_delay) : 0;
    if (std::chrono::steady_clock::now() + std::chrono::microseconds(outbound) > deadline) {
      release_slot();
      return {TxOutcome::TimedOut, {}, {}};
    }
    InsertResult ins = registry_.check_and_insert(req);
    release_slot();
    if (inject_delays_) sleep_for(outbound);
    if (!ins.conflicts.empty()) return {TxOutcome::RejectedConflict, std::move(ins.conflicts), {}};
    return {TxOutcome::Committed, {}, std::move(ins.oir)};
  }

  std::optional<OperationalIntentReference> lookup(const std::string& id) const {
    return registry_.get(id);
  }

  DeleteStatus remove(const std::string& id, const std::string& ovn) {
    return registry_.remove(id, ovn);
  }

  Registry& registry() { return registry_; }
  const Registry& registry() const { return registry_; }

 private:
  bool acquire_slot(std::chrono::steady_clock::time_point deadline) {
    std::unique_lock lock(mu_);
    if (busy_ < cfg_.concurrency_limit && fifo_.empty()) {
      ++busy_;
      return true;
    }
    if (static_cast<int>(fifo_.size()) >= cfg_.queue_capacity) return false;
    const std::uint64_t ticket = next_ticket_++;
    fifo_.push_back(ticket);
    const bool ok = cv_.wait_until(lock, deadline, [this, ticket] {
      return !fifo_.empty() && fifo_.front() == ticket && busy_ < cfg_.concurrency_limit;
    });
    if (!ok) {
      fifo_.erase(std::find(fifo_.begin(), fifo_.end(), ticket));
      cv_.notify_all();
      return false;
    }
    fifo_.pop_front();
    ++busy_;
    cv_.notify_all();
    return true;
  }

  void release_slot() {
    {
      std::lock_guard lock(mu_);
      --busy_;
    }
    cv_.notify_all();
  }

  Duration sample(RngStream& stream, const DelayDistribution& dist) {
    std::lock_guard lock(rng_mu_);
    return dist.sample(stream);
  }

  static void sleep_for(Duration d) {
    if (d > 0) std::this_thread::sleep_for(std::chrono::microseconds(d));
  }

  FederatedConfig cfg_;
  bool inject_delays_;
  Registry registry_;
  std::mutex rng_mu_;
  RngStream net_in_, net_out_, service_;
  std::mutex mu_;
  std::condition_variable cv_;
  int busy_ = 0;
  std::deque<std::uint64_t> fifo_;
  std::uint64_t next_ticket_ = 0;
};

}  // namespace oirbench
