#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <functional>
#include <future>
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

#include "oirbench/federated.hpp"
#include "oirbench/metrics.hpp"
#include "oirbench/oir.hpp"
#include "oirbench/rng.hpp"
#include "oirbench/sim.hpp"
#include "oirbench/time.hpp"

namespace oirbench {

struct LedgerConfig {
  DelayDistribution network_delay = DelayDistribution::constant(0);
  DelayDistribution endorse_time = DelayDistribution::constant(millis(50));
  int num_endorsers = 2;
  int order_queue_capacity = 2048;
  int max_message_count = 10;
  Duration batch_timeout = seconds(2);
  DelayDistribution commit_time = DelayDistribution::constant(millis(100));
  DelayDistribution per_tx_validate = DelayDistribution::constant(millis(5));
  Duration request_deadline = seconds(30);
  bool strict_phantom_check = false;

  void validate() const {
    network_delay.validate();
    endorse_time.validate();
    commit_time.validate();
    per_tx_validate.validate();
    if (num_endorsers < 1) throw std::invalid_argument("num_endorsers must be >= 1");
    if (order_queue_capacity < 1) throw std::invalid_argument("order_queue_capacity must be >= 1");
    if (max_message_count < 1) throw std::invalid_argument("max_message_count must be >= 1");
    if (batch_timeout <= 0) throw std::invalid_argument("batch_timeout must be positive");
    if (request_deadline <= 0) throw std::invalid_argument("request_deadline must be positive");
  }
};

/// Endorsement-time capture: reads carry the key versions observed, writes
/// are applied on commit. Keys are unique within each list.
struct ReadWriteSet {
  std::vector<std::pair<std::string, int>> reads;
  std::vector<std::string> writes;
};

struct EndorsedTx {
  CreateOirRequest req;
  ReadWriteSet rwset;
};

enum class CutReason { SizeCut, TimeoutCut };

struct Block {
  std::uint64_t seq = 1;
  CutReason cut_reason = CutReason::SizeCut;
  std::vector<EndorsedTx> txs;
};

/// Versioned key-value state: one key per OIR id plus one global index key
/// listing the live ids. Absent keys read as version 0. Thread-safe; the
/// endorse and commit steps are each atomic.
class WorldState {
 public:
  static std::string oir_key(const std::string& id) { return "oir/" + id; }
  static std::string index_key() { return "oir/_index"; }

  struct EndorseResult {
    std::vector<std::string> conflicts;
    ReadWriteSet rwset;
  };

  /// Chaincode simulation: conflict scan against the current state plus
  /// read-set capture, in one atomic step. The index key joins the read set
  /// only under strict_phantom_check; rich queries otherwise leave the scan
  /// unprotected against phantoms.
  EndorseResult endorse(const CreateOirRequest& req, bool strict_phantom_check) const {
    std::lock_guard lock(mu_);
    EndorseResult res;
    res.conflicts = check_conflicts(req.volume, std::views::values(oirs_));
    if (oirs_.contains(req.id) &&
        std::find(res.conflicts.begin(), res.conflicts.end(), req.id) == res.conflicts.end()) {
      res.conflicts.push_back(req.id);
      std::sort(res.conflicts.begin(), res.conflicts.end());
    }
    res.rwset.reads.emplace_back(oir_key(req.id), version_locked(oir_key(req.id)));
    if (strict_phantom_check) res.rwset.reads.emplace_back(index_key(), version_locked(index_key()));
    res.rwset.writes.push_back(oir_key(req.id));
    res.rwset.writes.push_back(index_key());
    return res;
  }

  /// MVCC step for one transaction: commits iff every read version still
  /// matches, then applies writes and bumps the written keys' versions.
  TxOutcome commit_one(const EndorsedTx& tx) {
    std::lock_guard lock(mu_);
    for (const auto& [key, ver] : tx.rwset.reads) {
      if (version_locked(key) != ver) return TxOutcome::Invalidated;
    }
    for (const std::string& key : tx.rwset.writes) {
      if (key != index_key()) oirs_[tx.req.id] = make_oir(tx.req);
      ++versions_[key];
    }
    return TxOutcome::Committed;
  }

  int version(const std::string& key) const {
    std::lock_guard lock(mu_);
    return version_locked(key);
  }

  std::optional<OperationalIntentReference> get_oir(const std::string& id) const {
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
    ++versions_[oir_key(id)];
    ++versions_[index_key()];
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
  int version_locked(const std::string& key) const {
    auto it = versions_.find(key);
    return it == versions_.end() ? 0 : it->second;
  }

  mutable std::mutex mu_;
  std::map<std::string, int> versions_;
  std::map<std::string, OperationalIntentReference> oirs_;
};

/// Ordering-service batching rule. Emits a block when the pending count
/// reaches max_message_count (SizeCut, exactly that many) or the oldest
/// pending transaction's age reaches batch_timeout (TimeoutCut, everything
/// left, which is fewer than max_message_count because callers loop).
template <typename T, typename EnqueuedAtFn>
std::optional<std::pair<CutReason, std::vector<T>>> cut_block(std::deque<T>& pending,
                                                              TimeInstant now,
                                                              int max_message_count,
                                                              Duration batch_timeout,
                                                              EnqueuedAtFn enqueued_at) {
  if (pending.empty()) return std::nullopt;
  std::vector<T> txs;
  if (static_cast<int>(pending.size()) >= max_message_count) {
    txs.reserve(static_cast<std::size_t>(max_message_count));
    for (int i = 0; i < max_message_count; ++i) {
      txs.push_back(std::move(pending.front()));
      pending.pop_front();
    }
    return std::make_pair(CutReason::SizeCut, std::move(txs));
  }
  if (now - enqueued_at(pending.front()) >= batch_timeout) {
    txs.reserve(pending.size());
    while (!pending.empty()) {
      txs.push_back(std::move(pending.front()));
      pending.pop_front();
    }
    return std::make_pair(CutReason::TimeoutCut, std::move(txs));
  }
  return std::nullopt;
}

struct PendingTx {
  EndorsedTx tx;
  TimeInstant enqueued_at = 0;
};

inline std::optional<Block> cut_block(std::deque<PendingTx>& pending, TimeInstant now,
                                      int max_message_count, Duration batch_timeout,
                                      std::uint64_t seq = 1) {
  auto cut = cut_block(pending, now, max_message_count, batch_timeout,
                       [](const PendingTx& p) { return p.enqueued_at; });
  if (!cut) return std::nullopt;
  Block b;
  b.seq = seq;
  b.cut_reason = cut->first;
  b.txs.reserve(cut->second.size());
  for (PendingTx& p : cut->second) b.txs.push_back(std::move(p.tx));
  return b;
}

/// Sequential MVCC validation of a block in order.
inline std::vector<TxOutcome> validate_and_commit(const std::vector<EndorsedTx>& txs,
                                                  WorldState& world) {
  std::vector<TxOutcome> outcomes;
  outcomes.reserve(txs.size());
  for (const EndorsedTx& tx : txs) outcomes.push_back(world.commit_one(tx));
  return outcomes;
}

inline std::vector<TxOutcome> validate_and_commit(const Block& block, WorldState& world) {
  return validate_and_commit(block.txs, world);
}

/// Virtual-time ledger pipeline: inbound network delay, endorsement (max of
/// E draws, conflict scan at endorsement start), bounded ordering backlog,
/// block cutting, a strictly sequential committer, outbound network delay.
///
/// The order_queue_capacity bound covers the whole ordering backlog: the
/// pre-cut pool plus blocks cut but not yet being committed. A slot frees
/// when its block's commit starts.
class LedgerSim {
 public:
  using CompletionFn = std::function<void(TxOutcome, TimeInstant)>;

  LedgerSim(Simulation& sim, LedgerConfig cfg, std::uint64_t seed)
      : sim_(sim),
        cfg_(std::move(cfg)),
        net_in_(RngStream::derive(seed, "ledger.net_in")),
        net_out_(RngStream::derive(seed, "ledger.net_out")),
        endorse_(RngStream::derive(seed, "ledger.endorse")),
        commit_(RngStream::derive(seed, "ledger.commit")),
        validate_(RngStream::derive(seed, "ledger.validate")) {
    cfg_.validate();
  }

  void submit(const CreateOirRequest& req, CompletionFn done) {
    auto tx = std::make_shared<Tx>();
    tx->req = req;
    tx->submit_at = sim_.now();
    tx->deadline_at = tx->submit_at + cfg_.request_deadline;
    tx->done = std::move(done);
    sim_.schedule_after(cfg_.network_delay.sample(net_in_), [this, tx] { endorse_arrive(tx); });
  }

  const WorldState& world() const { return world_; }
  WorldState& world() { return world_; }
  std::uint64_t blocks_cut() const { return block_seq_; }

 private:
  struct Tx {
    CreateOirRequest req;
    ReadWriteSet rwset;
    TimeInstant submit_at = 0;
    TimeInstant deadline_at = 0;
    TimeInstant enqueued_at = 0;
    CompletionFn done;
  };
  using TxPtr = std::shared_ptr<Tx>;

  Duration endorse_latency() {
    Duration worst = 0;
    for (int i = 0; i < cfg_.num_endorsers; ++i) {
      worst = std::max(worst, cfg_.endorse_time.sample(endorse_));
    }
    return worst;
  }

  void endorse_arrive(const TxPtr& tx) {
    if (tx->deadline_at <= sim_.now()) {
      tx->done(TxOutcome::TimedOut, tx->deadline_at);
      return;
    }
    const Duration lat = endorse_latency();
    // A request the chaincode can't validate never reaches ordering; it
    // surfaces as a rejection, same as a conflicting one.
    bool rejected = validate_request(tx->req).has_value();
    if (!rejected) {
      WorldState::EndorseResult er = world_.endorse(tx->req, cfg_.strict_phantom_check);
      rejected = !er.conflicts.empty();
      tx->rwset = std::move(er.rwset);
    }
    if (rejected) {
      finish(tx, TxOutcome::RejectedConflict,
             sim_.now() + lat + cfg_.network_delay.sample(net_out_));
      return;
    }
    sim_.schedule_after(lat, [this, tx] { offer_to_ordering(tx); });
  }

  void offer_to_ordering(const TxPtr& tx) {
    if (backlog_ >= cfg_.order_queue_capacity) {
      finish(tx, TxOutcome::Dropped, sim_.now() + cfg_.network_delay.sample(net_out_));
      return;
    }
    ++backlog_;
    tx->enqueued_at = sim_.now();
    pool_.push_back(tx);
    try_cut();
  }

  void try_cut() {
    while (auto cut = cut_block(pool_, sim_.now(), cfg_.max_message_count, cfg_.batch_timeout,
                                [](const TxPtr& t) { return t->enqueued_at; })) {
      ready_blocks_.push_back(std::move(cut->second));
      if (!committing_) start_next_block();
    }
    arm_timer();
  }

  void arm_timer() {
    if (pool_.empty()) {
      armed_front_ = nullptr;
      ++timer_gen_;
      return;
    }
    if (armed_front_ == pool_.front().get()) return;
    armed_front_ = pool_.front().get();
    const std::uint64_t gen = ++timer_gen_;
    sim_.schedule_at(pool_.front()->enqueued_at + cfg_.batch_timeout,
                     [this, gen] { if (gen == timer_gen_) try_cut(); });
  }

  void start_next_block() {
    committing_ = true;
    std::vector<TxPtr> txs = std::move(ready_blocks_.front());
    ready_blocks_.pop_front();
    ++block_seq_;
    backlog_ -= static_cast<int>(txs.size());
    Duration dur = cfg_.commit_time.sample(commit_);
    for (std::size_t i = 0; i < txs.size(); ++i) dur += cfg_.per_tx_validate.sample(validate_);
    const TimeInstant commit_end = sim_.now() + dur;
    sim_.schedule_at(commit_end, [this, txs = std::move(txs), commit_end] {
      commit_done(txs, commit_end);
    });
  }

  void commit_done(const std::vector<TxPtr>& txs, TimeInstant commit_end) {
    // Expired transactions consumed commit/validate budget but must not
    // mutate state; only the rest go through MVCC, preserving block order.
    std::vector<EndorsedTx> survivors_tx;
    std::vector<std::pair<TxPtr, TimeInstant>> survivors;
    for (const TxPtr& tx : txs) {
      const TimeInstant completion = commit_end + cfg_.network_delay.sample(net_out_);
      if (completion > tx->deadline_at) {
        finish(tx, TxOutcome::TimedOut, tx->deadline_at);
      } else {
        survivors_tx.push_back(EndorsedTx{tx->req, tx->rwset});
        survivors.emplace_back(tx, completion);
      }
    }
    const std::vector<TxOutcome> outcomes = validate_and_commit(survivors_tx, world_);
    for (std::size_t i = 0; i < survivors.size(); ++i) {
      finish(survivors[i].first, outcomes[i], survivors[i].second);
    }
    committing_ = false;
    if (!ready_blocks_.empty()) start_next_block();
  }

  void finish(const TxPtr& tx, TxOutcome outcome, TimeInstant completion) {
    if (completion > tx->deadline_at) {
      outcome = TxOutcome::TimedOut;
      completion = tx->deadline_at;
    }
    if (completion <= sim_.now()) {
      tx->done(outcome, completion);
    } else {
      sim_.schedule_at(completion, [tx, outcome, completion] { tx->done(outcome, completion); });
    }
  }

  Simulation& sim_;
  LedgerConfig cfg_;
  WorldState world_;
  RngStream net_in_, net_out_, endorse_, commit_, validate_;
  std::deque<TxPtr> pool_;
  std::deque<std::vector<TxPtr>> ready_blocks_;
  int backlog_ = 0;
  bool committing_ = false;
  const Tx* armed_front_ = nullptr;
  std::uint64_t timer_gen_ = 0;
  std::uint64_t block_seq_ = 0;
};

/// Wall-clock ledger pipeline: a cutter thread batches endorsed transactions
/// by size or timeout, a committer thread applies blocks sequentially.
/// Submitters block on a per-transaction future up to the deadline; an
/// abandoned transaction still consumes block budget but never commits.
class LedgerLive {
 public:
  LedgerLive(LedgerConfig cfg, std::uint64_t seed, bool inject_delays)
      : cfg_(std::move(cfg)),
        inject_delays_(inject_delays),
        net_in_(RngStream::derive(seed, "ledger.net_in")),
        net_out_(RngStream::derive(seed, "ledger.net_out")),
        endorse_(RngStream::derive(seed, "ledger.endorse")),
        commit_(RngStream::derive(seed, "ledger.commit")),
        validate_(RngStream::derive(seed, "ledger.validate")) {
    cfg_.validate();
    cutter_ = std::thread([this] { cutter_loop(); });
    committer_ = std::thread([this] { committer_loop(); });
  }

  ~LedgerLive() {
    {
      std::scoped_lock lock(pool_mu_, blocks_mu_);
      shutdown_ = true;
    }
    pool_cv_.notify_all();
    blocks_cv_.notify_all();
    cutter_.join();
    committer_.join();
  }

  LiveSubmitResult submit_blocking(const CreateOirRequest& req) {
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::microseconds(cfg_.request_deadline);
    if (inject_delays_) sleep_for(sample(net_in_, cfg_.network_delay));
    Duration endorse_lat = 0;
    for (int i = 0; i < cfg_.num_endorsers; ++i) {
      endorse_lat = std::max(endorse_lat, sample(endorse_, cfg_.endorse_time));
    }
    WorldState::EndorseResult er = world_.endorse(req, cfg_.strict_phantom_check);
    if (inject_delays_) sleep_for(endorse_lat);
    if (!er.conflicts.empty()) {
      if (inject_delays_) sleep_for(sample(net_out_, cfg_.network_delay));
      return {TxOutcome::RejectedConflict, std::move(er.conflicts), {}};
    }
    auto tx = std::make_shared<LiveTx>();
    tx->etx = EndorsedTx{req, std::move(er.rwset)};
    tx->deadline = deadline;
    {
      std::lock_guard lock(pool_mu_);
      if (backlog_ >= cfg_.order_queue_capacity) {
        if (inject_delays_) sleep_for(sample(net_out_, cfg_.network_delay));
        return {TxOutcome::Dropped, {}, {}};
      }
      ++backlog_;
      pool_.push_back(tx);
    }
    pool_cv_.notify_all();
    auto future = tx->promise.get_future();
    if (future.wait_until(deadline) == std::future_status::ready) {
      Verdict v = future.get();
      if (inject_delays_) sleep_for(v.outbound);
      if (v.outcome == TxOutcome::Committed) return {v.outcome, {}, world_.get_oir(req.id)};
      return {v.outcome, {}, {}};
    }
    int expected = 0;
    if (tx->claimed.compare_exchange_strong(expected, 2)) return {TxOutcome::TimedOut, {}, {}};
    Verdict v = future.get();
    if (v.outcome == TxOutcome::Committed) return {v.outcome, {}, world_.get_oir(req.id)};
    return {v.outcome, {}, {}};
  }

  std::optional<OperationalIntentReference> lookup(const std::string& id) const {
    return world_.get_oir(id);
  }

  // Deletes act on world state directly; only creates flow through the
  // ordering pipeline.
  DeleteStatus remove(const std::string& id, const std::string& ovn) {
    return world_.remove(id, ovn);
  }

  WorldState& world() { return world_; }
  const WorldState& world() const { return world_; }

 private:
  struct Verdict {
    TxOutcome outcome = TxOutcome::Committed;
    Duration outbound = 0;
  };

  struct LiveTx {
    EndorsedTx etx;
    std::chrono::steady_clock::time_point deadline;
    std::promise<Verdict> promise;
    std::atomic<int> claimed{0};  // 0 open, 1 committer won, 2 submitter timed out
  };
  using TxPtr = std::shared_ptr<LiveTx>;

  void cutter_loop() {
    std::unique_lock lock(pool_mu_);
    std::deque<TxPtr> enqueued;
    std::deque<std::chrono::steady_clock::time_point> enqueued_when;
    auto flush = [&](std::size_t count) {
      std::vector<TxPtr> block;
      for (std::size_t i = 0; i < count; ++i) {
        block.push_back(std::move(enqueued.front()));
        enqueued.pop_front();
        enqueued_when.pop_front();
      }
      lock.unlock();
      {
        std::lock_guard bl(blocks_mu_);
        blocks_.push_back(std::move(block));
      }
      blocks_cv_.notify_all();
      lock.lock();
    };
    const auto timeout = std::chrono::microseconds(cfg_.batch_timeout);
    while (true) {
      while (!pool_.empty()) {
        enqueued.push_back(std::move(pool_.front()));
        pool_.pop_front();
        enqueued_when.push_back(std::chrono::steady_clock::now());
      }
      const std::size_t batch = static_cast<std::size_t>(cfg_.max_message_count);
      if (enqueued.size() >= batch) {
        flush(batch);
        continue;
      }
      if (!enqueued.empty() && std::chrono::steady_clock::now() >= enqueued_when.front() + timeout) {
        flush(enqueued.size());
        continue;
      }
      if (shutdown_) {
        if (!enqueued.empty()) flush(enqueued.size());
        return;
      }
      if (enqueued.empty()) {
        pool_cv_.wait(lock, [this] { return shutdown_ || !pool_.empty(); });
      } else {
        pool_cv_.wait_until(lock, enqueued_when.front() + timeout,
                            [this] { return shutdown_ || !pool_.empty(); });
      }
    }
  }

  void committer_loop() {
    while (true) {
      std::vector<TxPtr> block;
      {
        std::unique_lock lock(blocks_mu_);
        blocks_cv_.wait(lock, [this] { return shutdown_ || !blocks_.empty(); });
        if (blocks_.empty()) return;
        block = std::move(blocks_.front());
        blocks_.pop_front();
      }
      {
        std::lock_guard lock(pool_mu_);
        backlog_ -= static_cast<int>(block.size());
      }
      Duration dur = inject_delays_ ? sample(commit_, cfg_.commit_time) : 0;
      for (std::size_t i = 0; i < block.size() && inject_delays_; ++i) {
        dur += sample(validate_, cfg_.per_tx_validate);
      }
      sleep_for(dur);
      for (const TxPtr& tx : block) {
        const Duration outbound = inject_delays_ ? sample(net_out_, cfg_.network_delay) : 0;
        Verdict v{TxOutcome::TimedOut, outbound};
        const bool in_time = std::chrono::steady_clock::now() +
                                 std::chrono::microseconds(outbound) <= tx->deadline;
        int expected = 0;
        if (in_time && tx->claimed.compare_exchange_strong(expected, 1)) {
          v.outcome = world_.commit_one(tx->etx);
        }
        tx->promise.set_value(v);
      }
    }
  }

  Duration sample(RngStream& stream, const DelayDistribution& dist) {
    std::lock_guard lock(rng_mu_);
    return dist.sample(stream);
  }

  static void sleep_for(Duration d) {
    if (d > 0) std::this_thread::sleep_for(std::chrono::microseconds(d));
  }

  LedgerConfig cfg_;
  bool inject_delays_;
  WorldState world_;
  std::mutex rng_mu_;
  RngStream net_in_, net_out_, endorse_, commit_, validate_;

  std::mutex pool_mu_;
  std::condition_variable pool_cv_;
  std::deque<TxPtr> pool_;
  int backlog_ = 0;
  bool shutdown_ = false;

  std::mutex blocks_mu_;
  std::condition_variable blocks_cv_;
  std::deque<std::vector<TxPtr>> blocks_;

  std::thread cutter_, committer_;
};

}  // namespace oirbench
