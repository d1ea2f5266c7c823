#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <map>
#include <queue>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "oirbench/federated.hpp"
#include "oirbench/ledger.hpp"
#include "oirbench/sim.hpp"
#include "oirbench/workload.hpp"

using namespace oirbench;

namespace {

std::string seq_uuid(unsigned n) {
  char buf[37];
  std::snprintf(buf, sizeof(buf), "%08x-0000-4000-8000-%012x", 0x0aceb00du, n);
  return buf;
}

// Requests on a latitude line, far enough apart to never conflict.
CreateOirRequest spaced_req(unsigned i) {
  CreateOirRequest req;
  req.id = seq_uuid(i);
  req.manager = "uss-test";
  req.volume.center = GeoPoint::unchecked(10.0 + 0.05 * i, 8.0);
  req.volume.radius_m = 200.0;
  req.volume.alt_lo_m = 100.0;
  req.volume.alt_hi_m = 300.0;
  req.volume.time_start = 0;
  req.volume.time_end = seconds(3600);
  req.priority = 1;
  return req;
}

CreateOirRequest at_slot(unsigned i, unsigned slot) {
  CreateOirRequest req = spaced_req(slot);
  req.id = seq_uuid(1000 + i);
  return req;
}

struct Capture {
  std::vector<TxOutcome> outcomes;
  std::vector<TimeInstant> completions;

  FederatedSim::CompletionFn sink(std::size_t idx) {
    if (outcomes.size() <= idx) {
      outcomes.resize(idx + 1, TxOutcome::Dropped);
      completions.resize(idx + 1, 0);
    }
    return [this, idx](TxOutcome o, TimeInstant t) {
      outcomes[idx] = o;
      completions[idx] = t;
    };
  }
};

}  // namespace

TEST_CASE("federated sim: single request latency is net + service + net") {
  FederatedConfig cfg;
  cfg.service_time = DelayDistribution::constant(millis(100));
  cfg.concurrency_limit = 1;

  SECTION("zero network delay") {
    Simulation sim;
    FederatedSim fed(sim, cfg, 7);
    Capture cap;
    sim.schedule_at(0, [&] { fed.submit(spaced_req(0), cap.sink(0)); });
    sim.run_all();
    REQUIRE(cap.outcomes[0] == TxOutcome::Committed);
    REQUIRE(cap.completions[0] == millis(100));
    REQUIRE(fed.registry().size() == 1);
  }

  SECTION("constant 10ms network on both hops") {
    cfg.network_delay = DelayDistribution::constant(millis(10));
    Simulation sim;
    FederatedSim fed(sim, cfg, 7);
    Capture cap;
    sim.schedule_at(0, [&] { fed.submit(spaced_req(0), cap.sink(0)); });
    sim.run_all();
    REQUIRE(cap.outcomes[0] == TxOutcome::Committed);
    REQUIRE(cap.completions[0] == millis(120));
  }
}

TEST_CASE("federated sim: matches an M/D/c queue oracle exactly") {
  constexpr int kServers = 3;
  constexpr Duration kService = millis(70);
  constexpr int kN = 200;

  FederatedConfig cfg;
  cfg.service_time = DelayDistribution::constant(kService);
  cfg.concurrency_limit = kServers;
  cfg.queue_capacity = 1024;

  Simulation sim;
  FederatedSim fed(sim, cfg, 99);
  Capture cap;
  for (int i = 0; i < kN; ++i) {
    const TimeInstant at = std::llround(static_cast<double>(i) * 1e6 / 25.0);
    sim.schedule_at(at, [&fed, &cap, i] { fed.submit(spaced_req(i), cap.sink(i)); });
  }
  sim.run_all();

  // FIFO multi-server with equal service times: each arrival starts when the
  // earliest of the c slots frees, never before it arrives.
  std::priority_queue<TimeInstant, std::vector<TimeInstant>, std::greater<>> free_at;
  for (int s = 0; s < kServers; ++s) free_at.push(0);
  for (int i = 0; i < kN; ++i) {
    const TimeInstant arrival = std::llround(static_cast<double>(i) * 1e6 / 25.0);
    const TimeInstant start = std::max(arrival, free_at.top());
    free_at.pop();
    const TimeInstant done = start + kService;
    free_at.push(done);
    REQUIRE(cap.outcomes[i] == TxOutcome::Committed);
    REQUIRE(cap.completions[i] == done);
  }
  REQUIRE(fed.registry().size() == kN);
}

TEST_CASE("federated sim: zero waiting room sheds everything past the slots") {
  FederatedConfig cfg;
  cfg.service_time = DelayDistribution::constant(millis(100));
  cfg.concurrency_limit = 1;
  cfg.queue_capacity = 0;

  Simulation sim;
  FederatedSim fed(sim, cfg, 3);
  Capture cap;
  for (int i = 0; i < 10; ++i) {
    sim.schedule_at(0, [&fed, &cap, i] { fed.submit(spaced_req(i), cap.sink(i)); });
  }
  sim.run_all();

  REQUIRE(cap.outcomes[0] == TxOutcome::Committed);
  REQUIRE(cap.completions[0] == millis(100));
  for (int i = 1; i < 10; ++i) {
    REQUIRE(cap.outcomes[i] == TxOutcome::Dropped);
    REQUIRE(cap.completions[i] == 0);
  }
  REQUIRE(fed.registry().size() == 1);
}

TEST_CASE("federated sim: deadline abandons the slot early and never mutates") {
  FederatedConfig cfg;
  cfg.service_time = DelayDistribution::constant(millis(100));
  cfg.concurrency_limit = 1;
  cfg.queue_capacity = 10;
  cfg.request_deadline = millis(150);

  Simulation sim;
  FederatedSim fed(sim, cfg, 5);
  Capture cap;
  // r0 commits at 100ms. r1 queues, starts at 100ms, would complete at 200ms
  // past its 150ms deadline, so the slot frees at the deadline, not at the
  // service end. r2 arrives at 110ms and can only commit by 260ms if the
  // slot really freed at 150ms.
  sim.schedule_at(0, [&] { fed.submit(spaced_req(0), cap.sink(0)); });
  sim.schedule_at(0, [&] { fed.submit(spaced_req(1), cap.sink(1)); });
  sim.schedule_at(millis(110), [&] { fed.submit(spaced_req(2), cap.sink(2)); });
  sim.run_all();

  REQUIRE(cap.outcomes[0] == TxOutcome::Committed);
  REQUIRE(cap.completions[0] == millis(100));
  REQUIRE(cap.outcomes[1] == TxOutcome::TimedOut);
  REQUIRE(cap.completions[1] == millis(150));
  REQUIRE(cap.outcomes[2] == TxOutcome::Committed);
  REQUIRE(cap.completions[2] == millis(250));
  REQUIRE(fed.registry().size() == 2);
  REQUIRE(fed.registry().get(seq_uuid(1)) == std::nullopt);
}

TEST_CASE("federated sim: requests expiring in the waiting room never serve") {
  FederatedConfig cfg;
  cfg.service_time = DelayDistribution::constant(millis(300));
  cfg.concurrency_limit = 1;
  cfg.queue_capacity = 10;
  cfg.request_deadline = millis(100);

  Simulation sim;
  FederatedSim fed(sim, cfg, 5);
  Capture cap;
  sim.schedule_at(0, [&] { fed.submit(spaced_req(0), cap.sink(0)); });
  sim.schedule_at(0, [&] { fed.submit(spaced_req(1), cap.sink(1)); });
  sim.run_all();

  REQUIRE(cap.outcomes[0] == TxOutcome::TimedOut);
  REQUIRE(cap.completions[0] == millis(100));
  REQUIRE(cap.outcomes[1] == TxOutcome::TimedOut);
  REQUIRE(cap.completions[1] == millis(100));
  REQUIRE(fed.registry().size() == 0);
}

TEST_CASE("federated sim: outcomes partition and the registry stays conflict-free") {
  WorkloadSpec spec;
  spec.n_tx = 400;
  spec.conflict_fraction = 0.3;
  spec.seed = 21;

  FederatedConfig cfg;
  cfg.network_delay = DelayDistribution::log_normal(millis(4), 0.3);
  cfg.service_time = DelayDistribution::log_normal(millis(85), 0.58);
  cfg.concurrency_limit = 4;
  cfg.queue_capacity = 16;

  const std::vector<CreateOirRequest> reqs = generate_workload(spec);

  Simulation sim;
  FederatedSim fed(sim, cfg, 22);
  Capture cap;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    const TimeInstant at = std::llround(static_cast<double>(i) * 1e6 / 50.0);
    sim.schedule_at(at, [&fed, &cap, &reqs, i] { fed.submit(reqs[i], cap.sink(i)); });
  }
  sim.run_all();

  std::map<TxOutcome, int> counts;
  for (TxOutcome o : cap.outcomes) ++counts[o];
  int total = 0;
  for (const auto& [o, c] : counts) total += c;
  REQUIRE(total == static_cast<int>(reqs.size()));
  REQUIRE(counts[TxOutcome::Committed] == static_cast<int>(fed.registry().size()));
  REQUIRE(counts[TxOutcome::Invalidated] == 0);

  const auto snap = fed.registry().snapshot();
  for (std::size_t a = 0; a < snap.size(); ++a) {
    for (std::size_t b = a + 1; b < snap.size(); ++b) {
      REQUIRE_FALSE(volumes_conflict(snap[a].volume, snap[b].volume));
    }
  }
  // Rejections happened against registry contents, and the registry only
  // grows, so each rejected volume must clash with something still present.
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    if (cap.outcomes[i] != TxOutcome::RejectedConflict) continue;
    const bool clashes = std::any_of(snap.begin(), snap.end(), [&](const auto& oir) {
      return volumes_conflict(reqs[i].volume, oir.volume);
    });
    REQUIRE(clashes);
  }
}

TEST_CASE("registry: inserts, duplicate ids, versioned deletes, spatial queries") {
  Registry reg;
  const CreateOirRequest r0 = spaced_req(0);
  InsertResult first = reg.check_and_insert(r0);
  REQUIRE(first.conflicts.empty());
  REQUIRE(first.oir.has_value());
  REQUIRE(first.oir->version == 1);

  SECTION("re-creating a live id conflicts even with a disjoint volume") {
    CreateOirRequest dup = spaced_req(50);
    dup.id = r0.id;
    InsertResult res = reg.check_and_insert(dup);
    REQUIRE(res.conflicts == std::vector<std::string>{r0.id});
    REQUIRE(reg.size() == 1);
  }

  SECTION("overlapping volume reports the blocking id") {
    CreateOirRequest near = spaced_req(0);
    near.id = seq_uuid(77);
    InsertResult res = reg.check_and_insert(near);
    REQUIRE(res.conflicts == std::vector<std::string>{r0.id});
  }

  SECTION("delete requires the current ovn") {
    REQUIRE(reg.remove(r0.id, "bogus") == DeleteStatus::VersionMismatch);
    REQUIRE(reg.size() == 1);
    REQUIRE(reg.remove(r0.id, first.oir->ovn) == DeleteStatus::Ok);
    REQUIRE(reg.remove(r0.id, first.oir->ovn) == DeleteStatus::NotFound);
    REQUIRE(reg.get(r0.id) == std::nullopt);
  }

  SECTION("query agrees with a brute-force scan") {
    for (unsigned i = 1; i < 40; ++i) reg.check_and_insert(spaced_req(i));
    RngStream rng(404);
    for (int probe = 0; probe < 100; ++probe) {
      Volume4D area;
      area.center = GeoPoint::unchecked(10.0 + 2.2 * rng.next_unit(), 8.0);
      area.radius_m = 100.0 + 5000.0 * rng.next_unit();
      area.alt_lo_m = 0.0;
      area.alt_hi_m = 500.0;
      area.time_start = 0;
      area.time_end = seconds(7200);
      std::set<std::string> expect;
      for (const auto& oir : reg.snapshot()) {
        if (volumes_conflict(area, oir.volume)) expect.insert(oir.id);
      }
      std::set<std::string> got;
      for (const auto& oir : reg.query(area)) got.insert(oir.id);
      REQUIRE(got == expect);
    }
  }
}

TEST_CASE("federated live: commit, conflict, lookup and delete round trip") {
  FederatedConfig cfg;
  FederatedLive live(cfg, 11, false);

  const CreateOirRequest r0 = spaced_req(0);
  LiveSubmitResult res = live.submit_blocking(r0);
  REQUIRE(res.outcome == TxOutcome::Committed);
  REQUIRE(res.oir.has_value());
  REQUIRE(res.oir->id == r0.id);

  CreateOirRequest clash = spaced_req(0);
  clash.id = seq_uuid(99);
  LiveSubmitResult second = live.submit_blocking(clash);
  REQUIRE(second.outcome == TxOutcome::RejectedConflict);
  REQUIRE(second.conflicts == std::vector<std::string>{r0.id});

  auto found = live.lookup(r0.id);
  REQUIRE(found.has_value());
  REQUIRE(found->ovn == res.oir->ovn);
  REQUIRE(live.remove(r0.id, "stale") == DeleteStatus::VersionMismatch);
  REQUIRE(live.remove(r0.id, res.oir->ovn) == DeleteStatus::Ok);
  REQUIRE(live.lookup(r0.id) == std::nullopt);
}

TEST_CASE("federated live: racing writers on one volume commit exactly once") {
  FederatedConfig cfg;
  cfg.concurrency_limit = 4;
  FederatedLive live(cfg, 13, false);

  constexpr int kThreads = 8;
  std::atomic<int> committed{0};
  std::atomic<int> rejected{0};
  std::vector<std::thread> threads;
  threads.reserve(kThreads);
  for (int i = 0; i < kThreads; ++i) {
    threads.emplace_back([&, i] {
      LiveSubmitResult res = live.submit_blocking(at_slot(i, 0));
      if (res.outcome == TxOutcome::Committed) ++committed;
      if (res.outcome == TxOutcome::RejectedConflict) ++rejected;
    });
  }
  for (auto& t : threads) t.join();

  REQUIRE(committed.load() == 1);
  REQUIRE(rejected.load() == kThreads - 1);
  REQUIRE(live.registry().size() == 1);
}

TEST_CASE("federated live: injected service past the deadline times out cleanly") {
  FederatedConfig cfg;
  cfg.service_time = DelayDistribution::constant(millis(100));
  cfg.request_deadline = millis(20);
  FederatedLive live(cfg, 17, true);

  LiveSubmitResult res = live.submit_blocking(spaced_req(0));
  REQUIRE(res.outcome == TxOutcome::TimedOut);
  REQUIRE(live.lookup(spaced_req(0).id) == std::nullopt);
  REQUIRE(live.registry().size() == 0);
}

TEST_CASE("federated live: a full waiting room drops instead of blocking") {
  FederatedConfig cfg;
  cfg.service_time = DelayDistribution::constant(millis(200));
  cfg.concurrency_limit = 1;
  cfg.queue_capacity = 0;
  FederatedLive live(cfg, 19, true);

  std::thread holder([&] {
    LiveSubmitResult res = live.submit_blocking(spaced_req(0));
    REQUIRE(res.outcome == TxOutcome::Committed);
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(50));
  LiveSubmitResult res = live.submit_blocking(spaced_req(1));
  REQUIRE(res.outcome == TxOutcome::Dropped);
  holder.join();
  REQUIRE(live.registry().size() == 1);
}

TEST_CASE("cut_block: size cuts take exactly the batch, timeout cuts take the rest") {
  auto pend = [](TimeInstant at) {
    PendingTx p;
    p.enqueued_at = at;
    return p;
  };
  std::deque<PendingTx> pending;
  for (int i = 0; i < 5; ++i) pending.push_back(pend(0));

  auto first = cut_block(pending, 0, 3, seconds(2), std::uint64_t{1});
  REQUIRE(first.has_value());
  REQUIRE(first->cut_reason == CutReason::SizeCut);
  REQUIRE(first->txs.size() == 3);
  REQUIRE(pending.size() == 2);

  REQUIRE_FALSE(cut_block(pending, 0, 3, seconds(2), std::uint64_t{2}).has_value());
  REQUIRE_FALSE(cut_block(pending, seconds(2) - 1, 3, seconds(2), std::uint64_t{2}).has_value());

  auto second = cut_block(pending, seconds(2), 3, seconds(2), std::uint64_t{2});
  REQUIRE(second.has_value());
  REQUIRE(second->cut_reason == CutReason::TimeoutCut);
  REQUIRE(second->txs.size() == 2);
  REQUIRE(second->seq == 2);
  REQUIRE(pending.empty());

  REQUIRE_FALSE(cut_block(pending, seconds(10), 3, seconds(2), std::uint64_t{3}).has_value());
}

TEST_CASE("cut_block: template form preserves order through a projection") {
  std::deque<TimeInstant> pending{5, 6, 7};
  auto cut = cut_block(pending, seconds(1) + 5, 10, seconds(1),
                       [](TimeInstant t) { return t; });
  REQUIRE(cut.has_value());
  REQUIRE(cut->first == CutReason::TimeoutCut);
  REQUIRE(cut->second == std::vector<TimeInstant>{5, 6, 7});
}

namespace {

LedgerConfig fast_ledger() {
  LedgerConfig cfg;
  cfg.network_delay = DelayDistribution::constant(0);
  cfg.endorse_time = DelayDistribution::constant(millis(20));
  cfg.num_endorsers = 1;
  cfg.max_message_count = 4;
  cfg.batch_timeout = millis(100);
  cfg.commit_time = DelayDistribution::constant(millis(30));
  cfg.per_tx_validate = DelayDistribution::constant(millis(5));
  return cfg;
}

struct LedgerCapture {
  std::vector<TxOutcome> outcomes;
  std::vector<TimeInstant> completions;

  LedgerSim::CompletionFn sink(std::size_t idx) {
    if (outcomes.size() <= idx) {
      outcomes.resize(idx + 1, TxOutcome::Dropped);
      completions.resize(idx + 1, 0);
    }
    return [this, idx](TxOutcome o, TimeInstant t) {
      outcomes[idx] = o;
      completions[idx] = t;
    };
  }
};

}  // namespace

TEST_CASE("ledger sim: a lone transaction rides the batch timeout") {
  Simulation sim;
  LedgerSim ledger(sim, fast_ledger(), 31);
  LedgerCapture cap;
  sim.schedule_at(0, [&] { ledger.submit(spaced_req(0), cap.sink(0)); });
  sim.run_all();

  // endorse 20ms, wait out the 100ms batch timeout, commit 30 + 5ms.
  REQUIRE(cap.outcomes[0] == TxOutcome::Committed);
  REQUIRE(cap.completions[0] == millis(155));
  REQUIRE(ledger.blocks_cut() == 1);
  REQUIRE(ledger.world().size() == 1);
}

TEST_CASE("ledger sim: a full batch size-cuts immediately") {
  Simulation sim;
  LedgerSim ledger(sim, fast_ledger(), 37);
  LedgerCapture cap;
  for (int i = 0; i < 4; ++i) {
    sim.schedule_at(0, [&ledger, &cap, i] { ledger.submit(spaced_req(i), cap.sink(i)); });
  }
  sim.run_all();

  // All four endorse by 20ms, the fourth offer fills the block: 30 + 4*5ms.
  for (int i = 0; i < 4; ++i) {
    REQUIRE(cap.outcomes[i] == TxOutcome::Committed);
    REQUIRE(cap.completions[i] == millis(70));
  }
  REQUIRE(ledger.blocks_cut() == 1);
  REQUIRE(ledger.world().size() == 4);
}

TEST_CASE("ledger sim: concurrent overlaps slip through without the strict check") {
  LedgerConfig cfg = fast_ledger();
  cfg.strict_phantom_check = false;
  Simulation sim;
  LedgerSim ledger(sim, cfg, 41);
  LedgerCapture cap;
  sim.schedule_at(0, [&] { ledger.submit(at_slot(0, 0), cap.sink(0)); });
  sim.schedule_at(0, [&] { ledger.submit(at_slot(1, 0), cap.sink(1)); });
  sim.run_all();

  // Both endorsed before either committed; neither read set covers the
  // other's key, so the phantom lands and the world holds an overlap.
  REQUIRE(cap.outcomes[0] == TxOutcome::Committed);
  REQUIRE(cap.outcomes[1] == TxOutcome::Committed);
  REQUIRE(ledger.world().size() == 2);
  const auto snap = ledger.world().snapshot();
  REQUIRE(volumes_conflict(snap[0].volume, snap[1].volume));
}

TEST_CASE("ledger sim: the strict check invalidates the second overlap") {
  LedgerConfig cfg = fast_ledger();
  cfg.strict_phantom_check = true;
  Simulation sim;
  LedgerSim ledger(sim, cfg, 41);
  LedgerCapture cap;
  sim.schedule_at(0, [&] { ledger.submit(at_slot(0, 0), cap.sink(0)); });
  sim.schedule_at(0, [&] { ledger.submit(at_slot(1, 0), cap.sink(1)); });
  sim.run_all();

  REQUIRE(cap.outcomes[0] == TxOutcome::Committed);
  REQUIRE(cap.outcomes[1] == TxOutcome::Invalidated);
  REQUIRE(ledger.world().size() == 1);
}

TEST_CASE("ledger sim: an overlap endorsed after commit is rejected outright") {
  Simulation sim;
  LedgerSim ledger(sim, fast_ledger(), 43);
  LedgerCapture cap;
  sim.schedule_at(0, [&] { ledger.submit(at_slot(0, 0), cap.sink(0)); });
  sim.schedule_at(millis(500), [&] { ledger.submit(at_slot(1, 0), cap.sink(1)); });
  sim.run_all();

  REQUIRE(cap.outcomes[0] == TxOutcome::Committed);
  REQUIRE(cap.outcomes[1] == TxOutcome::RejectedConflict);
  // Rejection completes after the endorsement latency plus the return hop.
  REQUIRE(cap.completions[1] == millis(520));
  REQUIRE(ledger.blocks_cut() == 1);
  REQUIRE(ledger.world().size() == 1);
}

TEST_CASE("ledger sim: a request the chaincode rejects never reaches ordering") {
  Simulation sim;
  LedgerSim ledger(sim, fast_ledger(), 47);
  LedgerCapture cap;
  CreateOirRequest bad = spaced_req(0);
  bad.priority = 101;
  sim.schedule_at(0, [&] { ledger.submit(bad, cap.sink(0)); });
  sim.run_all();

  REQUIRE(cap.outcomes[0] == TxOutcome::RejectedConflict);
  REQUIRE(ledger.blocks_cut() == 0);
  REQUIRE(ledger.world().size() == 0);
}

TEST_CASE("ledger sim: a saturated ordering backlog drops new offers") {
  LedgerConfig cfg = fast_ledger();
  cfg.order_queue_capacity = 1;
  cfg.max_message_count = 1;
  cfg.endorse_time = DelayDistribution::constant(millis(10));
  cfg.commit_time = DelayDistribution::constant(seconds(10));
  Simulation sim;
  LedgerSim ledger(sim, cfg, 53);
  LedgerCapture cap;
  for (int i = 0; i < 3; ++i) {
    sim.schedule_at(0, [&ledger, &cap, i] { ledger.submit(spaced_req(i), cap.sink(i)); });
  }
  sim.run_all();

  // First offer cuts and starts committing, freeing its slot. The second
  // fills the lone slot as a cut-but-waiting block. The third finds the
  // backlog full.
  REQUIRE(cap.outcomes[0] == TxOutcome::Committed);
  REQUIRE(cap.completions[0] == millis(10) + seconds(10) + millis(5));
  REQUIRE(cap.outcomes[1] == TxOutcome::Committed);
  REQUIRE(cap.completions[1] == millis(10) + 2 * (seconds(10) + millis(5)));
  REQUIRE(cap.outcomes[2] == TxOutcome::Dropped);
  REQUIRE(cap.completions[2] == millis(10));
  REQUIRE(ledger.blocks_cut() == 2);
}

TEST_CASE("ledger sim: a commit landing past the deadline never mutates") {
  LedgerConfig cfg = fast_ledger();
  cfg.max_message_count = 1;
  cfg.endorse_time = DelayDistribution::constant(millis(10));
  cfg.commit_time = DelayDistribution::constant(millis(200));
  cfg.per_tx_validate = DelayDistribution::constant(0);
  cfg.request_deadline = millis(100);
  Simulation sim;
  LedgerSim ledger(sim, cfg, 59);
  LedgerCapture cap;
  sim.schedule_at(0, [&] { ledger.submit(spaced_req(0), cap.sink(0)); });
  sim.run_all();

  // The block still cuts and consumes commit budget, but the expired
  // transaction is filtered out before validation.
  REQUIRE(cap.outcomes[0] == TxOutcome::TimedOut);
  REQUIRE(cap.completions[0] == millis(100));
  REQUIRE(ledger.blocks_cut() == 1);
  REQUIRE(ledger.world().size() == 0);
}

TEST_CASE("ledger sim: two idle-separated bursts produce two timeout cuts") {
  LedgerConfig cfg = fast_ledger();
  cfg.endorse_time = DelayDistribution::constant(millis(10));
  cfg.max_message_count = 10;
  cfg.batch_timeout = seconds(2);
  cfg.commit_time = DelayDistribution::constant(millis(100));
  Simulation sim;
  LedgerSim ledger(sim, cfg, 61);
  LedgerCapture cap;
  for (int i = 0; i < 3; ++i) {
    sim.schedule_at(0, [&ledger, &cap, i] { ledger.submit(spaced_req(i), cap.sink(i)); });
    sim.schedule_at(seconds(5),
                    [&ledger, &cap, i] { ledger.submit(spaced_req(10 + i), cap.sink(3 + i)); });
  }
  sim.run_all();

  // Each burst endorses at 10ms past its start and waits the full 2s before
  // cutting; commit is 100 + 3*5ms.
  for (int i = 0; i < 3; ++i) {
    REQUIRE(cap.outcomes[i] == TxOutcome::Committed);
    REQUIRE(cap.completions[i] == millis(2125));
    REQUIRE(cap.outcomes[3 + i] == TxOutcome::Committed);
    REQUIRE(cap.completions[3 + i] == seconds(5) + millis(2125));
  }
  REQUIRE(ledger.blocks_cut() == 2);
  REQUIRE(ledger.world().size() == 6);
}

TEST_CASE("ledger sim: outcome counts partition the workload") {
  WorkloadSpec spec;
  spec.n_tx = 300;
  spec.conflict_fraction = 0.4;
  spec.seed = 67;

  LedgerConfig cfg;
  cfg.network_delay = DelayDistribution::log_normal(millis(4), 0.3);
  cfg.endorse_time = DelayDistribution::log_normal(millis(60), 0.35);
  cfg.commit_time = DelayDistribution::log_normal(millis(168), 1.25);
  cfg.per_tx_validate = DelayDistribution::constant(millis(4));
  cfg.order_queue_capacity = 620;
  // Strict phantom checking makes the final world provably conflict-free,
  // which the pairwise scan below relies on.
  cfg.strict_phantom_check = true;

  const std::vector<CreateOirRequest> reqs = generate_workload(spec);
  Simulation sim;
  LedgerSim ledger(sim, cfg, 68);
  LedgerCapture cap;
  for (std::size_t i = 0; i < reqs.size(); ++i) {
    const TimeInstant at = std::llround(static_cast<double>(i) * 1e6 / 40.0);
    sim.schedule_at(at, [&ledger, &cap, &reqs, i] { ledger.submit(reqs[i], cap.sink(i)); });
  }
  sim.run_all();

  std::map<TxOutcome, int> counts;
  for (TxOutcome o : cap.outcomes) ++counts[o];
  int total = 0;
  for (const auto& [o, c] : counts) total += c;
  REQUIRE(total == static_cast<int>(reqs.size()));
  REQUIRE(counts[TxOutcome::Committed] == static_cast<int>(ledger.world().size()));

  const auto snap = ledger.world().snapshot();
  for (std::size_t a = 0; a < snap.size(); ++a) {
    for (std::size_t b = a + 1; b < snap.size(); ++b) {
      REQUIRE_FALSE(volumes_conflict(snap[a].volume, snap[b].volume));
    }
  }
}

TEST_CASE("world state: deletes bump versions and invalidate stale endorsements") {
  WorldState world;
  const CreateOirRequest req = spaced_req(0);
  const std::string key = WorldState::oir_key(req.id);

  WorldState::EndorseResult er = world.endorse(req, true);
  REQUIRE(er.conflicts.empty());
  REQUIRE(world.commit_one({req, er.rwset}) == TxOutcome::Committed);
  REQUIRE(world.version(key) == 1);
  REQUIRE(world.version(WorldState::index_key()) == 1);

  // Endorsed against version 1, then the OIR is deleted underneath it.
  WorldState::EndorseResult stale = world.endorse(at_slot(0, 0), true);
  REQUIRE_FALSE(stale.conflicts.empty());

  const std::string ovn = world.get_oir(req.id)->ovn;
  REQUIRE(world.remove(req.id, "wrong") == DeleteStatus::VersionMismatch);
  REQUIRE(world.remove(req.id, ovn) == DeleteStatus::Ok);
  REQUIRE(world.version(key) == 2);
  REQUIRE(world.version(WorldState::index_key()) == 2);
  REQUIRE(world.get_oir(req.id) == std::nullopt);

  // A fresh endorsement after the delete commits cleanly.
  WorldState::EndorseResult again = world.endorse(req, true);
  REQUIRE(again.conflicts.empty());
  REQUIRE(world.commit_one({req, again.rwset}) == TxOutcome::Committed);
  REQUIRE(world.size() == 1);
  REQUIRE(world.version(key) == 3);

  // The pre-delete endorsement of the same slot is now stale on both keys.
  CreateOirRequest rival = at_slot(1, 0);
  WorldState::EndorseResult pre = world.endorse(rival, true);
  REQUIRE_FALSE(pre.conflicts.empty());
}

TEST_CASE("ledger live: commit, conflict and delete against the world") {
  LedgerConfig cfg;
  cfg.max_message_count = 2;
  cfg.batch_timeout = millis(50);
  LedgerLive live(cfg, 71, false);

  const CreateOirRequest r0 = spaced_req(0);
  LiveSubmitResult res = live.submit_blocking(r0);
  REQUIRE(res.outcome == TxOutcome::Committed);
  REQUIRE(res.oir.has_value());

  CreateOirRequest clash = spaced_req(0);
  clash.id = seq_uuid(42);
  LiveSubmitResult second = live.submit_blocking(clash);
  REQUIRE(second.outcome == TxOutcome::RejectedConflict);
  REQUIRE(second.conflicts == std::vector<std::string>{r0.id});

  REQUIRE(live.lookup(r0.id).has_value());
  REQUIRE(live.remove(r0.id, res.oir->ovn) == DeleteStatus::Ok);
  REQUIRE(live.lookup(r0.id) == std::nullopt);

  LiveSubmitResult third = live.submit_blocking(clash);
  REQUIRE(third.outcome == TxOutcome::Committed);
}

TEST_CASE("ledger live: racing writers on one volume commit exactly once") {
  LedgerConfig cfg;
  cfg.max_message_count = 4;
  cfg.batch_timeout = millis(20);
  cfg.strict_phantom_check = true;
  LedgerLive live(cfg, 73, false);

  constexpr int kThreads = 8;
  std::atomic<int> committed{0};
  std::atomic<int> losers{0};
  std::vector<std::thread> threads;
  threads.reserve(kThreads);
  for (int i = 0; i < kThreads; ++i) {
    threads.emplace_back([&, i] {
      LiveSubmitResult res = live.submit_blocking(at_slot(i, 0));
      if (res.outcome == TxOutcome::Committed) ++committed;
      if (res.outcome == TxOutcome::Invalidated || res.outcome == TxOutcome::RejectedConflict) {
        ++losers;
      }
    });
  }
  for (auto& t : threads) t.join();

  REQUIRE(committed.load() == 1);
  REQUIRE(losers.load() == kThreads - 1);
  REQUIRE(live.world().size() == 1);
}

TEST_CASE("ledger live: an expired submitter is never committed later") {
  LedgerConfig cfg;
  cfg.max_message_count = 1;
  cfg.batch_timeout = millis(500);
  cfg.commit_time = DelayDistribution::constant(millis(200));
  cfg.per_tx_validate = DelayDistribution::constant(0);
  cfg.endorse_time = DelayDistribution::constant(0);
  cfg.network_delay = DelayDistribution::constant(0);
  cfg.request_deadline = millis(40);
  LedgerLive live(cfg, 79, true);

  LiveSubmitResult res = live.submit_blocking(spaced_req(0));
  REQUIRE(res.outcome == TxOutcome::TimedOut);
  // Give the committer time to finish the block, then confirm it skipped us.
  std::this_thread::sleep_for(std::chrono::milliseconds(400));
  REQUIRE(live.lookup(spaced_req(0).id) == std::nullopt);
  REQUIRE(live.world().size() == 0);
}

TEST_CASE("ledger live: a full ordering backlog drops at submit") {
  LedgerConfig cfg;
  cfg.order_queue_capacity = 1;
  cfg.max_message_count = 1;
  cfg.commit_time = DelayDistribution::constant(millis(400));
  cfg.per_tx_validate = DelayDistribution::constant(0);
  cfg.endorse_time = DelayDistribution::constant(0);
  cfg.network_delay = DelayDistribution::constant(0);
  LedgerLive live(cfg, 83, true);

  std::atomic<int> committed{0};
  std::thread t1([&] {
    if (live.submit_blocking(spaced_req(0)).outcome == TxOutcome::Committed) ++committed;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  std::thread t2([&] {
    if (live.submit_blocking(spaced_req(1)).outcome == TxOutcome::Committed) ++committed;
  });
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  // First block is committing, second fills the lone backlog slot.
  LiveSubmitResult res = live.submit_blocking(spaced_req(2));
  REQUIRE(res.outcome == TxOutcome::Dropped);
  t1.join();
  t2.join();
  REQUIRE(committed.load() == 2);
  REQUIRE(live.world().size() == 2);
}
