#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>

#include "oirbench/time.hpp"

namespace oirbench {

class SchedulingInPast : public std::runtime_error {
 public:
  explicit SchedulingInPast(TimeInstant due, TimeInstant now)
      : std::runtime_error("event due " + std::to_string(due) + " scheduled at " +
                           std::to_string(now)) {}
};

/// Single-threaded discrete-event simulator. Events fire in (due time,
/// insertion order) so equal-time events run in the order they were
/// scheduled, which makes whole runs replayable from the seed alone.
class Simulation {
 public:
  using Handler = std::function<void()>;

  TimeInstant now() const { return now_; }
  std::size_t pending() const { return events_.size(); }

  void schedule_at(TimeInstant due, Handler fn) {
    if (due < now_) throw SchedulingInPast(due, now_);
    events_.emplace(Key{due, seq_++}, std::move(fn));
  }

  void schedule_after(Duration delay, Handler fn) { schedule_at(now_ + delay, std::move(fn)); }

  /// Dispatches every event due at or before `t`, then lands the clock on
  /// `t`. Pending events are all due strictly after `t` at that point, so
  /// they stay in the future.
  void run_until(TimeInstant t) {
    while (!events_.empty()) {
      auto it = events_.begin();
      if (it->first.due > t) break;
      auto node = events_.extract(it);
      now_ = node.key().due;
      hash_key(node.key());
      node.mapped()();
    }
    if (now_ < t) now_ = t;
  }

  /// Runs to quiescence. Handlers may keep scheduling; the loop ends only
  /// when the event set drains.
  void run_all() {
    while (!events_.empty()) {
      auto node = events_.extract(events_.begin());
      now_ = node.key().due;
      hash_key(node.key());
      node.mapped()();
    }
  }

  /// FNV-1a over every (due, seq) pair dispatched so far. Two runs that
  /// executed the same events in the same order agree on this value.
  std::uint64_t trace_hash() const { return hash_; }

 private:
  struct Key {
    TimeInstant due;
    std::uint64_t seq;
    bool operator<(const Key& o) const {
      return due != o.due ? due < o.due : seq < o.seq;
    }
  };

  void hash_key(const Key& k) {
    auto mix = [this](std::uint64_t v) {
      for (int i = 0; i < 8; ++i) {
        hash_ ^= (v >> (8 * i)) & 0xff;
        hash_ *= 0x100000001b3ull;
      }
    };
    mix(static_cast<std::uint64_t>(k.due));
    mix(k.seq);
  }

  std::map<Key, Handler> events_;
  TimeInstant now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

}  // namespace oirbench
