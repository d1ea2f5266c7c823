#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "oirbench/time.hpp"

namespace oirbench {

enum class TxOutcome { Committed, RejectedConflict, Invalidated, Dropped, TimedOut };

inline std::string_view to_string(TxOutcome o) {
  switch (o) {
    case TxOutcome::Committed: return "Committed";
    case TxOutcome::RejectedConflict: return "RejectedConflict";
    case TxOutcome::Invalidated: return "Invalidated";
    case TxOutcome::Dropped: return "Dropped";
    case TxOutcome::TimedOut: return "TimedOut";
  }
  return "?";
}

/// One benchmark transaction's lifecycle.
struct TxRecord {
  std::string tx_id;
  int worker_id = 0;
  TimeInstant submit_at = 0;
  TimeInstant complete_at = 0;
  TxOutcome outcome = TxOutcome::Committed;

  Duration latency() const { return complete_at - submit_at; }
};

class EmptyInput : public std::invalid_argument {
 public:
  EmptyInput() : std::invalid_argument("percentile of empty sample") {}
};

/// Nearest-rank percentile: the ceil(p*N)-th order statistic (1-based) of an
/// ascending sample. No interpolation.
inline Duration percentile(const std::vector<Duration>& sorted, double p) {
  if (sorted.empty()) throw EmptyInput();
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("percentile p outside (0, 1]");
  auto rank = static_cast<std::size_t>(std::ceil(p * static_cast<double>(sorted.size())));
  if (rank < 1) rank = 1;
  if (rank > sorted.size()) rank = sorted.size();
  return sorted[rank - 1];
}

/// Per-round results. Latency statistics are over Committed transactions
/// only; when a round commits nothing they are absent (has_latency false).
struct RoundMetrics {
  int round = 0;  // 1-based
  std::int64_t sent = 0;
  std::int64_t committed = 0;
  std::int64_t rejected_conflict = 0;
  std::int64_t invalidated = 0;
  std::int64_t dropped = 0;
  std::int64_t timed_out = 0;
  double loss_rate = 0.0;
  double throughput_tps = 0.0;
  bool has_latency = false;
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

inline RoundMetrics aggregate(const std::vector<TxRecord>& records, int round = 1) {
  if (records.empty()) throw EmptyInput();
  RoundMetrics m;
  m.round = round;
  m.sent = static_cast<std::int64_t>(records.size());
  TimeInstant first_submit = records.front().submit_at;
  TimeInstant last_complete = records.front().complete_at;
  std::vector<Duration> lat;
  lat.reserve(records.size());
  for (const TxRecord& r : records) {
    first_submit = std::min(first_submit, r.submit_at);
    last_complete = std::max(last_complete, r.complete_at);
    switch (r.outcome) {
      case TxOutcome::Committed:
        ++m.committed;
        lat.push_back(r.latency());
        break;
      case TxOutcome::RejectedConflict: ++m.rejected_conflict; break;
      case TxOutcome::Invalidated: ++m.invalidated; break;
      case TxOutcome::Dropped: ++m.dropped; break;
      case TxOutcome::TimedOut: ++m.timed_out; break;
    }
  }
  m.loss_rate = static_cast<double>(m.sent - m.committed) / static_cast<double>(m.sent);
  const double span_s = duration_to_seconds(last_complete - first_submit);
  m.throughput_tps = (m.committed > 0 && span_s > 0.0)
                         ? static_cast<double>(m.committed) / span_s
                         : 0.0;
  if (!lat.empty()) {
    std::sort(lat.begin(), lat.end());
    m.has_latency = true;
    m.p50_ms = duration_to_ms(percentile(lat, 0.5));
    m.p90_ms = duration_to_ms(percentile(lat, 0.9));
    double sum = 0.0;
    for (Duration d : lat) sum += static_cast<double>(d);
    m.mean_ms = sum / static_cast<double>(lat.size()) / 1000.0;
    m.min_ms = duration_to_ms(lat.front());
    m.max_ms = duration_to_ms(lat.back());
  }
  return m;
}

/// Arithmetic mean of each metric across rounds. Count fields become
/// fractional; latency means cover the rounds that committed anything.
struct AggregateMetrics {
  double sent = 0.0;
  double committed = 0.0;
  double rejected_conflict = 0.0;
  double invalidated = 0.0;
  double dropped = 0.0;
  double timed_out = 0.0;
  double loss_rate = 0.0;
  double throughput_tps = 0.0;
  bool has_latency = false;
  double p50_ms = 0.0;
  double p90_ms = 0.0;
  double mean_ms = 0.0;
  double min_ms = 0.0;
  double max_ms = 0.0;
};

inline AggregateMetrics summarize(const std::vector<RoundMetrics>& rounds) {
  if (rounds.empty()) throw EmptyInput();
  AggregateMetrics a;
  const double n = static_cast<double>(rounds.size());
  double lat_rounds = 0.0;
  for (const RoundMetrics& r : rounds) {
    a.sent += static_cast<double>(r.sent);
    a.committed += static_cast<double>(r.committed);
    a.rejected_conflict += static_cast<double>(r.rejected_conflict);
    a.invalidated += static_cast<double>(r.invalidated);
    a.dropped += static_cast<double>(r.dropped);
    a.timed_out += static_cast<double>(r.timed_out);
    a.loss_rate += r.loss_rate;
    a.throughput_tps += r.throughput_tps;
    if (r.has_latency) {
      lat_rounds += 1.0;
      a.p50_ms += r.p50_ms;
      a.p90_ms += r.p90_ms;
      a.mean_ms += r.mean_ms;
      a.min_ms += r.min_ms;
      a.max_ms += r.max_ms;
    }
  }
  a.sent /= n;
  a.committed /= n;
  a.rejected_conflict /= n;
  a.invalidated /= n;
  a.dropped /= n;
  a.timed_out /= n;
  a.loss_rate /= n;
  a.throughput_tps /= n;
  if (lat_rounds > 0.0) {
    a.has_latency = true;
    a.p50_ms /= lat_rounds;
    a.p90_ms /= lat_rounds;
    a.mean_ms /= lat_rounds;
    a.min_ms /= lat_rounds;
    a.max_ms /= lat_rounds;
  }
  return a;
}

}  // namespace oirbench
