#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "oirbench/metrics.hpp"

namespace oirbench {

struct BenchReport {
  std::string backend;
  std::string mode;
  std::uint64_t seed = 0;
  double rate_tps = 0.0;
  int n_tx = 0;
  std::vector<RoundMetrics> rounds;
  AggregateMetrics mean;
  nlohmann::ordered_json config_echo;
};

namespace report_detail {

inline std::string fmt(double v) {
  std::array<char, 32> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), p);
}

inline std::string fmt(std::int64_t v) { return std::to_string(v); }

}  // namespace report_detail

/// One row per round; field names and order are part of the interface.
inline std::string to_csv(const BenchReport& r) {
  using report_detail::fmt;
  std::string out =
      "backend,rate_tps,n_tx,round,sent,committed,rejected_conflict,invalidated,dropped,"
      "timed_out,throughput_tps,p50_ms,p90_ms,mean_ms,min_ms,max_ms\n";
  for (const RoundMetrics& m : r.rounds) {
    out += r.backend;
    out += ',';
    out += fmt(r.rate_tps);
    out += ',';
    out += std::to_string(r.n_tx);
    out += ',';
    out += std::to_string(m.round);
    out += ',';
    out += fmt(m.sent);
    out += ',';
    out += fmt(m.committed);
    out += ',';
    out += fmt(m.rejected_conflict);
    out += ',';
    out += fmt(m.invalidated);
    out += ',';
    out += fmt(m.dropped);
    out += ',';
    out += fmt(m.timed_out);
    out += ',';
    out += fmt(m.throughput_tps);
    out += ',';
    if (m.has_latency) {
      out += fmt(m.p50_ms);
      out += ',';
      out += fmt(m.p90_ms);
      out += ',';
      out += fmt(m.mean_ms);
      out += ',';
      out += fmt(m.min_ms);
      out += ',';
      out += fmt(m.max_ms);
    } else {
      out += ",,,,";
    }
    out += '\n';
  }
  return out;
}

namespace report_detail {

inline nlohmann::ordered_json round_to_json(const RoundMetrics& m) {
  nlohmann::ordered_json j;
  j["round"] = m.round;
  j["sent"] = m.sent;
  j["committed"] = m.committed;
  j["rejected_conflict"] = m.rejected_conflict;
  j["invalidated"] = m.invalidated;
  j["dropped"] = m.dropped;
  j["timed_out"] = m.timed_out;
  j["loss_rate"] = m.loss_rate;
  j["throughput_tps"] = m.throughput_tps;
  if (m.has_latency) {
    j["p50_ms"] = m.p50_ms;
    j["p90_ms"] = m.p90_ms;
    j["mean_ms"] = m.mean_ms;
    j["min_ms"] = m.min_ms;
    j["max_ms"] = m.max_ms;
  }
  return j;
}

inline nlohmann::ordered_json mean_to_json(const AggregateMetrics& a) {
  nlohmann::ordered_json j;
  j["sent"] = a.sent;
  j["committed"] = a.committed;
  j["rejected_conflict"] = a.rejected_conflict;
  j["invalidated"] = a.invalidated;
  j["dropped"] = a.dropped;
  j["timed_out"] = a.timed_out;
  j["loss_rate"] = a.loss_rate;
  j["throughput_tps"] = a.throughput_tps;
  if (a.has_latency) {
    j["p50_ms"] = a.p50_ms;
    j["p90_ms"] = a.p90_ms;
    j["mean_ms"] = a.mean_ms;
    j["min_ms"] = a.min_ms;
    j["max_ms"] = a.max_ms;
  }
  return j;
}

}  // namespace report_detail

inline nlohmann::ordered_json report_to_json(const BenchReport& r) {
  nlohmann::ordered_json j;
  j["backend"] = r.backend;
  j["mode"] = r.mode;
  j["seed"] = r.seed;
  j["rate_tps"] = r.rate_tps;
  j["n_tx"] = r.n_tx;
  j["config"] = r.config_echo;
  j["rounds"] = nlohmann::ordered_json::array();
  for (const RoundMetrics& m : r.rounds) j["rounds"].push_back(report_detail::round_to_json(m));
  j["aggregate"] = report_detail::mean_to_json(r.mean);
  return j;
}

}  // namespace oirbench
