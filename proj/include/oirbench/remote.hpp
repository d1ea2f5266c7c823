#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <httplib.h>

#include "oirbench/bench.hpp"
#include "oirbench/metrics.hpp"
#include "oirbench/oir.hpp"
#include "oirbench/wire.hpp"

namespace oirbench {

class BackendUnavailable : public std::runtime_error {
 public:
  explicit BackendUnavailable(const std::string& what) : std::runtime_error(what) {}
};

/// 201 -> Committed, 409 -> RejectedConflict, 429 -> Dropped,
/// 504 -> TimedOut; anything else counts as a loss of the Dropped class.
inline TxOutcome outcome_from_status(int status) {
  switch (status) {
    case 201: return TxOutcome::Committed;
    case 409: return TxOutcome::RejectedConflict;
    case 429: return TxOutcome::Dropped;
    case 504: return TxOutcome::TimedOut;
    default: return TxOutcome::Dropped;
  }
}

/// HTTP client adapter driving a served OIR endpoint. One keep-alive client
/// per worker, so concurrent workers never share a connection.
class RemoteBackend {
 public:
  RemoteBackend(const std::string& base_url, int workers, Duration deadline)
      : deadline_(deadline) {
    if (workers < 1) throw BackendUnavailable("remote adapter needs at least one worker");
    for (int w = 0; w < workers; ++w) {
      auto client = std::make_unique<httplib::Client>(base_url);
      if (!client->is_valid()) throw BackendUnavailable("invalid remote url: " + base_url);
      const auto chrono_deadline = std::chrono::microseconds(deadline_);
      client->set_connection_timeout(chrono_deadline);
      client->set_read_timeout(chrono_deadline);
      client->set_write_timeout(chrono_deadline);
      clients_.push_back(std::move(client));
    }
  }

  /// Blocking create over the wire. A transport failure is recorded as a
  /// timeout charged with the full deadline, without sleeping it away.
  WallResult submit(const CreateOirRequest& req, int worker) {
    httplib::Client& cli = *clients_[static_cast<std::size_t>(worker) % clients_.size()];
    const std::string path = "/oir/v1/operational_intent_references/" + req.id;
    const auto res = cli.Put(path, request_to_wire(req).dump(), "application/json");
    if (!res) return {TxOutcome::TimedOut, deadline_};
    return {outcome_from_status(res->status), std::nullopt};
  }

 private:
  std::vector<std::unique_ptr<httplib::Client>> clients_;
  Duration deadline_;
};

}  // namespace oirbench
