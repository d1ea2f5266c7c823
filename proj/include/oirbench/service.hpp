#pragma once

#include <memory>
#include <string>
#include <thread>
#include <utility>

#include <httplib.h>
#include <json.hpp>

#include "oirbench/metrics.hpp"
#include "oirbench/oir.hpp"
#include "oirbench/wire.hpp"

namespace oirbench {

inline constexpr const char* kOirPathPattern =
    R"(/oir/v1/operational_intent_references/([0-9a-fA-F\-]+))";

/// HTTP facade over a live backend (FederatedLive or LedgerLive; anything
/// with submit_blocking / lookup / remove). Registers the DSS-style routes
/// on a caller-owned server.
template <typename Backend>
void attach_oir_routes(httplib::Server& srv, Backend& backend) {
  using nlohmann::ordered_json;

  srv.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("ok", "text/plain");
  });

  srv.Put(kOirPathPattern, [&backend](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
    if (body.is_discarded()) {
      res.status = 400;
      res.set_content(ordered_json{{"error", "body is not valid JSON"}}.dump(), "application/json");
      return;
    }
    auto parsed = parse_create_body(id, body);
    if (std::holds_alternative<WireError>(parsed)) {
      const WireError& we = std::get<WireError>(parsed);
      res.status = 400;
      res.set_content(ordered_json{{"error", we.reason}, {"field", we.field}}.dump(),
                      "application/json");
      return;
    }
    const CreateOirRequest& create = std::get<CreateOirRequest>(parsed);
    if (auto invalid = validate_request(create)) {
      res.status = 400;
      res.set_content(ordered_json{{"error", invalid->reason}, {"field", invalid->field}}.dump(),
                      "application/json");
      return;
    }
    const LiveSubmitResult out = backend.submit_blocking(create);
    switch (out.outcome) {
      case TxOutcome::Committed: {
        res.status = 201;
        const OperationalIntentReference& oir = *out.oir;
        res.set_content(
            ordered_json{{"id", oir.id}, {"ovn", oir.ovn}, {"version", oir.version}}.dump(),
            "application/json");
        return;
      }
      case TxOutcome::RejectedConflict:
      case TxOutcome::Invalidated:
        res.status = 409;
        res.set_content(ordered_json{{"conflicting_ids", out.conflicts}}.dump(),
                        "application/json");
        return;
      case TxOutcome::Dropped:
        res.status = 429;
        res.set_content(ordered_json{{"error", "admission queue full"}}.dump(), "application/json");
        return;
      case TxOutcome::TimedOut:
        res.status = 504;
        res.set_content(ordered_json{{"error", "deadline exceeded"}}.dump(), "application/json");
        return;
    }
  });

  srv.Get(kOirPathPattern, [&backend](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto oir = backend.lookup(id);
    if (!oir) {
      res.status = 404;
      res.set_content(ordered_json{{"error", "not found"}}.dump(), "application/json");
      return;
    }
    res.set_content(oir_to_wire(*oir).dump(), "application/json");
  });

  srv.Delete(kOirPathPattern, [&backend](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    if (!req.has_param("ovn")) {
      res.status = 400;
      res.set_content(ordered_json{{"error", "ovn query parameter required"}}.dump(),
                      "application/json");
      return;
    }
    switch (backend.remove(id, req.get_param_value("ovn"))) {
      case DeleteStatus::Ok:
        res.set_content(ordered_json{{"id", id}}.dump(), "application/json");
        return;
      case DeleteStatus::NotFound:
        res.status = 404;
        res.set_content(ordered_json{{"error", "not found"}}.dump(), "application/json");
        return;
      case DeleteStatus::VersionMismatch:
        res.status = 409;
        res.set_content(ordered_json{{"error", "ovn does not match"}}.dump(), "application/json");
        return;
    }
  });
}

/// Owns a server thread for in-process use (tests, the loopback smoke run).
/// Pass port 0 to bind any free port.
class ServiceRunner {
 public:
  template <typename Backend>
  bool start(Backend& backend, const std::string& host, int port) {
    srv_ = std::make_unique<httplib::Server>();
    // httplib's default is SO_REUSEPORT, under which a second server binds
    // the same port and the kernel splits connections between the two. A
    // registry endpoint must own its port; keep only SO_REUSEADDR.
    srv_->set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes),
                 sizeof(yes));
    });
    attach_oir_routes(*srv_, backend);
    if (port == 0) {
      port_ = srv_->bind_to_any_port(host);
      if (port_ < 0) return false;
    } else {
      if (!srv_->bind_to_port(host, port)) return false;
      port_ = port;
    }
    thread_ = std::thread([this] { srv_->listen_after_bind(); });
    srv_->wait_until_ready();
    return true;
  }

  int port() const { return port_; }

  void stop() {
    if (srv_) srv_->stop();
    if (thread_.joinable()) thread_.join();
  }

  ~ServiceRunner() { stop(); }

 private:
  std::unique_ptr<httplib::Server> srv_;
  std::thread thread_;
  int port_ = -1;
};

}  // namespace oirbench
