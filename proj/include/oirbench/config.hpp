#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "oirbench/federated.hpp"
#include "oirbench/ledger.hpp"
#include "oirbench/rng.hpp"
#include "oirbench/time.hpp"
#include "oirbench/workload.hpp"

namespace oirbench {

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

enum class BackendKind { Federated, Ledger, Remote };
enum class RunMode { Virtual, Wall };

inline std::string_view to_string(BackendKind b) {
  switch (b) {
    case BackendKind::Federated: return "federated";
    case BackendKind::Ledger: return "ledger";
    case BackendKind::Remote: return "remote";
  }
  return "?";
}

inline std::string_view to_string(RunMode m) {
  return m == RunMode::Virtual ? "virtual" : "wall";
}

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8643;
  bool inject_delays = false;
};

struct RunConfig {
  BackendKind backend = BackendKind::Federated;
  std::string remote_url;
  Duration remote_deadline = seconds(30);
  RunMode mode = RunMode::Virtual;
  std::uint64_t seed = 42;
  int rounds = 10;
  std::string out_dir = "reports";
  FederatedConfig federated;
  LedgerConfig ledger;
  WorkloadSpec workload;
  ServiceConfig service;

  void validate() const {
    if (rounds < 1) throw ConfigError("rounds must be >= 1");
    if (backend == BackendKind::Remote) {
      if (mode != RunMode::Wall) throw ConfigError("remote backend requires wall mode");
      if (remote_url.empty()) throw ConfigError("remote backend requires remote_url");
    }
    if (remote_deadline <= 0) throw ConfigError("remote_deadline_ms must be positive");
    try {
      federated.validate();
      ledger.validate();
      workload.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (service.port < 0 || service.port > 65535) throw ConfigError("service.port out of range");
  }
};

namespace cfg_detail {

using nlohmann::json;

inline void check_keys(const json& j, const std::string& path,
                       std::initializer_list<std::string_view> allowed) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (std::string_view k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError("unknown key '" + it.key() + "' in " + path);
  }
}

inline const json& expect_object(const json& j, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + " must be an object");
  return j;
}

inline double get_number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + " must be a number");
  return j.get<double>();
}

inline int get_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + " must be an integer");
  return j.get<int>();
}

inline bool get_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path + " must be a boolean");
  return j.get<bool>();
}

inline std::string get_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + " must be a string");
  return j.get<std::string>();
}

inline Duration get_duration_ms(const json& j, const std::string& path) {
  const double ms = get_number(j, path);
  if (ms < 0) throw ConfigError(path + " must be nonnegative");
  return duration_from_ms(ms);
}

inline DelayDistribution parse_delay(const json& j, const std::string& path) {
  expect_object(j, path);
  if (!j.contains("kind")) throw ConfigError(path + ".kind is required");
  const std::string kind = get_string(j.at("kind"), path + ".kind");
  DelayDistribution d;
  if (kind == "constant") {
    check_keys(j, path, {"kind", "value_ms"});
    if (!j.contains("value_ms")) throw ConfigError(path + ".value_ms is required");
    d = DelayDistribution::constant(get_duration_ms(j.at("value_ms"), path + ".value_ms"));
  } else if (kind == "uniform") {
    check_keys(j, path, {"kind", "lo_ms", "hi_ms"});
    if (!j.contains("lo_ms") || !j.contains("hi_ms"))
      throw ConfigError(path + " requires lo_ms and hi_ms");
    d = DelayDistribution::uniform(get_duration_ms(j.at("lo_ms"), path + ".lo_ms"),
                                   get_duration_ms(j.at("hi_ms"), path + ".hi_ms"));
  } else if (kind == "exponential") {
    check_keys(j, path, {"kind", "mean_ms"});
    if (!j.contains("mean_ms")) throw ConfigError(path + ".mean_ms is required");
    d = DelayDistribution::exponential(get_duration_ms(j.at("mean_ms"), path + ".mean_ms"));
  } else if (kind == "lognormal") {
    check_keys(j, path, {"kind", "median_ms", "sigma"});
    if (!j.contains("median_ms") || !j.contains("sigma"))
      throw ConfigError(path + " requires median_ms and sigma");
    d = DelayDistribution::log_normal(get_duration_ms(j.at("median_ms"), path + ".median_ms"),
                                      get_number(j.at("sigma"), path + ".sigma"));
  } else {
    throw ConfigError(path + ".kind must be constant|uniform|exponential|lognormal");
  }
  try {
    d.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return d;
}

inline nlohmann::ordered_json delay_to_json(const DelayDistribution& d) {
  nlohmann::ordered_json j;
  switch (d.kind) {
    case DelayDistribution::Kind::Constant:
      j["kind"] = "constant";
      j["value_ms"] = duration_to_ms(d.a);
      break;
    case DelayDistribution::Kind::Uniform:
      j["kind"] = "uniform";
      j["lo_ms"] = duration_to_ms(d.a);
      j["hi_ms"] = duration_to_ms(d.b);
      break;
    case DelayDistribution::Kind::Exponential:
      j["kind"] = "exponential";
      j["mean_ms"] = duration_to_ms(d.a);
      break;
    case DelayDistribution::Kind::LogNormal:
      j["kind"] = "lognormal";
      j["median_ms"] = duration_to_ms(d.a);
      j["sigma"] = d.sigma;
      break;
  }
  return j;
}

}  // namespace cfg_detail

inline RunConfig parse_run_config(const nlohmann::json& root) {
  using namespace cfg_detail;
  expect_object(root, "config");
  check_keys(root, "config",
             {"backend", "remote_url", "remote_deadline_ms", "mode", "seed", "rounds", "out_dir",
              "federated", "ledger", "workload", "service"});
  RunConfig cfg;
  if (root.contains("backend")) {
    const std::string b = get_string(root.at("backend"), "backend");
    if (b == "federated") cfg.backend = BackendKind::Federated;
    else if (b == "ledger") cfg.backend = BackendKind::Ledger;
    else if (b == "remote") cfg.backend = BackendKind::Remote;
    else throw ConfigError("backend must be federated|ledger|remote");
  }
  if (root.contains("remote_url")) cfg.remote_url = get_string(root.at("remote_url"), "remote_url");
  if (root.contains("remote_deadline_ms"))
    cfg.remote_deadline = get_duration_ms(root.at("remote_deadline_ms"), "remote_deadline_ms");
  if (root.contains("mode")) {
    const std::string m = get_string(root.at("mode"), "mode");
    if (m == "virtual") cfg.mode = RunMode::Virtual;
    else if (m == "wall") cfg.mode = RunMode::Wall;
    else throw ConfigError("mode must be virtual|wall");
  }
  if (root.contains("seed")) {
    if (!root.at("seed").is_number_unsigned() && !root.at("seed").is_number_integer())
      throw ConfigError("seed must be an integer");
    cfg.seed = root.at("seed").get<std::uint64_t>();
  }
  if (root.contains("rounds")) cfg.rounds = get_int(root.at("rounds"), "rounds");
  if (root.contains("out_dir")) cfg.out_dir = get_string(root.at("out_dir"), "out_dir");

  if (root.contains("federated")) {
    const auto& f = expect_object(root.at("federated"), "federated");
    check_keys(f, "federated",
               {"network_delay", "service_time", "concurrency_limit", "queue_capacity",
                "request_deadline_ms"});
    if (f.contains("network_delay"))
      cfg.federated.network_delay = parse_delay(f.at("network_delay"), "federated.network_delay");
    if (f.contains("service_time"))
      cfg.federated.service_time = parse_delay(f.at("service_time"), "federated.service_time");
    if (f.contains("concurrency_limit"))
      cfg.federated.concurrency_limit = get_int(f.at("concurrency_limit"), "federated.concurrency_limit");
    if (f.contains("queue_capacity"))
      cfg.federated.queue_capacity = get_int(f.at("queue_capacity"), "federated.queue_capacity");
    if (f.contains("request_deadline_ms"))
      cfg.federated.request_deadline =
          get_duration_ms(f.at("request_deadline_ms"), "federated.request_deadline_ms");
  }

  if (root.contains("ledger")) {
    const auto& l = expect_object(root.at("ledger"), "ledger");
    check_keys(l, "ledger",
               {"network_delay", "endorse_time", "num_endorsers", "order_queue_capacity",
                "max_message_count", "batch_timeout_ms", "commit_time", "per_tx_validate",
                "request_deadline_ms", "strict_phantom_check"});
    if (l.contains("network_delay"))
      cfg.ledger.network_delay = parse_delay(l.at("network_delay"), "ledger.network_delay");
    if (l.contains("endorse_time"))
      cfg.ledger.endorse_time = parse_delay(l.at("endorse_time"), "ledger.endorse_time");
    if (l.contains("num_endorsers"))
      cfg.ledger.num_endorsers = get_int(l.at("num_endorsers"), "ledger.num_endorsers");
    if (l.contains("order_queue_capacity"))
      cfg.ledger.order_queue_capacity =
          get_int(l.at("order_queue_capacity"), "ledger.order_queue_capacity");
    if (l.contains("max_message_count"))
      cfg.ledger.max_message_count = get_int(l.at("max_message_count"), "ledger.max_message_count");
    if (l.contains("batch_timeout_ms"))
      cfg.ledger.batch_timeout = get_duration_ms(l.at("batch_timeout_ms"), "ledger.batch_timeout_ms");
    if (l.contains("commit_time"))
      cfg.ledger.commit_time = parse_delay(l.at("commit_time"), "ledger.commit_time");
    if (l.contains("per_tx_validate"))
      cfg.ledger.per_tx_validate = parse_delay(l.at("per_tx_validate"), "ledger.per_tx_validate");
    if (l.contains("request_deadline_ms"))
      cfg.ledger.request_deadline =
          get_duration_ms(l.at("request_deadline_ms"), "ledger.request_deadline_ms");
    if (l.contains("strict_phantom_check"))
      cfg.ledger.strict_phantom_check =
          get_bool(l.at("strict_phantom_check"), "ledger.strict_phantom_check");
  }

  if (root.contains("workload")) {
    const auto& w = expect_object(root.at("workload"), "workload");
    check_keys(w, "workload",
               {"n_tx", "rate_tps", "workers", "window_duration_ms", "gap_ms",
                "conflict_fraction", "spatial"});
    if (w.contains("n_tx")) cfg.workload.n_tx = get_int(w.at("n_tx"), "workload.n_tx");
    if (w.contains("rate_tps")) cfg.workload.rate_tps = get_number(w.at("rate_tps"), "workload.rate_tps");
    if (w.contains("workers")) cfg.workload.workers = get_int(w.at("workers"), "workload.workers");
    if (w.contains("window_duration_ms"))
      cfg.workload.window_duration =
          get_duration_ms(w.at("window_duration_ms"), "workload.window_duration_ms");
    if (w.contains("gap_ms")) cfg.workload.gap = get_duration_ms(w.at("gap_ms"), "workload.gap_ms");
    if (w.contains("conflict_fraction"))
      cfg.workload.conflict_fraction = get_number(w.at("conflict_fraction"), "workload.conflict_fraction");
    if (w.contains("spatial")) {
      const auto& s = expect_object(w.at("spatial"), "workload.spatial");
      check_keys(s, "workload.spatial", {"lat", "lon", "radius_m", "alt_lo_m", "alt_hi_m"});
      if (s.contains("lat"))
        cfg.workload.spatial.center =
            GeoPoint::unchecked(get_number(s.at("lat"), "workload.spatial.lat"),
                                cfg.workload.spatial.center.lon);
      if (s.contains("lon"))
        cfg.workload.spatial.center = GeoPoint::unchecked(
            cfg.workload.spatial.center.lat, get_number(s.at("lon"), "workload.spatial.lon"));
      if (s.contains("radius_m"))
        cfg.workload.spatial.radius_m = get_number(s.at("radius_m"), "workload.spatial.radius_m");
      if (s.contains("alt_lo_m"))
        cfg.workload.spatial.alt_lo_m = get_number(s.at("alt_lo_m"), "workload.spatial.alt_lo_m");
      if (s.contains("alt_hi_m"))
        cfg.workload.spatial.alt_hi_m = get_number(s.at("alt_hi_m"), "workload.spatial.alt_hi_m");
    }
  }

  if (root.contains("service")) {
    const auto& s = expect_object(root.at("service"), "service");
    check_keys(s, "service", {"host", "port", "inject_delays"});
    if (s.contains("host")) cfg.service.host = get_string(s.at("host"), "service.host");
    if (s.contains("port")) cfg.service.port = get_int(s.at("port"), "service.port");
    if (s.contains("inject_delays"))
      cfg.service.inject_delays = get_bool(s.at("inject_delays"), "service.inject_delays");
  }

  cfg.validate();
  return cfg;
}

inline RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parse_run_config(j);
}

/// Canonical serialization, used both for the report's config echo and for
/// comparing configs (two configs are equivalent iff their echoes match).
inline nlohmann::ordered_json to_json(const RunConfig& cfg) {
  using namespace cfg_detail;
  nlohmann::ordered_json j;
  j["backend"] = std::string(to_string(cfg.backend));
  j["remote_url"] = cfg.remote_url;
  j["remote_deadline_ms"] = duration_to_ms(cfg.remote_deadline);
  j["mode"] = std::string(to_string(cfg.mode));
  j["seed"] = cfg.seed;
  j["rounds"] = cfg.rounds;
  j["out_dir"] = cfg.out_dir;
  j["federated"] = {
      {"network_delay", delay_to_json(cfg.federated.network_delay)},
      {"service_time", delay_to_json(cfg.federated.service_time)},
      {"concurrency_limit", cfg.federated.concurrency_limit},
      {"queue_capacity", cfg.federated.queue_capacity},
      {"request_deadline_ms", duration_to_ms(cfg.federated.request_deadline)},
  };
  j["ledger"] = {
      {"network_delay", delay_to_json(cfg.ledger.network_delay)},
      {"endorse_time", delay_to_json(cfg.ledger.endorse_time)},
      {"num_endorsers", cfg.ledger.num_endorsers},
      {"order_queue_capacity", cfg.ledger.order_queue_capacity},
      {"max_message_count", cfg.ledger.max_message_count},
      {"batch_timeout_ms", duration_to_ms(cfg.ledger.batch_timeout)},
      {"commit_time", delay_to_json(cfg.ledger.commit_time)},
      {"per_tx_validate", delay_to_json(cfg.ledger.per_tx_validate)},
      {"request_deadline_ms", duration_to_ms(cfg.ledger.request_deadline)},
      {"strict_phantom_check", cfg.ledger.strict_phantom_check},
  };
  j["workload"] = {
      {"n_tx", cfg.workload.n_tx},
      {"rate_tps", cfg.workload.rate_tps},
      {"workers", cfg.workload.workers},
      {"window_duration_ms", duration_to_ms(cfg.workload.window_duration)},
      {"gap_ms", duration_to_ms(cfg.workload.gap)},
      {"conflict_fraction", cfg.workload.conflict_fraction},
      {"spatial",
       {
           {"lat", cfg.workload.spatial.center.lat},
           {"lon", cfg.workload.spatial.center.lon},
           {"radius_m", cfg.workload.spatial.radius_m},
           {"alt_lo_m", cfg.workload.spatial.alt_lo_m},
           {"alt_hi_m", cfg.workload.spatial.alt_hi_m},
       }},
  };
  j["service"] = {
      {"host", cfg.service.host},
      {"port", cfg.service.port},
      {"inject_delays", cfg.service.inject_delays},
  };
  return j;
}

}  // namespace oirbench
