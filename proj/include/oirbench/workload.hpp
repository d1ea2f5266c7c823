#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "oirbench/geo.hpp"
#include "oirbench/oir.hpp"
#include "oirbench/rng.hpp"
#include "oirbench/time.hpp"

namespace oirbench {

struct SpatialTemplate {
  GeoPoint center = GeoPoint::unchecked(47.3769, 8.5417);
  double radius_m = 200.0;
  double alt_lo_m = 100.0;
  double alt_hi_m = 200.0;
};

class InvalidSpec : public std::invalid_argument {
 public:
  explicit InvalidSpec(const std::string& what) : std::invalid_argument(what) {}
};

struct WorkloadSpec {
  int n_tx = 100;
  double rate_tps = 10.0;
  int workers = 2;
  Duration window_duration = seconds(60);
  Duration gap = seconds(1);
  SpatialTemplate spatial;
  double conflict_fraction = 0.0;
  std::uint64_t seed = 42;

  void validate() const {
    if (n_tx < 1) throw InvalidSpec("n_tx must be >= 1");
    if (!(rate_tps > 0.0) || !std::isfinite(rate_tps)) throw InvalidSpec("rate_tps must be > 0");
    if (workers < 1) throw InvalidSpec("workers must be >= 1");
    if (window_duration <= 0) throw InvalidSpec("window_duration must be positive");
    if (gap < 0) throw InvalidSpec("gap must be nonnegative");
    if (!lat_lon_in_range(spatial.center.lat, spatial.center.lon))
      throw InvalidSpec("spatial center out of range");
    if (!(spatial.radius_m > 0.0)) throw InvalidSpec("spatial radius must be positive");
    if (!(spatial.alt_lo_m < spatial.alt_hi_m)) throw InvalidSpec("altitude band empty");
    if (!(conflict_fraction >= 0.0 && conflict_fraction <= 1.0))
      throw InvalidSpec("conflict_fraction must be in [0, 1]");
  }
};

/// Staggered OIR sequence: request i occupies the template volume over
/// [t0 + i*(d+g), t0 + i*(d+g) + d], so consecutive windows never touch and
/// the sequence is pairwise conflict-free. With conflict_fraction f, a
/// seeded choice of floor(f*n) requests instead copy their predecessor's
/// window (as generated), each forcing exactly one conflict.
inline std::vector<CreateOirRequest> generate_workload(const WorkloadSpec& spec,
                                                       TimeInstant t0 = 0) {
  spec.validate();
  const int n = spec.n_tx;
  std::size_t n_conflicts =
      static_cast<std::size_t>(std::floor(spec.conflict_fraction * static_cast<double>(n)));
  if (n_conflicts > static_cast<std::size_t>(n - 1)) n_conflicts = static_cast<std::size_t>(n - 1);

  std::vector<bool> duplicate(static_cast<std::size_t>(n), false);
  if (n_conflicts > 0) {
    // Partial Fisher-Yates over the indices that have a predecessor.
    std::vector<int> idx(static_cast<std::size_t>(n - 1));
    for (int i = 1; i < n; ++i) idx[static_cast<std::size_t>(i - 1)] = i;
    RngStream picks = RngStream::derive(spec.seed, "workload.conflicts");
    for (std::size_t k = 0; k < n_conflicts; ++k) {
      const std::size_t j = k + static_cast<std::size_t>(picks.next_below(idx.size() - k));
      std::swap(idx[k], idx[j]);
      duplicate[static_cast<std::size_t>(idx[k])] = true;
    }
  }

  RngStream ids = RngStream::derive(spec.seed, "workload.ids");
  std::vector<CreateOirRequest> out;
  out.reserve(static_cast<std::size_t>(n));
  const Duration stride = spec.window_duration + spec.gap;
  for (int i = 0; i < n; ++i) {
    CreateOirRequest req;
    req.id = random_uuid(ids);
    req.manager = "uss-bench";
    req.volume.center = spec.spatial.center;
    req.volume.radius_m = spec.spatial.radius_m;
    req.volume.alt_lo_m = spec.spatial.alt_lo_m;
    req.volume.alt_hi_m = spec.spatial.alt_hi_m;
    if (duplicate[static_cast<std::size_t>(i)]) {
      req.volume.time_start = out.back().volume.time_start;
      req.volume.time_end = out.back().volume.time_end;
    } else {
      req.volume.time_start = t0 + static_cast<TimeInstant>(i) * stride;
      req.volume.time_end = req.volume.time_start + spec.window_duration;
    }
    req.priority = 0;
    req.state = OirState::Accepted;
    out.push_back(std::move(req));
  }
  return out;
}

/// Open-loop schedule: global submit instant of request i is i/rate seconds,
/// assigned round-robin across W workers. Returns per-worker lists of
/// (request index, submit instant).
inline std::vector<std::vector<std::pair<int, TimeInstant>>> arrival_schedule(int n,
                                                                              double rate_tps,
                                                                              int workers) {
  if (n < 1) throw InvalidSpec("n must be >= 1");
  if (!(rate_tps > 0.0)) throw InvalidSpec("rate_tps must be > 0");
  if (workers < 1) throw InvalidSpec("workers must be >= 1");
  std::vector<std::vector<std::pair<int, TimeInstant>>> per_worker(
      static_cast<std::size_t>(workers));
  for (int i = 0; i < n; ++i) {
    const auto at = static_cast<TimeInstant>(
        std::llround(static_cast<double>(i) * 1e6 / rate_tps));
    per_worker[static_cast<std::size_t>(i % workers)].emplace_back(i, at);
  }
  return per_worker;
}

}  // namespace oirbench
