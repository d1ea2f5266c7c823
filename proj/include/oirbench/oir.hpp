#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <optional>
#include <ranges>
#include <string>
#include <string_view>
#include <vector>

#include "oirbench/geo.hpp"
#include "oirbench/rng.hpp"
#include "oirbench/time.hpp"

namespace oirbench {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// Circle footprint + altitude band + time window; the unit of conflict
/// detection. Times are testbed-clock instants in microseconds.
struct Volume4D {
  GeoPoint center;
  double radius_m = 0.0;
  double alt_lo_m = 0.0;
  double alt_hi_m = 0.0;
  TimeInstant time_start = 0;
  TimeInstant time_end = 0;
};

enum class OirState { Accepted, Activated };

inline std::string_view to_string(OirState s) {
  return s == OirState::Accepted ? "Accepted" : "Activated";
}

inline std::optional<OirState> oir_state_from_string(std::string_view s) {
  if (s == "Accepted") return OirState::Accepted;
  if (s == "Activated") return OirState::Activated;
  return std::nullopt;
}

/// A registered airspace reservation.
struct OperationalIntentReference {
  std::string id;       // canonical lowercase UUID text
  std::string manager;  // owning USS identifier
  Volume4D volume;
  int priority = 0;
  OirState state = OirState::Accepted;
  int version = 1;
  std::string ovn;
};

struct CreateOirRequest {
  std::string id;
  std::string manager;
  Volume4D volume;
  int priority = 0;
  OirState state = OirState::Accepted;
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct InvalidField {
  std::string field;
  std::string reason;
};

inline bool is_canonical_uuid(std::string_view s) {
  if (s.size() != 36) return false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (c != '-') return false;
    } else if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) {
      return false;
    }
  }
  return true;
}

/// Field checks in fixed order: id, manager, center, radius, altitude, time,
/// priority. Returns the first violation, or nullopt when the request is
/// well-formed.
inline std::optional<InvalidField> validate_request(const CreateOirRequest& req) {
  if (!is_canonical_uuid(req.id)) return InvalidField{"id", "not a canonical lowercase UUID"};
  if (req.manager.empty() || req.manager.size() > 64)
    return InvalidField{"manager", "must be nonempty and at most 64 chars"};
  if (!lat_lon_in_range(req.volume.center.lat, req.volume.center.lon))
    return InvalidField{"center", "lat/lon out of range"};
  if (!std::isfinite(req.volume.radius_m) || req.volume.radius_m <= 0.0)
    return InvalidField{"radius", "radius_m must be positive"};
  if (!std::isfinite(req.volume.alt_lo_m) || !std::isfinite(req.volume.alt_hi_m) ||
      req.volume.alt_lo_m >= req.volume.alt_hi_m)
    return InvalidField{"altitude", "altitude_lower_m must be below altitude_upper_m"};
  if (req.volume.time_start >= req.volume.time_end)
    return InvalidField{"time", "time_start must precede time_end"};
  if (req.priority < 0 || req.priority > 100)
    return InvalidField{"priority", "priority must be in [0, 100]"};
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Conflict detection
// ---------------------------------------------------------------------------

/// True iff the volumes overlap on all three axes with positive measure.
/// Touching boundaries do not conflict; priority plays no role.
inline bool volumes_conflict(const Volume4D& v1, const Volume4D& v2) {
  // Cheap axes first; the workload is staggered in time, so most pairs exit
  // on the integer comparison without touching trig.
  if (std::max(v1.time_start, v2.time_start) >= std::min(v1.time_end, v2.time_end)) return false;
  if (std::max(v1.alt_lo_m, v2.alt_lo_m) >= std::min(v1.alt_hi_m, v2.alt_hi_m)) return false;
  return haversine_distance(v1.center, v2.center) < v1.radius_m + v2.radius_m;
}

/// Ids of the existing OIRs whose volume conflicts with the candidate,
/// ascending by id text.
template <std::ranges::input_range R>
  requires std::same_as<std::remove_cvref_t<std::ranges::range_reference_t<R>>,
                        OperationalIntentReference>
std::vector<std::string> check_conflicts(const Volume4D& candidate, R&& existing) {
  std::vector<std::string> ids;
  for (const OperationalIntentReference& oir : existing) {
    if (volumes_conflict(candidate, oir.volume)) ids.push_back(oir.id);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

// ---------------------------------------------------------------------------
// Opaque version numbers
// ---------------------------------------------------------------------------

namespace detail {

inline void append_double(std::string& out, double v) {
  std::array<char, 32> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), p);
}

inline void append_int(std::string& out, std::int64_t v) {
  std::array<char, 24> buf;
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), p);
}

}  // namespace detail

/// Canonical OVN input: `id|version|lat|lon|radius_m|alt_lo_m|alt_hi_m|
/// time_start|time_end|priority|state` with floats as shortest round-trip
/// decimals and times as base-10 integers.
inline std::string canonical_oir_string(const std::string& id, int version, const Volume4D& vol,
                                        int priority, OirState state) {
  std::string s;
  s.reserve(128);
  s += id;
  s += '|';
  detail::append_int(s, version);
  s += '|';
  detail::append_double(s, vol.center.lat);
  s += '|';
  detail::append_double(s, vol.center.lon);
  s += '|';
  detail::append_double(s, vol.radius_m);
  s += '|';
  detail::append_double(s, vol.alt_lo_m);
  s += '|';
  detail::append_double(s, vol.alt_hi_m);
  s += '|';
  detail::append_int(s, vol.time_start);
  s += '|';
  detail::append_int(s, vol.time_end);
  s += '|';
  detail::append_int(s, priority);
  s += '|';
  s += to_string(state);
  return s;
}

/// SHA-256 of the canonical serialization, lowercase hex.
inline std::string compute_ovn(const std::string& id, int version, const Volume4D& vol,
                               int priority, OirState state) {
  const std::string input = canonical_oir_string(id, version, vol, priority, state);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(input.data(), input.size(), digest, &len, EVP_sha256(), nullptr);
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

inline std::string compute_ovn(const OperationalIntentReference& oir) {
  return compute_ovn(oir.id, oir.version, oir.volume, oir.priority, oir.state);
}

inline OperationalIntentReference make_oir(const CreateOirRequest& req, int version = 1) {
  OperationalIntentReference oir;
  oir.id = req.id;
  oir.manager = req.manager;
  oir.volume = req.volume;
  oir.priority = req.priority;
  oir.state = req.state;
  oir.version = version;
  oir.ovn = compute_ovn(oir);
  return oir;
}

enum class DeleteStatus { Ok, NotFound, VersionMismatch };

/// Deterministic RFC 4122 v4-format UUID from a seeded stream.
inline std::string random_uuid(RngStream& rng) {
  std::array<std::uint8_t, 16> b;
  std::uint64_t hi = rng.next_u64(), lo = rng.next_u64();
  for (int i = 0; i < 8; ++i) b[i] = static_cast<std::uint8_t>(hi >> (8 * i));
  for (int i = 0; i < 8; ++i) b[8 + i] = static_cast<std::uint8_t>(lo >> (8 * i));
  b[6] = static_cast<std::uint8_t>((b[6] & 0x0f) | 0x40);
  b[8] = static_cast<std::uint8_t>((b[8] & 0x3f) | 0x80);
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(36);
  for (int i = 0; i < 16; ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) s.push_back('-');
    s.push_back(hex[b[i] >> 4]);
    s.push_back(hex[b[i] & 0xf]);
  }
  return s;
}

}  // namespace oirbench
