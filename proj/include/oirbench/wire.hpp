#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "oirbench/oir.hpp"
#include "oirbench/time.hpp"

namespace oirbench {

// Wire timestamps are RFC 3339 UTC strings; internally they map to integer
// microseconds since the Unix epoch (the testbed clock's zero).

namespace wire_detail {

constexpr std::int64_t kUsPerDay = 86400LL * 1000000LL;

// Howard Hinnant's civil-date algorithms.
constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

constexpr bool is_leap(std::int64_t y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

constexpr unsigned days_in_month(std::int64_t y, unsigned m) {
  constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return lengths[m - 1];
}

inline bool parse_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace wire_detail

inline std::optional<TimeInstant> parse_rfc3339(std::string_view s) {
  using namespace wire_detail;
  int year, month, day, hour, minute, second;
  if (!parse_digits(s, 0, 4, year) || s.size() < 20) return std::nullopt;
  if (s[4] != '-' || !parse_digits(s, 5, 2, month)) return std::nullopt;
  if (s[7] != '-' || !parse_digits(s, 8, 2, day)) return std::nullopt;
  if ((s[10] != 'T' && s[10] != 't') || !parse_digits(s, 11, 2, hour)) return std::nullopt;
  if (s[13] != ':' || !parse_digits(s, 14, 2, minute)) return std::nullopt;
  if (s[16] != ':' || !parse_digits(s, 17, 2, second)) return std::nullopt;
  if (month < 1 || month > 12 || day < 1 ||
      day > static_cast<int>(days_in_month(year, static_cast<unsigned>(month))) ||
      hour > 23 || minute > 59 || second > 59) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  std::int64_t frac_us = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::int64_t scale = 100000;
    std::size_t digits = 0;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') {
      if (digits < 6) frac_us += (s[pos] - '0') * scale;
      scale /= 10;
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;
  std::int64_t offset_us = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const int sign = s[pos] == '+' ? 1 : -1;
    int oh, om;
    if (!parse_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !parse_digits(s, pos + 4, 2, om) || oh > 23 || om > 59) {
      return std::nullopt;
    }
    offset_us = sign * (static_cast<std::int64_t>(oh) * 3600 + om * 60) * 1000000;
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  const std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                            static_cast<unsigned>(day));
  const std::int64_t tod_us =
      (static_cast<std::int64_t>(hour) * 3600 + minute * 60 + second) * 1000000 + frac_us;
  return days * kUsPerDay + tod_us - offset_us;
}

inline std::string format_rfc3339(TimeInstant t) {
  using namespace wire_detail;
  std::int64_t days = t / kUsPerDay;
  std::int64_t rem = t % kUsPerDay;
  if (rem < 0) {
    rem += kUsPerDay;
    --days;
  }
  std::int64_t year;
  unsigned month, day;
  civil_from_days(days, year, month, day);
  const auto us = static_cast<long>(rem % 1000000);
  const auto sec_of_day = static_cast<long>(rem / 1000000);
  std::array<char, 40> buf;
  std::snprintf(buf.data(), buf.size(), "%04lld-%02u-%02uT%02ld:%02ld:%02ld.%06ldZ",
                static_cast<long long>(year), month, day, sec_of_day / 3600,
                (sec_of_day / 60) % 60, sec_of_day % 60, us);
  return std::string(buf.data());
}

struct WireError {
  std::string field;
  std::string reason;
};

/// Maps the HTTP request body onto a CreateOirRequest. Only structure and
/// types are checked here; range rules are validate_request's job.
inline std::variant<CreateOirRequest, WireError> parse_create_body(const std::string& id,
                                                                   const nlohmann::json& body) {
  if (!body.is_object()) return WireError{"body", "must be a JSON object"};
  CreateOirRequest req;
  req.id = id;

  if (!body.contains("manager") || !body.at("manager").is_string())
    return WireError{"manager", "required string"};
  req.manager = body.at("manager").get<std::string>();

  if (!body.contains("center") || !body.at("center").is_object())
    return WireError{"center", "required object with lat and lng"};
  const auto& center = body.at("center");
  if (!center.contains("lat") || !center.at("lat").is_number() || !center.contains("lng") ||
      !center.at("lng").is_number()) {
    return WireError{"center", "required object with numeric lat and lng"};
  }
  req.volume.center = GeoPoint::unchecked(center.at("lat").get<double>(),
                                          center.at("lng").get<double>());

  if (!body.contains("radius_m") || !body.at("radius_m").is_number())
    return WireError{"radius", "radius_m required number"};
  req.volume.radius_m = body.at("radius_m").get<double>();

  if (!body.contains("altitude_lower_m") || !body.at("altitude_lower_m").is_number())
    return WireError{"altitude", "altitude_lower_m required number"};
  if (!body.contains("altitude_upper_m") || !body.at("altitude_upper_m").is_number())
    return WireError{"altitude", "altitude_upper_m required number"};
  req.volume.alt_lo_m = body.at("altitude_lower_m").get<double>();
  req.volume.alt_hi_m = body.at("altitude_upper_m").get<double>();

  if (!body.contains("time_start") || !body.at("time_start").is_string())
    return WireError{"time", "time_start required RFC 3339 string"};
  if (!body.contains("time_end") || !body.at("time_end").is_string())
    return WireError{"time", "time_end required RFC 3339 string"};
  const auto start = parse_rfc3339(body.at("time_start").get<std::string>());
  if (!start) return WireError{"time", "time_start is not RFC 3339"};
  const auto end = parse_rfc3339(body.at("time_end").get<std::string>());
  if (!end) return WireError{"time", "time_end is not RFC 3339"};
  req.volume.time_start = *start;
  req.volume.time_end = *end;

  if (!body.contains("priority") || !body.at("priority").is_number_integer())
    return WireError{"priority", "required integer"};
  req.priority = body.at("priority").get<int>();

  if (body.contains("state")) {
    if (!body.at("state").is_string()) return WireError{"state", "must be a string"};
    const auto st = oir_state_from_string(body.at("state").get<std::string>());
    if (!st) return WireError{"state", "must be Accepted or Activated"};
    req.state = *st;
  }
  return req;
}

inline nlohmann::ordered_json request_to_wire(const CreateOirRequest& req) {
  nlohmann::ordered_json j;
  j["manager"] = req.manager;
  j["center"] = {{"lat", req.volume.center.lat}, {"lng", req.volume.center.lon}};
  j["radius_m"] = req.volume.radius_m;
  j["altitude_lower_m"] = req.volume.alt_lo_m;
  j["altitude_upper_m"] = req.volume.alt_hi_m;
  j["time_start"] = format_rfc3339(req.volume.time_start);
  j["time_end"] = format_rfc3339(req.volume.time_end);
  j["priority"] = req.priority;
  j["state"] = std::string(to_string(req.state));
  return j;
}

inline nlohmann::ordered_json oir_to_wire(const OperationalIntentReference& oir) {
  nlohmann::ordered_json j;
  j["id"] = oir.id;
  j["manager"] = oir.manager;
  j["center"] = {{"lat", oir.volume.center.lat}, {"lng", oir.volume.center.lon}};
  j["radius_m"] = oir.volume.radius_m;
  j["altitude_lower_m"] = oir.volume.alt_lo_m;
  j["altitude_upper_m"] = oir.volume.alt_hi_m;
  j["time_start"] = format_rfc3339(oir.volume.time_start);
  j["time_end"] = format_rfc3339(oir.volume.time_end);
  j["priority"] = oir.priority;
  j["state"] = std::string(to_string(oir.state));
  j["version"] = oir.version;
  j["ovn"] = oir.ovn;
  return j;
}

}  // namespace oirbench
