#pragma once

#include <cmath>
#include <stdexcept>

namespace oirbench {

inline constexpr double kEarthRadiusM = 6371000.0;
inline constexpr double kDegToRad = 0.017453292519943295;

inline bool lat_lon_in_range(double lat, double lon) {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
         lon >= -180.0 && lon < 180.0;
}

/// WGS84-style coordinate pair. Construction rejects out-of-range values;
/// unchecked() is for deserialization paths that validate afterwards.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  GeoPoint() = default;
  GeoPoint(double lat_deg, double lon_deg) : lat(lat_deg), lon(lon_deg) {
    if (!lat_lon_in_range(lat, lon)) throw std::invalid_argument("GeoPoint out of range");
  }

  static GeoPoint unchecked(double lat_deg, double lon_deg) {
    GeoPoint p;
    p.lat = lat_deg;
    p.lon = lon_deg;
    return p;
  }
};

/// Great-circle distance in meters on a sphere of radius 6,371,000 m.
inline double haversine_distance(const GeoPoint& a, const GeoPoint& b) {
  const double phi1 = a.lat * kDegToRad;
  const double phi2 = b.lat * kDegToRad;
  const double dphi = (b.lat - a.lat) * kDegToRad;
  const double dlam = (b.lon - a.lon) * kDegToRad;
  const double sp = std::sin(dphi / 2.0);
  const double sl = std::sin(dlam / 2.0);
  const double h = sp * sp + std::cos(phi1) * std::cos(phi2) * sl * sl;
  return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(h)));
}

}  // namespace oirbench
