#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string_view>

#include "oirbench/time.hpp"

namespace oirbench {

namespace detail {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

/// Seeded random stream. Streams are derived from a master seed by stable
/// string labels, so adding a consumer never perturbs the draws of another.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : gen_(seed) {}

  static RngStream derive(std::uint64_t master, std::string_view label) {
    return RngStream(detail::splitmix64(master ^ detail::fnv1a64(label)));
  }

  static std::uint64_t derive_seed(std::uint64_t master, std::string_view label) {
    return detail::splitmix64(master ^ detail::fnv1a64(label));
  }

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform double in [0, 1).
  double next_unit() { return (gen_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller; two uniform draws per call.
  double next_normal() {
    double u1 = next_unit();
    while (u1 <= 0.0) u1 = next_unit();
    const double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  /// Uniform integer in [0, bound).
  std::uint64_t next_below(std::uint64_t bound) {
    return bound == 0 ? 0 : gen_() % bound;
  }

 private:
  std::mt19937_64 gen_;
};

/// Service and network delay model. All parameters are Durations except the
/// log-normal shape parameter.
struct DelayDistribution {
  enum class Kind { Constant, Uniform, Exponential, LogNormal };

  Kind kind = Kind::Constant;
  Duration a = 0;       // Constant value, Uniform lo, Exponential mean, LogNormal median
  Duration b = 0;       // Uniform hi
  double sigma = 0.0;   // LogNormal shape

  static DelayDistribution constant(Duration d) { return {Kind::Constant, d, 0, 0.0}; }
  static DelayDistribution uniform(Duration lo, Duration hi) { return {Kind::Uniform, lo, hi, 0.0}; }
  static DelayDistribution exponential(Duration mean) { return {Kind::Exponential, mean, 0, 0.0}; }
  static DelayDistribution log_normal(Duration median, double sigma) {
    return {Kind::LogNormal, median, 0, sigma};
  }

  void validate() const {
    switch (kind) {
      case Kind::Constant:
        if (a < 0) throw std::invalid_argument("constant delay must be nonnegative");
        break;
      case Kind::Uniform:
        if (a < 0 || b < a) throw std::invalid_argument("uniform delay requires 0 <= lo <= hi");
        break;
      case Kind::Exponential:
        if (a <= 0) throw std::invalid_argument("exponential mean must be positive");
        break;
      case Kind::LogNormal:
        if (a <= 0 || sigma < 0) throw std::invalid_argument("log-normal requires median > 0, sigma >= 0");
        break;
    }
  }

  Duration sample(RngStream& rng) const {
    switch (kind) {
      case Kind::Constant:
        return a;
      case Kind::Uniform: {
        if (a == b) return a;
        const double u = rng.next_unit();
        return a + static_cast<Duration>(u * static_cast<double>(b - a) + 0.5);
      }
      case Kind::Exponential: {
        double u = rng.next_unit();
        const double v = -static_cast<double>(a) * std::log1p(-u);
        return v < 0 ? 0 : static_cast<Duration>(v + 0.5);
      }
      case Kind::LogNormal: {
        const double z = rng.next_normal();
        const double v = static_cast<double>(a) * std::exp(sigma * z);
        return v < 0 ? 0 : static_cast<Duration>(v + 0.5);
      }
    }
    return 0;
  }

  /// Smallest value the distribution can produce (used by latency bounds).
  Duration min_value() const {
    switch (kind) {
      case Kind::Constant: return a;
      case Kind::Uniform: return a;
      case Kind::Exponential: return 0;
      case Kind::LogNormal: return 0;
    }
    return 0;
  }
};

}  // namespace oirbench
