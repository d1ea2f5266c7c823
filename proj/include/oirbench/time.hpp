#pragma once

#include <chrono>
#include <cstdint>

namespace oirbench {

// All latency math runs on integer microseconds. TimeInstant is an offset
// from run start; Duration is a difference of instants.
using TimeInstant = std::int64_t;
using Duration = std::int64_t;

constexpr Duration micros(long long v) { return v; }
constexpr Duration millis(long long v) { return v * 1000; }
constexpr Duration seconds(long long v) { return v * 1000000; }

inline Duration duration_from_ms(double ms) {
  return static_cast<Duration>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5));
}

inline double duration_to_ms(Duration d) { return static_cast<double>(d) / 1000.0; }
inline double duration_to_seconds(Duration d) { return static_cast<double>(d) / 1e6; }

/// Monotonic time source shared by the virtual and live execution paths.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual TimeInstant now() const = 0;
};

/// Virtual time, advanced explicitly by its owner (the event loop).
class ManualClock final : public Clock {
 public:
  TimeInstant now() const override { return t_; }
  void advance_to(TimeInstant t) {
    if (t > t_) t_ = t;
  }

 private:
  TimeInstant t_ = 0;
};

/// Monotonic wall time in microseconds since construction.
class WallClock final : public Clock {
 public:
  WallClock() : anchor_(std::chrono::steady_clock::now()) {}
  TimeInstant now() const override {
    auto d = std::chrono::steady_clock::now() - anchor_;
    return std::chrono::duration_cast<std::chrono::microseconds>(d).count();
  }

 private:
  std::chrono::steady_clock::time_point anchor_;
};

}  // namespace oirbench
