#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

namespace arpsim {

// Virtual time since the start of a run. Integer microseconds keep every
// comparison exact and every rendered log byte-stable.
using SimTime = std::chrono::microseconds;
using Duration = std::chrono::microseconds;

inline SimTime from_seconds(double seconds) { return SimTime{static_cast<std::int64_t>(std::llround(seconds * 1e6))}; }

inline double to_seconds(SimTime t) { return static_cast<double>(t.count()) / 1e6; }

inline std::string format_seconds(SimTime t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%06lld", static_cast<long long>(t.count() / 1000000),
                static_cast<long long>(t.count() % 1000000));
  return buf;
}

}  // namespace arpsim
