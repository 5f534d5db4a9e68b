#pragma once

#include <cstdint>
#include <stdexcept>

namespace ponsim {

// Simulation clock value in integer nanoseconds. All event timestamps,
// propagation delays, and cycle boundaries use this unit; fractional
// quantities are rounded at the point where they enter the timeline.
using SimTime = std::int64_t;

namespace t {
constexpr SimTime ns(std::int64_t v) { return v; }
constexpr SimTime us(std::int64_t v) { return v * 1'000; }
constexpr SimTime ms(std::int64_t v) { return v * 1'000'000; }
constexpr SimTime s(std::int64_t v) { return v * 1'000'000'000; }
}  // namespace t

constexpr double to_us(SimTime v) { return static_cast<double>(v) / 1'000.0; }

constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return a == 0 ? 0 : (a - 1) / b + 1;
}

// Invariant violations are programming or configuration errors; they throw so
// tests can observe them and runs never silently continue past a broken state.
[[noreturn]] void invariant_failure(const char* msg);

#define PONSIM_ASSERT(cond, msg) \
  do {                           \
    if (!(cond)) ::ponsim::invariant_failure(msg); \
  } while (0)

}  // namespace ponsim
