#pragma once

#include <cstdint>
#include <queue>
#include <string>
#include <vector>

#include "ponsim/engine.hpp"
#include "ponsim/time.hpp"

namespace ponsim {

// Variable-rate fronthaul profile: the cell's occupied-bandwidth fraction
// interpolates linearly between the idle floor and the full-bandwidth rate.
struct SplitProfile {
  std::uint64_t rate_min_bps = 0;
  std::uint64_t rate_max_bps = 0;
  static SplitProfile split8() { return {153'000'000, 2'457'000'000}; }
  static SplitProfile split71() { return {110'000'000, 1'058'000'000}; }
};

double fronthaul_rate_mbps(const SplitProfile& p, double load_fraction);

// Whole-byte payload for one TTI given the active session count; exact
// integer arithmetic (ceil of rate x TTI / 8) so replays are byte-identical.
std::uint64_t tti_payload_bytes(const SplitProfile& p, int active, int n_full,
                                SimTime tti_len);

// Nominal per-cycle split of a TTI payload: cycles 0..6 carry ceil(P/8), the
// last carries the remainder; zero-size tails are dropped.
std::vector<std::uint32_t> split_payload(std::uint64_t payload_bytes, int cycles);

// Offered load over time as (time, Erlang) breakpoints, linear in between and
// clamped outside the covered range.
class ErlangSchedule {
 public:
  ErlangSchedule() = default;
  explicit ErlangSchedule(std::vector<std::pair<SimTime, double>> points);
  static ErlangSchedule constant(double erlang);

  double value(SimTime at) const;
  // End of the linear segment containing `at` (or an infinite horizon past
  // the last breakpoint); within one segment the rate maximum sits at an end.
  SimTime segment_end(SimTime at) const;

 private:
  std::vector<std::pair<SimTime, double>> points_;
};

// M/M/inf session population: Poisson arrivals at erlang(t)/mean_holding,
// exponential holding times, no blocking. Arrivals under a time-varying rate
// use thinning against the segment's rate ceiling, so ramps stay exact.
class SessionProcess {
 public:
  SessionProcess(ErlangSchedule schedule, double mean_holding_s, RngStream arrivals,
                 RngStream holdings);

  void step_to(SimTime t);
  int active() const { return active_; }
  SimTime now() const { return cur_; }

 private:
  ErlangSchedule schedule_;
  double mean_holding_ns_;
  RngStream arrivals_;
  RngStream holdings_;
  SimTime cur_ = 0;
  int active_ = 0;
  std::priority_queue<SimTime, std::vector<SimTime>, std::greater<SimTime>> departures_;
};

struct TtiEmission {
  std::uint64_t payload_bytes = 0;
  SimTime ru_delay = 0;  // radio-side processing jitter for this TTI
  std::vector<std::uint32_t> segment_sizes;
};

// Per-RU traffic head: samples the session population at each TTI boundary,
// maps occupancy to an eCPRI payload, and draws the RU processing delay.
class RuSource {
 public:
  RuSource(const std::string& onu, SplitProfile profile, int n_full,
           ErlangSchedule schedule, double mean_holding_s, std::uint64_t master_seed,
           SimTime tti_len, int cycles_per_tti, SimTime ru_delay_max);

  TtiEmission emit_tti(SimTime tti_start);
  int active_sessions() const { return sessions_.active(); }
  int cycles_per_tti() const { return cycles_per_tti_; }

 private:
  SplitProfile profile_;
  int n_full_;
  SimTime tti_len_;
  SimTime ru_delay_max_;
  int cycles_per_tti_;
  SessionProcess sessions_;
  RngStream proc_rng_;
};

}  // namespace ponsim
