#pragma once

#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "ponsim/time.hpp"

namespace ponsim {

// Per-frame latency log plus constant-memory trailing-window aggregates.
// Ids are interned so millions of samples stay compact; exports restore them.
class MetricsHub {
 public:
  explicit MetricsHub(SimTime window = t::ms(100)) : window_(window) {}

  // Declares an OLT so windowed exports cover it even before any delivery;
  // rows appear in registration order.
  void register_olt(const std::string& olt);

  // floor_ns is the frame's path propagation delay: no legitimate delivery
  // can beat it, so anything lower trips the bug trap.
  void record_latency(SimTime t, const std::string& olt, const std::string& onu,
                      std::int64_t latency_ns, std::int64_t floor_ns);
  void record_offered(SimTime t, const std::string& onu, std::uint64_t bytes);
  void count_undelivered(std::uint64_t n) { undelivered_ += n; }

  // Mean latency of samples delivered in [now - window, now]; an empty
  // window retains the previous value (0 before any delivery). Queries must
  // not go back in time: entries behind the window are discarded.
  double windowed_mean_us(const std::string& olt, SimTime now);
  std::uint64_t windowed_offered_bytes(const std::string& onu, SimTime now);
  SimTime window() const { return window_; }

  struct Summary {
    std::size_t count = 0;
    double mean_us = 0, p50_us = 0, p99_us = 0, max_us = 0;
  };
  struct Filter {
    std::optional<std::string> olt;
    std::optional<std::string> onu;
    std::vector<std::string> onus;  // non-empty: restrict to this ONU set
    SimTime t_min = 0;
    SimTime t_max = std::numeric_limits<SimTime>::max();
  };
  // Exact nearest-rank quantiles over the filtered samples; nullopt when the
  // filter matches nothing.
  std::optional<Summary> summarize(const Filter& f) const;

  // Appends one windowed-mean row per registered OLT at time t.
  void snapshot_window_means(SimTime t);

  std::string samples_csv() const;
  std::string window_means_csv() const;

  std::size_t sample_count() const { return samples_.size(); }
  std::uint64_t undelivered() const { return undelivered_; }

 private:
  struct Sample {
    SimTime t;
    std::int64_t latency_ns;
    std::int32_t olt;
    std::int32_t onu;
  };
  struct WindowAgg {
    std::deque<std::pair<SimTime, std::int64_t>> entries;
    std::int64_t sum = 0;
    double last_mean_us = 0.0;
  };
  struct OfferedAgg {
    std::deque<std::pair<SimTime, std::uint64_t>> entries;
    std::uint64_t sum = 0;
  };

  std::int32_t intern(std::vector<std::string>& names,
                      std::unordered_map<std::string, std::int32_t>& index,
                      const std::string& s);

  SimTime window_;
  std::vector<std::string> olt_names_, onu_names_;
  std::unordered_map<std::string, std::int32_t> olt_index_, onu_index_;
  std::vector<Sample> samples_;
  std::vector<WindowAgg> olt_windows_;
  std::unordered_map<std::string, OfferedAgg> offered_;
  std::vector<std::tuple<SimTime, std::int32_t, double>> window_rows_;
  std::uint64_t undelivered_ = 0;
};

// Fixed-point helper shared by the CSV writers: nanoseconds rendered as
// microseconds with exactly three decimals.
std::string format_us(std::int64_t ns);

}  // namespace ponsim
