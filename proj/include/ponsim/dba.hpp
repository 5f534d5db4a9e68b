#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <unordered_map>
#include <vector>

#include "ponsim/engine.hpp"
#include "ponsim/metrics.hpp"
#include "ponsim/time.hpp"
#include "ponsim/wavelength.hpp"

namespace ponsim {

// One per-cycle slice of a TTI payload, queued at the ONU transmit buffer.
// `ready` is when its last bit has arrived from the radio unit; the scheduler
// knows it in advance but the wire cannot carry the data any earlier.
struct TrafficSegment {
  std::int64_t tti = 0;
  int seg_index = 0;
  std::uint32_t size = 0;
  std::uint32_t remaining = 0;
  SimTime ready = 0;
};

// An ONU's upstream FIFO plus its resolved path to whichever OLT currently
// serves it. Owned by the scenario; schedulers hold non-owning pointers.
class OnuEndpoint {
 public:
  explicit OnuEndpoint(std::string id) : id_(std::move(id)) {}

  const std::string& id() const { return id_; }

  void set_path(SimTime prop_delay, double length_km) {
    prop_delay_ = prop_delay;
    path_km_ = length_km;
  }
  SimTime prop_delay() const { return prop_delay_; }
  double path_km() const { return path_km_; }

  // Segments must arrive in strictly increasing ready order; the emission
  // model guarantees it (per-TTI jitter is below one cycle) and FIFO service
  // depends on it.
  void push_segment(const TrafficSegment& seg);

  // Bytes whose ready instant falls before `horizon` (demand visible to a
  // cycle ending there). Partially sent head segments count their remainder.
  std::uint64_t demand_bytes(SimTime horizon) const;

  bool empty() const { return queue_.empty(); }
  std::size_t queued_segments() const { return queue_.size(); }
  const TrafficSegment& front() const { return queue_.front(); }
  SimTime head_ready() const { return queue_.front().ready; }
  const std::deque<TrafficSegment>& segments() const { return queue_; }

  // Serializes `take` bytes off the head segment; returns true when that
  // completed (and popped) the segment.
  bool consume_front(std::uint32_t take);

  std::uint64_t depth_bytes() const { return depth_bytes_; }
  std::uint64_t enqueued_bytes() const { return enqueued_bytes_; }
  std::uint64_t delivered_bytes() const { return delivered_bytes_; }

 private:
  std::string id_;
  SimTime prop_delay_ = 0;
  double path_km_ = 0.0;
  std::deque<TrafficSegment> queue_;
  SimTime last_ready_ = std::numeric_limits<SimTime>::min();
  std::uint64_t depth_bytes_ = 0;
  std::uint64_t enqueued_bytes_ = 0;
  std::uint64_t delivered_bytes_ = 0;
};

// Advance notice of one TTI's demand, sent by the DU straight to the OLT so
// no report/grant round trip is needed. Arriving after the TTI started is a
// contract violation; the payload then counts toward the next TTI.
struct SchedInfo {
  std::string onu;
  std::int64_t tti_index = 0;
  std::uint64_t payload_bytes = 0;
  SimTime ready_offset = 0;  // processing delay before the first segment
  SimTime received_at = 0;

  std::int64_t effective_tti(SimTime tti_start) const {
    return received_at <= tti_start ? tti_index : tti_index + 1;
  }
};

struct Grant {
  std::string onu;
  SimTime start_offset = 0;  // ns from cycle start, overhead already ahead of it
  std::uint64_t size = 0;
};

struct BwMap {
  std::string olt;
  ChannelIndex channel = 0;
  std::int64_t cycle_index = 0;
  std::vector<Grant> grants;  // burst order
};

struct OltConfig {
  std::string id;
  ChannelSpec channel;
  SimTime cycle_len = t::us(125);
  // Capacity share reserved for coexisting non-fronthaul traffic on this
  // channel (0 on dedicated edge channels).
  int background_permille = 0;
};

// Upstream scheduler for one OLT: turns queued segment demand into per-cycle
// bandwidth maps, serializes the bursts, and emits delivery events.
class OltScheduler {
 public:
  OltScheduler(OltConfig cfg, Engine& engine, MetricsHub& metrics,
               const WavelengthPlan& plan);

  const std::string& id() const { return cfg_.id; }
  const OltConfig& config() const { return cfg_; }

  void add_member(OnuEndpoint* ep);
  void remove_member(const std::string& onu);
  bool has_member(const std::string& onu) const;
  std::vector<std::string> member_ids() const;

  // Static time sharing when two OLTs hold one channel: this OLT owns the
  // cycles whose index is `rank` modulo `count`.
  void set_share(int rank, int count);

  void ingest_scheduling_info(const SchedInfo& info, SimTime tti_start);

  // Grant plan for one cycle, without transmitting. Grants are clipped to
  // what physically fits, so the map is always schedulable as printed. An
  // ONU whose granted data becomes ready in separated bunches gets one burst
  // per bunch: stalling a live burst is impossible, and deferring the later
  // bunch a whole cycle would cost far more than the extra burst overhead.
  BwMap build_bwmap(std::int64_t cycle_index);

  // Plans and executes one cycle: serializes bursts, schedules a delivery
  // event per completed segment, accumulates diagnostics.
  void run_cycle(std::int64_t cycle_index);

  // Serializes up to `budget` bytes from the queue head as one burst starting
  // at `start`, never past `cycle_end`; returns bytes sent. run_cycle uses a
  // run-anchored variant internally; this entry exists for the oversized or
  // stale grant path.
  std::uint64_t transmit_burst(OnuEndpoint& ep, SimTime start, std::uint64_t budget,
                               SimTime cycle_end);

  // Capacity left for members after the background reservation, given
  // n_bursts bursts in the cycle.
  std::uint64_t usable_capacity(int n_bursts) const;

  std::uint64_t unserved_grant_bytes() const { return unserved_grant_bytes_; }
  std::uint64_t skipped_bursts() const { return skipped_bursts_; }
  std::uint64_t late_sched_info() const { return late_sched_info_; }
  std::uint64_t delivered_segments() const { return delivered_segments_; }
  std::uint64_t granted_bytes_total() const { return granted_bytes_total_; }

 private:
  struct PlacedRun {
    OnuEndpoint* ep;
    std::uint64_t size;  // clipped to the cycle fit; what the map carries
    SimTime anchor;      // serialization run anchor at burst start
    std::uint64_t run_bits;
    SimTime start;
  };
  struct CyclePlan {
    std::vector<PlacedRun> runs;
    // Apportioned grant per ONU, for the unserved-bytes ledger.
    std::vector<std::pair<OnuEndpoint*, std::uint64_t>> budgets;
  };

  CyclePlan plan_cycle(std::int64_t cycle_index, bool count_skips);
  std::uint64_t serialize_burst(OnuEndpoint& ep, SimTime anchor, std::uint64_t run_bits,
                                std::uint64_t budget, SimTime cycle_end);
  void schedule_delivery(OnuEndpoint& ep, const TrafficSegment& seg, SimTime t_done);

  OltConfig cfg_;
  Engine& engine_;
  MetricsHub& metrics_;
  const WavelengthPlan& plan_;
  std::vector<OnuEndpoint*> members_;  // sorted by id
  std::unordered_map<std::string, SchedInfo> latest_info_;
  int share_rank_ = 0;
  int share_count_ = 1;
  std::uint64_t unserved_grant_bytes_ = 0;
  std::uint64_t skipped_bursts_ = 0;
  std::uint64_t late_sched_info_ = 0;
  std::uint64_t delivered_segments_ = 0;
  std::uint64_t granted_bytes_total_ = 0;
};

}  // namespace ponsim
