#include "ponsim/dba.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_map>

namespace ponsim {

void OnuEndpoint::push_segment(const TrafficSegment& seg) {
  PONSIM_ASSERT(seg.size > 0, "zero-size segment enqueued");
  PONSIM_ASSERT(seg.remaining == seg.size, "segment must arrive unsent");
  PONSIM_ASSERT(seg.ready > last_ready_, "segment ready times must increase");
  last_ready_ = seg.ready;
  queue_.push_back(seg);
  depth_bytes_ += seg.size;
  enqueued_bytes_ += seg.size;
}

std::uint64_t OnuEndpoint::demand_bytes(SimTime horizon) const {
  std::uint64_t total = 0;
  for (const TrafficSegment& seg : queue_) {
    if (seg.ready >= horizon) break;  // ready times increase, so done
    total += seg.remaining;
  }
  return total;
}

bool OnuEndpoint::consume_front(std::uint32_t take) {
  PONSIM_ASSERT(!queue_.empty(), "consume from an empty queue");
  TrafficSegment& seg = queue_.front();
  PONSIM_ASSERT(take > 0 && take <= seg.remaining, "take exceeds the head segment");
  seg.remaining -= take;
  depth_bytes_ -= take;
  delivered_bytes_ += take;
  if (seg.remaining > 0) return false;
  queue_.pop_front();
  return true;
}

namespace {

// Nanoseconds to serialize `bits` at `rate_bps`, rounded up. Anchored per
// contiguous run by the callers; per-burst rounding can overrun the cycle.
SimTime serialization_ns(std::uint64_t bits, std::uint64_t rate_bps) {
  return static_cast<SimTime>(ceil_div(bits * 1'000'000'000ull, rate_bps));
}

std::uint64_t bits_until(SimTime deadline, SimTime anchor, std::uint64_t rate_bps) {
  return static_cast<std::uint64_t>(deadline - anchor) * rate_bps / 1'000'000'000ull;
}

}  // namespace

OltScheduler::OltScheduler(OltConfig cfg, Engine& engine, MetricsHub& metrics,
                           const WavelengthPlan& plan)
    : cfg_(std::move(cfg)), engine_(engine), metrics_(metrics), plan_(plan) {
  PONSIM_ASSERT(cfg_.background_permille >= 0 && cfg_.background_permille < 1000,
                "background share must leave some capacity");
  metrics_.register_olt(cfg_.id);
}

void OltScheduler::add_member(OnuEndpoint* ep) {
  PONSIM_ASSERT(ep != nullptr, "null endpoint");
  auto it = std::lower_bound(members_.begin(), members_.end(), ep,
                             [](const OnuEndpoint* a, const OnuEndpoint* b) {
                               return a->id() < b->id();
                             });
  PONSIM_ASSERT(it == members_.end() || (*it)->id() != ep->id(),
                "endpoint is already a member");
  members_.insert(it, ep);
}

void OltScheduler::remove_member(const std::string& onu) {
  auto it = std::find_if(members_.begin(), members_.end(),
                         [&](const OnuEndpoint* m) { return m->id() == onu; });
  PONSIM_ASSERT(it != members_.end(), "removing a non-member");
  members_.erase(it);
}

bool OltScheduler::has_member(const std::string& onu) const {
  return std::any_of(members_.begin(), members_.end(),
                     [&](const OnuEndpoint* m) { return m->id() == onu; });
}

std::vector<std::string> OltScheduler::member_ids() const {
  std::vector<std::string> out;
  out.reserve(members_.size());
  for (const OnuEndpoint* m : members_) out.push_back(m->id());
  return out;
}

void OltScheduler::set_share(int rank, int count) {
  PONSIM_ASSERT(count >= 1 && rank >= 0 && rank < count, "bad share slot");
  share_rank_ = rank;
  share_count_ = count;
}

void OltScheduler::ingest_scheduling_info(const SchedInfo& info, SimTime tti_start) {
  if (info.received_at > tti_start) ++late_sched_info_;
  latest_info_[info.onu] = info;
}

std::uint64_t OltScheduler::usable_capacity(int n_bursts) const {
  std::uint64_t cap = capacity_per_cycle_bytes(cfg_.channel, cfg_.cycle_len, n_bursts);
  return cap * static_cast<std::uint64_t>(1000 - cfg_.background_permille) / 1000;
}

OltScheduler::CyclePlan OltScheduler::plan_cycle(std::int64_t cycle_index,
                                                 bool count_skips) {
  CyclePlan out;
  if (share_count_ > 1 && cycle_index % share_count_ != share_rank_) return out;

  const SimTime t0 = cycle_index * cfg_.cycle_len;
  const SimTime t1 = t0 + cfg_.cycle_len;

  struct Item {
    OnuEndpoint* ep;
    std::uint64_t demand;
  };
  std::vector<Item> items;
  for (OnuEndpoint* ep : members_) {
    std::uint64_t d = ep->demand_bytes(t1);
    if (d == 0) continue;
    if (!plan_.can_transmit(ep->id(), cfg_.channel.index, t0)) {
      if (count_skips) ++skipped_bursts_;
      continue;
    }
    items.push_back({ep, d});
  }
  if (items.empty()) return out;

  const int n = static_cast<int>(items.size());
  const std::uint64_t usable = usable_capacity(n);
  std::uint64_t total = 0;
  for (const Item& it : items) total += it.demand;

  std::vector<std::uint64_t> grant(n);
  if (total <= usable) {
    for (int i = 0; i < n; ++i) grant[i] = items[i].demand;
  } else {
    // Proportional shares, floored; leftover bytes go to the largest
    // remainders, lowest ONU id first on ties. Exactly fills `usable`.
    std::vector<std::uint64_t> rem(n);
    std::uint64_t floored = 0;
    for (int i = 0; i < n; ++i) {
      unsigned __int128 num =
          static_cast<unsigned __int128>(items[i].demand) * usable;
      grant[i] = static_cast<std::uint64_t>(num / total);
      rem[i] = static_cast<std::uint64_t>(num % total);
      floored += grant[i];
    }
    std::uint64_t leftover = usable - floored;
    std::vector<int> by_rem(n);
    std::iota(by_rem.begin(), by_rem.end(), 0);
    std::stable_sort(by_rem.begin(), by_rem.end(),
                     [&](int a, int b) { return rem[a] > rem[b]; });
    for (std::uint64_t j = 0; j < leftover; ++j) ++grant[by_rem[j]];
  }
  std::uint64_t granted = 0;
  for (int i = 0; i < n; ++i) granted += grant[i];
  PONSIM_ASSERT(granted <= usable, "grants exceed cycle capacity");

  const std::uint64_t rate = cfg_.channel.payload_rate_bps;
  const SimTime overhead = cfg_.channel.burst_overhead;

  // Split each grant into contiguous runs of its queue: a later segment that
  // would not yet be ready when the wire reaches it starts a new run, so the
  // ONU bursts once per bunch instead of idling inside one long burst.
  struct Run {
    OnuEndpoint* ep;
    SimTime head;
    std::uint64_t bytes;
  };
  std::vector<Run> runs;
  for (int i = 0; i < n; ++i) {
    out.budgets.push_back({items[i].ep, grant[i]});
    std::uint64_t left = grant[i];
    SimTime anchor = 0;
    std::uint64_t bits = 0;
    bool open = false;
    for (const TrafficSegment& seg : items[i].ep->segments()) {
      if (left == 0 || seg.ready >= t1) break;
      const SimTime pos = anchor + serialization_ns(bits, rate);
      if (!open || (seg.remaining == seg.size && seg.ready > pos)) {
        anchor = std::max<SimTime>(seg.ready, t0 + overhead);
        bits = 0;
        runs.push_back({items[i].ep, seg.ready, 0});
        open = true;
      }
      const std::uint64_t take = std::min<std::uint64_t>(seg.remaining, left);
      runs.back().bytes += take;
      bits += take * 8;
      left -= take;
    }
  }

  // Burst order: earliest data first, ONU id then queue order breaking ties
  // (runs were built in that order, stable_sort keeps it).
  std::stable_sort(runs.begin(), runs.end(),
                   [](const Run& a, const Run& b) { return a.head < b.head; });

  SimTime anchor = t0;
  std::uint64_t run_bits = 0;
  for (const Run& r : runs) {
    const SimTime pos = anchor + serialization_ns(run_bits, rate);
    const SimTime nominal = pos + overhead;
    const SimTime s = std::max(nominal, r.head);
    if (s >= t1) continue;  // no room left this cycle; the bytes go unserved
    SimTime burst_anchor;
    std::uint64_t burst_run;
    if (s > nominal) {  // wire idles until the data exists; restart the run
      burst_anchor = s;
      burst_run = 0;
    } else {
      burst_anchor = anchor + overhead;
      burst_run = run_bits;
    }
    const std::uint64_t max_bits = bits_until(t1, burst_anchor, rate);
    PONSIM_ASSERT(max_bits >= burst_run, "burst anchored past the cycle end");
    const std::uint64_t room = (max_bits - burst_run) / 8;
    const std::uint64_t size = std::min(r.bytes, room);
    if (size == 0) continue;
    out.runs.push_back({r.ep, size, burst_anchor, burst_run, s});
    anchor = burst_anchor;
    run_bits = burst_run + size * 8;
  }
  return out;
}

BwMap OltScheduler::build_bwmap(std::int64_t cycle_index) {
  BwMap map;
  map.olt = cfg_.id;
  map.channel = cfg_.channel.index;
  map.cycle_index = cycle_index;
  const SimTime t0 = cycle_index * cfg_.cycle_len;
  for (const PlacedRun& p : plan_cycle(cycle_index, false).runs)
    map.grants.push_back({p.ep->id(), p.start - t0, p.size});
  return map;
}

void OltScheduler::run_cycle(std::int64_t cycle_index) {
  const SimTime t1 = cycle_index * cfg_.cycle_len + cfg_.cycle_len;
  const CyclePlan plan = plan_cycle(cycle_index, true);
  std::unordered_map<const OnuEndpoint*, std::uint64_t> sent;
  for (const PlacedRun& p : plan.runs)
    sent[p.ep] += serialize_burst(*p.ep, p.anchor, p.run_bits, p.size, t1);
  for (const auto& [ep, budget] : plan.budgets) {
    granted_bytes_total_ += budget;
    const auto it = sent.find(ep);
    const std::uint64_t got = it == sent.end() ? 0 : it->second;
    PONSIM_ASSERT(got <= budget, "burst sent more than granted");
    unserved_grant_bytes_ += budget - got;
  }
}

std::uint64_t OltScheduler::transmit_burst(OnuEndpoint& ep, SimTime start,
                                           std::uint64_t budget, SimTime cycle_end) {
  if (start >= cycle_end) {
    unserved_grant_bytes_ += budget;
    return 0;
  }
  std::uint64_t sent = serialize_burst(ep, start, 0, budget, cycle_end);
  unserved_grant_bytes_ += budget - sent;
  return sent;
}

std::uint64_t OltScheduler::serialize_burst(OnuEndpoint& ep, SimTime anchor,
                                            std::uint64_t run_bits, std::uint64_t budget,
                                            SimTime cycle_end) {
  const std::uint64_t rate = cfg_.channel.payload_rate_bps;
  std::uint64_t sent = 0;
  while (sent < budget && !ep.empty()) {
    const TrafficSegment& head = ep.front();
    const SimTime pos = anchor + serialization_ns(run_bits, rate);
    // A burst is contiguous: a segment that has not reached the transmit
    // buffer when the serializer gets there cannot ride this burst.
    if (head.remaining == head.size && head.ready > pos) break;
    const std::uint64_t max_bits = bits_until(cycle_end, anchor, rate);
    PONSIM_ASSERT(max_bits >= run_bits, "serializer ran past the cycle end");
    const std::uint64_t room = (max_bits - run_bits) / 8;
    const std::uint64_t take =
        std::min({static_cast<std::uint64_t>(head.remaining), budget - sent, room});
    if (take == 0) break;
    run_bits += take * 8;
    sent += take;
    TrafficSegment done = head;  // survives the pop below
    if (ep.consume_front(static_cast<std::uint32_t>(take))) {
      const SimTime t_done = anchor + serialization_ns(run_bits, rate);
      PONSIM_ASSERT(t_done <= cycle_end, "delivery past the cycle end");
      schedule_delivery(ep, done, t_done);
    }
  }
  return sent;
}

void OltScheduler::schedule_delivery(OnuEndpoint& ep, const TrafficSegment& seg,
                                     SimTime t_done) {
  ++delivered_segments_;
  const SimTime prop = ep.prop_delay();
  const SimTime at = t_done + prop;
  const std::int64_t latency = at - seg.ready;
  engine_.schedule_at(at, "frame-delivery", [this, onu = ep.id(), at, latency, prop] {
    metrics_.record_latency(at, cfg_.id, onu, latency, prop);
  });
}

}  // namespace ponsim
