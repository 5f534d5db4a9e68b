#include "ponsim/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ponsim {

double fronthaul_rate_mbps(const SplitProfile& p, double load_fraction) {
  load_fraction = std::clamp(load_fraction, 0.0, 1.0);
  double min_mbps = static_cast<double>(p.rate_min_bps) / 1e6;
  double max_mbps = static_cast<double>(p.rate_max_bps) / 1e6;
  return min_mbps + load_fraction * (max_mbps - min_mbps);
}

std::uint64_t tti_payload_bytes(const SplitProfile& p, int active, int n_full,
                                SimTime tti_len) {
  PONSIM_ASSERT(n_full > 0 && active >= 0 && tti_len > 0, "bad payload arguments");
  std::uint64_t a = static_cast<std::uint64_t>(std::min(active, n_full));
  // rate = min + (max-min) * a/n_full, bytes = ceil(rate * tti / 8); keep the
  // n_full divisor inside one ceiling so no precision is lost.
  unsigned __int128 num =
      (static_cast<unsigned __int128>(p.rate_min_bps) * n_full +
       static_cast<unsigned __int128>(p.rate_max_bps - p.rate_min_bps) * a) *
      static_cast<std::uint64_t>(tti_len);
  unsigned __int128 den = static_cast<unsigned __int128>(n_full) * 8'000'000'000ULL;
  return static_cast<std::uint64_t>(num == 0 ? 0 : (num - 1) / den + 1);
}

std::vector<std::uint32_t> split_payload(std::uint64_t payload_bytes, int cycles) {
  PONSIM_ASSERT(cycles > 0, "cycle count must be positive");
  std::vector<std::uint32_t> sizes;
  if (payload_bytes == 0) return sizes;
  std::uint64_t base = ceil_div(payload_bytes, static_cast<std::uint64_t>(cycles));
  std::uint64_t left = payload_bytes;
  while (left > 0) {
    std::uint32_t s = static_cast<std::uint32_t>(std::min(base, left));
    sizes.push_back(s);
    left -= s;
  }
  PONSIM_ASSERT(static_cast<int>(sizes.size()) <= cycles, "split produced too many parts");
  return sizes;
}

ErlangSchedule::ErlangSchedule(std::vector<std::pair<SimTime, double>> points)
    : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("empty load schedule");
  for (std::size_t i = 0; i + 1 < points_.size(); ++i)
    if (points_[i].first >= points_[i + 1].first)
      throw std::invalid_argument("load schedule breakpoints must increase");
  for (const auto& [at, erlang] : points_)
    if (erlang < 0.0) throw std::invalid_argument("negative offered load");
}

ErlangSchedule ErlangSchedule::constant(double erlang) {
  return ErlangSchedule({{0, erlang}});
}

double ErlangSchedule::value(SimTime at) const {
  if (at <= points_.front().first) return points_.front().second;
  if (at >= points_.back().first) return points_.back().second;
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    if (at <= points_[i + 1].first) {
      const auto& [t0, v0] = points_[i];
      const auto& [t1, v1] = points_[i + 1];
      double f = static_cast<double>(at - t0) / static_cast<double>(t1 - t0);
      return v0 + f * (v1 - v0);
    }
  }
  return points_.back().second;
}

SimTime ErlangSchedule::segment_end(SimTime at) const {
  for (const auto& [t0, v] : points_)
    if (t0 > at) return t0;
  return std::numeric_limits<SimTime>::max();
}

SessionProcess::SessionProcess(ErlangSchedule schedule, double mean_holding_s,
                               RngStream arrivals, RngStream holdings)
    : schedule_(std::move(schedule)),
      mean_holding_ns_(mean_holding_s * 1e9),
      arrivals_(std::move(arrivals)),
      holdings_(std::move(holdings)) {
  if (!(mean_holding_ns_ > 0.0)) throw std::invalid_argument("mean holding must be > 0");
  // Start the population at its stationary mean; residual holding times of an
  // M/M/inf system in equilibrium are again exponential.
  active_ = static_cast<int>(std::llround(schedule_.value(0)));
  for (int i = 0; i < active_; ++i)
    departures_.push(static_cast<SimTime>(std::llround(holdings_.exponential(mean_holding_ns_))));
}

void SessionProcess::step_to(SimTime t_end) {
  while (cur_ < t_end) {
    SimTime seg_end = schedule_.segment_end(cur_);
    SimTime stop = std::min(seg_end, t_end);
    // Rate ceiling across the segment slice; linear load peaks at an end.
    double lam_max =
        std::max(schedule_.value(cur_), schedule_.value(stop)) / mean_holding_ns_;
    while (cur_ < stop) {
      SimTime next_dep =
          departures_.empty() ? std::numeric_limits<SimTime>::max() : departures_.top();
      if (lam_max <= 0.0) {
        if (next_dep <= stop) {
          cur_ = next_dep;
          departures_.pop();
          --active_;
          continue;
        }
        cur_ = stop;
        break;
      }
      double gap = arrivals_.exponential(1.0 / lam_max);
      SimTime cand = cur_ + std::max<SimTime>(1, static_cast<SimTime>(std::llround(gap)));
      if (next_dep <= std::min(cand, stop)) {
        // Jumping to the departure and redrawing is sound: the remaining wait
        // to the next candidate arrival is memoryless.
        cur_ = next_dep;
        departures_.pop();
        --active_;
        continue;
      }
      if (cand > stop) {
        cur_ = stop;
        break;
      }
      cur_ = cand;
      if (arrivals_.next_double() * lam_max <= schedule_.value(cur_) / mean_holding_ns_) {
        ++active_;
        departures_.push(
            cur_ + static_cast<SimTime>(std::llround(holdings_.exponential(mean_holding_ns_))));
      }
    }
  }
}

RuSource::RuSource(const std::string& onu, SplitProfile profile, int n_full,
                   ErlangSchedule schedule, double mean_holding_s,
                   std::uint64_t master_seed, SimTime tti_len, int cycles_per_tti,
                   SimTime ru_delay_max)
    : profile_(profile),
      n_full_(n_full),
      tti_len_(tti_len),
      ru_delay_max_(ru_delay_max),
      cycles_per_tti_(cycles_per_tti),
      sessions_(std::move(schedule), mean_holding_s, RngStream(onu + ".arrivals", master_seed),
                RngStream(onu + ".holding", master_seed)),
      proc_rng_(onu + ".ru-proc", master_seed) {
  PONSIM_ASSERT(cycles_per_tti_ > 0, "cycles per TTI must be positive");
}

TtiEmission RuSource::emit_tti(SimTime tti_start) {
  sessions_.step_to(tti_start);
  TtiEmission out;
  out.payload_bytes = tti_payload_bytes(profile_, sessions_.active(), n_full_, tti_len_);
  out.ru_delay =
      static_cast<SimTime>(proc_rng_.uniform(0.0, static_cast<double>(ru_delay_max_)));
  out.segment_sizes = split_payload(out.payload_bytes, cycles_per_tti_);
  return out;
}

}  // namespace ponsim
