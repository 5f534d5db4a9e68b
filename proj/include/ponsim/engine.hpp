#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ponsim/time.hpp"

namespace ponsim {

// Discrete-event core: a future-event list ordered by (fire_time, insertion
// sequence). Equal-time events run in scheduling order, so periodic handlers
// that reschedule themselves keep a stable relative order.
class Engine {
 public:
  using Handler = std::function<void()>;

  struct EventHandle {
    std::uint64_t sequence = 0;
  };

  SimTime now() const { return now_; }

  // Throws std::logic_error when fire_time < now(); scheduling at the current
  // instant is allowed and the event runs within the same run_until call.
  EventHandle schedule_at(SimTime fire_time, const char* kind, Handler fn);
  EventHandle schedule_in(SimTime delay, const char* kind, Handler fn) {
    return schedule_at(now_ + delay, kind, fn);
  }

  // True if the event was still pending. Cancelled events never execute.
  bool cancel(EventHandle h);

  // Executes every pending event with fire_time <= t_end in timestamp order,
  // then advances the clock to t_end. Returns the number executed.
  std::uint64_t run_until(SimTime t_end);

  std::uint64_t executed_events() const { return executed_; }
  std::size_t pending_events() const { return pending_.size(); }

 private:
  struct Record {
    SimTime t;
    std::uint64_t seq;
    const char* kind;
    Handler fn;
  };
  struct Later {
    bool operator()(const Record& a, const Record& b) const {
      if (a.t != b.t) return a.t > b.t;
      return a.seq > b.seq;
    }
  };

  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t executed_ = 0;
  std::priority_queue<Record, std::vector<Record>, Later> heap_;
  std::unordered_set<std::uint64_t> pending_;
  std::unordered_set<std::uint64_t> cancelled_;
};

// Named reproducible random stream. The draw sequence depends only on
// (master_seed, name); creating or using other streams cannot perturb it.
// mt19937_64 raw output is fully specified by the standard and the transforms
// below avoid std:: distribution objects, so replays are bit-identical.
class RngStream {
 public:
  RngStream(std::string_view name, std::uint64_t master_seed);

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + next_double() * (hi - lo); }

  // Inverse-CDF exponential; mean must be > 0.
  double exponential(double mean);

  const std::string& name() const { return name_; }

 private:
  std::string name_;
  std::mt19937_64 gen_;
};

}  // namespace ponsim
