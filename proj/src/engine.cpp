#include "ponsim/engine.hpp"

#include <cmath>
#include <stdexcept>

namespace ponsim {

void invariant_failure(const char* msg) { throw std::logic_error(msg); }

Engine::EventHandle Engine::schedule_at(SimTime fire_time, const char* kind,
                                        Handler fn) {
  if (fire_time < now_)
    throw std::logic_error("schedule_at: fire_time is in the past");
  std::uint64_t seq = next_seq_++;
  heap_.push(Record{fire_time, seq, kind, std::move(fn)});
  pending_.insert(seq);
  return EventHandle{seq};
}

bool Engine::cancel(EventHandle h) {
  // Lazy cancellation: the record stays in the heap and is skipped on pop.
  // Returns false for events that already ran or were cancelled before.
  if (pending_.erase(h.sequence) == 0) return false;
  cancelled_.insert(h.sequence);
  return true;
}

std::uint64_t Engine::run_until(SimTime t_end) {
  std::uint64_t ran = 0;
  while (!heap_.empty() && heap_.top().t <= t_end) {
    Record rec = heap_.top();
    heap_.pop();
    if (cancelled_.erase(rec.seq) > 0) continue;
    PONSIM_ASSERT(rec.t >= now_, "event timestamps must be monotonic");
    now_ = rec.t;
    pending_.erase(rec.seq);
    ++executed_;
    ++ran;
    rec.fn();
  }
  if (t_end > now_) now_ = t_end;
  return ran;
}

RngStream::RngStream(std::string_view name, std::uint64_t master_seed)
    : name_(name) {
  // FNV-1a over the name, then splitmix64 rounds mixing in the master seed.
  // Stable across platforms; distinct names give independent streams.
  std::uint64_t h = 14695981039346656037ULL;
  for (char c : name_) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  auto splitmix = [](std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  std::uint64_t state = h ^ (master_seed * 0xC2B2AE3D27D4EB4FULL + 0x165667B19E3779F9ULL);
  std::seed_seq seq{static_cast<std::uint32_t>(splitmix(state)),
                    static_cast<std::uint32_t>(splitmix(state) >> 32),
                    static_cast<std::uint32_t>(splitmix(state)),
                    static_cast<std::uint32_t>(splitmix(state) >> 32),
                    static_cast<std::uint32_t>(splitmix(state)),
                    static_cast<std::uint32_t>(splitmix(state) >> 32)};
  gen_.seed(seq);
}

double RngStream::exponential(double mean) {
  if (!(mean > 0.0)) throw std::invalid_argument("exponential: mean must be > 0");
  // -mean * log(1-u) with u in [0,1); log1p keeps precision near u = 0.
  return -mean * std::log1p(-next_double());
}

}  // namespace ponsim
