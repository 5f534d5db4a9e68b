#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ponsim/engine.hpp"

using namespace ponsim;

// ---------------------------------------------------------------------------
// event ordering
// ---------------------------------------------------------------------------

TEST_CASE("events run in timestamp order, ties in scheduling order") {
  Engine eng;
  std::vector<int> log;
  eng.schedule_at(t::us(30), "c", [&] { log.push_back(3); });
  eng.schedule_at(t::us(10), "a", [&] { log.push_back(1); });
  eng.schedule_at(t::us(20), "b1", [&] { log.push_back(20); });
  eng.schedule_at(t::us(20), "b2", [&] { log.push_back(21); });
  eng.schedule_at(t::us(20), "b3", [&] { log.push_back(22); });

  std::uint64_t ran = eng.run_until(t::us(100));
  CHECK(ran == 5);
  CHECK(log == std::vector<int>{1, 20, 21, 22, 3});
  CHECK(eng.now() == t::us(100));
}

TEST_CASE("scheduling in the past throws, at the current instant works") {
  Engine eng;
  eng.schedule_at(t::us(5), "tick", [] {});
  eng.run_until(t::us(5));
  CHECK(eng.now() == t::us(5));

  CHECK_THROWS_AS(eng.schedule_at(t::us(4), "late", [] {}), std::logic_error);

  bool ran = false;
  eng.schedule_at(t::us(5), "now", [&] { ran = true; });
  eng.run_until(t::us(5));
  CHECK(ran);
}

TEST_CASE("a handler may schedule at its own timestamp and the child runs in the same pass") {
  Engine eng;
  std::vector<std::string> log;
  eng.schedule_at(t::us(5), "parent", [&] {
    log.push_back("parent");
    eng.schedule_at(t::us(5), "child", [&] { log.push_back("child"); });
  });
  eng.schedule_at(t::us(6), "after", [&] { log.push_back("after"); });

  std::uint64_t ran = eng.run_until(t::us(10));
  CHECK(ran == 3);
  CHECK(log == std::vector<std::string>{"parent", "child", "after"});
}

TEST_CASE("periodic self-rescheduling handler keeps a stable cadence") {
  Engine eng;
  int ticks = 0;
  std::function<void()> tick = [&] {
    ++ticks;
    if (ticks < 8) eng.schedule_in(t::us(10), "tick", tick);
  };
  eng.schedule_at(t::us(10), "tick", tick);
  eng.run_until(t::us(35));
  CHECK(ticks == 3);
  eng.run_until(t::us(1000));
  CHECK(ticks == 8);
  CHECK(eng.executed_events() == 8);
  CHECK(eng.pending_events() == 0);
}

TEST_CASE("run_until with an empty queue still advances the clock") {
  Engine eng;
  CHECK(eng.run_until(t::ms(3)) == 0);
  CHECK(eng.now() == t::ms(3));
  // Moving the horizon backwards is a no-op, not a rewind.
  CHECK(eng.run_until(t::ms(1)) == 0);
  CHECK(eng.now() == t::ms(3));
}

// ---------------------------------------------------------------------------
// cancellation
// ---------------------------------------------------------------------------

TEST_CASE("cancelled events never execute and cancel reports prior state") {
  Engine eng;
  bool ran_a = false, ran_b = false;
  auto ha = eng.schedule_at(t::us(10), "a", [&] { ran_a = true; });
  auto hb = eng.schedule_at(t::us(20), "b", [&] { ran_b = true; });

  CHECK(eng.cancel(ha));
  CHECK_FALSE(eng.cancel(ha));  // second cancel is a no-op

  eng.run_until(t::us(100));
  CHECK_FALSE(ran_a);
  CHECK(ran_b);
  CHECK_FALSE(eng.cancel(hb));  // already executed
  CHECK(eng.executed_events() == 1);
}

TEST_CASE("a handler cancelling a same-time later event wins the race") {
  Engine eng;
  bool ran = false;
  Engine::EventHandle victim;
  eng.schedule_at(t::us(10), "killer", [&] { CHECK(eng.cancel(victim)); });
  victim = eng.schedule_at(t::us(10), "victim", [&] { ran = true; });
  eng.run_until(t::us(10));
  CHECK_FALSE(ran);
  CHECK(eng.executed_events() == 1);
}

// ---------------------------------------------------------------------------
// randomized oracle: engine order vs a plain sorted list
// ---------------------------------------------------------------------------

TEST_CASE("random schedules replay in exact (time, sequence) order") {
  RngStream rng("engine-oracle", 12345);
  Engine eng;

  struct Planned {
    SimTime t;
    std::uint64_t seq;
    bool cancelled;
  };
  std::vector<Planned> plan;
  std::vector<std::uint64_t> fired;
  std::vector<Engine::EventHandle> handles;

  for (int i = 0; i < 1000; ++i) {
    // Coarse grid forces plenty of timestamp collisions.
    SimTime when = t::us(static_cast<std::int64_t>(rng.uniform(0.0, 50.0)));
    std::uint64_t id = static_cast<std::uint64_t>(i);
    handles.push_back(eng.schedule_at(when, "probe", [&fired, id] { fired.push_back(id); }));
    plan.push_back({when, handles.back().sequence, false});
  }
  for (auto& p : plan)
    if (rng.next_double() < 0.25) {
      CHECK(eng.cancel(Engine::EventHandle{p.seq}));
      p.cancelled = true;
    }

  std::uint64_t ran = eng.run_until(t::us(60));

  std::vector<Planned> expect;
  for (const auto& p : plan)
    if (!p.cancelled) expect.push_back(p);
  std::stable_sort(expect.begin(), expect.end(), [](const Planned& a, const Planned& b) {
    if (a.t != b.t) return a.t < b.t;
    return a.seq < b.seq;
  });

  REQUIRE(ran == expect.size());
  REQUIRE(fired.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i) CHECK(fired[i] == expect[i].seq);
  CHECK(eng.pending_events() == 0);
}

// ---------------------------------------------------------------------------
// random streams
// ---------------------------------------------------------------------------

TEST_CASE("streams with the same name and seed replay bit-identically") {
  RngStream a("traffic.olt0", 99);
  RngStream b("traffic.olt0", 99);
  for (int i = 0; i < 64; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("draws from one stream do not perturb another") {
  RngStream lone("alpha", 7);
  std::vector<std::uint64_t> want;
  for (int i = 0; i < 32; ++i) want.push_back(lone.next_u64());

  RngStream a("alpha", 7);
  RngStream noise("beta", 7);
  for (int i = 0; i < 32; ++i) {
    for (int k = 0; k < i % 5; ++k) noise.next_u64();  // interleaved traffic
    CHECK(a.next_u64() == want[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("name and master seed both separate streams") {
  RngStream a("alpha", 7);
  RngStream b("beta", 7);
  RngStream c("alpha", 8);
  int same_ab = 0, same_ac = 0;
  for (int i = 0; i < 16; ++i) {
    std::uint64_t va = a.next_u64();
    if (va == b.next_u64()) ++same_ab;
    if (va == c.next_u64()) ++same_ac;
  }
  CHECK(same_ab == 0);
  CHECK(same_ac == 0);
}

TEST_CASE("uniform stays inside its interval and exponential matches its mean") {
  RngStream rng("dist-check", 31337);
  double acc = 0.0;
  for (int i = 0; i < 20000; ++i) {
    double u = rng.uniform(2.0, 5.0);
    CHECK(u >= 2.0);
    CHECK(u < 5.0);
    acc += u;
  }
  CHECK(acc / 20000.0 == doctest::Approx(3.5).epsilon(0.01));

  double sum = 0.0;
  for (int i = 0; i < 200000; ++i) {
    double x = rng.exponential(4.0);
    CHECK(x >= 0.0);
    sum += x;
  }
  CHECK(sum / 200000.0 == doctest::Approx(4.0).epsilon(0.02));
  CHECK_THROWS_AS(rng.exponential(0.0), std::invalid_argument);
}
