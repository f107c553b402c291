#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpsim {

// ---------------------------------------------------------------------------
// Simulation time: integer microseconds since run start. Every timestamp in
// the simulator derives from this clock; there is no wall-clock anywhere.
// ---------------------------------------------------------------------------
using SimTime = std::int64_t;

constexpr SimTime kUsPerMs = 1000;
constexpr SimTime kUsPerSec = 1000000;

constexpr SimTime from_ms(std::int64_t v) { return v * kUsPerMs; }
constexpr SimTime from_sec(double v) { return static_cast<SimTime>(v * kUsPerSec); }
constexpr double to_sec(SimTime t) { return static_cast<double>(t) / kUsPerSec; }
constexpr double to_ms(SimTime t) { return static_cast<double>(t) / kUsPerMs; }

// ---------------------------------------------------------------------------
// Named random streams. Each subsystem draws from its own stream so adding a
// consumer never perturbs another subsystem's sequence. Streams are keyed by
// (seed, purpose, salt); identical keys give identical sequences on every
// platform (xoshiro256**, no std::distribution involved).
// ---------------------------------------------------------------------------
enum class Stream : std::uint64_t {
  Mobility = 1,
  MacBackoff = 2,
  CbfJitter = 3,
  Spawn = 4,
  Equip = 5,
};

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
inline std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}
}  // namespace detail

class RngStream {
 public:
  RngStream() : RngStream(0, Stream::Mobility, 0) {}
  RngStream(std::uint64_t seed, Stream purpose, std::uint64_t salt = 0) {
    std::uint64_t x = seed;
    x ^= detail::splitmix64(x) + static_cast<std::uint64_t>(purpose) * 0x9e3779b97f4a7c15ULL;
    x ^= salt * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL;
    for (auto& w : state_) w = detail::splitmix64(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // [0, 1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  // [a, b)
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }
  // [0, bound)
  std::uint32_t uniform_int(std::uint32_t bound) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }
  bool bernoulli(double p) { return uniform01() < p; }

 private:
  std::uint64_t state_[4];
};

// ---------------------------------------------------------------------------
// Deterministic event queue. Total order is (fire_at, seq) with seq assigned
// at issue time, so ties in fire_at dispatch in scheduling order. Cancelled
// events are skipped lazily on pop.
// ---------------------------------------------------------------------------
class EventHandle;

class Scheduler {
 public:
  SimTime now() const { return now_; }
  std::uint64_t dispatched() const { return dispatched_; }

  EventHandle schedule(SimTime fire_at, std::function<void()> action);

  void cancel_all() {
    while (!queue_.empty()) queue_.pop();
  }

  // Dispatches events with fire_at < limit, then advances the clock to limit.
  void run_until(SimTime limit) {
    while (!queue_.empty()) {
      const Entry& top = queue_.top();
      if (top.fire_at >= limit) break;
      Entry e = top;
      queue_.pop();
      if (e.rec->cancelled) continue;
      if (e.fire_at < now_) throw std::logic_error("event queue went backwards");
      now_ = e.fire_at;
      ++dispatched_;
      auto action = std::move(e.rec->action);
      e.rec->done = true;
      action();
    }
    if (limit > now_) now_ = limit;
  }

 private:
  friend class EventHandle;
  struct Record {
    std::function<void()> action;
    bool cancelled = false;
    bool done = false;
  };
  struct Entry {
    SimTime fire_at;
    std::uint64_t seq;
    std::shared_ptr<Record> rec;
    bool operator>(const Entry& o) const {
      if (fire_at != o.fire_at) return fire_at > o.fire_at;
      return seq > o.seq;
    }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue_;
  SimTime now_ = 0;
  std::uint64_t next_seq_ = 0;
  std::uint64_t dispatched_ = 0;
};

class EventHandle {
 public:
  EventHandle() = default;
  void cancel() {
    if (auto r = rec_.lock()) r->cancelled = true;
  }
  // True while the event is still scheduled to fire.
  bool pending() const {
    auto r = rec_.lock();
    return r && !r->cancelled && !r->done;
  }

 private:
  friend class Scheduler;
  explicit EventHandle(std::weak_ptr<Scheduler::Record> rec) : rec_(std::move(rec)) {}
  std::weak_ptr<Scheduler::Record> rec_;
};

inline EventHandle Scheduler::schedule(SimTime fire_at, std::function<void()> action) {
  if (fire_at < now_) throw std::logic_error("scheduling an event in the past");
  auto rec = std::make_shared<Record>();
  rec->action = std::move(action);
  queue_.push(Entry{fire_at, next_seq_++, rec});
  return EventHandle{rec};
}

}  // namespace cpsim
