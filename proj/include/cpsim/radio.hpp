#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <numbers>
#include <vector>

#include "cpsim/config.hpp"
#include "cpsim/core.hpp"
#include "cpsim/map.hpp"
#include "cpsim/messages.hpp"

namespace cpsim {

struct Frame {
  int tx_node = 0;
  int payload_bytes = 0;
  SimTime expiry = 0;  // 0 = no deadline; otherwise dropped at grant if late
  GeoNetPacket packet;
};

inline SimTime airtime_us(int payload_bytes, const RadioConfig& cfg) {
  const std::int64_t bit_us = static_cast<std::int64_t>(payload_bytes) * 8 * 1000000;
  return cfg.preamble_us + (bit_us + cfg.bitrate_bps - 1) / cfg.bitrate_bps;
}

inline int frame_bytes(int object_count, const RadioConfig& cfg) {
  return cfg.frame_overhead_bytes + cfg.bytes_per_object * object_count;
}

// Free-space loss at the 1 m reference distance.
inline double reference_loss_db(const RadioConfig& cfg) {
  const double lambda = 299792458.0 / (cfg.carrier_freq_ghz * 1e9);
  return 20.0 * std::log10(4.0 * std::numbers::pi / lambda);
}

// Log-distance path loss plus a fixed penalty per obstructing building.
inline double received_power_dbm(const Vec2& tx, const Vec2& rx, const GridMap& map,
                                 const RadioConfig& cfg) {
  double d = dist(tx, rx);
  if (d < 1.0) d = 1.0;
  const int walls = map.wall_count(tx, rx);
  return cfg.tx_power_dbm - reference_loss_db(cfg) -
         10.0 * cfg.pathloss_exponent * std::log10(d) - cfg.per_wall_loss_db * walls;
}

// Distance at which an unobstructed signal falls to the sense threshold.
inline double los_range_m(const RadioConfig& cfg) {
  const double budget = cfg.tx_power_dbm - reference_loss_db(cfg) - cfg.sense_threshold_dbm;
  return std::pow(10.0, budget / (10.0 * cfg.pathloss_exponent));
}

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double mw_to_dbm(double mw) { return 10.0 * std::log10(mw); }

// Per-node channel-occupancy bookkeeping: accumulated time during which the
// node was transmitting or sensed another transmission above threshold.
class BusyLedger {
 public:
  // returns true on the 0 -> 1 transition
  bool enter(SimTime t) {
    if (depth_++ == 0) {
      busy_since_ = t;
      return true;
    }
    return false;
  }
  // returns true on the 1 -> 0 transition
  bool leave(SimTime t) {
    if (--depth_ == 0) {
      accum_ += t - busy_since_;
      return true;
    }
    return false;
  }
  bool busy() const { return depth_ > 0; }
  SimTime busy_up_to(SimTime t) const {
    return accum_ + (depth_ > 0 ? t - busy_since_ : 0);
  }

 private:
  int depth_ = 0;
  SimTime busy_since_ = 0;
  SimTime accum_ = 0;
};

// Glue the channel uses to reach stations; implemented by the simulation
// (and by test fixtures).
class StationDirectory {
 public:
  virtual ~StationDirectory() = default;
  virtual void for_each_station(const std::function<void(int, const Vec2&)>& fn) const = 0;
  virtual bool station_alive(int id) const = 0;
  virtual void sense_busy(int id, bool enter, SimTime t) = 0;
  virtual void deliver(int id, const GeoNetPacket& packet, SimTime t) = 0;
  virtual void tx_complete(int id, SimTime t) = 0;
};

struct ChannelCounters {
  std::uint64_t frames_sent = 0;
  std::uint64_t deliveries = 0;
  std::uint64_t capture_losses = 0;
  std::uint64_t deaf_losses = 0;
  std::uint64_t overload_losses = 0;  // interference ceiling exceeded
};

// Broadcast channel: computes per-receiver powers at transmission start and
// resolves reception at frame end against all co-temporal interferers.
class Channel {
 public:
  Channel(const GridMap& map, const RadioConfig& cfg, Scheduler* sched,
          StationDirectory* dir)
      : map_(map), cfg_(cfg), sched_(sched), dir_(dir) {}

  ChannelCounters& counters() { return counters_; }
  const ChannelCounters& counters() const { return counters_; }

  void transmit(const Frame& frame, const Vec2& tx_pos, SimTime now) {
    auto tx = std::make_shared<Tx>();
    tx->node = frame.tx_node;
    tx->start = now;
    tx->end = now + airtime_us(frame.payload_bytes, cfg_);
    tx->frame = frame;
    if (tx->end - tx->start > max_airtime_) max_airtime_ = tx->end - tx->start;

    dir_->for_each_station([&](int id, const Vec2& pos) {
      if (id == tx->node) return;
      const double dbm = received_power_dbm(tx_pos, pos, map_, cfg_);
      tx->rx.push_back({id, dbm, dbm_to_mw(dbm)});
      if (dbm >= cfg_.sense_threshold_dbm) {
        tx->busy_marked.push_back(id);
        dir_->sense_busy(id, true, now);
      }
    });
    tx->busy_marked.push_back(tx->node);
    dir_->sense_busy(tx->node, true, now);

    ++counters_.frames_sent;
    active_.push_back(tx);
    sched_->schedule(tx->end, [this, tx] { finish(tx); });
  }

 private:
  struct RxEntry {
    int id;
    double dbm;
    double mw;
  };
  struct Tx {
    int node = 0;
    SimTime start = 0, end = 0;
    Frame frame;
    std::vector<RxEntry> rx;
    std::vector<int> busy_marked;
  };

  void finish(const std::shared_ptr<Tx>& tx) {
    const SimTime now = tx->end;
    for (int id : tx->busy_marked)
      if (dir_->station_alive(id)) dir_->sense_busy(id, false, now);

    const double thermal_mw = dbm_to_mw(cfg_.thermal_noise_dbm);
    for (const auto& e : tx->rx) {
      if (e.dbm < cfg_.decode_floor_dbm) continue;
      if (!dir_->station_alive(e.id)) continue;
      bool deaf = false;
      double interference_mw = 0.0;
      for (const auto& other : active_) {
        if (other.get() == tx.get()) continue;
        if (other->start >= tx->end || other->end <= tx->start) continue;
        if (other->node == e.id) {
          deaf = true;
          break;
        }
        interference_mw += power_at(*other, e.id);
      }
      if (deaf) {
        ++counters_.deaf_losses;
        continue;
      }
      const double floor_dbm = mw_to_dbm(interference_mw + thermal_mw);
      if (floor_dbm > cfg_.noise_floor_dbm) {
        ++counters_.overload_losses;
        continue;
      }
      if (e.dbm - floor_dbm < cfg_.capture_margin_db) {
        ++counters_.capture_losses;
        continue;
      }
      ++counters_.deliveries;
      dir_->deliver(e.id, tx->frame.packet, now);
    }

    if (dir_->station_alive(tx->node)) dir_->tx_complete(tx->node, now);

    const SimTime horizon = now - 2 * max_airtime_;
    std::erase_if(active_, [horizon](const std::shared_ptr<Tx>& t) {
      return t->end < horizon;
    });
  }

  // rx entries are built in ascending station order
  static double power_at(const Tx& tx, int station) {
    auto it = std::lower_bound(
        tx.rx.begin(), tx.rx.end(), station,
        [](const RxEntry& e, int id) { return e.id < id; });
    return it != tx.rx.end() && it->id == station ? it->mw : 0.0;
  }

  const GridMap& map_;
  RadioConfig cfg_;
  Scheduler* sched_;
  StationDirectory* dir_;
  ChannelCounters counters_;
  std::vector<std::shared_ptr<Tx>> active_;
  SimTime max_airtime_ = 0;
};

struct MacCounters {
  std::uint64_t queued = 0;
  std::uint64_t dropped_queue_full = 0;
  std::uint64_t dropped_expired = 0;
  std::uint64_t transmitted = 0;
};

// Simplified 802.11p EDCA: a single access category with AIFS, a uniform
// backoff drawn per access attempt and a slot counter frozen while busy.
class Mac {
 public:
  using TransmitFn = std::function<void(const Frame&, SimTime)>;

  Mac(int node, const RadioConfig& cfg, Scheduler* sched, RngStream rng, TransmitFn tx)
      : node_(node), cfg_(cfg), sched_(sched), rng_(rng), transmit_(std::move(tx)) {}

  ~Mac() { timer_.cancel(); }

  const MacCounters& counters() const { return counters_; }

  void enqueue(Frame frame, SimTime now) {
    if (static_cast<int>(queue_.size()) >= cfg_.mac_queue_frames) {
      ++counters_.dropped_queue_full;  // drop-newest policy
      return;
    }
    ++counters_.queued;
    queue_.push_back(std::move(frame));
    if (state_ == State::Idle) start_attempt(now);
  }

  void on_busy_start(SimTime now) {
    busy_ = true;
    switch (state_) {
      case State::WaitAifs:
        timer_.cancel();
        backoff_slots_ = static_cast<int>(rng_.uniform_int(
            static_cast<std::uint32_t>(cfg_.contention_window)));
        state_ = State::Defer;
        break;
      case State::Countdown: {
        timer_.cancel();
        const SimTime elapsed = now - countdown_base_;
        if (elapsed > 0) {
          const int consumed = static_cast<int>(elapsed / cfg_.slot_us);
          backoff_slots_ = std::max(0, backoff_slots_ - consumed);
        }
        state_ = State::Defer;
        break;
      }
      default:
        break;
    }
  }

  void on_busy_end(SimTime now) {
    busy_ = false;
    if (state_ != State::Defer) return;
    state_ = State::Countdown;
    countdown_base_ = now + cfg_.aifs_us;
    timer_ = sched_->schedule(countdown_base_ + backoff_slots_ * cfg_.slot_us,
                              [this] { fire(); });
  }

  void on_tx_complete(SimTime now) {
    state_ = State::Idle;
    if (!queue_.empty()) start_attempt(now);
  }

  bool idle() const { return state_ == State::Idle && queue_.empty(); }

 private:
  enum class State { Idle, WaitAifs, Defer, Countdown, Transmitting };

  void start_attempt(SimTime now) {
    if (!busy_) {
      state_ = State::WaitAifs;
      timer_ = sched_->schedule(now + cfg_.aifs_us, [this] { fire(); });
    } else {
      backoff_slots_ = static_cast<int>(
          rng_.uniform_int(static_cast<std::uint32_t>(cfg_.contention_window)));
      state_ = State::Defer;
    }
  }

  void fire() {
    const SimTime now = sched_->now();
    if (busy_) {  // busy began in the same microsecond the timer fired
      backoff_slots_ = static_cast<int>(
          rng_.uniform_int(static_cast<std::uint32_t>(cfg_.contention_window)));
      state_ = State::Defer;
      return;
    }
    while (!queue_.empty() && queue_.front().expiry > 0 &&
           now >= queue_.front().expiry) {
      queue_.pop_front();
      ++counters_.dropped_expired;
    }
    if (queue_.empty()) {
      state_ = State::Idle;
      return;
    }
    Frame f = std::move(queue_.front());
    queue_.pop_front();
    state_ = State::Transmitting;
    ++counters_.transmitted;
    transmit_(f, now);
  }

  int node_;
  RadioConfig cfg_;
  Scheduler* sched_;
  RngStream rng_;
  TransmitFn transmit_;
  std::deque<Frame> queue_;
  State state_ = State::Idle;
  bool busy_ = false;
  int backoff_slots_ = 0;
  SimTime countdown_base_ = 0;
  EventHandle timer_;
  MacCounters counters_;
};

}  // namespace cpsim
