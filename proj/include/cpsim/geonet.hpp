#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <utility>

#include "cpsim/config.hpp"
#include "cpsim/core.hpp"
#include "cpsim/messages.hpp"
#include "cpsim/radio.hpp"

namespace cpsim {

struct GeonetCounters {
  std::uint64_t sent = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t delivered = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t dropped_malformed = 0;
  std::uint64_t expired_relays = 0;
  std::uint64_t relay_hop_violations = 0;
  std::uint64_t max_dup_table = 0;
};

// Per-station set of recently seen (source, sequence) pairs. Entries live for
// the packet lifetime counted from first insertion.
class DuplicateTable {
 public:
  struct Entry {
    SimTime expiry = 0;
    bool forwarded = false;
    bool timer_armed = false;
    EventHandle cbf_timer;
  };
  using Key = std::pair<int, std::uint32_t>;

  Entry* find(const Key& k, SimTime now) {
    auto it = entries_.find(k);
    if (it == entries_.end()) return nullptr;
    if (now >= it->second.expiry) {
      it->second.cbf_timer.cancel();
      entries_.erase(it);
      return nullptr;
    }
    return &it->second;
  }

  Entry& insert(const Key& k, SimTime expiry) {
    auto& e = entries_[k];
    e.expiry = expiry;
    return e;
  }

  void prune(SimTime now) {
    for (auto it = entries_.begin(); it != entries_.end();) {
      if (now >= it->second.expiry) {
        it->second.cbf_timer.cancel();
        it = entries_.erase(it);
      } else {
        ++it;
      }
    }
  }

  void cancel_all() {
    for (auto& [k, e] : entries_) e.cbf_timer.cancel();
  }

  std::size_t size() const { return entries_.size(); }

 private:
  std::map<Key, Entry> entries_;
};

// Network layer of one station: SHB/GBC envelopes on send, duplicate
// suppression and contention-based forwarding on receive.
class GeonetRouter {
 public:
  using SendFn = std::function<void(Frame, SimTime)>;
  using DeliverFn = std::function<void(const GeoNetPacket&, SimTime)>;
  using PosFn = std::function<Vec2()>;

  GeonetRouter(int node, const GeonetConfig& cfg, const RadioConfig& radio_cfg,
               Scheduler* sched, RngStream jitter_rng, PosFn pos, SendFn send,
               DeliverFn deliver)
      : node_(node),
        cfg_(cfg),
        radio_cfg_(radio_cfg),
        cbf_dmax_m_(los_range_m(radio_cfg)),
        sched_(sched),
        jitter_rng_(jitter_rng),
        pos_(std::move(pos)),
        send_(std::move(send)),
        deliver_(std::move(deliver)) {}

  ~GeonetRouter() { dups_.cancel_all(); }

  const GeonetCounters& counters() const { return counters_; }
  double cbf_dmax_m() const { return cbf_dmax_m_; }
  std::size_t duplicate_table_size() const { return dups_.size(); }

  void send_cpm(Transport transport, const Cpm& cpm, SimTime now) {
    GeoNetPacket p;
    p.transport = transport;
    p.source_id = node_;
    p.source_pos = pos_();
    p.sequence = seq_++;
    p.origin_time = now;
    p.lifetime = from_sec(cfg_.gbc_lifetime_s);
    if (transport == Transport::Gbc) {
      p.remaining_hops = cfg_.gbc_hop_limit;
      p.target_center = p.source_pos;
      p.target_radius_m = cfg_.gbc_radius_m;
    } else {
      p.remaining_hops = 0;
    }
    p.last_hop_id = node_;
    p.last_hop_pos = p.source_pos;
    p.payload = cpm;

    dups_.insert({p.source_id, p.sequence}, now + p.lifetime);
    track_table_size();

    Frame f;
    f.tx_node = node_;
    f.payload_bytes = frame_bytes(static_cast<int>(cpm.objects.size()), radio_cfg_);
    f.expiry = transport == Transport::Gbc ? p.origin_time + p.lifetime : 0;
    f.packet = p;
    ++counters_.sent;
    send_(std::move(f), now);
  }

  void receive(const GeoNetPacket& p, SimTime now) {
    if (p.source_id == node_) return;  // echo of our own packet
    if (p.lifetime <= 0) {
      ++counters_.dropped_malformed;
      return;
    }
    const DuplicateTable::Key key{p.source_id, p.sequence};
    if (auto* e = dups_.find(key, now)) {
      ++counters_.duplicates;
      // hearing a duplicate cancels a pending CBF timer; flooding ignores it
      if (e->timer_armed && cfg_.algorithm == GbcAlgorithm::Cbf) {
        e->cbf_timer.cancel();
        e->timer_armed = false;
      }
      return;
    }
    auto& entry = dups_.insert(key, now + p.lifetime);
    track_table_size();
    ++counters_.delivered;
    deliver_(p, now);

    if (p.transport != Transport::Gbc) return;
    if (now >= p.origin_time + p.lifetime) return;
    if (p.remaining_hops <= 0) return;
    const Vec2 here = pos_();
    if (dist(here, p.target_center) > p.target_radius_m) return;

    SimTime delay = 0;
    if (cfg_.algorithm == GbcAlgorithm::Cbf) {
      const double d = std::min(dist(here, p.last_hop_pos), cbf_dmax_m_);
      delay = static_cast<SimTime>(cfg_.cbf_tmax_ms * 1000.0 * (1.0 - d / cbf_dmax_m_));
    }
    delay += static_cast<SimTime>(jitter_rng_.uniform(0.0, cfg_.cbf_jitter_ms * 1000.0));

    GeoNetPacket copy = p;
    entry.timer_armed = true;
    entry.cbf_timer =
        sched_->schedule(now + delay, [this, key, copy] { fire_relay(key, copy); });
  }

  void expire_duplicates(SimTime now) {
    dups_.prune(now);
  }

 private:
  void fire_relay(const DuplicateTable::Key& key, const GeoNetPacket& p) {
    const SimTime now = sched_->now();
    auto* e = dups_.find(key, now);
    if (e != nullptr) {
      if (e->forwarded) return;
      e->timer_armed = false;
    }
    if (now >= p.origin_time + p.lifetime) {
      ++counters_.expired_relays;
      return;
    }
    if (p.remaining_hops <= 0) {
      ++counters_.relay_hop_violations;
      return;
    }
    GeoNetPacket out = p;
    out.remaining_hops = p.remaining_hops - 1;
    out.last_hop_id = node_;
    out.last_hop_pos = pos_();

    Frame f;
    f.tx_node = node_;
    f.payload_bytes =
        frame_bytes(static_cast<int>(out.payload.objects.size()), radio_cfg_);
    f.expiry = out.origin_time + out.lifetime;
    f.packet = out;
    if (e != nullptr) e->forwarded = true;
    ++counters_.forwarded;
    send_(std::move(f), now);
  }

  void track_table_size() {
    counters_.max_dup_table = std::max<std::uint64_t>(counters_.max_dup_table, dups_.size());
  }

  int node_;
  GeonetConfig cfg_;
  RadioConfig radio_cfg_;
  double cbf_dmax_m_;
  Scheduler* sched_;
  RngStream jitter_rng_;
  PosFn pos_;
  SendFn send_;
  DeliverFn deliver_;
  DuplicateTable dups_;
  GeonetCounters counters_;
  std::uint32_t seq_ = 0;
};

}  // namespace cpsim
