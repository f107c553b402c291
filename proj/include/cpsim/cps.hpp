#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "cpsim/config.hpp"
#include "cpsim/core.hpp"
#include "cpsim/geometry.hpp"
#include "cpsim/map.hpp"
#include "cpsim/messages.hpp"
#include "cpsim/mobility.hpp"

namespace cpsim {

struct InclusionSnapshot {
  Vec2 pos;
  double speed_mps = 0.0;
  double heading_deg = 0.0;
  SimTime time = 0;
};

struct LemEntry {
  PerceivedObject object;
  bool included_before = false;
  InclusionSnapshot last_included;
};

// Local Environment Model: freshest known state per object id plus the
// station's own inclusion history used by the generation triggers.
class Lem {
 public:
  std::map<int, LemEntry> entries;

  const LemEntry* find(int object_id) const {
    auto it = entries.find(object_id);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// True when any ETSI generation rule fires for this object: first inclusion,
// position delta over 4 m, speed delta over 4 m/s, heading delta over 4 deg
// (circular), or more than 1 s since the last inclusion.
inline bool kinematic_change_trigger(const PerceivedObject& obj, const LemEntry& entry,
                                     SimTime now, const CpsConfig& cfg) {
  if (!entry.included_before) return true;
  const InclusionSnapshot& last = entry.last_included;
  if (dist(obj.pos, last.pos) > cfg.pos_threshold_m) return true;
  if (std::fabs(obj.speed_mps - last.speed_mps) > cfg.speed_threshold_mps) return true;
  if (circular_diff_deg(obj.heading_deg, last.heading_deg) > cfg.heading_threshold_deg)
    return true;
  if (now - last.time > from_sec(cfg.lapse_s)) return true;
  return false;
}

// Applies one buffered CPM batch to the LEM in reception order. Objects must
// already carry the receiver-incremented hop count. Literal mode applies the
// replacement condition "newer timestamp AND hop below the limit"; freshest
// mode keeps the newest timestamp unconditionally (plain ETSI consumption).
inline void lem_update(Lem& lem, const std::vector<Cpm>& buffer, int max_hop,
                       LemUpdateMode mode) {
  for (const Cpm& cpm : buffer) {
    for (const PerceivedObject& obj : cpm.objects) {
      auto it = lem.entries.find(obj.object_id);
      if (it == lem.entries.end()) {
        LemEntry e;
        e.object = obj;
        lem.entries.emplace(obj.object_id, e);
        continue;
      }
      const bool newer = it->second.object.measured_at < obj.measured_at;
      const bool accept =
          mode == LemUpdateMode::Literal ? (newer && obj.hop_count < max_hop) : newer;
      if (accept) it->second.object = obj;  // inclusion history is preserved
    }
  }
}

// Locally sensed objects overwrite on strictly newer measurements (hop 0).
inline void merge_sensed(Lem& lem, const std::vector<PerceivedObject>& sensed) {
  for (const PerceivedObject& obj : sensed) {
    auto it = lem.entries.find(obj.object_id);
    if (it == lem.entries.end()) {
      LemEntry e;
      e.object = obj;
      lem.entries.emplace(obj.object_id, e);
    } else if (it->second.object.measured_at < obj.measured_at) {
      it->second.object = obj;
    }
  }
}

// Entries whose data was never refreshed within the timeout drop out of the
// model (the object left every sensor's reach).
inline void prune_stale(Lem& lem, SimTime now, const CpsConfig& cfg) {
  const SimTime timeout = from_sec(cfg.lem_timeout_s);
  for (auto it = lem.entries.begin(); it != lem.entries.end();) {
    if (now - it->second.object.measured_at > timeout)
      it = lem.entries.erase(it);
    else
      ++it;
  }
}

// 360 degree camera model: every other vehicle within the sensor radius and
// in line of sight of the ego position.
inline std::vector<PerceivedObject> sense(int ego_id, const Vec2& ego_pos,
                                          const World& world, const GridMap& map,
                                          const CpsConfig& cfg, SimTime now) {
  std::vector<PerceivedObject> out;
  world.for_each_within(ego_pos, cfg.sensor_radius_m, [&](const VehicleState& v) {
    if (v.id == ego_id) return;
    if (!map.line_of_sight(ego_pos, v.pos)) return;
    PerceivedObject o;
    o.object_id = v.id;
    o.pos = v.pos;
    o.speed_mps = v.speed_mps;
    o.heading_deg = v.heading_deg;
    o.measured_at = now;
    o.hop_count = 0;
    out.push_back(o);
  });
  return out;
}

struct GeneratedCpm {
  Cpm cpm;
  int potential = 0;  // triggered candidates before the wire cap
};

// Builds the cycle's CPM. Baseline and GBC modes include locally sensed
// objects only; application-layer forwarding additionally includes remote
// objects below the hop limit. The candidate count is recorded before the
// wire cap is applied.
inline GeneratedCpm generate_cpm(int station_id, const Vec2& station_pos, Lem& lem,
                                 CpsMode mode, const CpsConfig& cfg, SimTime now) {
  GeneratedCpm out;
  out.cpm.sender_id = station_id;
  out.cpm.sender_pos = station_pos;
  out.cpm.generated_at = now;
  for (auto& [id, entry] : lem.entries) {
    if (id == station_id) continue;  // never self-announce
    const PerceivedObject& obj = entry.object;
    const bool local = obj.hop_count == 0;
    const bool forwardable =
        mode == CpsMode::AppForwarding && obj.hop_count < cfg.max_hop;
    if (!local && !forwardable) continue;
    if (!kinematic_change_trigger(obj, entry, now, cfg)) continue;
    ++out.potential;
    if (static_cast<int>(out.cpm.objects.size()) < cfg.max_objects)
      out.cpm.objects.push_back(obj);
  }
  return out;
}

struct CpsCounters {
  std::uint64_t cycles = 0;
  std::uint64_t generated = 0;  // cycles with a non-empty candidate set
  std::uint64_t sent = 0;
  std::uint64_t denied = 0;
  std::uint64_t empty_cycles = 0;
  std::uint64_t received_cpms = 0;
};

// One station's Collective Perception Service: buffers received CPMs between
// cycles and runs the periodic update/sense/generate/gate sequence.
class CpsService {
 public:
  struct CycleHooks {
    std::function<std::vector<PerceivedObject>()> sense;
    // called after the LEM holds this cycle's received + sensed state
    std::function<void(SimTime)> after_update;
    std::function<bool(SimTime)> dcc_allow;
    std::function<void(int potential, int wire, bool granted, SimTime)> on_generated;
    std::function<void(const Cpm&, SimTime)> send;
  };

  CpsService(int station_id, CpsMode mode, const CpsConfig& cfg)
      : id_(station_id),
        mode_(mode),
        cfg_(cfg),
        update_mode_(cfg.lem_update == LemUpdateMode::Auto
                         ? (mode == CpsMode::AppForwarding ? LemUpdateMode::Literal
                                                           : LemUpdateMode::Freshest)
                         : cfg.lem_update) {}

  int station_id() const { return id_; }
  Lem& lem() { return lem_; }
  const Lem& lem() const { return lem_; }
  const CpsCounters& counters() const { return counters_; }
  LemUpdateMode update_mode() const { return update_mode_; }

  // Reception path: the receiver increments every hop count by one relative
  // to the wire before the object can enter the LEM.
  void on_cpm_received(const Cpm& wire, SimTime) {
    Cpm buffered = wire;
    for (auto& obj : buffered.objects) obj.hop_count += 1;
    buffer_.push_back(std::move(buffered));
    ++counters_.received_cpms;
  }

  std::size_t buffered() const { return buffer_.size(); }

  void run_cycle(SimTime now, const CycleHooks& hooks) {
    ++counters_.cycles;
    lem_update(lem_, buffer_, cfg_.max_hop, update_mode_);
    buffer_.clear();
    prune_stale(lem_, now, cfg_);
    if (hooks.sense) merge_sensed(lem_, hooks.sense());
    if (hooks.after_update) hooks.after_update(now);

    GeneratedCpm gen = generate_cpm(id_, pos_, lem_, mode_, cfg_, now);
    if (gen.potential == 0) {
      ++counters_.empty_cycles;
      return;
    }
    ++counters_.generated;
    const bool granted = hooks.dcc_allow ? hooks.dcc_allow(now) : true;
    if (hooks.on_generated)
      hooks.on_generated(gen.potential, static_cast<int>(gen.cpm.objects.size()),
                         granted, now);
    if (!granted) {
      ++counters_.denied;
      return;
    }
    for (const PerceivedObject& obj : gen.cpm.objects) {
      LemEntry& e = lem_.entries.at(obj.object_id);
      e.included_before = true;
      e.last_included = {obj.pos, obj.speed_mps, obj.heading_deg, now};
    }
    ++counters_.sent;
    if (hooks.send) hooks.send(gen.cpm, now);
  }

  void set_position(const Vec2& p) { pos_ = p; }

 private:
  int id_;
  CpsMode mode_;
  CpsConfig cfg_;
  LemUpdateMode update_mode_;
  Lem lem_;
  std::vector<Cpm> buffer_;
  Vec2 pos_;
  CpsCounters counters_;
};

}  // namespace cpsim
