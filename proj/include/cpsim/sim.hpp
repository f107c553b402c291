#pragma once

#include <memory>
#include <stdexcept>
#include <utility>

#include "cpsim/config.hpp"
#include "cpsim/core.hpp"
#include "cpsim/cps.hpp"
#include "cpsim/dcc.hpp"
#include "cpsim/geonet.hpp"
#include "cpsim/map.hpp"
#include "cpsim/messages.hpp"
#include "cpsim/metrics.hpp"
#include "cpsim/mobility.hpp"
#include "cpsim/radio.hpp"
#include "cpsim/runresult.hpp"

namespace cpsim {

// One complete run: builds the scenario, wires stations to the channel and
// dispatches events until the configured duration. Single-threaded; separate
// runs share nothing and may execute on different threads.
class Simulation final : public StationDirectory {
 public:
  explicit Simulation(ScenarioConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    map_ = build_map(cfg_.map);
    collector_ = MetricsCollector(cfg_.metrics, cfg_.map.extent_m,
                                  from_sec(cfg_.run.warmup_s));
    channel_ = std::make_unique<Channel>(map_, cfg_.radio, &sched_, this);
    world_ = std::make_unique<World>(map_, cfg_.mobility, cfg_.run.seed);
    if (!cfg_.manual_vehicles.empty()) {
      world_->spawn_manual(cfg_.manual_vehicles);
    } else {
      // warm the traffic into steady-state flow before stations come up
      world_->spawn_initial();
      const int preroll_steps =
          static_cast<int>(cfg_.mobility.preroll_s / cfg_.mobility.step_s);
      for (int i = 0; i < preroll_steps; ++i) world_->step(cfg_.mobility.step_s);
    }
    world_->set_callbacks([this](const VehicleState& v) { on_spawn(v); },
                          [this](int id) { on_despawn(id); });
    for (const auto& [id, v] : world_->vehicles()) on_spawn(v);
  }

  World& world() { return *world_; }
  const GridMap& map() const { return map_; }
  Scheduler& scheduler() { return sched_; }
  const MetricsCollector& collector() const { return collector_; }

  // post-run inspection of a station that was still alive at the end
  const CpsService* station_cps(int id) const {
    auto it = stations_.find(id);
    return it == stations_.end() ? nullptr : it->second->cps.get();
  }

  RunResult run() {
    if (ran_) throw std::logic_error("Simulation::run may only be called once");
    ran_ = true;
    const SimTime duration = from_sec(cfg_.run.duration_s);
    if (cfg_.metrics.record_debug_logs) log_positions(0);
    if (duration > 0) {
      const SimTime step = from_sec(cfg_.mobility.step_s);
      sched_.schedule(step, [this] { mobility_tick(); });
    }
    sched_.run_until(duration);
    return finalize();
  }

  // --- StationDirectory -----------------------------------------------
  void for_each_station(const std::function<void(int, const Vec2&)>& fn) const override {
    for (const auto& [id, st] : stations_) fn(id, st->vehicle->pos);
  }
  bool station_alive(int id) const override { return stations_.count(id) > 0; }
  void sense_busy(int id, bool enter, SimTime t) override {
    auto it = stations_.find(id);
    if (it == stations_.end()) return;
    Station& st = *it->second;
    if (enter) {
      if (st.ledger.enter(t)) st.mac->on_busy_start(t);
    } else {
      if (st.ledger.leave(t)) st.mac->on_busy_end(t);
    }
  }
  void deliver(int id, const GeoNetPacket& packet, SimTime t) override {
    auto it = stations_.find(id);
    if (it == stations_.end()) return;
    it->second->router->receive(packet, t);
  }
  void tx_complete(int id, SimTime t) override {
    auto it = stations_.find(id);
    if (it != stations_.end()) it->second->mac->on_tx_complete(t);
  }

 private:
  struct Station {
    int id = 0;
    SimTime birth = 0;
    const VehicleState* vehicle = nullptr;
    BusyLedger ledger;
    DccGate dcc{DccConfig{}};
    std::unique_ptr<Mac> mac;
    std::unique_ptr<GeonetRouter> router;
    std::unique_ptr<CpsService> cps;
    EventHandle cycle_event;
    SimTime last_sample_t = 0;
    SimTime last_sample_busy = 0;
    double last_cbr = 0.0;
  };

  void on_spawn(const VehicleState& v) {
    if (!v.equipped) return;
    const SimTime now = sched_.now();
    const int id = v.id;
    auto st = std::make_unique<Station>();
    st->id = id;
    st->birth = now;
    st->vehicle = world_->find(id);
    st->dcc = DccGate(cfg_.dcc);
    st->last_sample_t = now;

    st->mac = std::make_unique<Mac>(
        id, cfg_.radio, &sched_,
        RngStream(cfg_.run.seed, Stream::MacBackoff, static_cast<std::uint64_t>(id)),
        [this, id](const Frame& f, SimTime t) { transmit_frame(id, f, t); });
    st->router = std::make_unique<GeonetRouter>(
        id, cfg_.geonet, cfg_.radio, &sched_,
        RngStream(cfg_.run.seed, Stream::CbfJitter, static_cast<std::uint64_t>(id)),
        [this, id] { return world_->find(id)->pos; },
        [this, id](Frame f, SimTime t) { stations_.at(id)->mac->enqueue(std::move(f), t); },
        [this, id](const GeoNetPacket& p, SimTime t) { on_delivered(id, p, t); });
    st->cps = std::make_unique<CpsService>(id, cfg_.run.mode, cfg_.cps);

    RngStream eq(cfg_.run.seed, Stream::Equip, static_cast<std::uint64_t>(id));
    eq.next_u64();  // the spawn-side equipment draw
    const SimTime phase = 1000 + static_cast<SimTime>(eq.uniform_int(98000));
    const SimTime first = now + phase;
    if (cfg_.metrics.record_debug_logs) collector_.debug.first_cycle[id] = first;
    Station* raw = st.get();
    stations_.emplace(id, std::move(st));
    ++stations_seen_;
    raw->cycle_event = sched_.schedule(first, [this, id] { station_cycle(id); });
  }

  void on_despawn(int id) {
    auto it = stations_.find(id);
    if (it == stations_.end()) return;
    it->second->cycle_event.cancel();
    fold_station(*it->second);
    stations_.erase(it);
  }

  void fold_station(Station& st) {
    PacketCounters pc;
    const GeonetCounters& g = st.router->counters();
    pc.sent = g.sent;
    pc.forwarded = g.forwarded;
    pc.delivered = g.delivered;
    pc.duplicates = g.duplicates;
    pc.dropped_malformed = g.dropped_malformed;
    pc.expired_relays = g.expired_relays;
    const MacCounters& m = st.mac->counters();
    pc.mac_dropped_full = m.dropped_queue_full;
    pc.mac_dropped_expired = m.dropped_expired;
    const CpsCounters& svc = st.cps->counters();
    pc.cpms_generated = svc.generated;
    pc.cpms_sent = svc.sent;
    pc.cpms_denied = svc.denied;
    collector_.packets[st.id] = pc;
    violations_extra_.relay_chain += g.relay_hop_violations;
    max_dup_table_ = std::max<std::uint64_t>(max_dup_table_, g.max_dup_table);

    const CpsCounters& c = st.cps->counters();
    cps_totals_.cycles += c.cycles;
    cps_totals_.generated += c.generated;
    cps_totals_.sent += c.sent;
    cps_totals_.denied += c.denied;
    cps_totals_.empty_cycles += c.empty_cycles;
    cps_totals_.received_cpms += c.received_cpms;
  }

  void transmit_frame(int id, const Frame& f, SimTime t) {
    for (const auto& obj : f.packet.payload.objects)
      if (obj.hop_count >= cfg_.cps.max_hop) ++violations_extra_.hop_bound;
    channel_->transmit(f, world_->find(id)->pos, t);
  }

  void on_delivered(int id, const GeoNetPacket& packet, SimTime t) {
    Station& st = *stations_.at(id);
    st.cps->on_cpm_received(packet.payload, t);
    if (collector_.logging(t) && collector_.in_region(st.vehicle->pos)) {
      const bool keep_full = cfg_.metrics.aoi_export == AoiExport::Full;
      for (const auto& obj : packet.payload.objects)
        collector_.on_aoi({id, obj.object_id, t - obj.measured_at, obj.hop_count + 1},
                          keep_full);
    }
    if (cfg_.metrics.record_debug_logs) {
      DebugLogs::ReceptionRow row;
      row.receiver = id;
      row.t = t;
      for (const auto& obj : packet.payload.objects)
        row.objects.push_back({obj.object_id, obj.measured_at, obj.hop_count});
      collector_.debug.receptions.push_back(std::move(row));
    }
  }

  void station_cycle(int id) {
    auto it = stations_.find(id);
    if (it == stations_.end()) return;
    Station& st = *it->second;
    const SimTime now = sched_.now();
    const Vec2 pos = st.vehicle->pos;
    st.cps->set_position(pos);

    CpsService::CycleHooks hooks;
    hooks.sense = [&] { return sense(id, pos, *world_, map_, cfg_.cps, now); };
    hooks.after_update = [&](SimTime t) {
      const SimTime window = t - st.last_sample_t;
      const SimTime busy = st.ledger.busy_up_to(t);
      const double cbr =
          window > 0 ? static_cast<double>(busy - st.last_sample_busy) / window : 0.0;
      st.last_sample_t = t;
      st.last_sample_busy = busy;
      st.last_cbr = cbr;
      st.dcc.update(cbr);
      if (collector_.logging(t) && collector_.in_region(pos)) {
        collector_.on_cbr({id, t, cbr});
        collector_.on_ear(
            compute_ear(id, pos, *world_, st.cps->lem(), cfg_.metrics, t));
      }
    };
    hooks.dcc_allow = [&](SimTime t) { return st.dcc.allowed(t); };
    hooks.on_generated = [&](int potential, int wire, bool granted, SimTime t) {
      if (collector_.logging(t) && collector_.in_region(pos))
        collector_.on_potential({id, t, potential, wire, granted});
    };
    hooks.send = [&](const Cpm& cpm, SimTime t) {
      GrantRecord rec;
      rec.station = id;
      rec.t = t;
      rec.gap = t - st.dcc.last_tx();
      rec.min_gap = cfg_.dcc.enabled ? st.dcc.min_gap_us() : 0;
      rec.cbr = st.last_cbr;
      collector_.on_grant(rec);
      st.dcc.on_sent(t);
      const Transport transport =
          cfg_.run.mode == CpsMode::GbcForwarding ? Transport::Gbc : Transport::Shb;
      st.router->send_cpm(transport, cpm, t);
    };

    st.cps->run_cycle(now, hooks);
    st.router->expire_duplicates(now);
    st.cycle_event =
        sched_.schedule(now + from_sec(cfg_.cps.period_s), [this, id] { station_cycle(id); });
  }

  void mobility_tick() {
    const SimTime now = sched_.now();
    world_->step(cfg_.mobility.step_s);
    if (world_->min_same_lane_gap() < 1.0) ++violations_extra_.lane_gap;
    if (cfg_.metrics.record_debug_logs) log_positions(now);
    sched_.schedule(now + from_sec(cfg_.mobility.step_s), [this] { mobility_tick(); });
  }

  void log_positions(SimTime t) {
    for (const auto& [id, v] : world_->vehicles())
      collector_.debug.positions.push_back(
          {t, id, v.pos, v.speed_mps, v.heading_deg, v.equipped});
  }

  RunResult finalize() {
    for (auto& [id, st] : stations_) fold_station(*st);
    RunResult r;
    r.config_echo = config_echo(cfg_);
    r.mode = cfg_.run.mode;
    r.density = cfg_.mobility.density_veh_per_km;
    r.penetration = cfg_.mobility.penetration;
    r.seed = cfg_.run.seed;
    r.final_clock = sched_.now();
    r.stations_seen = stations_seen_;
    r.ear = std::move(collector_.ear);
    r.cbr = std::move(collector_.cbr);
    r.potential = std::move(collector_.potential);
    r.aoi_hist = collector_.aoi_hist;
    r.aoi_full = std::move(collector_.aoi_full);
    r.grants = std::move(collector_.grants);
    r.packets = collector_.packets;
    r.channel = channel_->counters();
    r.cps_totals = cps_totals_;
    r.violations = collector_.violations;
    r.violations.hop_bound += violations_extra_.hop_bound;
    r.violations.relay_chain += violations_extra_.relay_chain;
    r.violations.lane_gap += violations_extra_.lane_gap;
    r.max_dup_table = max_dup_table_;
    r.debug = std::move(collector_.debug);
    return r;
  }

  ScenarioConfig cfg_;
  GridMap map_;
  Scheduler sched_;
  MetricsCollector collector_;
  std::unique_ptr<Channel> channel_;
  std::unique_ptr<World> world_;
  std::map<int, std::unique_ptr<Station>> stations_;
  ServiceTotals cps_totals_;
  Violations violations_extra_;
  std::uint64_t max_dup_table_ = 0;
  int stations_seen_ = 0;
  bool ran_ = false;
};

// Convenience wrapper: one run of a validated scenario.
inline RunResult run_scenario(const ScenarioConfig& cfg) {
  Simulation sim(cfg);
  return sim.run();
}

}  // namespace cpsim
