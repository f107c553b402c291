#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "cpsim/cps.hpp"
#include "cpsim/map.hpp"
#include "cpsim/mobility.hpp"
#include "support/reference_lem.hpp"

using namespace cpsim;

namespace {

PerceivedObject obj(int id, SimTime measured, int hop, Vec2 pos = {0, 0},
                    double speed = 0.0, double heading = 0.0) {
  PerceivedObject o;
  o.object_id = id;
  o.pos = pos;
  o.speed_mps = speed;
  o.heading_deg = heading;
  o.measured_at = measured;
  o.hop_count = hop;
  return o;
}

LemEntry entry_with_snapshot(Vec2 pos, double speed, double heading, SimTime at) {
  LemEntry e;
  e.included_before = true;
  e.last_included = {pos, speed, heading, at};
  return e;
}

}  // namespace

TEST_CASE("trigger fires on first inclusion") {
  CpsConfig cfg;
  LemEntry never;
  CHECK(kinematic_change_trigger(obj(1, 0, 0), never, 0, cfg));
}

TEST_CASE("trigger thresholds are strict 'exceeds' comparisons") {
  CpsConfig cfg;
  auto e = entry_with_snapshot({0, 0}, 10.0, 90.0, 0);

  CHECK(kinematic_change_trigger(obj(1, 0, 0, {4.1, 0}, 10.0, 90.0), e, from_ms(500), cfg));
  CHECK_FALSE(
      kinematic_change_trigger(obj(1, 0, 0, {4.0, 0}, 10.0, 90.0), e, from_ms(500), cfg));

  CHECK(kinematic_change_trigger(obj(1, 0, 0, {0, 0}, 14.1, 90.0), e, from_ms(500), cfg));
  CHECK(kinematic_change_trigger(obj(1, 0, 0, {0, 0}, 10.0, 94.5), e, from_ms(500), cfg));

  // all thresholds unmet
  CHECK_FALSE(
      kinematic_change_trigger(obj(1, 0, 0, {3, 0}, 11.0, 92.0), e, from_ms(500), cfg));

  // lapse: strictly more than one second since last inclusion
  CHECK_FALSE(kinematic_change_trigger(obj(1, 0, 0, {0, 0}, 10.0, 90.0), e,
                                       from_sec(1.0), cfg));
  CHECK(kinematic_change_trigger(obj(1, 0, 0, {0, 0}, 10.0, 90.0), e,
                                 from_sec(1.0) + 1, cfg));
}

TEST_CASE("heading comparison is circular") {
  CpsConfig cfg;
  auto e = entry_with_snapshot({0, 0}, 10.0, 359.0, 0);
  // 359 -> 2 is a 3 degree change: below threshold
  CHECK_FALSE(
      kinematic_change_trigger(obj(1, 0, 0, {0, 0}, 10.0, 2.0), e, from_ms(100), cfg));
  // 359 -> 4 is 5 degrees: fires
  CHECK(kinematic_change_trigger(obj(1, 0, 0, {0, 0}, 10.0, 4.0), e, from_ms(100), cfg));
}

TEST_CASE("lem update: literal hop-filtered replacement") {
  CpsConfig cfg;
  Lem lem;

  // empty model: inserted regardless of hop count
  lem_update(lem, {Cpm{0, {}, 0, {obj(7, from_sec(1), 5)}}}, cfg.max_hop,
             LemUpdateMode::Literal);
  REQUIRE(lem.find(7) != nullptr);
  CHECK(lem.find(7)->object.hop_count == 5);

  // newer timestamp with hop below the limit replaces
  lem_update(lem, {Cpm{0, {}, 0, {obj(7, from_sec(1.2), 1)}}}, cfg.max_hop,
             LemUpdateMode::Literal);
  CHECK(lem.find(7)->object.measured_at == from_sec(1.2));
  CHECK(lem.find(7)->object.hop_count == 1);

  // newer timestamp at the hop limit does NOT replace (the conjunction)
  lem_update(lem, {Cpm{0, {}, 0, {obj(7, from_sec(1.4), 2)}}}, cfg.max_hop,
             LemUpdateMode::Literal);
  CHECK(lem.find(7)->object.measured_at == from_sec(1.2));

  // equal timestamp never replaces
  lem_update(lem, {Cpm{0, {}, 0, {obj(7, from_sec(1.2), 0)}}}, cfg.max_hop,
             LemUpdateMode::Literal);
  CHECK(lem.find(7)->object.hop_count == 1);

  // freshest mode takes the newest data regardless of hop
  lem_update(lem, {Cpm{0, {}, 0, {obj(7, from_sec(1.4), 2)}}}, cfg.max_hop,
             LemUpdateMode::Freshest);
  CHECK(lem.find(7)->object.measured_at == from_sec(1.4));
}

TEST_CASE("lem update preserves the station's inclusion history") {
  CpsConfig cfg;
  Lem lem;
  lem_update(lem, {Cpm{0, {}, 0, {obj(7, from_sec(1), 1)}}}, cfg.max_hop,
             LemUpdateMode::Literal);
  lem.entries.at(7).included_before = true;
  lem.entries.at(7).last_included = {{1, 2}, 3.0, 4.0, from_sec(1)};
  lem_update(lem, {Cpm{0, {}, 0, {obj(7, from_sec(2), 1)}}}, cfg.max_hop,
             LemUpdateMode::Literal);
  CHECK(lem.entries.at(7).included_before);
  CHECK(lem.entries.at(7).last_included.time == from_sec(1));
}

TEST_CASE("randomized equivalence against the reference interpreter") {
  CpsConfig cfg;
  RngStream rng(2024, Stream::Spawn);
  for (int trial = 0; trial < 200; ++trial) {
    const int n_cpms = 1 + static_cast<int>(rng.uniform_int(50));
    std::vector<refmodel::RefCpm> ref_seq;
    std::vector<Cpm> lib_seq;
    for (int c = 0; c < n_cpms; ++c) {
      refmodel::RefCpm rc;
      Cpm lc;
      const int n_obj = 1 + static_cast<int>(rng.uniform_int(8));
      for (int k = 0; k < n_obj; ++k) {
        refmodel::RefObject ro;
        ro.id = static_cast<int>(rng.uniform_int(20));
        ro.timestamp = static_cast<long long>(rng.uniform_int(1000000));
        ro.hop = static_cast<int>(rng.uniform_int(4));
        ro.x = rng.uniform(0, 1000);
        ro.y = rng.uniform(0, 1000);
        ro.speed = rng.uniform(0, 30);
        ro.heading = rng.uniform(0, 360);
        rc.objects.push_back(ro);
        lc.objects.push_back(obj(ro.id, ro.timestamp, ro.hop, {ro.x, ro.y}, ro.speed,
                                 ro.heading));
      }
      ref_seq.push_back(rc);
      lib_seq.push_back(lc);
    }

    const auto expected = refmodel::run_literal(ref_seq, cfg.max_hop);

    // feed the library in randomly sized batches, as buffered cycles would
    Lem lem;
    std::size_t i = 0;
    while (i < lib_seq.size()) {
      const std::size_t batch = 1 + rng.uniform_int(5);
      std::vector<Cpm> chunk(lib_seq.begin() + i,
                             lib_seq.begin() + std::min(lib_seq.size(), i + batch));
      lem_update(lem, chunk, cfg.max_hop, LemUpdateMode::Literal);
      i += batch;
    }

    REQUIRE(lem.entries.size() == expected.size());
    for (const auto& [id, ref] : expected) {
      const LemEntry* e = lem.find(id);
      REQUIRE(e != nullptr);
      CHECK(e->object.measured_at == ref.timestamp);
      CHECK(e->object.hop_count == ref.hop);
      CHECK(e->object.pos.x == ref.x);
      CHECK(e->object.speed_mps == ref.speed);
    }
  }
}

TEST_CASE("sensor: radius and line-of-sight gate detections") {
  GridMap map = build_map(MapConfig{});
  MobilityConfig mcfg;
  World w(map, mcfg, 1);
  CpsConfig cfg;
  // ego on the horizontal road, one target in the clear, one too far, one
  // behind the intersection corner building
  w.spawn_manual({
      {{230.0, 248.25}, 0.0, 0.0, true},     // ego (id 1)
      {{310.0, 248.25}, 0.0, 0.0, false},    // 80 m ahead, clear (id 2)
      {{320.0, 248.25}, 0.0, 0.0, false},    // 90 m, outside radius (id 3)
      {{248.25, 190.0}, 270.0, 0.0, false},  // around the corner, blocked (id 4)
  });
  const Vec2 ego = w.find(1)->pos;
  CHECK(dist(ego, w.find(2)->pos) == doctest::Approx(80.0));
  CHECK(dist(ego, w.find(3)->pos) > 85.0);
  CHECK(dist(ego, w.find(4)->pos) < 85.0);
  CHECK_FALSE(map.line_of_sight(ego, w.find(4)->pos));

  auto sensed = sense(1, ego, w, map, cfg, from_ms(100));
  REQUIRE(sensed.size() == 1);
  CHECK(sensed[0].object_id == 2);
  CHECK(sensed[0].hop_count == 0);
  CHECK(sensed[0].measured_at == from_ms(100));
}

TEST_CASE("generation: mode-dependent candidate sets") {
  CpsConfig cfg;
  Lem lem;
  // local object (hop 0), remote at hop 1, remote at the limit (hop 2)
  lem.entries[10].object = obj(10, from_sec(1), 0);
  lem.entries[11].object = obj(11, from_sec(1), 1);
  lem.entries[12].object = obj(12, from_sec(1), 2);

  auto app = generate_cpm(99, {0, 0}, lem, CpsMode::AppForwarding, cfg, from_sec(1));
  CHECK(app.potential == 2);  // hop-2 object filtered by the hop bound
  REQUIRE(app.cpm.objects.size() == 2);
  CHECK(app.cpm.objects[0].object_id == 10);
  CHECK(app.cpm.objects[1].object_id == 11);

  auto base = generate_cpm(99, {0, 0}, lem, CpsMode::Baseline, cfg, from_sec(1));
  CHECK(base.potential == 1);  // locally sensed only
  CHECK(base.cpm.objects[0].object_id == 10);

  auto gbc = generate_cpm(99, {0, 0}, lem, CpsMode::GbcForwarding, cfg, from_sec(1));
  CHECK(gbc.potential == 1);  // GBC generation follows the ETSI rules
}

TEST_CASE("generation: wire cap at 128 objects, potential counts them all") {
  CpsConfig cfg;
  Lem lem;
  for (int i = 0; i < 150; ++i) lem.entries[i + 1000].object = obj(i + 1000, from_sec(1), 0);
  auto gen = generate_cpm(99, {0, 0}, lem, CpsMode::Baseline, cfg, from_sec(1));
  CHECK(gen.potential == 150);
  CHECK(gen.cpm.objects.size() == 128);
}

TEST_CASE("generation never includes the station itself") {
  CpsConfig cfg;
  Lem lem;
  lem.entries[99].object = obj(99, from_sec(1), 1);  // someone told us about us
  lem.entries[10].object = obj(10, from_sec(1), 0);
  auto gen = generate_cpm(99, {0, 0}, lem, CpsMode::AppForwarding, cfg, from_sec(1));
  CHECK(gen.potential == 1);
  CHECK(gen.cpm.objects[0].object_id == 10);
}

TEST_CASE("stale entries drop out of the model after the timeout") {
  CpsConfig cfg;  // timeout 1 s
  Lem lem;
  lem.entries[1].object = obj(1, 0, 0);
  lem.entries[2].object = obj(2, from_sec(3.5), 0);
  prune_stale(lem, from_sec(4), cfg);
  CHECK(lem.find(1) == nullptr);
  CHECK(lem.find(2) != nullptr);
}

TEST_CASE("service cycle: denied sends keep triggers armed; grants reset them") {
  CpsConfig cfg;
  CpsService svc(99, CpsMode::Baseline, cfg);
  svc.set_position({0, 0});

  std::vector<PerceivedObject> sensed = {obj(10, 0, 0, {5, 5}, 10.0, 0.0)};
  int sends = 0;
  bool allow = false;

  CpsService::CycleHooks hooks;
  hooks.sense = [&] {
    for (auto& o : sensed) o.measured_at += from_ms(100);
    return sensed;
  };
  hooks.dcc_allow = [&](SimTime) { return allow; };
  hooks.send = [&](const Cpm& cpm, SimTime) {
    ++sends;
    CHECK(cpm.objects.size() == 1);
  };

  svc.run_cycle(from_ms(100), hooks);  // denied
  CHECK(sends == 0);
  CHECK(svc.counters().denied == 1);

  allow = true;
  svc.run_cycle(from_ms(200), hooks);  // the same object is still triggered
  CHECK(sends == 1);
  CHECK(svc.counters().sent == 1);

  // object unchanged: nothing to send next cycle
  svc.run_cycle(from_ms(300), hooks);
  CHECK(sends == 1);
  CHECK(svc.counters().empty_cycles == 1);
}

static SimTime svc_now = 0;

TEST_CASE("service cycle: static neighbours re-announced at the lapse cadence") {
  CpsConfig cfg;
  CpsService svc(99, CpsMode::Baseline, cfg);
  svc.set_position({0, 0});
  std::vector<PerceivedObject> sensed = {obj(1, 0, 0, {10, 0}), obj(2, 0, 0, {0, 10}),
                                         obj(3, 0, 0, {10, 10})};
  std::vector<SimTime> send_times;
  CpsService::CycleHooks hooks;
  hooks.sense = [&] {
    for (auto& o : sensed) o.measured_at = svc_now;
    return sensed;
  };
  hooks.dcc_allow = [&](SimTime) { return true; };
  hooks.send = [&](const Cpm& cpm, SimTime t) {
    CHECK(cpm.objects.size() == 3);  // all three always re-included together
    send_times.push_back(t);
  };
  for (int k = 1; k <= 50; ++k) {
    svc_now = k * from_ms(100);
    svc.run_cycle(svc_now, hooks);
  }
  REQUIRE(send_times.size() >= 4);
  // every object is announced at least once per 1.1 s (the lapse rule seen
  // at a 100 ms cycle granularity)
  for (std::size_t i = 1; i < send_times.size(); ++i)
    CHECK(send_times[i] - send_times[i - 1] <= from_ms(1100));
}

TEST_CASE("reception buffers increment hop counts before the update") {
  CpsConfig cfg;
  CpsService svc(99, CpsMode::AppForwarding, cfg);
  svc.set_position({0, 0});
  Cpm wire;
  wire.sender_id = 5;
  wire.objects = {obj(10, from_ms(50), 0), obj(11, from_ms(50), 1)};
  svc.on_cpm_received(wire, from_ms(60));
  CpsService::CycleHooks hooks;
  hooks.sense = [] { return std::vector<PerceivedObject>{}; };
  hooks.dcc_allow = [](SimTime) { return false; };
  svc.run_cycle(from_ms(100), hooks);
  CHECK(svc.lem().find(10)->object.hop_count == 1);
  CHECK(svc.lem().find(11)->object.hop_count == 2);
}
