// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <thread>
#include <tuple>
#include <vector>

#include "cpsim/runresult.hpp"
#include "cpsim/sim.hpp"
#include "cpsim/sweep.hpp"
#include "support/offline_ear.hpp"
#include "support/reference_lem.hpp"

using namespace cpsim;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void report(const char* id, bool pass, const std::string& detail) {
  std::printf("[%s] %s - %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

ScenarioConfig paper_base() {
  ScenarioConfig cfg;  // defaults carry the published parameter set
  cfg.run.duration_s = 15.0;
  cfg.run.warmup_s = 1.0;  // exclude the cold-start transient from logging
  return cfg;
}

constexpr double kLowDensity = 30.0;
constexpr double kHighDensity = 60.0;

// ---------------------------------------------------------------------------
// Shared run registry: every scenario any criterion needs, reduced to the
// statistics the criteria consume. Runs execute in a small worker pool; each
// run is fully isolated.
// ---------------------------------------------------------------------------
struct RunKey {
  CpsMode mode;
  double density;
  double penetration;
  std::uint64_t seed;
  bool operator<(const RunKey& o) const {
    return std::tie(mode, density, penetration, seed) <
           std::tie(o.mode, o.density, o.penetration, o.seed);
  }
};

struct Reduced {
  std::vector<double> ear;
  std::uint64_t undefined_ear = 0;
  double cbr_sum = 0.0;
  std::size_t cbr_n = 0;
  AoiHistogram aoi;
  std::vector<double> potential;
  Violations violations;
  bool gate_ok = true;  // every grant >= min gap; cbr >= 0.65 implies >= 1 s
  std::uint64_t forwarded = 0;
  std::uint64_t cpms_sent = 0;
};

Reduced reduce(const RunResult& r) {
  Reduced d;
  for (const auto& s : r.ear) {
    if (s.defined())
      d.ear.push_back(s.value());
    else
      ++d.undefined_ear;
  }
  for (const auto& s : r.cbr) {
    d.cbr_sum += s.cbr;
    ++d.cbr_n;
  }
  d.aoi = r.aoi_hist;
  for (const auto& s : r.potential) d.potential.push_back(s.potential);
  d.violations = r.violations;
  for (const auto& g : r.grants) {
    if (g.gap < g.min_gap) d.gate_ok = false;
    if (g.cbr >= 0.65 && g.gap < from_sec(1.0)) d.gate_ok = false;
  }
  d.forwarded = r.packet_totals().forwarded;
  d.cpms_sent = r.cps_totals.sent;
  return d;
}

class Registry {
 public:
  const Reduced& get(CpsMode m, double density, double pen, std::uint64_t seed) const {
    return runs_.at(RunKey{m, density, pen, seed});
  }

  double phase_sweep_seconds = 0.0;  // wall time of the hop-bound sweep subset

  static Registry& instance() {
    static Registry r = build();
    return r;
  }

 private:
  std::map<RunKey, Reduced> runs_;

  void run_batch(const std::vector<RunKey>& keys) {
    std::vector<RunKey> todo;
    for (const auto& k : keys)
      if (!runs_.count(k)) todo.push_back(k);
    std::vector<std::optional<Reduced>> slot(todo.size());
    std::atomic<std::size_t> next{0};
    const unsigned jobs = std::max(2u, std::thread::hardware_concurrency());
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= todo.size()) return;
        ScenarioConfig cfg = paper_base();
        cfg.run.mode = todo[i].mode;
        cfg.mobility.density_veh_per_km = todo[i].density;
        cfg.mobility.penetration = todo[i].penetration;
        cfg.run.seed = todo[i].seed;
        slot[i] = reduce(run_scenario(cfg));
      }
    };
    std::vector<std::thread> pool;
    for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < todo.size(); ++i) runs_.emplace(todo[i], std::move(*slot[i]));
  }

  static Registry build() {
    Registry r;
    const std::vector<std::uint64_t> seeds3{1, 2, 3};
    const std::vector<std::uint64_t> seeds10{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const std::vector<CpsMode> all_modes{CpsMode::Baseline, CpsMode::AppForwarding,
                                         CpsMode::GbcForwarding};

    // hop-bound sweep subset (criterion 2), timed separately:
    // 3 modes x 1 density x 2 penetrations x 3 seeds
    std::vector<RunKey> sweep_keys;
    for (CpsMode m : all_modes)
      for (double pen : {0.10, 0.25})
        for (auto s : seeds3) sweep_keys.push_back({m, kLowDensity, pen, s});
    const auto t0 = std::chrono::steady_clock::now();
    r.run_batch(sweep_keys);
    r.phase_sweep_seconds = seconds_since(t0);

    // remaining union for the trend criteria
    std::vector<RunKey> rest;
    for (CpsMode m : {CpsMode::Baseline, CpsMode::AppForwarding})
      for (auto s : seeds10) rest.push_back({m, kLowDensity, 0.10, s});
    for (CpsMode m : all_modes)
      for (double pen : {0.05, 0.10, 0.25, 0.50})
        for (auto s : seeds3) rest.push_back({m, kHighDensity, pen, s});
    r.run_batch(rest);
    return r;
  }
};

std::vector<double> pooled_ear(const Registry& reg, CpsMode m, double density,
                               double pen, const std::vector<std::uint64_t>& seeds) {
  std::vector<double> v;
  for (auto s : seeds) {
    const auto& d = reg.get(m, density, pen, s);
    v.insert(v.end(), d.ear.begin(), d.ear.end());
  }
  return v;
}

double pooled_cbr_mean(const Registry& reg, CpsMode m, double density, double pen,
                       const std::vector<std::uint64_t>& seeds) {
  double sum = 0.0;
  std::size_t n = 0;
  for (auto s : seeds) {
    const auto& d = reg.get(m, density, pen, s);
    sum += d.cbr_sum;
    n += d.cbr_n;
  }
  return n > 0 ? sum / static_cast<double>(n) : std::nan("");
}

AoiHistogram pooled_aoi(const Registry& reg, CpsMode m, double pen,
                        const std::vector<double>& densities,
                        const std::vector<std::uint64_t>& seeds) {
  AoiHistogram h;
  for (double density : densities)
    for (auto s : seeds) h.merge(reg.get(m, density, pen, s).aoi);
  return h;
}

std::vector<double> pooled_potential(const Registry& reg, CpsMode m, double density,
                                     double pen,
                                     const std::vector<std::uint64_t>& seeds) {
  std::vector<double> v;
  for (auto s : seeds) {
    const auto& d = reg.get(m, density, pen, s);
    v.insert(v.end(), d.potential.begin(), d.potential.end());
  }
  return v;
}

// Line topology used by criterion 3 (same layout as the integration tests).
ScenarioConfig line_config(CpsMode mode) {
  ScenarioConfig cfg;
  cfg.run.mode = mode;
  cfg.run.duration_s = 5.0;
  cfg.run.seed = 42;
  cfg.map.grid_n = 1;
  cfg.map.extent_m = 2500.0;
  cfg.radio.pathloss_exponent = 2.0;  // distances below assume free-space-like decay
  cfg.radio.per_wall_loss_db = 15.0;
  cfg.metrics.aoi_export = AoiExport::Full;
  const double y = 1248.25;
  cfg.manual_vehicles = {
      {{50.0, y}, 0.0, 0.0, false},   // O  id 1
      {{60.0, y}, 0.0, 0.0, true},    // A  id 2
      {{240.0, y}, 0.0, 0.0, true},   // B  id 3
      {{1120.0, y}, 0.0, 0.0, true},  // C  id 4
  };
  return cfg;
}

}  // namespace

// ---------------------------------------------------------------------------
// C1: literal-update oracle equivalence, 1000 randomized CPM sequences
// ---------------------------------------------------------------------------
TEST_CASE("C1 lem_update equals the reference interpreter") {
  const auto t0 = std::chrono::steady_clock::now();
  CpsConfig cfg;
  RngStream rng(31337, Stream::Spawn);
  std::uint64_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int n_cpms = 1 + static_cast<int>(rng.uniform_int(50));
    std::vector<refmodel::RefCpm> ref_seq;
    std::vector<Cpm> lib_seq;
    for (int c = 0; c < n_cpms; ++c) {
      refmodel::RefCpm rc;
      Cpm lc;
      const int n_obj = 1 + static_cast<int>(rng.uniform_int(10));
      for (int k = 0; k < n_obj; ++k) {
        refmodel::RefObject ro;
        ro.id = static_cast<int>(rng.uniform_int(20));
        ro.timestamp = static_cast<long long>(rng.uniform_int(1000000));
        ro.hop = static_cast<int>(rng.uniform_int(4));
        ro.x = rng.uniform(0, 1000);
        rc.objects.push_back(ro);
        PerceivedObject o;
        o.object_id = ro.id;
        o.measured_at = ro.timestamp;
        o.hop_count = ro.hop;
        o.pos = {ro.x, 0};
        lc.objects.push_back(o);
      }
      ref_seq.push_back(rc);
      lib_seq.push_back(lc);
    }
    const auto expected = refmodel::run_literal(ref_seq, cfg.max_hop);
    Lem lem;
    std::size_t i = 0;
    while (i < lib_seq.size()) {
      const std::size_t batch = 1 + rng.uniform_int(6);
      std::vector<Cpm> chunk(lib_seq.begin() + i,
                             lib_seq.begin() + std::min(lib_seq.size(), i + batch));
      lem_update(lem, chunk, cfg.max_hop, LemUpdateMode::Literal);
      i += batch;
    }
    bool equal = lem.entries.size() == expected.size();
    if (equal) {
      for (const auto& [id, ref] : expected) {
        const LemEntry* e = lem.find(id);
        if (e == nullptr || e->object.measured_at != ref.timestamp ||
            e->object.hop_count != ref.hop || e->object.pos.x != ref.x) {
          equal = false;
          break;
        }
      }
    }
    if (!equal) ++mismatches;
  }
  const double secs = seconds_since(t0);
  const bool pass = mismatches == 0 && secs < 10.0;
  report("C1", pass,
         "oracle equivalence over 1000 sequences: " + std::to_string(mismatches) +
             " mismatches, " + std::to_string(secs) + " s");
  CHECK(mismatches == 0);
  CHECK(secs < 10.0);
}

// ---------------------------------------------------------------------------
// C2: hop bound property over the reduced sweep
// ---------------------------------------------------------------------------
TEST_CASE("C2 hop bounds hold across the reduced sweep") {
  const Registry& reg = Registry::instance();
  std::uint64_t hop_violations = 0, chain_violations = 0, forwarded = 0;
  for (CpsMode m : {CpsMode::Baseline, CpsMode::AppForwarding, CpsMode::GbcForwarding}) {
    for (double pen : {0.10, 0.25}) {
      for (std::uint64_t s : {1ull, 2ull, 3ull}) {
        const Reduced& d = reg.get(m, kLowDensity, pen, s);
        hop_violations += d.violations.hop_bound;
        chain_violations += d.violations.relay_chain;
        if (m == CpsMode::GbcForwarding) forwarded += d.forwarded;
      }
    }
  }
  const bool pass = hop_violations == 0 && chain_violations == 0;
  std::ostringstream os;
  os << "0 required: " << hop_violations << " over-limit objects, " << chain_violations
     << " over-length relay chains (" << forwarded << " GBC relays exercised); sweep took "
     << reg.phase_sweep_seconds << " s";
  report("C2", pass, os.str());
  CHECK(hop_violations == 0);
  CHECK(chain_violations == 0);
  CHECK(forwarded > 0);  // the property was not vacuous
}

// ---------------------------------------------------------------------------
// C3: three-node line topology, exact behaviour per mode
// ---------------------------------------------------------------------------
TEST_CASE("C3 line topology: who learns what, and how fresh") {
  constexpr int kO = 1, kC = 4;
  bool base_ok = false, app_ok = false, gbc_ok = false;

  {
    Simulation sim(line_config(CpsMode::Baseline));
    sim.run();
    const CpsService* c = sim.station_cps(kC);
    base_ok = c != nullptr && c->lem().find(kO) == nullptr;
  }
  {
    Simulation sim(line_config(CpsMode::AppForwarding));
    RunResult r = sim.run();
    const CpsService* c = sim.station_cps(kC);
    bool fresh = false;
    for (const auto& s : r.aoi_full)
      if (s.receiver == kC && s.object_id == kO && s.aoi < from_sec(1)) fresh = true;
    app_ok = c != nullptr && c->lem().find(kO) != nullptr && fresh;
  }
  {
    Simulation sim(line_config(CpsMode::GbcForwarding));
    RunResult r = sim.run();
    const CpsService* c = sim.station_cps(kC);
    bool fresh = false;
    for (const auto& s : r.aoi_full)
      if (s.receiver == kC && s.object_id == kO && s.aoi < from_sec(1)) fresh = true;
    gbc_ok = c != nullptr && c->lem().find(kO) != nullptr && fresh &&
             r.packet_totals().forwarded >= 1;
  }

  const bool pass = base_ok && app_ok && gbc_ok;
  std::ostringstream os;
  os << "baseline isolates C (" << (base_ok ? "ok" : "broken") << "), app forwards ("
     << (app_ok ? "ok" : "broken") << "), gbc relays (" << (gbc_ok ? "ok" : "broken")
     << ")";
  report("C3", pass, os.str());
  CHECK(base_ok);
  CHECK(app_ok);
  CHECK(gbc_ok);
}

// ---------------------------------------------------------------------------
// C4: EAR trend at low density, 10% penetration, 10 seeds
// ---------------------------------------------------------------------------
TEST_CASE("C4 forwarding lifts awareness at low penetration") {
  const Registry& reg = Registry::instance();
  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  const double app_median =
      quantile(pooled_ear(reg, CpsMode::AppForwarding, kLowDensity, 0.10, seeds), 0.5);
  const double base_median =
      quantile(pooled_ear(reg, CpsMode::Baseline, kLowDensity, 0.10, seeds), 0.5);

  int ordered_seeds = 0;
  for (auto s : seeds) {
    const double a = quantile(reg.get(CpsMode::AppForwarding, kLowDensity, 0.10, s).ear, 0.5);
    const double b = quantile(reg.get(CpsMode::Baseline, kLowDensity, 0.10, s).ear, 0.5);
    if (b < a) ++ordered_seeds;
  }

  const bool pass =
      app_median >= 0.98 && (app_median - base_median) >= 0.03 && ordered_seeds >= 8;
  std::ostringstream os;
  os.precision(4);
  os << "median EAR app=" << app_median << " baseline=" << base_median << " gap="
     << (app_median - base_median) << ", ordering holds in " << ordered_seeds
     << "/10 seeds";
  report("C4", pass, os.str());
  CHECK(app_median >= 0.98);
  CHECK(app_median - base_median >= 0.03);
  CHECK(ordered_seeds >= 8);
}

// ---------------------------------------------------------------------------
// C5: CBR ordering at high density across all penetrations
// ---------------------------------------------------------------------------
TEST_CASE("C5 channel load orders GBC >= app-forwarding >= baseline") {
  const Registry& reg = Registry::instance();
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  int strict = 0;
  bool ordered_everywhere = true;
  std::ostringstream os;
  os.precision(4);
  for (double pen : {0.05, 0.10, 0.25, 0.50}) {
    const double gbc = pooled_cbr_mean(reg, CpsMode::GbcForwarding, kHighDensity, pen, seeds);
    const double app = pooled_cbr_mean(reg, CpsMode::AppForwarding, kHighDensity, pen, seeds);
    const double base = pooled_cbr_mean(reg, CpsMode::Baseline, kHighDensity, pen, seeds);
    os << " pen=" << pen << ": gbc=" << gbc << " app=" << app << " base=" << base << ";";
    if (!(gbc >= app && app >= base)) ordered_everywhere = false;
    if (gbc > app && app > base) ++strict;
  }
  const bool pass = ordered_everywhere && strict >= 3;
  report("C5", pass, "mean CBR per penetration:" + os.str() + " strict at " +
                         std::to_string(strict) + "/4");
  CHECK(ordered_everywhere);
  CHECK(strict >= 3);
}

// ---------------------------------------------------------------------------
// C6: AOI ordering and scale, pooled at 25% penetration
// ---------------------------------------------------------------------------
TEST_CASE("C6 information age orders baseline < app-forwarding < GBC") {
  const Registry& reg = Registry::instance();
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const std::vector<double> densities{kLowDensity, kHighDensity};

  const AoiHistogram base = pooled_aoi(reg, CpsMode::Baseline, 0.25, densities, seeds);
  const AoiHistogram app = pooled_aoi(reg, CpsMode::AppForwarding, 0.25, densities, seeds);
  const AoiHistogram gbc = pooled_aoi(reg, CpsMode::GbcForwarding, 0.25, densities, seeds);

  const double m_base = base.quantile_ms(0.5);
  const double m_app = app.quantile_ms(0.5);
  const double m_gbc = gbc.quantile_ms(0.5);
  const double under200 = app.fraction_below_ms(200.0);

  const bool ordering = m_base < m_app && m_app < m_gbc;
  const bool scale = m_base <= 100.0 && m_app <= 150.0 && under200 >= 0.70;
  const bool pass = ordering && scale;
  std::ostringstream os;
  os.precision(4);
  os << "median AOI ms: baseline=" << m_base << " app=" << m_app << " gbc=" << m_gbc
     << "; app under 200 ms: " << under200;
  report("C6", pass, os.str());
  CHECK(m_base < m_app);
  CHECK(m_app < m_gbc);
  CHECK(m_base <= 100.0);
  CHECK(m_app <= 150.0);
  CHECK(under200 >= 0.70);
}

// ---------------------------------------------------------------------------
// C7: potential objects per CPM, 25% penetration, both densities
// ---------------------------------------------------------------------------
TEST_CASE("C7 forwarding grows the potential object container") {
  const Registry& reg = Registry::instance();
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  bool pass = true;
  std::ostringstream os;
  os.precision(4);
  for (double density : {kLowDensity, kHighDensity}) {
    const double app =
        quantile(pooled_potential(reg, CpsMode::AppForwarding, density, 0.25, seeds), 0.5);
    const double base =
        quantile(pooled_potential(reg, CpsMode::Baseline, density, 0.25, seeds), 0.5);
    os << " density=" << density << ": app=" << app << " baseline=" << base << ";";
    if (!(app > base)) pass = false;
  }
  report("C7", pass, "median potential objects:" + os.str());
  CHECK(pass);
}

// ---------------------------------------------------------------------------
// C8: DCC gate property over every run executed by this suite
// ---------------------------------------------------------------------------
TEST_CASE("C8 every grant respects the gate in force") {
  const Registry& reg = Registry::instance();
  std::uint64_t gate_violations = 0;
  std::uint64_t runs_checked = 0;
  bool grant_rule_ok = true;
  for (CpsMode m : {CpsMode::Baseline, CpsMode::AppForwarding, CpsMode::GbcForwarding}) {
    for (double pen : {0.05, 0.10, 0.25, 0.50}) {
      for (std::uint64_t s : {1ull, 2ull, 3ull}) {
        const Reduced& d = reg.get(m, kHighDensity, pen, s);
        gate_violations += d.violations.dcc_gate;
        grant_rule_ok = grant_rule_ok && d.gate_ok;
        ++runs_checked;
      }
    }
    for (double pen : {0.10, 0.25}) {
      for (std::uint64_t s : {1ull, 2ull, 3ull}) {
        const Reduced& d = reg.get(m, kLowDensity, pen, s);
        gate_violations += d.violations.dcc_gate;
        grant_rule_ok = grant_rule_ok && d.gate_ok;
        ++runs_checked;
      }
    }
  }
  const bool pass = gate_violations == 0 && grant_rule_ok;
  report("C8", pass,
         std::to_string(runs_checked) + " runs checked, " +
             std::to_string(gate_violations) +
             " gate violations; saturated-window one-per-second rule " +
             (grant_rule_ok ? "held" : "broken"));
  CHECK(gate_violations == 0);
  CHECK(grant_rule_ok);
}

// ---------------------------------------------------------------------------
// C9: byte-identical exports for identical config + seed
// ---------------------------------------------------------------------------
TEST_CASE("C9 repeated runs export byte-identical CSVs") {
  ScenarioConfig cfg = paper_base();
  cfg.run.mode = CpsMode::AppForwarding;
  cfg.mobility.density_veh_per_km = kLowDensity;
  cfg.mobility.penetration = 0.10;
  cfg.run.seed = 7;

  RunResult a = run_scenario(cfg);
  RunResult b = run_scenario(cfg);
  bool identical = true;
  for (const auto& [metric, text] : export_csvs(a)) {
    const auto other = export_csvs(b);
    if (other.at(metric) != text) identical = false;
  }
  report("C9", identical, "all six CSV exports byte-identical across repeated runs");
  CHECK(identical);
}

// ---------------------------------------------------------------------------
// C10: online EAR equals the offline recomputation exactly
// ---------------------------------------------------------------------------
TEST_CASE("C10 offline recomputation reproduces every EAR sample") {
  std::uint64_t compared = 0, mismatched = 0;
  for (CpsMode mode :
       {CpsMode::Baseline, CpsMode::AppForwarding, CpsMode::GbcForwarding}) {
    ScenarioConfig cfg = paper_base();
    cfg.run.mode = mode;
    cfg.mobility.density_veh_per_km = kLowDensity;
    cfg.mobility.penetration = 0.25;
    cfg.run.seed = 9;
    cfg.metrics.record_debug_logs = true;

    RunResult r = run_scenario(cfg);
    const auto offline_samples = offline::replay_ear(r, cfg);

    std::map<std::pair<int, SimTime>, std::pair<int, int>> offline_map;
    for (const auto& s : offline_samples)
      offline_map[{s.station, s.t}] = {s.perceived, s.in_range};

    if (offline_samples.size() != r.ear.size()) ++mismatched;
    for (const auto& s : r.ear) {
      ++compared;
      auto it = offline_map.find({s.station, s.t});
      if (it == offline_map.end() || it->second.first != s.perceived ||
          it->second.second != s.in_range)
        ++mismatched;
    }
  }
  const bool pass = mismatched == 0 && compared > 0;
  report("C10", pass,
         std::to_string(compared) + " samples compared across 3 runs, " +
             std::to_string(mismatched) + " mismatches");
  CHECK(mismatched == 0);
  CHECK(compared > 0);
}
