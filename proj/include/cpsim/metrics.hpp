#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cpsim/config.hpp"
#include "cpsim/core.hpp"
#include "cpsim/cps.hpp"
#include "cpsim/geometry.hpp"
#include "cpsim/mobility.hpp"

namespace cpsim {

struct EarSample {
  int station = 0;
  SimTime t = 0;
  int perceived = 0;
  int in_range = 0;
  bool defined() const { return in_range > 0; }
  double value() const { return static_cast<double>(perceived) / in_range; }
};

struct AoiSample {
  int receiver = 0;
  int object_id = 0;
  SimTime aoi = 0;
  int hop = 0;
};

struct CbrSample {
  int station = 0;
  SimTime t = 0;
  double cbr = 0.0;
};

struct PotentialSample {
  int station = 0;
  SimTime t = 0;
  int potential = 0;
  int wire = 0;
  bool granted = false;
};

struct GrantRecord {
  int station = 0;
  SimTime t = 0;
  SimTime gap = 0;      // time since the previous grant (large for the first)
  SimTime min_gap = 0;  // gap required by the DCC state in force
  double cbr = 0.0;
};

struct PacketCounters {
  std::uint64_t sent = 0;
  std::uint64_t forwarded = 0;
  std::uint64_t delivered = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t dropped_malformed = 0;
  std::uint64_t expired_relays = 0;
  std::uint64_t mac_dropped_full = 0;
  std::uint64_t mac_dropped_expired = 0;
  // service-level per-station tallies
  std::uint64_t cpms_generated = 0;
  std::uint64_t cpms_sent = 0;
  std::uint64_t cpms_denied = 0;
};

struct Violations {
  std::uint64_t hop_bound = 0;        // wire object at or above the hop limit
  std::uint64_t relay_chain = 0;      // relay attempted with no hops left
  std::uint64_t dcc_gate = 0;         // grant earlier than the state's min gap
  std::uint64_t lane_gap = 0;         // same-lane gap below 1 m
  std::uint64_t cbr_range = 0;        // CBR outside [0,1]
  std::uint64_t negative_aoi = 0;
  std::uint64_t ear_range = 0;        // perceived > in_range
  std::uint64_t total() const {
    return hop_bound + relay_chain + dcc_gate + lane_gap + cbr_range + negative_aoi +
           ear_range;
  }
};

// Fixed 1 ms bins, 0..5 s, plus an overflow bucket; enough resolution for
// every AOI statistic reported.
class AoiHistogram {
 public:
  static constexpr int kBins = 5000;

  void add(SimTime aoi_us) {
    ++count_;
    const std::int64_t bin = aoi_us / 1000;
    if (bin >= kBins)
      ++overflow_;
    else
      ++bins_[static_cast<int>(bin)];
  }

  void add_bin(int bin, std::uint64_t n) {
    count_ += n;
    if (bin >= kBins)
      overflow_ += n;
    else
      bins_[bin] += n;
  }

  std::uint64_t count() const { return count_; }
  std::uint64_t overflow() const { return overflow_; }
  const std::vector<std::uint64_t>& bins() const { return bins_; }

  void merge(const AoiHistogram& o) {
    for (int i = 0; i < kBins; ++i) bins_[i] += o.bins_[i];
    overflow_ += o.overflow_;
    count_ += o.count_;
  }

  // Upper edge (ms) of the bin holding the p-quantile.
  double quantile_ms(double p) const {
    if (count_ == 0) return std::nan("");
    const std::uint64_t target =
        static_cast<std::uint64_t>(std::ceil(p * static_cast<double>(count_)));
    std::uint64_t cum = 0;
    for (int i = 0; i < kBins; ++i) {
      cum += bins_[i];
      if (cum >= target) return i + 1.0;
    }
    return std::numeric_limits<double>::infinity();  // quantile in overflow
  }

  double fraction_below_ms(double ms) const {
    if (count_ == 0) return std::nan("");
    const int limit = std::min(kBins, static_cast<int>(ms));
    std::uint64_t cum = 0;
    for (int i = 0; i < limit; ++i) cum += bins_[i];
    return static_cast<double>(cum) / static_cast<double>(count_);
  }

 private:
  std::vector<std::uint64_t> bins_ = std::vector<std::uint64_t>(kBins, 0);
  std::uint64_t overflow_ = 0;
  std::uint64_t count_ = 0;
};

// Quantile with linear interpolation over a sorted copy.
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const double idx = p * (static_cast<double>(v.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(idx));
  const std::size_t hi = static_cast<std::size_t>(std::ceil(idx));
  const double w = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - w) + v[hi] * w;
}

// Environmental awareness of one station: objects inside the range of
// interest that are either freshly sensed or known through V2X data no older
// than the AOI limit. Locally sensed objects are fresh LEM entries, so a
// single freshness test covers both clauses.
inline EarSample compute_ear(int station_id, const Vec2& pos, const World& world,
                             const Lem& lem, const MetricsConfig& cfg, SimTime now) {
  EarSample s;
  s.station = station_id;
  s.t = now;
  const SimTime max_age = from_sec(cfg.max_aoi_s);
  world.for_each_within(pos, cfg.interest_radius_m, [&](const VehicleState& v) {
    if (v.id == station_id) return;
    ++s.in_range;
    const LemEntry* e = lem.find(v.id);
    if (e != nullptr && now - e->object.measured_at <= max_age) ++s.perceived;
  });
  return s;
}

// Ground-truth and reception traces for offline recomputation; populated
// only when metrics.record_debug_logs is on.
struct DebugLogs {
  struct PositionRow {
    SimTime t = 0;
    int id = 0;
    Vec2 pos;
    double speed_mps = 0.0;
    double heading_deg = 0.0;
    bool equipped = false;
  };
  struct ReceivedObj {
    int id = 0;
    SimTime measured_at = 0;
    int wire_hop = 0;
  };
  struct ReceptionRow {
    int receiver = 0;
    SimTime t = 0;
    std::vector<ReceivedObj> objects;  // as on the wire, before the increment
  };
  std::vector<PositionRow> positions;  // per mobility step
  std::vector<ReceptionRow> receptions;
  std::map<int, SimTime> first_cycle;  // station -> first cycle tick
};

class MetricsCollector {
 public:
  MetricsCollector() = default;
  MetricsCollector(const MetricsConfig& cfg, double map_extent_m, SimTime warmup)
      : cfg_(cfg), warmup_(warmup) {
    const double margin = (map_extent_m - cfg.region_m) / 2.0;
    region_ = Rect{margin, margin, map_extent_m - margin, map_extent_m - margin};
  }

  const Rect& region() const { return region_; }
  bool in_region(const Vec2& p) const { return region_.contains(p); }
  bool logging(SimTime now) const { return now >= warmup_; }

  void on_ear(const EarSample& s) {
    if (s.perceived > s.in_range) ++violations.ear_range;
    ear.push_back(s);
  }
  void on_cbr(const CbrSample& s) {
    if (s.cbr < 0.0 || s.cbr > 1.0) ++violations.cbr_range;
    cbr.push_back(s);
  }
  void on_potential(const PotentialSample& s) { potential.push_back(s); }
  void on_aoi(const AoiSample& s, bool keep_full) {
    if (s.aoi < 0) {
      ++violations.negative_aoi;
      return;
    }
    aoi_hist.add(s.aoi);
    if (keep_full) aoi_full.push_back(s);
  }
  void on_grant(const GrantRecord& g) {
    if (g.gap < g.min_gap) ++violations.dcc_gate;
    grants.push_back(g);
  }

  std::vector<EarSample> ear;
  std::vector<CbrSample> cbr;
  std::vector<PotentialSample> potential;
  AoiHistogram aoi_hist;
  std::vector<AoiSample> aoi_full;
  std::vector<GrantRecord> grants;
  std::map<int, PacketCounters> packets;
  Violations violations;
  DebugLogs debug;

 private:
  MetricsConfig cfg_;
  Rect region_;
  SimTime warmup_ = 0;
};

}  // namespace cpsim
