#pragma once

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "cpsim/config.hpp"
#include "cpsim/metrics.hpp"
#include "cpsim/radio.hpp"

namespace cpsim {

struct ServiceTotals {
  std::uint64_t cycles = 0;
  std::uint64_t generated = 0;
  std::uint64_t sent = 0;
  std::uint64_t denied = 0;
  std::uint64_t empty_cycles = 0;
  std::uint64_t received_cpms = 0;
};

struct RunResult {
  std::string config_echo;
  CpsMode mode = CpsMode::Baseline;
  double density = 0.0;
  double penetration = 0.0;
  std::uint64_t seed = 0;
  SimTime final_clock = 0;
  int stations_seen = 0;

  std::vector<EarSample> ear;
  std::vector<CbrSample> cbr;
  std::vector<PotentialSample> potential;
  AoiHistogram aoi_hist;
  std::vector<AoiSample> aoi_full;
  std::vector<GrantRecord> grants;
  std::map<int, PacketCounters> packets;
  ChannelCounters channel;
  ServiceTotals cps_totals;
  Violations violations;
  std::uint64_t max_dup_table = 0;
  DebugLogs debug;

  PacketCounters packet_totals() const {
    PacketCounters t;
    for (const auto& [id, p] : packets) {
      t.sent += p.sent;
      t.forwarded += p.forwarded;
      t.delivered += p.delivered;
      t.duplicates += p.duplicates;
      t.dropped_malformed += p.dropped_malformed;
      t.expired_relays += p.expired_relays;
      t.mac_dropped_full += p.mac_dropped_full;
      t.mac_dropped_expired += p.mac_dropped_expired;
    }
    return t;
  }
};

namespace csvdetail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(9);
  os << v;
  return os.str();
}

inline void echo_comment(std::ostringstream& os, const std::string& echo) {
  os << "# resolved configuration\n";
  std::istringstream in(echo);
  std::string line;
  while (std::getline(in, line)) os << "# " << line << "\n";
}

inline std::string prefix(const RunResult& r) {
  std::ostringstream os;
  os << to_string(r.mode) << ',' << fmt(r.density) << ',' << fmt(r.penetration) << ','
     << r.seed;
  return os.str();
}

}  // namespace csvdetail

inline std::string ear_csv(const RunResult& r, bool with_echo = true) {
  std::ostringstream os;
  if (with_echo) csvdetail::echo_comment(os, r.config_echo);
  os << "mode,density,penetration,seed,station,t_us,perceived,in_range,ear\n";
  const std::string pre = csvdetail::prefix(r);
  for (const auto& s : r.ear) {
    os << pre << ',' << s.station << ',' << s.t << ',' << s.perceived << ','
       << s.in_range << ',';
    if (s.defined()) os << csvdetail::fmt(s.value());
    os << "\n";
  }
  return os.str();
}

inline std::string cbr_csv(const RunResult& r, bool with_echo = true) {
  std::ostringstream os;
  if (with_echo) csvdetail::echo_comment(os, r.config_echo);
  os << "mode,density,penetration,seed,station,t_us,cbr\n";
  const std::string pre = csvdetail::prefix(r);
  for (const auto& s : r.cbr)
    os << pre << ',' << s.station << ',' << s.t << ',' << csvdetail::fmt(s.cbr) << "\n";
  return os.str();
}

inline std::string potential_csv(const RunResult& r, bool with_echo = true) {
  std::ostringstream os;
  if (with_echo) csvdetail::echo_comment(os, r.config_echo);
  os << "mode,density,penetration,seed,station,t_us,potential,wire,granted\n";
  const std::string pre = csvdetail::prefix(r);
  for (const auto& s : r.potential)
    os << pre << ',' << s.station << ',' << s.t << ',' << s.potential << ',' << s.wire
       << ',' << (s.granted ? 1 : 0) << "\n";
  return os.str();
}

// Histogram form: one row per non-empty 1 ms bin.
inline std::string aoi_csv(const RunResult& r, bool with_echo = true) {
  std::ostringstream os;
  if (with_echo) csvdetail::echo_comment(os, r.config_echo);
  const std::string pre = csvdetail::prefix(r);
  if (!r.aoi_full.empty()) {
    os << "mode,density,penetration,seed,receiver,object,aoi_us,hop\n";
    for (const auto& s : r.aoi_full)
      os << pre << ',' << s.receiver << ',' << s.object_id << ',' << s.aoi << ','
         << s.hop << "\n";
  } else {
    os << "mode,density,penetration,seed,bin_ms,count\n";
    const auto& bins = r.aoi_hist.bins();
    for (std::size_t i = 0; i < bins.size(); ++i)
      if (bins[i] > 0) os << pre << ',' << i << ',' << bins[i] << "\n";
    if (r.aoi_hist.overflow() > 0)
      os << pre << ",overflow," << r.aoi_hist.overflow() << "\n";
  }
  return os.str();
}

inline std::string packets_csv(const RunResult& r, bool with_echo = true) {
  std::ostringstream os;
  if (with_echo) csvdetail::echo_comment(os, r.config_echo);
  os << "mode,density,penetration,seed,station,sent,forwarded,delivered,duplicates,"
        "malformed,expired_relays,mac_dropped_full,mac_dropped_expired\n";
  const std::string pre = csvdetail::prefix(r);
  for (const auto& [id, p] : r.packets)
    os << pre << ',' << id << ',' << p.sent << ',' << p.forwarded << ',' << p.delivered
       << ',' << p.duplicates << ',' << p.dropped_malformed << ',' << p.expired_relays
       << ',' << p.mac_dropped_full << ',' << p.mac_dropped_expired << "\n";
  return os.str();
}

inline std::string dcc_csv(const RunResult& r, bool with_echo = true) {
  std::ostringstream os;
  if (with_echo) csvdetail::echo_comment(os, r.config_echo);
  os << "mode,density,penetration,seed,station,t_us,gap_us,min_gap_us,cbr\n";
  const std::string pre = csvdetail::prefix(r);
  for (const auto& g : r.grants)
    os << pre << ',' << g.station << ',' << g.t << ',' << g.gap << ',' << g.min_gap
       << ',' << csvdetail::fmt(g.cbr) << "\n";
  return os.str();
}

// Every export the run produces, keyed by metric name.
inline std::map<std::string, std::string> export_csvs(const RunResult& r) {
  return {
      {"ear", ear_csv(r)},       {"cbr", cbr_csv(r)},
      {"aoi", aoi_csv(r)},       {"potential", potential_csv(r)},
      {"packets", packets_csv(r)}, {"dcc", dcc_csv(r)},
  };
}

}  // namespace cpsim
