#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpsim/geometry.hpp"

namespace cpsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class CpsMode { Baseline, AppForwarding, GbcForwarding };
enum class DensityBasis { RoadKm, LaneKm };
enum class GbcAlgorithm { Cbf, Flood };
enum class LemUpdateMode { Auto, Literal, Freshest };
enum class AoiExport { Histogram, Full };

inline const char* to_string(CpsMode m) {
  switch (m) {
    case CpsMode::Baseline: return "baseline";
    case CpsMode::AppForwarding: return "app-forwarding";
    case CpsMode::GbcForwarding: return "gbc";
  }
  return "?";
}

struct RunConfig {
  CpsMode mode = CpsMode::Baseline;
  double duration_s = 15.0;
  double warmup_s = 0.0;
  std::uint64_t seed = 1;
};

struct MapConfig {
  int grid_n = 3;
  double extent_m = 1000.0;
  double spacing_m = 0.0;  // 0 = derive as extent / (grid_n + 1)
  int lanes_per_direction = 2;
  double lane_width_m = 3.5;
  double building_setback_m = 8.0;
};

struct MobilityConfig {
  double density_veh_per_km = 30.0;
  DensityBasis density_basis = DensityBasis::LaneKm;
  double penetration = 0.10;
  double desired_speed_mps = 13.9;
  double speed_spread = 0.10;  // per-vehicle uniform +/- fraction
  double step_s = 0.1;
  double min_gap_m = 2.0;
  double spawn_clearance_m = 8.0;
  // Traffic is stepped this long before the clock starts so the run begins
  // from steady-state flow rather than a uniform cold spread. Ignored for
  // fixed vehicle placements.
  double preroll_s = 60.0;
};

struct RadioConfig {
  double tx_power_dbm = 23.0;  // 200 mW
  std::int64_t bitrate_bps = 6000000;
  double carrier_freq_ghz = 5.9;
  double sense_threshold_dbm = -85.0;
  double decode_floor_dbm = -85.0;
  double noise_floor_dbm = -65.0;    // tolerated interference ceiling
  double thermal_noise_dbm = -99.0;  // ambient term in the capture sum
  double capture_margin_db = 10.0;
  std::int64_t preamble_us = 40;
  double per_wall_loss_db = 15.0;
  double pathloss_exponent = 2.5;
  int frame_overhead_bytes = 120;
  int bytes_per_object = 35;
  int mac_queue_frames = 4;
  std::int64_t aifs_us = 58;
  std::int64_t slot_us = 13;
  int contention_window = 15;
};

struct GeonetConfig {
  double gbc_radius_m = 200.0;
  double gbc_lifetime_s = 1.0;
  int gbc_hop_limit = 2;
  GbcAlgorithm algorithm = GbcAlgorithm::Cbf;
  double cbf_tmax_ms = 100.0;
  double cbf_jitter_ms = 1.0;
};

struct DccConfig {
  bool enabled = true;
  // Lower-inclusive CBR bands: state i applies while cbr < threshold[i].
  double th_relaxed = 0.30;
  double th_active1 = 0.40;
  double th_active2 = 0.50;
  double th_active3 = 0.65;
  double gap_relaxed_ms = 100.0;
  double gap_active1_ms = 200.0;
  double gap_active2_ms = 400.0;
  double gap_active3_ms = 500.0;
  double gap_restrictive_ms = 1000.0;
  bool two_sample_average = false;
};

struct CpsConfig {
  double period_s = 0.1;
  double sensor_radius_m = 85.0;
  int max_hop = 2;
  double pos_threshold_m = 4.0;
  double speed_threshold_mps = 4.0;
  double heading_threshold_deg = 4.0;
  double lapse_s = 1.0;
  int max_objects = 128;
  LemUpdateMode lem_update = LemUpdateMode::Auto;
  // Entries never refreshed within this horizon leave the model. Matching
  // the awareness AOI limit keeps hop-limited entries re-insertable the
  // moment they stop counting as perceived.
  double lem_timeout_s = 1.0;
};

struct MetricsConfig {
  double region_m = 900.0;
  double interest_radius_m = 200.0;
  double max_aoi_s = 1.0;
  double sample_period_s = 0.1;
  AoiExport aoi_export = AoiExport::Histogram;
  bool record_debug_logs = false;
};

struct ManualVehicle {
  Vec2 pos;
  double heading_deg = 0.0;
  double speed_mps = 0.0;
  bool equipped = false;
};

struct ScenarioConfig {
  RunConfig run;
  MapConfig map;
  MobilityConfig mobility;
  RadioConfig radio;
  GeonetConfig geonet;
  DccConfig dcc;
  CpsConfig cps;
  MetricsConfig metrics;
  // Non-empty list replaces random spawning entirely (fixed-topology runs).
  std::vector<ManualVehicle> manual_vehicles;

  double resolved_spacing() const {
    return map.spacing_m > 0.0 ? map.spacing_m : map.extent_m / (map.grid_n + 1);
  }
  LemUpdateMode resolved_lem_update() const {
    if (cps.lem_update != LemUpdateMode::Auto) return cps.lem_update;
    return run.mode == CpsMode::AppForwarding ? LemUpdateMode::Literal
                                              : LemUpdateMode::Freshest;
  }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Key registry: one entry per configuration key, shared by the file parser,
// the environment overlay, command-line overrides and the provenance echo.
// ---------------------------------------------------------------------------
namespace cfgdetail {

inline double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("invalid numeric value '" + v + "' for key " + key);
  }
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    std::int64_t i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ConfigError("invalid integer value '" + v + "' for key " + key);
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("invalid boolean value '" + v + "' for key " + key);
}

inline std::string fmt_double(double d) {
  std::ostringstream os;
  os.precision(12);
  os << d;
  return os.str();
}

struct KeySpec {
  std::string key;  // "section.name"
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

inline std::vector<KeySpec> make_registry() {
  std::vector<KeySpec> r;
  auto add = [&r](const char* key, auto setter, auto getter) {
    r.push_back({key, setter, getter});
  };
#define CPSIM_KEY_D(KEY, FIELD)                                                       \
  add(KEY, [](ScenarioConfig& c, const std::string& v) { c.FIELD = parse_double(KEY, v); }, \
      [](const ScenarioConfig& c) { return fmt_double(c.FIELD); })
#define CPSIM_KEY_I(KEY, FIELD, TYPE)                                                 \
  add(KEY,                                                                            \
      [](ScenarioConfig& c, const std::string& v) {                                   \
        c.FIELD = static_cast<TYPE>(parse_int(KEY, v));                               \
      },                                                                              \
      [](const ScenarioConfig& c) { return std::to_string(c.FIELD); })
#define CPSIM_KEY_B(KEY, FIELD)                                                       \
  add(KEY, [](ScenarioConfig& c, const std::string& v) { c.FIELD = parse_bool(KEY, v); },   \
      [](const ScenarioConfig& c) { return c.FIELD ? std::string("true") : std::string("false"); })

  // run
  add("run.mode",
      [](ScenarioConfig& c, const std::string& v) {
        if (v == "baseline") c.run.mode = CpsMode::Baseline;
        else if (v == "app-forwarding") c.run.mode = CpsMode::AppForwarding;
        else if (v == "gbc") c.run.mode = CpsMode::GbcForwarding;
        else throw ConfigError("run.mode must be one of: baseline, app-forwarding, gbc");
      },
      [](const ScenarioConfig& c) { return std::string(to_string(c.run.mode)); });
  CPSIM_KEY_D("run.duration_s", run.duration_s);
  CPSIM_KEY_D("run.warmup_s", run.warmup_s);
  CPSIM_KEY_I("run.seed", run.seed, std::uint64_t);

  // map
  CPSIM_KEY_I("map.grid_n", map.grid_n, int);
  CPSIM_KEY_D("map.extent_m", map.extent_m);
  CPSIM_KEY_D("map.spacing_m", map.spacing_m);
  CPSIM_KEY_I("map.lanes_per_direction", map.lanes_per_direction, int);
  CPSIM_KEY_D("map.lane_width_m", map.lane_width_m);
  CPSIM_KEY_D("map.building_setback_m", map.building_setback_m);

  // mobility
  CPSIM_KEY_D("mobility.density_veh_per_km", mobility.density_veh_per_km);
  add("mobility.density_basis",
      [](ScenarioConfig& c, const std::string& v) {
        if (v == "road_km") c.mobility.density_basis = DensityBasis::RoadKm;
        else if (v == "lane_km") c.mobility.density_basis = DensityBasis::LaneKm;
        else throw ConfigError("mobility.density_basis must be road_km or lane_km");
      },
      [](const ScenarioConfig& c) {
        return std::string(c.mobility.density_basis == DensityBasis::RoadKm ? "road_km"
                                                                            : "lane_km");
      });
  CPSIM_KEY_D("mobility.penetration", mobility.penetration);
  CPSIM_KEY_D("mobility.desired_speed_mps", mobility.desired_speed_mps);
  CPSIM_KEY_D("mobility.speed_spread", mobility.speed_spread);
  CPSIM_KEY_D("mobility.step_s", mobility.step_s);
  CPSIM_KEY_D("mobility.min_gap_m", mobility.min_gap_m);
  CPSIM_KEY_D("mobility.spawn_clearance_m", mobility.spawn_clearance_m);
  CPSIM_KEY_D("mobility.preroll_s", mobility.preroll_s);

  // radio
  CPSIM_KEY_D("radio.tx_power_dbm", radio.tx_power_dbm);
  CPSIM_KEY_I("radio.bitrate_bps", radio.bitrate_bps, std::int64_t);
  CPSIM_KEY_D("radio.carrier_freq_ghz", radio.carrier_freq_ghz);
  CPSIM_KEY_D("radio.sense_threshold_dbm", radio.sense_threshold_dbm);
  CPSIM_KEY_D("radio.decode_floor_dbm", radio.decode_floor_dbm);
  CPSIM_KEY_D("radio.noise_floor_dbm", radio.noise_floor_dbm);
  CPSIM_KEY_D("radio.thermal_noise_dbm", radio.thermal_noise_dbm);
  CPSIM_KEY_D("radio.capture_margin_db", radio.capture_margin_db);
  CPSIM_KEY_I("radio.preamble_us", radio.preamble_us, std::int64_t);
  CPSIM_KEY_D("radio.per_wall_loss_db", radio.per_wall_loss_db);
  CPSIM_KEY_D("radio.pathloss_exponent", radio.pathloss_exponent);
  CPSIM_KEY_I("radio.frame_overhead_bytes", radio.frame_overhead_bytes, int);
  CPSIM_KEY_I("radio.bytes_per_object", radio.bytes_per_object, int);
  CPSIM_KEY_I("radio.mac_queue_frames", radio.mac_queue_frames, int);
  CPSIM_KEY_I("radio.aifs_us", radio.aifs_us, std::int64_t);
  CPSIM_KEY_I("radio.slot_us", radio.slot_us, std::int64_t);
  CPSIM_KEY_I("radio.contention_window", radio.contention_window, int);

  // geonet
  CPSIM_KEY_D("geonet.gbc_radius_m", geonet.gbc_radius_m);
  CPSIM_KEY_D("geonet.gbc_lifetime_s", geonet.gbc_lifetime_s);
  CPSIM_KEY_I("geonet.gbc_hop_limit", geonet.gbc_hop_limit, int);
  add("geonet.algorithm",
      [](ScenarioConfig& c, const std::string& v) {
        if (v == "cbf") c.geonet.algorithm = GbcAlgorithm::Cbf;
        else if (v == "flood") c.geonet.algorithm = GbcAlgorithm::Flood;
        else throw ConfigError("geonet.algorithm must be cbf or flood");
      },
      [](const ScenarioConfig& c) {
        return std::string(c.geonet.algorithm == GbcAlgorithm::Cbf ? "cbf" : "flood");
      });
  CPSIM_KEY_D("geonet.cbf_tmax_ms", geonet.cbf_tmax_ms);
  CPSIM_KEY_D("geonet.cbf_jitter_ms", geonet.cbf_jitter_ms);

  // dcc
  CPSIM_KEY_B("dcc.enabled", dcc.enabled);
  CPSIM_KEY_D("dcc.th_relaxed", dcc.th_relaxed);
  CPSIM_KEY_D("dcc.th_active1", dcc.th_active1);
  CPSIM_KEY_D("dcc.th_active2", dcc.th_active2);
  CPSIM_KEY_D("dcc.th_active3", dcc.th_active3);
  CPSIM_KEY_D("dcc.gap_relaxed_ms", dcc.gap_relaxed_ms);
  CPSIM_KEY_D("dcc.gap_active1_ms", dcc.gap_active1_ms);
  CPSIM_KEY_D("dcc.gap_active2_ms", dcc.gap_active2_ms);
  CPSIM_KEY_D("dcc.gap_active3_ms", dcc.gap_active3_ms);
  CPSIM_KEY_D("dcc.gap_restrictive_ms", dcc.gap_restrictive_ms);
  CPSIM_KEY_B("dcc.two_sample_average", dcc.two_sample_average);

  // cps
  CPSIM_KEY_D("cps.period_s", cps.period_s);
  CPSIM_KEY_D("cps.sensor_radius_m", cps.sensor_radius_m);
  CPSIM_KEY_I("cps.max_hop", cps.max_hop, int);
  CPSIM_KEY_D("cps.pos_threshold_m", cps.pos_threshold_m);
  CPSIM_KEY_D("cps.speed_threshold_mps", cps.speed_threshold_mps);
  CPSIM_KEY_D("cps.heading_threshold_deg", cps.heading_threshold_deg);
  CPSIM_KEY_D("cps.lapse_s", cps.lapse_s);
  CPSIM_KEY_I("cps.max_objects", cps.max_objects, int);
  add("cps.lem_update",
      [](ScenarioConfig& c, const std::string& v) {
        if (v == "auto") c.cps.lem_update = LemUpdateMode::Auto;
        else if (v == "literal") c.cps.lem_update = LemUpdateMode::Literal;
        else if (v == "freshest") c.cps.lem_update = LemUpdateMode::Freshest;
        else throw ConfigError("cps.lem_update must be auto, literal or freshest");
      },
      [](const ScenarioConfig& c) {
        switch (c.cps.lem_update) {
          case LemUpdateMode::Auto: return std::string("auto");
          case LemUpdateMode::Literal: return std::string("literal");
          default: return std::string("freshest");
        }
      });
  CPSIM_KEY_D("cps.lem_timeout_s", cps.lem_timeout_s);

  // metrics
  CPSIM_KEY_D("metrics.region_m", metrics.region_m);
  CPSIM_KEY_D("metrics.interest_radius_m", metrics.interest_radius_m);
  CPSIM_KEY_D("metrics.max_aoi_s", metrics.max_aoi_s);
  CPSIM_KEY_D("metrics.sample_period_s", metrics.sample_period_s);
  add("metrics.aoi_export",
      [](ScenarioConfig& c, const std::string& v) {
        if (v == "hist") c.metrics.aoi_export = AoiExport::Histogram;
        else if (v == "full") c.metrics.aoi_export = AoiExport::Full;
        else throw ConfigError("metrics.aoi_export must be hist or full");
      },
      [](const ScenarioConfig& c) {
        return std::string(c.metrics.aoi_export == AoiExport::Histogram ? "hist" : "full");
      });
  CPSIM_KEY_B("metrics.record_debug_logs", metrics.record_debug_logs);

  // fixed vehicle placements: x:y:heading:speed:equipped entries joined by ';'
  add("vehicles.list",
      [](ScenarioConfig& c, const std::string& v) {
        c.manual_vehicles.clear();
        if (v.empty()) return;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ';')) {
          if (item.empty()) continue;
          ManualVehicle mv;
          std::stringstream fs(item);
          std::string f;
          std::vector<std::string> fields;
          while (std::getline(fs, f, ':')) fields.push_back(f);
          if (fields.size() != 5)
            throw ConfigError("vehicles.list entries need x:y:heading:speed:equipped");
          mv.pos.x = parse_double("vehicles.list", fields[0]);
          mv.pos.y = parse_double("vehicles.list", fields[1]);
          mv.heading_deg = parse_double("vehicles.list", fields[2]);
          mv.speed_mps = parse_double("vehicles.list", fields[3]);
          mv.equipped = parse_bool("vehicles.list", fields[4]);
          c.manual_vehicles.push_back(mv);
        }
      },
      [](const ScenarioConfig& c) {
        std::ostringstream os;
        for (std::size_t i = 0; i < c.manual_vehicles.size(); ++i) {
          const auto& mv = c.manual_vehicles[i];
          if (i) os << ';';
          os << fmt_double(mv.pos.x) << ':' << fmt_double(mv.pos.y) << ':'
             << fmt_double(mv.heading_deg) << ':' << fmt_double(mv.speed_mps) << ':'
             << (mv.equipped ? "true" : "false");
        }
        return os.str();
      });

#undef CPSIM_KEY_D
#undef CPSIM_KEY_I
#undef CPSIM_KEY_B
  return r;
}

inline const std::vector<KeySpec>& registry() {
  static const std::vector<KeySpec> r = make_registry();
  return r;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace cfgdetail

inline void apply_config_key(ScenarioConfig& cfg, const std::string& key,
                             const std::string& value) {
  for (const auto& spec : cfgdetail::registry()) {
    if (spec.key == key) {
      spec.set(cfg, value);
      return;
    }
  }
  std::string msg = "unknown configuration key '" + key + "'. Valid keys:";
  for (const auto& spec : cfgdetail::registry()) msg += "\n  " + spec.key;
  throw ConfigError(msg);
}

// Parses "[section]\nkey = value" text; keys may also be given fully
// qualified as section.key. '#' starts a comment.
inline void apply_config_text(ScenarioConfig& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = cfgdetail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("malformed section header at line " + std::to_string(lineno));
      section = cfgdetail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value at line " + std::to_string(lineno));
    std::string key = cfgdetail::trim(line.substr(0, eq));
    std::string value = cfgdetail::trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
    apply_config_key(cfg, key, value);
  }
}

// Environment overlay: CPSIM_<SECTION>_<KEY> (uppercase, '.' -> '_').
inline void apply_config_env(ScenarioConfig& cfg) {
  for (const auto& spec : cfgdetail::registry()) {
    std::string name = "CPSIM_";
    for (char ch : spec.key)
      name += (ch == '.') ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (const char* v = std::getenv(name.c_str())) spec.set(cfg, v);
  }
}

// Fully resolved config as config-file text; reapplying it reproduces the
// run bit-exactly.
inline std::string config_echo(const ScenarioConfig& cfg) {
  std::ostringstream os;
  std::string section;
  for (const auto& spec : cfgdetail::registry()) {
    std::string sec = spec.key.substr(0, spec.key.find('.'));
    std::string name = spec.key.substr(spec.key.find('.') + 1);
    if (sec != section) {
      if (!section.empty()) os << "\n";
      os << "[" << sec << "]\n";
      section = sec;
    }
    os << name << " = " << spec.get(cfg) << "\n";
  }
  return os.str();
}

inline void ScenarioConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  auto finite = [&fail](double v, const char* what) {
    if (!std::isfinite(v)) fail(std::string(what) + " must be finite");
  };

  if (run.duration_s < 0.0) fail("run.duration_s must be >= 0");
  if (run.warmup_s < 0.0) fail("run.warmup_s must be >= 0");
  if (run.warmup_s > run.duration_s) fail("run.warmup_s must not exceed run.duration_s");

  if (map.grid_n < 1) fail("map.grid_n must be >= 1");
  if (map.extent_m <= 0.0) fail("map.extent_m must be > 0");
  if (map.lanes_per_direction < 1) fail("map.lanes_per_direction must be >= 1");
  if (map.lane_width_m <= 0.0) fail("map.lane_width_m must be > 0");
  if (map.building_setback_m < 0.0) fail("map.building_setback_m must be >= 0");
  if (map.spacing_m > 0.0 &&
      std::fabs(map.spacing_m * (map.grid_n + 1) - map.extent_m) > 1.0)
    fail("map.spacing_m * (grid_n + 1) must match map.extent_m within 1 m");
  {
    const double spacing = resolved_spacing();
    const double road_half = map.lanes_per_direction * map.lane_width_m;
    if (spacing <= 2.0 * (road_half + map.building_setback_m))
      fail("map geometry inconsistent: road spacing leaves no room between roads");
  }

  if (mobility.density_veh_per_km <= 0.0) fail("mobility.density_veh_per_km must be > 0");
  if (mobility.penetration < 0.0 || mobility.penetration > 1.0)
    fail("mobility.penetration must be within [0, 1]");
  if (mobility.desired_speed_mps < 0.0) fail("mobility.desired_speed_mps must be >= 0");
  if (mobility.speed_spread < 0.0 || mobility.speed_spread >= 1.0)
    fail("mobility.speed_spread must be within [0, 1)");
  if (mobility.step_s <= 0.0 || mobility.step_s > 0.2)
    fail("mobility.step_s must be within (0, 0.2] s");
  if (mobility.min_gap_m <= 0.0) fail("mobility.min_gap_m must be > 0");
  if (mobility.preroll_s < 0.0) fail("mobility.preroll_s must be >= 0");

  finite(radio.tx_power_dbm, "radio.tx_power_dbm");
  finite(radio.sense_threshold_dbm, "radio.sense_threshold_dbm");
  finite(radio.decode_floor_dbm, "radio.decode_floor_dbm");
  finite(radio.noise_floor_dbm, "radio.noise_floor_dbm");
  finite(radio.thermal_noise_dbm, "radio.thermal_noise_dbm");
  finite(radio.capture_margin_db, "radio.capture_margin_db");
  finite(radio.per_wall_loss_db, "radio.per_wall_loss_db");
  if (radio.sense_threshold_dbm > radio.decode_floor_dbm)
    fail("radio.sense_threshold_dbm must not exceed radio.decode_floor_dbm");
  if (radio.bitrate_bps <= 0) fail("radio.bitrate_bps must be > 0");
  if (radio.carrier_freq_ghz <= 0.0) fail("radio.carrier_freq_ghz must be > 0");
  if (radio.pathloss_exponent <= 0.0) fail("radio.pathloss_exponent must be > 0");
  if (radio.preamble_us < 0) fail("radio.preamble_us must be >= 0");
  if (radio.frame_overhead_bytes < 1) fail("radio.frame_overhead_bytes must be >= 1");
  if (radio.bytes_per_object < 0) fail("radio.bytes_per_object must be >= 0");
  if (radio.mac_queue_frames < 1) fail("radio.mac_queue_frames must be >= 1");
  if (radio.aifs_us < 0) fail("radio.aifs_us must be >= 0");
  if (radio.slot_us <= 0) fail("radio.slot_us must be > 0");
  if (radio.contention_window < 1) fail("radio.contention_window must be >= 1");

  if (geonet.gbc_radius_m <= 0.0) fail("geonet.gbc_radius_m must be > 0");
  if (geonet.gbc_lifetime_s <= 0.0) fail("geonet.gbc_lifetime_s must be > 0");
  if (geonet.gbc_hop_limit < 1) fail("geonet.gbc_hop_limit must be >= 1");
  if (geonet.cbf_tmax_ms < 0.0) fail("geonet.cbf_tmax_ms must be >= 0");
  if (geonet.cbf_jitter_ms < 0.0) fail("geonet.cbf_jitter_ms must be >= 0");

  const double th[4] = {dcc.th_relaxed, dcc.th_active1, dcc.th_active2, dcc.th_active3};
  for (int i = 0; i < 4; ++i) {
    if (th[i] <= 0.0 || th[i] > 1.0) fail("dcc thresholds must be within (0, 1]");
    if (i > 0 && th[i] <= th[i - 1]) fail("dcc thresholds must be strictly increasing");
  }
  const double gaps[5] = {dcc.gap_relaxed_ms, dcc.gap_active1_ms, dcc.gap_active2_ms,
                          dcc.gap_active3_ms, dcc.gap_restrictive_ms};
  for (int i = 0; i < 5; ++i) {
    if (gaps[i] <= 0.0) fail("dcc gaps must be > 0");
    if (i > 0 && gaps[i] < gaps[i - 1])
      fail("dcc gaps must be non-decreasing from relaxed to restrictive");
  }

  if (cps.period_s <= 0.0) fail("cps.period_s must be > 0");
  if (cps.sensor_radius_m <= 0.0) fail("cps.sensor_radius_m must be > 0");
  if (cps.max_hop < 1) fail("cps.max_hop must be >= 1");
  if (cps.pos_threshold_m < 0.0) fail("cps.pos_threshold_m must be >= 0");
  if (cps.speed_threshold_mps < 0.0) fail("cps.speed_threshold_mps must be >= 0");
  if (cps.heading_threshold_deg < 0.0) fail("cps.heading_threshold_deg must be >= 0");
  if (cps.lapse_s <= 0.0) fail("cps.lapse_s must be > 0");
  if (cps.max_objects < 1) fail("cps.max_objects must be >= 1");
  if (cps.lem_timeout_s <= 0.0) fail("cps.lem_timeout_s must be > 0");

  if (metrics.region_m <= 0.0) fail("metrics.region_m must be > 0");
  if (metrics.interest_radius_m <= 0.0) fail("metrics.interest_radius_m must be > 0");
  if (metrics.max_aoi_s <= 0.0) fail("metrics.max_aoi_s must be > 0");
  if (metrics.sample_period_s <= 0.0) fail("metrics.sample_period_s must be > 0");

  for (const auto& mv : manual_vehicles) {
    if (mv.pos.x < 0.0 || mv.pos.x > map.extent_m || mv.pos.y < 0.0 ||
        mv.pos.y > map.extent_m)
      fail("vehicles.list positions must lie within the map extent");
    if (mv.speed_mps < 0.0) fail("vehicles.list speeds must be >= 0");
  }
}

}  // namespace cpsim
