#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cpsim/config.hpp"
#include "cpsim/runresult.hpp"
#include "cpsim/sim.hpp"

namespace cpsim {

struct SweepAxes {
  std::vector<CpsMode> modes;
  std::vector<double> densities;
  std::vector<double> penetrations;
  std::vector<std::uint64_t> seeds;

  bool empty() const {
    return modes.empty() || densities.empty() || penetrations.empty() || seeds.empty();
  }
  std::size_t cells() const {
    return modes.size() * densities.size() * penetrations.size();
  }
};

// Pooled per-cell samples: distributions merge raw samples across seeds, not
// per-run medians.
struct CellStats {
  std::size_t runs = 0;
  std::vector<double> ear;
  std::vector<double> cbr;
  std::vector<double> potential;
  AoiHistogram aoi;
  Violations violations;
  std::uint64_t undefined_ear = 0;
};

inline void accumulate_cell(CellStats& c, const RunResult& r) {
  ++c.runs;
  for (const auto& s : r.ear) {
    if (s.defined())
      c.ear.push_back(s.value());
    else
      ++c.undefined_ear;
  }
  for (const auto& s : r.cbr) c.cbr.push_back(s.cbr);
  for (const auto& s : r.potential) c.potential.push_back(s.potential);
  c.aoi.merge(r.aoi_hist);
  c.violations.hop_bound += r.violations.hop_bound;
  c.violations.relay_chain += r.violations.relay_chain;
  c.violations.dcc_gate += r.violations.dcc_gate;
  c.violations.lane_gap += r.violations.lane_gap;
  c.violations.cbr_range += r.violations.cbr_range;
  c.violations.negative_aoi += r.violations.negative_aoi;
  c.violations.ear_range += r.violations.ear_range;
}

struct BoxStats {
  std::size_t n = 0;
  double q1 = 0.0, median = 0.0, q3 = 0.0, lo = 0.0, hi = 0.0;
};

inline BoxStats box_stats(const std::vector<double>& values) {
  BoxStats b;
  b.n = values.size();
  if (values.empty()) return b;
  b.q1 = quantile(values, 0.25);
  b.median = quantile(values, 0.50);
  b.q3 = quantile(values, 0.75);
  const double iqr = b.q3 - b.q1;
  const double fence_lo = b.q1 - 1.5 * iqr;
  const double fence_hi = b.q3 + 1.5 * iqr;
  double lo = b.q3, hi = b.q1;
  for (double v : values) {
    if (v >= fence_lo) lo = std::min(lo, v);
    if (v <= fence_hi) hi = std::max(hi, v);
  }
  b.lo = lo;
  b.hi = hi;
  return b;
}

inline double mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct CellSummary {
  CpsMode mode = CpsMode::Baseline;
  double density = 0.0;
  double penetration = 0.0;
  std::size_t runs = 0;
  BoxStats ear;
  std::uint64_t aoi_n = 0;
  double aoi_p50_ms = 0.0, aoi_p99_ms = 0.0, aoi_under_200ms = 0.0;
  std::size_t cbr_n = 0;
  double cbr_mean = 0.0, cbr_p95 = 0.0;
  BoxStats potential;
  std::uint64_t violations = 0;
};

inline CellSummary summarize_cell(CpsMode mode, double density, double pen,
                                  const CellStats& c) {
  CellSummary s;
  s.mode = mode;
  s.density = density;
  s.penetration = pen;
  s.runs = c.runs;
  s.ear = box_stats(c.ear);
  s.aoi_n = c.aoi.count();
  s.aoi_p50_ms = c.aoi.quantile_ms(0.50);
  s.aoi_p99_ms = c.aoi.quantile_ms(0.99);
  s.aoi_under_200ms = c.aoi.fraction_below_ms(200.0);
  s.cbr_n = c.cbr.size();
  s.cbr_mean = mean_of(c.cbr);
  s.cbr_p95 = quantile(c.cbr, 0.95);
  s.potential = box_stats(c.potential);
  s.violations = c.violations.total();
  return s;
}

namespace sweepdetail {

inline std::string num_tag(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline std::string cell_tag(CpsMode mode, double density, double pen) {
  return std::string(to_string(mode)) + "_" + num_tag(density) + "_" + num_tag(pen);
}

inline void box_to_json(nlohmann::json& j, const BoxStats& b) {
  if (b.n == 0) {
    j = "no data";
    return;
  }
  j = {{"n", b.n},       {"q1", b.q1}, {"median", b.median},
       {"q3", b.q3},     {"lo", b.lo}, {"hi", b.hi}};
}

}  // namespace sweepdetail

inline nlohmann::json cell_summary_json(const CellSummary& s) {
  nlohmann::json j;
  j["mode"] = to_string(s.mode);
  j["density"] = s.density;
  j["penetration"] = s.penetration;
  j["runs"] = s.runs;
  sweepdetail::box_to_json(j["ear"], s.ear);
  if (s.aoi_n == 0) {
    j["aoi"] = "no data";
  } else {
    j["aoi"] = {{"n", s.aoi_n},
                {"p50_ms", s.aoi_p50_ms},
                {"p99_ms", s.aoi_p99_ms},
                {"under_200ms", s.aoi_under_200ms}};
  }
  if (s.cbr_n == 0) {
    j["cbr"] = "no data";
  } else {
    j["cbr"] = {{"n", s.cbr_n}, {"mean", s.cbr_mean}, {"p95", s.cbr_p95}};
  }
  sweepdetail::box_to_json(j["potential_objects"], s.potential);
  j["violations"] = s.violations;
  return j;
}

inline std::string summary_csv_header() {
  return "mode,density,penetration,runs,ear_n,ear_q1,ear_median,ear_q3,ear_lo,ear_hi,"
         "aoi_n,aoi_p50_ms,aoi_p99_ms,aoi_under_200ms,cbr_n,cbr_mean,cbr_p95,"
         "pot_n,pot_q1,pot_median,pot_q3,violations\n";
}

inline std::string summary_csv_row(const CellSummary& s) {
  std::ostringstream os;
  os.precision(9);
  auto box = [&os](const BoxStats& b, bool with_whiskers) {
    if (b.n == 0) {
      os << "0,no_data,no_data,no_data";
      if (with_whiskers) os << ",no_data,no_data";
      return;
    }
    os << b.n << ',' << b.q1 << ',' << b.median << ',' << b.q3;
    if (with_whiskers) os << ',' << b.lo << ',' << b.hi;
  };
  os << to_string(s.mode) << ',' << s.density << ',' << s.penetration << ',' << s.runs
     << ',';
  box(s.ear, true);
  os << ',';
  if (s.aoi_n == 0)
    os << "0,no_data,no_data,no_data";
  else
    os << s.aoi_n << ',' << s.aoi_p50_ms << ',' << s.aoi_p99_ms << ','
       << s.aoi_under_200ms;
  os << ',';
  if (s.cbr_n == 0)
    os << "0,no_data,no_data";
  else
    os << s.cbr_n << ',' << s.cbr_mean << ',' << s.cbr_p95;
  os << ',';
  box(s.potential, false);
  os << ',' << s.violations << "\n";
  return os.str();
}

struct SweepOptions {
  int jobs = 1;
  std::filesystem::path out_dir;
};

struct SweepOutcome {
  int completed = 0;
  int failed = 0;
  std::filesystem::path manifest_path;
  std::vector<CellSummary> summaries;
};

// Executes the full cross product. Cells run one after another; the seeds of
// a cell fan out over a small worker pool. Ordering never affects a run
// (runs share nothing), and per-cell outputs are merged in seed order so
// re-running a sweep reproduces every file byte for byte.
inline SweepOutcome run_sweep(const ScenarioConfig& base, const SweepAxes& axes,
                              const SweepOptions& opt, std::ostream* log = nullptr) {
  if (axes.empty()) throw ConfigError("sweep axes must be non-empty");
  std::filesystem::create_directories(opt.out_dir);

  SweepOutcome outcome;
  nlohmann::json manifest;
  manifest["runs"] = nlohmann::json::array();
  nlohmann::json summary_json = nlohmann::json::array();
  std::string summary_csv = summary_csv_header();

  for (CpsMode mode : axes.modes) {
    for (double density : axes.densities) {
      for (double pen : axes.penetrations) {
        ScenarioConfig cell_cfg = base;
        cell_cfg.run.mode = mode;
        cell_cfg.mobility.density_veh_per_km = density;
        cell_cfg.mobility.penetration = pen;

        const std::size_t n = axes.seeds.size();
        std::vector<std::optional<RunResult>> results(n);
        std::vector<std::string> errors(n);
        std::atomic<std::size_t> next{0};
        const int jobs = std::max(1, opt.jobs);
        auto worker = [&] {
          for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            ScenarioConfig run_cfg = cell_cfg;
            run_cfg.run.seed = axes.seeds[i];
            try {
              results[i] = run_scenario(run_cfg);
            } catch (const std::exception& e) {
              errors[i] = e.what();
            }
          }
        };
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();

        const std::string tag = sweepdetail::cell_tag(mode, density, pen);
        CellStats stats;
        std::map<std::string, std::string> cell_csv;
        for (std::size_t i = 0; i < n; ++i) {
          nlohmann::json entry;
          entry["mode"] = to_string(mode);
          entry["density"] = density;
          entry["penetration"] = pen;
          entry["seed"] = axes.seeds[i];
          if (!results[i]) {
            entry["status"] = "failed";
            entry["error"] = errors[i];
            ++outcome.failed;
            manifest["runs"].push_back(entry);
            continue;
          }
          const RunResult& r = *results[i];
          accumulate_cell(stats, r);
          entry["status"] = "ok";
          entry["config"] = r.config_echo;
          nlohmann::json files;
          for (auto& [metric, text] : export_csvs(r)) {
            auto& acc = cell_csv[metric];
            if (acc.empty()) {
              acc = text;
            } else {  // append rows only; header and echo come from the first run
              std::istringstream in(text);
              std::string line;
              bool past_header = false;
              while (std::getline(in, line)) {
                if (!past_header) {
                  if (!line.empty() && line[0] != '#') past_header = true;
                  continue;
                }
                acc += line;
                acc += '\n';
              }
            }
            files[metric] = metric + "_" + tag + ".csv";
          }
          entry["files"] = files;
          manifest["runs"].push_back(entry);
          ++outcome.completed;
          results[i].reset();  // free before the next cell
        }

        for (const auto& [metric, text] : cell_csv) {
          std::ofstream out(opt.out_dir / (metric + "_" + tag + ".csv"),
                            std::ios::binary);
          out << text;
        }
        const CellSummary cs = summarize_cell(mode, density, pen, stats);
        outcome.summaries.push_back(cs);
        summary_csv += summary_csv_row(cs);
        summary_json.push_back(cell_summary_json(cs));
        if (log)
          (*log) << "cell " << tag << ": " << stats.runs << "/" << n << " runs ok\n";
      }
    }
  }

  {
    std::ofstream out(opt.out_dir / "summary.csv", std::ios::binary);
    out << summary_csv;
  }
  {
    std::ofstream out(opt.out_dir / "summary.json", std::ios::binary);
    out << summary_json.dump(2) << "\n";
  }
  outcome.manifest_path = opt.out_dir / "manifest.json";
  {
    std::ofstream out(outcome.manifest_path, std::ios::binary);
    out << manifest.dump(2) << "\n";
  }
  return outcome;
}

// Rebuilds summary.csv / summary.json from the per-cell CSVs a previous
// sweep left behind, driven by its manifest.
inline std::vector<CellSummary> summarize_directory(const std::filesystem::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw ConfigError("no manifest.json in " + dir.string());
  nlohmann::json manifest;
  in >> manifest;

  struct Key {
    std::string mode;
    double density;
    double pen;
    bool operator<(const Key& o) const {
      return std::tie(mode, density, pen) < std::tie(o.mode, o.density, o.pen);
    }
  };
  std::map<Key, std::vector<std::string>> files_of;
  std::map<Key, std::size_t> runs_of;
  for (const auto& entry : manifest["runs"]) {
    if (entry["status"] != "ok") continue;
    Key k{entry["mode"].get<std::string>(), entry["density"].get<double>(),
          entry["penetration"].get<double>()};
    ++runs_of[k];
    if (files_of.count(k)) continue;
    std::vector<std::string> fs;
    for (const auto& [metric, fname] : entry["files"].items())
      fs.push_back(fname.get<std::string>());
    files_of[k] = fs;
  }

  auto parse_csv = [&](const std::filesystem::path& path,
                       const std::function<void(const std::vector<std::string>&,
                                                const std::vector<std::string>&)>& row_fn) {
    std::ifstream f(path);
    if (!f) return;
    std::string line;
    std::vector<std::string> header;
    while (std::getline(f, line)) {
      if (line.empty() || line[0] == '#') continue;
      std::vector<std::string> fields;
      std::stringstream ss(line);
      std::string item;
      while (std::getline(ss, item, ',')) fields.push_back(item);
      if (line.back() == ',') fields.push_back("");
      if (header.empty()) {
        header = fields;
        continue;
      }
      row_fn(header, fields);
    }
  };

  auto column = [](const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };

  std::vector<CellSummary> out;
  for (const auto& [key, files] : files_of) {
    CellStats stats;
    stats.runs = runs_of[key];
    for (const auto& fname : files) {
      const auto path = dir / fname;
      if (fname.rfind("ear_", 0) == 0) {
        parse_csv(path, [&](const auto& h, const auto& row) {
          const int c = column(h, "ear");
          if (c < 0 || row[static_cast<std::size_t>(c)].empty()) {
            ++stats.undefined_ear;
            return;
          }
          stats.ear.push_back(std::stod(row[static_cast<std::size_t>(c)]));
        });
      } else if (fname.rfind("cbr_", 0) == 0) {
        parse_csv(path, [&](const auto& h, const auto& row) {
          const int c = column(h, "cbr");
          if (c >= 0) stats.cbr.push_back(std::stod(row[static_cast<std::size_t>(c)]));
        });
      } else if (fname.rfind("potential_", 0) == 0) {
        parse_csv(path, [&](const auto& h, const auto& row) {
          const int c = column(h, "potential");
          if (c >= 0)
            stats.potential.push_back(std::stod(row[static_cast<std::size_t>(c)]));
        });
      } else if (fname.rfind("aoi_", 0) == 0) {
        parse_csv(path, [&](const auto& h, const auto& row) {
          const int cb = column(h, "bin_ms");
          const int cc = column(h, "count");
          const int ca = column(h, "aoi_us");
          if (cb >= 0 && cc >= 0) {
            const auto& bin = row[static_cast<std::size_t>(cb)];
            const std::uint64_t cnt =
                std::stoull(row[static_cast<std::size_t>(cc)]);
            if (bin == "overflow")
              stats.aoi.add_bin(AoiHistogram::kBins, cnt);
            else
              stats.aoi.add_bin(static_cast<int>(std::stol(bin)), cnt);
          } else if (ca >= 0) {
            stats.aoi.add(std::stoll(row[static_cast<std::size_t>(ca)]));
          }
        });
      }
    }
    CpsMode mode = CpsMode::Baseline;
    if (key.mode == "app-forwarding") mode = CpsMode::AppForwarding;
    if (key.mode == "gbc") mode = CpsMode::GbcForwarding;
    out.push_back(summarize_cell(mode, key.density, key.pen, stats));
  }

  std::string csv = summary_csv_header();
  nlohmann::json j = nlohmann::json::array();
  for (const auto& s : out) {
    csv += summary_csv_row(s);
    j.push_back(cell_summary_json(s));
  }
  {
    std::ofstream f(dir / "summary.csv", std::ios::binary);
    f << csv;
  }
  {
    std::ofstream f(dir / "summary.json", std::ios::binary);
    f << j.dump(2) << "\n";
  }
  return out;
}

}  // namespace cpsim
