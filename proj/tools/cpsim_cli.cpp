// cpsim command line front end: single runs, parameter sweeps, summary
// re-aggregation and map geometry dumps.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "cpsim/config.hpp"
#include "cpsim/map.hpp"
#include "cpsim/runresult.hpp"
#include "cpsim/sim.hpp"
#include "cpsim/sweep.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_file;
  std::vector<std::string> sets;  // key=value overrides
};

cpsim::ScenarioConfig resolve_config(const CommonOpts& opts) {
  cpsim::ScenarioConfig cfg;  // built-in defaults
  if (!opts.config_file.empty()) {
    std::ifstream in(opts.config_file);
    if (!in) throw cpsim::ConfigError("cannot open config file " + opts.config_file);
    std::stringstream ss;
    ss << in.rdbuf();
    cpsim::apply_config_text(cfg, ss.str());
  }
  cpsim::apply_config_env(cfg);
  for (const auto& kv : opts.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw cpsim::ConfigError("--set expects key=value, got '" + kv + "'");
    cpsim::apply_config_key(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<double> parse_doubles(const std::vector<std::string>& in) {
  std::vector<double> out;
  for (const auto& s : in) out.push_back(std::stod(s));
  return out;
}

cpsim::CpsMode mode_from_string(const std::string& s) {
  if (s == "baseline") return cpsim::CpsMode::Baseline;
  if (s == "app-forwarding") return cpsim::CpsMode::AppForwarding;
  if (s == "gbc") return cpsim::CpsMode::GbcForwarding;
  throw cpsim::ConfigError("unknown mode '" + s + "' (baseline|app-forwarding|gbc)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cpsim - collective perception dissemination simulator"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  CommonOpts common;
  app.add_option("--config", common.config_file, "scenario config file");
  app.add_option("--set", common.sets, "override a config key (section.key=value)")
      ->take_all();

  // run
  auto* run_cmd = app.add_subcommand("run", "execute a single run");
  std::string run_out = "out";
  std::string run_mode, run_seed, run_density, run_pen, run_duration;
  run_cmd->add_option("--out", run_out, "output directory");
  run_cmd->add_option("--mode", run_mode, "baseline|app-forwarding|gbc");
  run_cmd->add_option("--seed", run_seed, "run seed");
  run_cmd->add_option("--density", run_density, "vehicles per km");
  run_cmd->add_option("--penetration", run_pen, "equipped fraction 0..1");
  run_cmd->add_option("--duration", run_duration, "run length in seconds");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "execute a parameter sweep");
  std::string sweep_out = "out";
  int jobs = 1;
  std::vector<std::string> ax_modes{"baseline", "app-forwarding", "gbc"};
  std::vector<std::string> ax_densities{"30", "60"};
  std::vector<std::string> ax_pens{"0.05", "0.1", "0.25", "0.5"};
  std::uint64_t seed_base = 1;
  int seed_count = 10;
  sweep_cmd->add_option("--out", sweep_out, "output directory");
  sweep_cmd->add_option("--jobs", jobs, "parallel runs per cell");
  sweep_cmd->add_option("--modes", ax_modes, "modes axis")->delimiter(',');
  sweep_cmd->add_option("--densities", ax_densities, "density axis")->delimiter(',');
  sweep_cmd->add_option("--penetrations", ax_pens, "penetration axis")->delimiter(',');
  sweep_cmd->add_option("--seed-base", seed_base, "first seed");
  sweep_cmd->add_option("--runs", seed_count, "seeds per cell");

  // summarize
  auto* sum_cmd = app.add_subcommand("summarize", "re-aggregate an existing sweep");
  std::string sum_dir = "out";
  sum_cmd->add_option("--out", sum_dir, "sweep output directory");

  // map-dump
  auto* map_cmd = app.add_subcommand("map-dump", "write map geometry as JSON");
  std::string map_out;
  map_cmd->add_option("--out", map_out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) {
      CommonOpts opts = common;
      if (!run_mode.empty()) opts.sets.push_back("run.mode=" + run_mode);
      if (!run_seed.empty()) opts.sets.push_back("run.seed=" + run_seed);
      if (!run_density.empty())
        opts.sets.push_back("mobility.density_veh_per_km=" + run_density);
      if (!run_pen.empty()) opts.sets.push_back("mobility.penetration=" + run_pen);
      if (!run_duration.empty()) opts.sets.push_back("run.duration_s=" + run_duration);
      cpsim::ScenarioConfig cfg = resolve_config(opts);
      cfg.validate();

      cpsim::RunResult result = cpsim::run_scenario(cfg);
      fs::create_directories(run_out);
      const std::string tag = cpsim::sweepdetail::cell_tag(
          result.mode, result.density, result.penetration);
      for (const auto& [metric, text] : cpsim::export_csvs(result))
        write_file(fs::path(run_out) / (metric + "_" + tag + ".csv"), text);
      write_file(fs::path(run_out) / "config_echo.ini", result.config_echo);
      std::cout << "run complete: " << result.final_clock << " us simulated, "
                << result.stations_seen << " stations, "
                << result.packet_totals().sent << " CPMs sent, violations "
                << result.violations.total() << "\n";
      return result.violations.total() == 0 ? 0 : 3;
    }

    if (sweep_cmd->parsed()) {
      cpsim::ScenarioConfig cfg = resolve_config(common);
      cfg.validate();
      cpsim::SweepAxes axes;
      for (const auto& m : ax_modes) axes.modes.push_back(mode_from_string(m));
      axes.densities = parse_doubles(ax_densities);
      axes.penetrations = parse_doubles(ax_pens);
      for (int i = 0; i < seed_count; ++i)
        axes.seeds.push_back(seed_base + static_cast<std::uint64_t>(i));
      cpsim::SweepOptions opt;
      opt.jobs = jobs;
      opt.out_dir = sweep_out;
      const auto outcome = cpsim::run_sweep(cfg, axes, opt, &std::cout);
      std::cout << "sweep complete: " << outcome.completed << " runs ok, "
                << outcome.failed << " failed; manifest at "
                << outcome.manifest_path.string() << "\n";
      return outcome.failed == 0 ? 0 : 4;
    }

    if (sum_cmd->parsed()) {
      const auto summaries = cpsim::summarize_directory(sum_dir);
      std::cout << "summarized " << summaries.size() << " cells into " << sum_dir
                << "/summary.{csv,json}\n";
      return 0;
    }

    if (map_cmd->parsed()) {
      cpsim::ScenarioConfig cfg = resolve_config(common);
      cfg.validate();
      const cpsim::GridMap map = cpsim::build_map(cfg.map);
      if (map_out.empty())
        std::cout << map.geometry_json();
      else
        write_file(map_out, map.geometry_json());
      return 0;
    }
  } catch (const cpsim::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
