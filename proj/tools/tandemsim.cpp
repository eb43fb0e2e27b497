// tandemsim: scenario generation, closed-loop runs, goal sweeps and
// message-log statistics.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "tandem/config.hpp"
#include "tandem/engine.hpp"
#include "tandem/scenario.hpp"

namespace fs = std::filesystem;
using namespace tandem;

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct RunFlags {
  std::string scenario;
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon_h;
  std::optional<double> target;
  std::optional<double> tolerance;
  bool no_xapp{false};
  bool no_rapp{false};
  bool no_ts{false};
  bool no_controllers{false};
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--scenario", f.scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--config", f.config, "Run-config JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", f.seed, "Traffic seed (overrides the config)");
  cmd->add_option("--horizon-h", f.horizon_h, "Simulated hours");
  cmd->add_option("--target-outage", f.target, "Outage goal in percent");
  cmd->add_option("--tolerance", f.tolerance, "Half-width of the outage goal range in percent");
  cmd->add_flag("--no-xapp", f.no_xapp, "Disable the COOS xApp");
  cmd->add_flag("--no-rapp", f.no_rapp, "Disable the COOS rApp");
  cmd->add_flag("--no-ts", f.no_ts, "Disable traffic-steering handovers");
  cmd->add_flag("--no-controllers", f.no_controllers, "Disable all three applications");
}

SimConfig resolve_config(const RunFlags& f) {
  SimConfig c = f.config.empty() ? SimConfig{} : load_sim_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.horizon_h) c.horizon_s = *f.horizon_h * 3600.0;
  if (f.target || f.tolerance) {
    const double goal = f.target.value_or((c.policy.target_outage_lo + c.policy.target_outage_hi) / 2.0);
    const double tol = f.tolerance.value_or((c.policy.target_outage_hi - c.policy.target_outage_lo) / 2.0);
    c.set_goal(goal, tol);
  }
  if (f.no_xapp || f.no_controllers) c.coos_xapp = false;
  if (f.no_rapp || f.no_controllers) c.rapp_enabled = false;
  if (f.no_ts || f.no_controllers) c.ts_xapp = false;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError({e.what()});
  }
  return c;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("cannot write {}", path.string()));
  return out;
}

int cmd_gen(const std::string& preset, std::uint64_t seed, std::optional<int> sites, const std::string& out_path) {
  GeneratorConfig g = generator_preset(preset);
  if (sites) g.macro_sites = *sites;
  const Scenario s = generate_synthetic(g, seed);
  if (out_path.empty() || out_path == "-") {
    std::cout << scenario_to_json(s).dump(1) << '\n';
  } else {
    save_scenario(s, out_path);
  }

  std::map<double, std::pair<std::string, std::size_t>> per_carrier;
  for (const auto& c : s.cells) {
    auto& e = per_carrier[c.carrier_hz];
    e.first = std::string(to_string(c.layer));
    ++e.second;
  }
  double peak_ues = 0.0;
  double max_pixel = 0.0;
  for (int slot = 0; slot < kSlotsPerDay; ++slot) {
    double total = 0.0;
    for (const auto& p : s.pixels) {
      total += p.slots[slot].mean_active_ues;
      max_pixel = std::max(max_pixel, p.slots[slot].mean_active_ues);
    }
    peak_ues = std::max(peak_ues, total);
  }
  std::ostream& log = (out_path.empty() || out_path == "-") ? std::cerr : std::cout;
  fmt::print(log, "sites: {}  cells: {} (coverage {}, capacity {})\n", s.sites.size(), s.cells.size(),
             s.count_layer(Layer::Coverage), s.count_layer(Layer::Capacity));
  for (const auto& [f, e] : per_carrier) fmt::print(log, "  {:.0f} MHz: {} {} cells\n", f / 1e6, e.second, e.first);
  fmt::print(log, "pixels: {} ({} x {}), peak mean active UEs {:.1f}, max per pixel {:.3f}\n", s.pixels.size(),
             s.area.nx(), s.area.ny(), peak_ues, max_pixel);
  return 0;
}

int cmd_run(const RunFlags& f, const std::string& out_dir) {
  const Scenario s = load_scenario(f.scenario);
  const SimConfig c = resolve_config(f);
  fs::create_directories(out_dir);
  std::ofstream msglog = open_output(fs::path(out_dir) / "msglog.ndjson");
  const RunResult r = run(s, c, RunOptions{&msglog});
  {
    std::ofstream ts = open_output(fs::path(out_dir) / "timeseries.csv");
    write_timeseries_csv(ts, r);
    std::ofstream ev = open_output(fs::path(out_dir) / "events.csv");
    write_events_csv(ev, r, s);
  }
  const auto& k = r.counters;
  fmt::print("mean_outage_pct {:.3f}\n", r.mean_outage_pct);
  fmt::print("mean_power_w {:.1f}\n", r.mean_power_w);
  fmt::print("state_changes {}\n", r.commanded_changes());
  fmt::print("forced_cleanups {}\n", r.forced_cleanups);
  fmt::print("messages E2 {} A1 {} O1 {}\n", k.interface_total(Interface::E2), k.interface_total(Interface::A1),
             k.interface_total(Interface::O1));
  fmt::print("outputs {}\n", out_dir);
  return 0;
}

int cmd_sweep(const RunFlags& f, const std::vector<double>& goals, const std::string& out_path, unsigned threads) {
  const Scenario s = load_scenario(f.scenario);
  const SimConfig c = resolve_config(f);
  const auto rows = sweep_outage_goals(s, c, goals, threads);
  if (out_path.empty() || out_path == "-") {
    write_sweep_csv(std::cout, rows);
  } else {
    std::ofstream out = open_output(out_path);
    write_sweep_csv(out, rows);
    for (const auto& r : rows)
      fmt::print("{:<17} {:>6} outage {:7.3f}%  power {:10.1f} W\n", r.label,
                 r.goal_pct ? fmt::format("{}%", *r.goal_pct) : std::string("-"), r.outage_pct, r.power_w);
  }
  return 0;
}

int cmd_msgstats(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(fmt::format("cannot open {}", path));
  const Counters c = tally_message_log(in);
  fmt::print("{:<10} {:<18} {:>12}\n", "interface", "kind", "count");
  for (std::size_t i = 0; i < kInterfaceCount; ++i) {
    const auto iface = static_cast<Interface>(i);
    for (std::size_t k = 0; k < kKindCount; ++k) {
      const auto kind = static_cast<Kind>(k);
      if (!is_legal(iface, kind)) continue;
      fmt::print("{:<10} {:<18} {:>12}\n", to_string(iface), to_string(kind), c.count(iface, kind));
    }
    fmt::print("{:<10} {:<18} {:>12}\n", to_string(iface), "total", c.interface_total(iface));
  }
  const auto& ind = c.indications;
  fmt::print("indications: ue_measurement {} cell_load {} cell_to_be_off {} cell_state {}\n", ind.ue_measurement,
             ind.cell_load, ind.cell_to_be_off, ind.cell_state);
  fmt::print("total {}  identity {}\n", c.grand_total(), c.identity_holds() ? "ok" : "violated");
  return c.identity_holds() ? 0 : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tandem COOS rApp/xApp network simulator"};
  app.require_subcommand(1);

  std::string preset = "dt-like";
  std::uint64_t gen_seed = 1;
  std::optional<int> sites;
  std::string gen_out;
  auto* gen = app.add_subcommand("gen", "Generate a synthetic scenario");
  gen->add_option("--preset", preset, "Generator preset (dt-like, desk)");
  gen->add_option("--seed", gen_seed, "Generator seed");
  gen->add_option("--sites", sites, "Number of macro sites");
  gen->add_option("--out", gen_out, "Output file ('-' for stdout)");

  RunFlags run_flags;
  std::string run_out = "out";
  auto* run_cmd = app.add_subcommand("run", "Run one closed-loop simulation");
  add_run_flags(run_cmd, run_flags);
  run_cmd->add_option("--out", run_out, "Output directory");

  RunFlags sweep_flags;
  std::vector<double> goals;
  std::string sweep_out;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "Sweep the rApp outage goal");
  add_run_flags(sweep, sweep_flags);
  sweep->add_option("--goals", goals, "Outage goals in percent")->required()->delimiter(',');
  sweep->add_option("--out", sweep_out, "Output CSV ('-' for stdout)");
  sweep->add_option("--threads", threads, "Parallel runs")->check(CLI::PositiveNumber);

  std::string log_path;
  auto* stats = app.add_subcommand("msgstats", "Count messages in a message log");
  stats->add_option("--log", log_path, "msglog.ndjson file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*gen) return cmd_gen(preset, gen_seed, sites, gen_out);
    if (*run_cmd) return cmd_run(run_flags, run_out);
    if (*sweep) return cmd_sweep(sweep_flags, goals, sweep_out, threads);
    if (*stats) return cmd_msgstats(log_path);
  } catch (const ScenarioError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const LogParseError& e) {
    std::cerr << "error: " << log_path << ": " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitRuntime;
}
