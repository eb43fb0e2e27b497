#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tandem/apps.hpp"
#include "tandem/radio.hpp"
#include "tandem/ran.hpp"
#include "tandem/ricbus.hpp"
#include "tandem/scenario.hpp"
#include "tandem/traffic.hpp"

namespace tandem {

enum class OutageWeighting { UeSeconds, PerUe };
enum class ReferenceMode { None, AllActive, AllCapacityOff };

struct SimConfig {
  double horizon_s{86400.0};
  double tick_s{1.0};
  double t_x_s{60.0};
  double t_r_s{300.0};
  double t_block_s{600.0};
  double w_pp_s{1800.0};
  double kpm_period_s{1.0};
  double pm_period_s{60.0};
  double series_period_s{60.0};
  double warmup_s{7200.0};
  double cleanup_timeout_s{30.0};
  double hysteresis_db{3.0};
  double neighbor_radius_m{1500.0};
  std::size_t max_commands{5};

  std::uint64_t seed{1};                          // traffic and mobility
  std::optional<std::uint64_t> shadowing_seed;    // scenario's seed when empty
  PropagationConfig propagation;
  ArrivalConfig arrivals;
  CoosPolicy policy;                              // initial thresholds and outage goal
  RappConfig rapp;

  bool coos_xapp{true};
  bool ts_xapp{true};
  bool rapp_enabled{true};
  ReferenceMode reference{ReferenceMode::None};
  OutageWeighting outage_weighting{OutageWeighting::UeSeconds};
  std::optional<int> fixed_slot;  // hold the traffic profile at one slot
  bool prefill{true};             // start from the stationary population
  double e2_latency_s{0.0};
  double a1_latency_s{0.0};
  double o1_latency_s{0.0};

  /// Throws std::invalid_argument listing the first violated invariant.
  void validate() const;
  /// Applies target = goal, range = goal +- tolerance.
  void set_goal(double goal_pct, double tolerance_pct);
};

class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct SeriesPoint {
  double t_s{0.0};
  double beta_sys_pct{0.0};
  double alpha_off{0.0};
  double alpha_on{0.0};
  std::size_t n_off{0};
  double power_w{0.0};
  std::size_t n_ues{0};
  double offered_bps{0.0};
  double ue_seconds{0.0};
  double deficit_ue_seconds{0.0};

  friend bool operator==(const SeriesPoint&, const SeriesPoint&) = default;
};

struct CommandRecord {
  double t_s{0.0};
  std::uint64_t seq{0};
  Role source{Role::CoosXApp};
  std::string action;  // "off", "on" or "handover"
  CellIndex cell{0};
  UeId ue{0};
  bool accepted{false};

  friend bool operator==(const CommandRecord&, const CommandRecord&) = default;
};

struct RunResult {
  std::vector<SeriesPoint> series;
  std::vector<StateChange> events;  // all cells, time ordered
  std::vector<CommandRecord> commands;
  std::vector<RappRecord> rapp;
  Counters counters;
  std::uint64_t log_digest{0};

  double horizon_s{0.0};
  double warmup_s{0.0};
  double energy_j{0.0};             // whole horizon
  double mean_power_w{0.0};         // after warm-up
  double mean_outage_pct{0.0};      // after warm-up
  bool outage_window_empty{false};
  std::vector<double> cell_energy_j;   // after warm-up
  std::vector<double> cell_mean_load;  // after warm-up
  std::vector<double> cell_off_s;      // seconds spent off, after warm-up

  // per-tick sums used for message accounting
  std::uint64_t ue_reports{0};
  std::uint64_t load_reports{0};
  std::size_t forced_cleanups{0};
  std::size_t xapp_rejections{0};
  std::size_t mobility_handovers{0};
  std::size_t cleanup_handovers{0};
  double mean_active_ues{0.0};

  std::size_t commanded_changes() const;
  std::uint64_t digest() const;
};

struct RunOptions {
  std::ostream* message_log{nullptr};
};

RunResult run(const Scenario& scenario, const SimConfig& config, const RunOptions& options = {});
RunResult run(const Scenario& scenario, const ShadowField& field, const SimConfig& config,
              const RunOptions& options = {});

struct UeWindowRecord {
  double ue_seconds{0.0};
  double deficit_ue_seconds{0.0};
};

struct OutageValue {
  double pct{0.0};
  bool empty{false};
};

/// UE-second weighted (deficit over total) or per-UE (share of UEs with
/// any deficit). An empty window yields 0 with the flag set.
OutageValue compute_outage(std::span<const UeWindowRecord> records,
                           OutageWeighting weighting = OutageWeighting::UeSeconds);

struct SweepRow {
  std::string label;  // "goal", "all_active" or "all_capacity_off"
  std::optional<double> goal_pct;
  double outage_pct{0.0};
  double power_w{0.0};
  std::size_t state_changes{0};

  friend bool operator==(const SweepRow&, const SweepRow&) = default;
};

/// One run per goal (same seed), sorted by goal, followed by the two
/// reference rows. Runs execute on up to `threads` workers.
std::vector<SweepRow> sweep_outage_goals(const Scenario& scenario, const SimConfig& config,
                                         std::vector<double> goals, unsigned threads = 1);

SimConfig reference_config(const SimConfig& config, ReferenceMode mode);

void write_timeseries_csv(std::ostream& out, const RunResult& result);
void write_events_csv(std::ostream& out, const RunResult& result, const Scenario& scenario);
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

double spearman(std::span<const double> x, std::span<const double> y);

}  // namespace tandem
