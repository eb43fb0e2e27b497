#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/radio.hpp"
#include "tandem/ricbus.hpp"
#include "tandem/scenario.hpp"
#include "tandem/traffic.hpp"

namespace tandem {

struct StateChange {
  double t_s{0.0};
  CellIndex cell{0};
  CellStatus from{CellStatus::Active};
  CellStatus to{CellStatus::Active};
  ChangeCause cause{ChangeCause::Command};

  friend bool operator==(const StateChange&, const StateChange&) = default;
};

std::string_view to_string(ChangeCause cause);

struct CellState {
  CellIndex cell{0};
  Layer layer{Layer::Capacity};
  CellStatus status{CellStatus::Active};
  double load{0.0};
  double blocked_until_s{0.0};
  double pending_since_s{0.0};
  std::vector<StateChange> log;
};

struct UeLink {
  double demand_bps{0.0};
  double se_bps_hz{0.0};
};

struct ScheduleResult {
  std::vector<double> achieved_bps;
  std::vector<double> prbs;
  std::vector<char> outage;
  double load{0.0};
};

/// Demand-proportional PRB split. Load is offered PRB demand over the
/// cell's PRBs, clipped at 1; UEs below the SINR floor get nothing.
ScheduleResult schedule_cell(int n_prb, double prb_bandwidth_hz, std::span<const UeLink> ues);

double cell_power(CellStatus status, double load, const PowerParams& params);

/// Best cell by RSRP + offset among active cells (pending cells excluded);
/// ties go to the lowest index. `exclude` is never returned.
std::optional<CellIndex> associate(std::span<const double> rsrp_dbm, std::span<const CellStatus> status,
                                   std::span<const double> cio_db, std::optional<CellIndex> exclude = std::nullopt);

struct RanConfig {
  double kpm_period_s{1.0};
  double pm_period_s{60.0};
  double cleanup_timeout_s{30.0};
  double command_guard_s{600.0};  // minimum spacing of accepted commands per cell
};

struct CommandOutcome {
  bool accepted{false};
  std::string reason;
};

/// Emulated E2 nodes: owns the attached UEs and the per-cell runtime state,
/// executes control requests arriving over the bus, and publishes KPM and
/// PM reports.
class Ran {
 public:
  Ran(const Scenario& scenario, const ShadowField& field, const PropagationConfig& prop, RanConfig cfg,
      RicBus& bus);

  Ran(const Ran&) = delete;
  Ran& operator=(const Ran&) = delete;

  void publish_setup(double t_s);

  void admit(std::vector<Ue> arrivals);
  std::size_t remove_departed(double t_s);
  std::vector<Ue>& ues() { return ues_; }
  const std::vector<Ue>& ues() const { return ues_; }

  /// Recomputes received powers for every UE and attaches unserved UEs.
  void update_links();
  void execute_handovers(double t_s);
  void progress_pending(double t_s);
  void schedule();

  /// One UE measurement per attached UE each call and one load report per
  /// transmitting cell at the KPM cadence. Returns the number published.
  std::size_t emit_kpm_reports(double t_s);
  void accumulate(double dt_s);
  std::size_t emit_pm_reports(double t_s);

  CommandOutcome apply_cell_command(const CellCommandPayload& cmd, double t_s);
  /// Switches a cell off outside the control loop (reference runs).
  void force_off(CellIndex cell, double t_s);

  const std::vector<CellState>& cells() const { return cells_; }
  std::span<const char> outage_flags() const { return outage_; }
  std::span<const double> rsrp_of(std::size_t ue_index) const;
  double network_power_w() const;
  double offered_bps() const;
  std::size_t transmitting_count() const;
  std::size_t forced_cleanups() const { return forced_cleanups_; }
  std::size_t ues_served_by(CellIndex cell) const;

 private:
  void on_message(const Message& m);
  CommandOutcome check_command(const CellCommandPayload& cmd, double t_s) const;
  void execute_command(const CellCommandPayload& cmd, double t_s);
  void complete_off(CellIndex cell, double t_s, ChangeCause cause);
  void record(CellIndex cell, double t_s, CellStatus to, ChangeCause cause);
  void notify_state(CellIndex cell, double t_s, ChangeCause cause);
  void ack(const Message& request, double t_s, const CommandOutcome& outcome);
  std::vector<CellStatus> statuses() const;

  struct QueuedHandover {
    UeId ue;
    CellIndex target;
  };

  struct PmAccumulator {
    double ue_seconds{0.0};
    double deficit_ue_seconds{0.0};
    std::vector<double> switch_times_s;
  };

  const Scenario& scenario_;
  const ShadowField& field_;
  PropagationConfig prop_;
  LinkModel links_;
  RanConfig cfg_;
  RicBus& bus_;

  std::vector<CellState> cells_;
  std::vector<double> cio_;
  std::vector<Ue> ues_;
  std::vector<double> rsrp_;  // ues x cells, per-PRB dBm (NaN when not transmitting)
  std::vector<double> rx_mw_;  // ues x cells, wideband mW
  std::vector<char> outage_;
  std::vector<QueuedHandover> handovers_;
  std::vector<PmAccumulator> pm_;
  std::vector<char> load_subscribed_;  // per site
  std::vector<char> ue_subscribed_;    // per site
  double last_pm_s_{0.0};
  std::size_t forced_cleanups_{0};
};

}  // namespace tandem
