#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/ran.hpp"
#include "tandem/ricbus.hpp"
#include "tandem/scenario.hpp"

namespace tandem {

// COOS xApp

class BlockList {
 public:
  BlockList() = default;
  explicit BlockList(std::size_t cells) : until_(cells, 0.0) {}

  bool blocked(CellIndex cell, double t_s) const { return t_s < until_[cell]; }
  double blocked_until(CellIndex cell) const { return until_[cell]; }
  void block(CellIndex cell, double until_s) { until_[cell] = std::max(until_[cell], until_s); }
  std::size_t size() const { return until_.size(); }

 private:
  std::vector<double> until_;
};

struct CellView {
  CellIndex cell{0};
  Layer layer{Layer::Capacity};
  CellStatus status{CellStatus::Active};
  double load{0.0};
};

struct XappConfig {
  double t_block_s{600.0};
  std::size_t max_commands{5};
};

/// Threshold rules of the COOS xApp. Switch-on candidates are served
/// first (highest neighbor mean load first), then switch-off candidates
/// (lowest load first); every command blocks the cell and its neighbors.
std::vector<CellCommandPayload> xapp_decide(double t_s, std::span<const CellView> cells, const NeighborMap& neighbors,
                                            const CoosPolicy& policy, BlockList& blocks, const XappConfig& cfg = {});

// COOS rApp

struct RappConfig {
  double step_off{5.0};
  double step_on{5.0};
  double alpha_off_max{50.0};
  double alpha_on_min{20.0};

  void validate() const;
};

struct RappState {
  CoosPolicy policy;
  RappConfig cfg;
  int last_case{0};
};

/// First matching case (1..5) of the threshold adaptation rules.
int rapp_case(double beta_sys_pct, const CoosPolicy& policy, bool pp, std::size_t n_off,
              std::size_t n_active_capacity);

struct RappUpdate {
  RappState state;
  std::optional<CoosPolicy> policy;  // set only when a threshold moved
};

RappUpdate rapp_update(const RappState& state, double beta_sys_pct, bool pp, std::size_t n_off,
                       std::size_t n_active_capacity);

/// 1 iff some cell has at least two state changes in (t_s - window_s, t_s].
/// Drain completions (pending_off -> off) are part of the switch-off that
/// started them and are not counted separately.
bool detect_ping_pong(std::span<const StateChange> log, double t_s, double window_s);

// TS xApp

struct Handover {
  UeId ue{0};
  CellIndex target{0};

  friend bool operator==(const Handover&, const Handover&) = default;
};

struct UeReport {
  UeId ue{0};
  std::optional<CellIndex> serving;
  std::vector<double> rsrp_dbm;
};

/// Moves every UE of `cell` to its best active alternative.
std::vector<Handover> ts_on_cell_to_be_off(CellIndex cell, std::span<const UeReport> ues,
                                           std::span<const CellStatus> status, std::span<const double> cio_db);

/// Hysteresis handover: target iff best alternative beats serving by more
/// than `hysteresis_db`. A UE whose serving cell is no longer active is
/// moved unconditionally.
std::optional<CellIndex> ts_mobility(const UeReport& ue, std::span<const CellStatus> status,
                                     std::span<const double> cio_db, double hysteresis_db);

// Bus-attached applications

struct Topology {
  std::vector<Layer> layer;
  std::vector<SiteIndex> site;
  std::vector<double> cio_db;
  std::vector<SiteIndex> sites;  // in setup order

  void learn(const E2SetupPayload& setup);
};

class CoosXApp {
 public:
  CoosXApp(RicBus& bus, NeighborMap neighbors, CoosPolicy initial, XappConfig cfg);
  CoosXApp(const CoosXApp&) = delete;
  CoosXApp& operator=(const CoosXApp&) = delete;

  void subscribe_all(double t_s);
  /// Evaluates the threshold rules on the loads reported since the last call.
  std::size_t decide(double t_s);

  const CoosPolicy& policy() const { return policy_; }
  const BlockList& blocks() const { return blocks_; }
  std::size_t rejected() const { return rejected_; }

 private:
  void on_message(const Message& m);

  RicBus& bus_;
  NeighborMap neighbors_;
  CoosPolicy policy_;
  XappConfig cfg_;
  Topology topo_;
  BlockList blocks_;
  std::vector<CellStatus> status_;
  std::vector<double> load_sum_;
  std::vector<std::size_t> load_n_;
  std::vector<double> last_load_;
  std::size_t rejected_{0};
};

class TsXApp {
 public:
  /// A disabled TS xApp keeps its subscriptions but issues no handovers.
  TsXApp(RicBus& bus, double hysteresis_db, bool enabled = true);
  TsXApp(const TsXApp&) = delete;
  TsXApp& operator=(const TsXApp&) = delete;

  void subscribe_all(double t_s);
  std::size_t mobility_handovers() const { return mobility_; }
  std::size_t cleanup_handovers() const { return cleanup_; }

 private:
  void on_message(const Message& m);
  void command(const Handover& h, double t_s);

  RicBus& bus_;
  double hysteresis_db_;
  bool enabled_;
  Topology topo_;
  std::vector<CellStatus> status_;
  double reports_t_s_{-1.0};
  std::vector<UeReport> reports_;  // the latest measurement batch
  std::size_t mobility_{0};
  std::size_t cleanup_{0};
};

struct RappRecord {
  double t_s{0.0};
  double beta_sys_pct{0.0};
  bool pp{false};
  std::size_t n_off{0};
  std::size_t n_active_capacity{0};
  int case_id{5};
  CoosPolicy policy;
  bool emitted{false};

  friend bool operator==(const RappRecord&, const RappRecord&) = default;
};

class CoosRApp {
 public:
  CoosRApp(RicBus& bus, RappState initial, double pp_window_s);
  CoosRApp(const CoosRApp&) = delete;
  CoosRApp& operator=(const CoosRApp&) = delete;

  /// Runs one adaptation step over the PM reports received since the last call.
  const RappRecord& update(double t_s);

  const RappState& state() const { return state_; }
  const std::vector<RappRecord>& records() const { return records_; }

 private:
  void on_message(const Message& m);

  RicBus& bus_;
  RappState state_;
  double pp_window_s_;
  double ue_seconds_{0.0};
  double deficit_ue_seconds_{0.0};
  std::map<CellIndex, std::pair<Layer, CellStatus>> cells_;
  std::vector<StateChange> switches_;
  std::vector<RappRecord> records_;
};

}  // namespace tandem
