#include <cmath>
#include <filesystem>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "tandem/config.hpp"
#include "tandem/engine.hpp"

using namespace tandem;

namespace {

const Scenario& desk() {
  static const Scenario s = load_scenario(std::filesystem::path(TANDEM_SOURCE_DIR) / "scenarios" / "desk.json");
  return s;
}

SimConfig short_config(double hours = 1.0) {
  SimConfig c;
  c.horizon_s = hours * 3600.0;
  c.warmup_s = 600.0;
  return c;
}

// Switches cells quickly so that short runs exercise the control loop.
SimConfig busy_config(double hours = 1.0) {
  SimConfig c = short_config(hours);
  c.policy.alpha_off = 40.0;
  c.policy.alpha_on = 50.0;
  c.rapp.alpha_off_max = 50.0;
  c.t_block_s = 120.0;
  c.w_pp_s = 600.0;
  return c;
}

}  // namespace

TEST(ComputeOutage, HandCountedWindows) {
  const std::vector<UeWindowRecord> served{{10, 0}, {20, 0}};
  EXPECT_EQ(compute_outage(served).pct, 0.0);
  const std::vector<UeWindowRecord> half{{60, 60}};
  EXPECT_EQ(compute_outage(half).pct, 100.0);
  const std::vector<UeWindowRecord> three{{10, 0}, {10, 5}, {10, 0}};
  EXPECT_NEAR(compute_outage(three).pct, 100.0 * 5.0 / 30.0, 1e-12);
  EXPECT_NEAR(compute_outage(three, OutageWeighting::PerUe).pct, 100.0 / 3.0, 1e-12);
  const auto empty = compute_outage({});
  EXPECT_EQ(empty.pct, 0.0);
  EXPECT_TRUE(empty.empty);
}

TEST(Spearman, RankCorrelation) {
  const std::vector<double> x{1, 2, 3, 4}, up{10, 20, 30, 40}, down{4, 3, 2, 1};
  EXPECT_NEAR(spearman(x, up), 1.0, 1e-12);
  EXPECT_NEAR(spearman(x, down), -1.0, 1e-12);
  const std::vector<double> a{1, 2, 3, 4, 5}, b{5, 6, 7, 8, 7};
  // ranks of b: 1 2 3.5 5 3.5; hand-computed rho = 0.820782681668123
  EXPECT_NEAR(spearman(a, b), 0.820782681668123, 1e-12);
  EXPECT_THROW(spearman(std::vector<double>{1}, std::vector<double>{1}), std::invalid_argument);
}

TEST(SimConfig, Validation) {
  SimConfig c;
  EXPECT_NO_THROW(c.validate());
  c.t_x_s = 300.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.w_pp_s = 100.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.policy.alpha_off = 60.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.horizon_s = 10.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.set_goal(10.0, 2.0);
  EXPECT_EQ(c.policy.target_outage_lo, 8.0);
  EXPECT_EQ(c.policy.target_outage_hi, 12.0);
}

TEST(Run, DeterministicIncludingMessageLog) {
  const SimConfig c = busy_config(0.5);
  std::ostringstream log_a, log_b;
  const RunResult a = run(desk(), c, {&log_a});
  const RunResult b = run(desk(), c, {&log_b});
  EXPECT_EQ(a.digest(), b.digest());
  EXPECT_EQ(log_a.str(), log_b.str());
  EXPECT_EQ(a.series, b.series);
  EXPECT_EQ(a.events, b.events);
  SimConfig other = c;
  other.seed = 2;
  EXPECT_NE(run(desk(), other).digest(), a.digest());
}

TEST(Run, NoControllersNoActions) {
  SimConfig c = short_config(1.0);
  c.policy.alpha_off = 40.0;
  c.coos_xapp = c.rapp_enabled = c.ts_xapp = false;
  const RunResult r = run(desk(), c);
  EXPECT_TRUE(r.events.empty());
  EXPECT_EQ(r.commands.size(), 0u);
  EXPECT_EQ(r.counters.count(Interface::E2, Kind::ControlReq), 0u);
  EXPECT_EQ(r.counters.count(Interface::A1, Kind::Policy), 0u);
}

TEST(Run, EnergyAccounting) {
  SimConfig c = busy_config(1.0);
  c.warmup_s = 0.0;
  const RunResult r = run(desk(), c);
  EXPECT_NEAR(r.mean_power_w * r.horizon_s, r.energy_j, 1e-9 * r.energy_j);
  double cells = 0.0;
  for (double e : r.cell_energy_j) cells += e;
  EXPECT_NEAR(cells, r.energy_j, 1e-9 * r.energy_j);
}

TEST(Run, ReferencePowersMatchClosedForm) {
  const SimConfig c = short_config(1.0);
  for (auto mode : {ReferenceMode::AllActive, ReferenceMode::AllCapacityOff}) {
    const RunResult r = run(desk(), reference_config(c, mode));
    double expected = 0.0;
    for (CellIndex i = 0; i < desk().cells.size(); ++i) {
      const auto& p = desk().cells[i].power;
      const bool off = mode == ReferenceMode::AllCapacityOff && desk().cells[i].layer == Layer::Capacity;
      expected += off ? p.p_sleep_w : p.p0_w + p.delta_p * r.cell_mean_load[i] * p.p_tx_max_w;
    }
    EXPECT_NEAR(r.mean_power_w, expected, 1e-9 * expected);
    EXPECT_EQ(r.commanded_changes(), 0u);
  }
}

TEST(Run, MessageAccountingIdentity) {
  const SimConfig c = busy_config(1.0);
  const RunResult r = run(desk(), c);
  const auto& k = r.counters;
  EXPECT_TRUE(k.identity_holds());
  EXPECT_EQ(k.indications.ue_measurement, r.ue_reports);
  EXPECT_EQ(k.indications.cell_load, r.load_reports);
  EXPECT_EQ(k.indications.total(), k.count(Interface::E2, Kind::Indication));
  EXPECT_EQ(k.count(Interface::E2, Kind::ControlReq), r.commands.size());
  EXPECT_EQ(k.count(Interface::E2, Kind::ControlAck), r.commands.size());
  EXPECT_EQ(k.count(Interface::E2, Kind::Setup), desk().sites.size());
  EXPECT_EQ(k.count(Interface::E2, Kind::SubscriptionReq), 2 * desk().sites.size());
  EXPECT_EQ(k.count(Interface::E2, Kind::SubscriptionResp), 2 * desk().sites.size());
  EXPECT_EQ(k.count(Interface::O1, Kind::PmReport), desk().cells.size() * 60);
  std::size_t emitted = 0;
  for (const auto& rec : r.rapp) emitted += rec.emitted;
  EXPECT_EQ(k.count(Interface::A1, Kind::Policy), emitted);
  EXPECT_GT(r.commanded_changes(), 0u);
}

TEST(Run, TimescalesAndHierarchy) {
  const SimConfig c = busy_config(1.0);
  const RunResult r = run(desk(), c);
  for (const auto& cmd : r.commands) {
    if (cmd.action == "handover") {
      EXPECT_EQ(cmd.source, Role::TsXApp);
      continue;
    }
    EXPECT_EQ(cmd.source, Role::CoosXApp);
    EXPECT_NEAR(std::fmod(cmd.t_s, c.t_x_s), 0.0, 1e-9);
  }
  for (const auto& rec : r.rapp) EXPECT_NEAR(std::fmod(rec.t_s, c.t_r_s), 0.0, 1e-9);
  for (const auto& e : r.events) {
    EXPECT_EQ(desk().cells[e.cell].layer, Layer::Capacity);
    if (e.cause == ChangeCause::Command) EXPECT_NEAR(std::fmod(e.t_s, c.t_x_s), 0.0, 1e-9);
  }
}

TEST(Run, BlockingHoldsBetweenCommandedChanges) {
  const SimConfig c = busy_config(2.0);
  const RunResult r = run(desk(), c);
  std::map<CellIndex, double> last;
  for (const auto& e : r.events) {
    if (e.cause != ChangeCause::Command) continue;
    if (auto it = last.find(e.cell); it != last.end()) EXPECT_GE(e.t_s - it->second, c.t_block_s);
    last[e.cell] = e.t_s;
  }
}

TEST(Run, FixedSlotHoldsTraffic) {
  SimConfig c = short_config(0.5);
  c.fixed_slot = 38;
  c.coos_xapp = c.rapp_enabled = false;
  const RunResult r = run(desk(), c);
  double expected = 0.0;
  for (const auto& p : desk().pixels) expected += p.slots[38].mean_active_ues;
  EXPECT_NEAR(r.mean_active_ues, expected, 0.3 * expected);
}

TEST(Sweep, RowsAndErrors) {
  const SimConfig c = busy_config(0.5);
  EXPECT_THROW(sweep_outage_goals(desk(), c, {}), std::invalid_argument);
  const auto rows = sweep_outage_goals(desk(), c, {15.0}, 2);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].label, "goal");
  EXPECT_EQ(rows[0].goal_pct, 15.0);
  EXPECT_EQ(rows[1].label, "all_active");
  EXPECT_EQ(rows[2].label, "all_capacity_off");
  EXPECT_GT(rows[1].power_w, rows[2].power_w);
  const auto sorted = sweep_outage_goals(desk(), c, {20.0, 5.0}, 1);
  EXPECT_EQ(sorted[0].goal_pct, 5.0);
  EXPECT_EQ(sorted[1].goal_pct, 20.0);
}

TEST(Csv, DocumentedHeaders) {
  const RunResult r = run(desk(), busy_config(0.25));
  std::ostringstream ts, ev, sw;
  write_timeseries_csv(ts, r);
  write_events_csv(ev, r, desk());
  const std::vector<SweepRow> rows{{"goal", 5.0, 4.0, 100.0, 1}, {"all_active", std::nullopt, 1.0, 200.0, 0}};
  write_sweep_csv(sw, rows);
  EXPECT_EQ(ts.str().substr(0, ts.str().find('\n')), "t_s,beta_sys_pct,alpha_off,alpha_on,n_off,power_w,n_ues,offered_bps");
  EXPECT_EQ(ev.str().substr(0, ev.str().find('\n')), "t_s,cell,cell_id,from,to,cause");
  EXPECT_EQ(sw.str(), "label,goal_pct,outage_pct,power_w\ngoal,5,4,100\nall_active,,1,200\n");
  const std::string body = ts.str();
  EXPECT_EQ(std::count(body.begin(), body.end(), '\n'), 1 + static_cast<long>(r.series.size()));
}
