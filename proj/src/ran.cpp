#include "tandem/ran.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <fmt/format.h>

namespace tandem {

std::string_view to_string(ChangeCause cause) {
  switch (cause) {
    case ChangeCause::Command: return "command";
    case ChangeCause::Drained: return "drained";
    case ChangeCause::ForcedTimeout: return "forced_timeout";
    case ChangeCause::Manual: return "manual";
  }
  return "?";
}

ScheduleResult schedule_cell(int n_prb, double prb_bandwidth_hz, std::span<const UeLink> ues) {
  ScheduleResult out;
  const std::size_t n = ues.size();
  out.achieved_bps.assign(n, 0.0);
  out.prbs.assign(n, 0.0);
  out.outage.assign(n, 0);
  if (n == 0 || n_prb <= 0) return out;

  std::vector<double> required(n, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double per_prb = ues[i].se_bps_hz * prb_bandwidth_hz;
    if (per_prb > 0) {
      required[i] = ues[i].demand_bps / per_prb;
      total += required[i];
    } else {
      out.outage[i] = 1;  // below the SINR floor: unschedulable
    }
  }

  const double capacity = n_prb;
  const bool congested = total > capacity;
  for (std::size_t i = 0; i < n; ++i) {
    if (out.outage[i]) continue;
    const double per_prb = ues[i].se_bps_hz * prb_bandwidth_hz;
    if (!congested) {
      out.prbs[i] = required[i];
      out.achieved_bps[i] = ues[i].demand_bps;
    } else {
      out.prbs[i] = capacity * required[i] / total;
      out.achieved_bps[i] = std::min(ues[i].demand_bps, out.prbs[i] * per_prb);
      out.outage[i] = 1;
    }
  }
  out.load = std::min(1.0, total / capacity);
  return out;
}

double cell_power(CellStatus status, double load, const PowerParams& params) {
  if (status == CellStatus::Off) return params.p_sleep_w;
  return params.p0_w + params.delta_p * load * params.p_tx_max_w;
}

std::optional<CellIndex> associate(std::span<const double> rsrp_dbm, std::span<const CellStatus> status,
                                   std::span<const double> cio_db, std::optional<CellIndex> exclude) {
  std::optional<CellIndex> best;
  double best_value = -std::numeric_limits<double>::infinity();
  for (CellIndex c = 0; c < rsrp_dbm.size(); ++c) {
    if (status[c] != CellStatus::Active || (exclude && *exclude == c)) continue;
    if (std::isnan(rsrp_dbm[c])) continue;
    const double v = rsrp_dbm[c] + (cio_db.empty() ? 0.0 : cio_db[c]);
    if (!best || v > best_value) {
      best = c;
      best_value = v;
    }
  }
  return best;
}

Ran::Ran(const Scenario& scenario, const ShadowField& field, const PropagationConfig& prop, RanConfig cfg,
         RicBus& bus)
    : scenario_(scenario), field_(field), prop_(prop), links_(scenario, prop), cfg_(cfg), bus_(bus) {
  const std::size_t n = scenario.cells.size();
  cells_.resize(n);
  cio_.resize(n);
  pm_.resize(n);
  for (CellIndex c = 0; c < n; ++c) {
    cells_[c].cell = c;
    cells_[c].layer = scenario.cells[c].layer;
    cio_[c] = scenario.cells[c].cio_db;
  }
  load_subscribed_.assign(scenario.sites.size(), 0);
  ue_subscribed_.assign(scenario.sites.size(), 0);

  bus_.subscribe({Interface::E2, Kind::SubscriptionReq, std::nullopt}, [this](const Message& m) { on_message(m); });
  bus_.subscribe({Interface::E2, Kind::ControlReq, std::nullopt}, [this](const Message& m) { on_message(m); });
}

void Ran::publish_setup(double t_s) {
  for (SiteIndex s = 0; s < scenario_.sites.size(); ++s) {
    E2SetupPayload p;
    p.site = s;
    for (CellIndex c = 0; c < scenario_.cells.size(); ++c)
      if (scenario_.cells[c].site == s) p.cells.push_back({c, cells_[c].layer, cio_[c]});
    bus_.publish({Interface::E2, Kind::Setup, t_s, Endpoint::site(s), Endpoint::near_rt_ric(), std::move(p)});
  }
}

void Ran::on_message(const Message& m) {
  if (m.kind == Kind::SubscriptionReq) {
    const auto* sub = std::get_if<SubscriptionPayload>(&m.payload);
    if (!sub) return;
    SubscriptionPayload resp = *sub;
    resp.accepted = sub->node < scenario_.sites.size();
    if (resp.accepted) {
      if (sub->topic == Topic::CellLoad) load_subscribed_[sub->node] = 1;
      if (sub->topic == Topic::UeMeasurement) ue_subscribed_[sub->node] = 1;
    }
    bus_.publish({Interface::E2, Kind::SubscriptionResp, m.t_s, m.destination, m.source, resp});
    return;
  }

  if (const auto* cmd = std::get_if<CellCommandPayload>(&m.payload)) {
    CommandOutcome outcome = check_command(*cmd, m.t_s);
    ack(m, m.t_s, outcome);
    if (outcome.accepted) execute_command(*cmd, m.t_s);
    return;
  }

  if (const auto* ho = std::get_if<HandoverPayload>(&m.payload)) {
    CommandOutcome outcome;
    const auto it = std::lower_bound(ues_.begin(), ues_.end(), ho->ue,
                                     [](const Ue& u, UeId id) { return u.id < id; });
    if (it == ues_.end() || it->id != ho->ue) {
      outcome.reason = "unknown ue";
    } else if (ho->target >= cells_.size() || cells_[ho->target].status != CellStatus::Active) {
      outcome.reason = "target cell not active";
    } else {
      outcome.accepted = true;
      handovers_.push_back({ho->ue, ho->target});
    }
    ack(m, m.t_s, outcome);
  }
}

void Ran::ack(const Message& request, double t_s, const CommandOutcome& outcome) {
  bus_.publish({Interface::E2, Kind::ControlAck, t_s, request.destination, request.source,
                ControlAckPayload{request.seq, outcome.accepted, outcome.reason}});
}

CommandOutcome Ran::check_command(const CellCommandPayload& cmd, double t_s) const {
  if (cmd.cell >= cells_.size()) return {false, fmt::format("unknown cell {}", cmd.cell)};
  const CellState& cs = cells_[cmd.cell];
  if (cs.layer == Layer::Coverage) return {false, fmt::format("cell {} is a coverage cell and cannot be switched", cmd.cell)};
  if (t_s < cs.blocked_until_s) return {false, fmt::format("cell {} is blocked until {}", cmd.cell, cs.blocked_until_s)};
  if (cmd.action == CellAction::Off && cs.status != CellStatus::Active)
    return {false, fmt::format("cell {} is not active", cmd.cell)};
  if (cmd.action == CellAction::On && cs.status != CellStatus::Off)
    return {false, fmt::format("cell {} is not off", cmd.cell)};
  return {true, {}};
}

void Ran::execute_command(const CellCommandPayload& cmd, double t_s) {
  CellState& cs = cells_[cmd.cell];
  cs.blocked_until_s = t_s + cfg_.command_guard_s;
  if (cmd.action == CellAction::On) {
    record(cmd.cell, t_s, CellStatus::Active, ChangeCause::Command);
    notify_state(cmd.cell, t_s, ChangeCause::Command);
    return;
  }
  record(cmd.cell, t_s, CellStatus::PendingOff, ChangeCause::Command);
  cs.pending_since_s = t_s;
  bus_.publish({Interface::E2, Kind::Indication, t_s, Endpoint::cell(cmd.cell), Endpoint::ts_xapp(),
                CellToBeOffPayload{cmd.cell}});
  if (ues_served_by(cmd.cell) == 0) complete_off(cmd.cell, t_s, ChangeCause::Drained);
}

CommandOutcome Ran::apply_cell_command(const CellCommandPayload& cmd, double t_s) {
  CommandOutcome outcome = check_command(cmd, t_s);
  if (outcome.accepted) execute_command(cmd, t_s);
  return outcome;
}

void Ran::force_off(CellIndex cell, double t_s) {
  if (cell >= cells_.size()) throw std::out_of_range("force_off: unknown cell");
  if (cells_[cell].layer == Layer::Coverage) throw std::logic_error("force_off: coverage cells stay active");
  if (cells_[cell].status == CellStatus::Off) return;
  for (std::size_t i = 0; i < ues_.size(); ++i) {
    if (ues_[i].serving_cell != cell) continue;
    ues_[i].serving_cell.reset();
  }
  record(cell, t_s, CellStatus::Off, ChangeCause::Manual);
  cells_[cell].load = 0.0;
}

void Ran::record(CellIndex cell, double t_s, CellStatus to, ChangeCause cause) {
  CellState& cs = cells_[cell];
  cs.log.push_back({t_s, cell, cs.status, to, cause});
  cs.status = to;
  if (cause == ChangeCause::Command) pm_[cell].switch_times_s.push_back(t_s);
}

void Ran::notify_state(CellIndex cell, double t_s, ChangeCause cause) {
  const CellStatePayload p{cell, cells_[cell].status, cause};
  bus_.publish({Interface::E2, Kind::Indication, t_s, Endpoint::cell(cell), Endpoint::coos_xapp(), p});
  bus_.publish({Interface::E2, Kind::Indication, t_s, Endpoint::cell(cell), Endpoint::ts_xapp(), p});
}

void Ran::complete_off(CellIndex cell, double t_s, ChangeCause cause) {
  record(cell, t_s, CellStatus::Off, cause);
  cells_[cell].load = 0.0;
  notify_state(cell, t_s, cause);
}

void Ran::admit(std::vector<Ue> arrivals) {
  const std::size_t n_cells = cells_.size();
  for (auto& ue : arrivals) {
    if (!ues_.empty() && ue.id <= ues_.back().id) throw std::logic_error("admit: UE ids must be increasing");
    ues_.push_back(std::move(ue));
  }
  rsrp_.resize(ues_.size() * n_cells, std::numeric_limits<double>::quiet_NaN());
  rx_mw_.resize(ues_.size() * n_cells, 0.0);
  outage_.resize(ues_.size(), 0);
}

std::size_t Ran::remove_departed(double t_s) {
  const std::size_t n_cells = cells_.size();
  std::size_t keep = 0;
  for (std::size_t i = 0; i < ues_.size(); ++i) {
    if (ues_[i].departs_at_s <= t_s) continue;
    if (keep != i) {
      ues_[keep] = std::move(ues_[i]);
      std::copy_n(rsrp_.begin() + i * n_cells, n_cells, rsrp_.begin() + keep * n_cells);
      std::copy_n(rx_mw_.begin() + i * n_cells, n_cells, rx_mw_.begin() + keep * n_cells);
      outage_[keep] = outage_[i];
    }
    ++keep;
  }
  const std::size_t removed = ues_.size() - keep;
  ues_.resize(keep);
  rsrp_.resize(keep * n_cells);
  rx_mw_.resize(keep * n_cells);
  outage_.resize(keep);
  return removed;
}

std::span<const double> Ran::rsrp_of(std::size_t ue_index) const {
  const std::size_t n = cells_.size();
  return std::span<const double>(rsrp_).subspan(ue_index * n, n);
}

std::vector<CellStatus> Ran::statuses() const {
  std::vector<CellStatus> s(cells_.size());
  for (std::size_t c = 0; c < cells_.size(); ++c) s[c] = cells_[c].status;
  return s;
}

void Ran::update_links() {
  const std::size_t n_cells = cells_.size();
  std::vector<double> prb_offset(n_cells);
  for (CellIndex c = 0; c < n_cells; ++c) prb_offset[c] = 10.0 * std::log10(scenario_.cells[c].n_prb);
  const auto status = statuses();

  for (std::size_t i = 0; i < ues_.size(); ++i) {
    Ue& ue = ues_[i];
    const std::size_t pixel = scenario_.pixel_index(ue.pos);
    double* rs = rsrp_.data() + i * n_cells;
    double* rx = rx_mw_.data() + i * n_cells;
    for (CellIndex c = 0; c < n_cells; ++c) {
      if (status[c] == CellStatus::Off) {
        rs[c] = std::numeric_limits<double>::quiet_NaN();
        rx[c] = 0.0;
        continue;
      }
      const CellDef& cell = scenario_.cells[c];
      const double pl = links_.loss_db(c, ue.pos, field_.condition(c, pixel));
      const double dbm = cell.tx_power_dbm - pl + field_.at(c, pixel);
      rx[c] = dbm_to_mw(dbm);
      rs[c] = dbm - prb_offset[c];
    }
    if (ue.serving_cell && status[*ue.serving_cell] == CellStatus::Off) ue.serving_cell.reset();
    if (!ue.serving_cell) ue.serving_cell = associate(rsrp_of(i), status, cio_);
  }
}

void Ran::execute_handovers(double /*t_s*/) {
  for (const auto& ho : handovers_) {
    const auto it = std::lower_bound(ues_.begin(), ues_.end(), ho.ue, [](const Ue& u, UeId id) { return u.id < id; });
    if (it == ues_.end() || it->id != ho.ue) continue;  // departed meanwhile
    if (cells_[ho.target].status != CellStatus::Active) continue;
    it->serving_cell = ho.target;
  }
  handovers_.clear();
}

void Ran::progress_pending(double t_s) {
  const auto status = statuses();
  for (CellIndex c = 0; c < cells_.size(); ++c) {
    if (cells_[c].status != CellStatus::PendingOff) continue;
    if (ues_served_by(c) == 0) {
      complete_off(c, t_s, ChangeCause::Drained);
      continue;
    }
    if (t_s - cells_[c].pending_since_s < cfg_.cleanup_timeout_s) continue;
    for (std::size_t i = 0; i < ues_.size(); ++i) {
      if (ues_[i].serving_cell != c) continue;
      ues_[i].serving_cell = associate(rsrp_of(i), status, cio_, c);
    }
    ++forced_cleanups_;
    complete_off(c, t_s, ChangeCause::ForcedTimeout);
  }
}

void Ran::schedule() {
  const std::size_t n_cells = cells_.size();
  std::vector<std::vector<std::size_t>> served(n_cells);
  for (std::size_t i = 0; i < ues_.size(); ++i)
    if (ues_[i].serving_cell) served[*ues_[i].serving_cell].push_back(i);

  std::vector<char> transmitting(n_cells);
  for (CellIndex c = 0; c < n_cells; ++c) transmitting[c] = cells_[c].status != CellStatus::Off;

  std::fill(outage_.begin(), outage_.end(), 0);
  std::vector<UeLink> links;
  for (CellIndex c = 0; c < n_cells; ++c) {
    if (!transmitting[c]) {
      cells_[c].load = 0.0;
      continue;
    }
    links.clear();
    for (std::size_t i : served[c]) {
      const std::span<const double> rx(rx_mw_.data() + i * n_cells, n_cells);
      const double s = sinr_from_rx(scenario_, rx, c, transmitting, prop_);
      links.push_back({ues_[i].demand_bps, spectral_efficiency(s, prop_)});
    }
    const CellDef& cell = scenario_.cells[c];
    const ScheduleResult r = schedule_cell(cell.n_prb, cell.prb_bandwidth_hz(), links);
    cells_[c].load = r.load;
    for (std::size_t k = 0; k < served[c].size(); ++k) {
      const std::size_t i = served[c][k];
      ues_[i].achieved_bps = r.achieved_bps[k];
      outage_[i] = r.outage[k];
    }
  }
  for (std::size_t i = 0; i < ues_.size(); ++i) {
    if (!ues_[i].serving_cell) {
      ues_[i].achieved_bps = 0.0;
      outage_[i] = 1;
    }
  }
}

std::size_t Ran::emit_kpm_reports(double t_s) {
  std::size_t published = 0;
  const double phase = std::fmod(t_s, cfg_.kpm_period_s);
  if (phase < 1e-9 || cfg_.kpm_period_s - phase < 1e-9) {
    for (CellIndex c = 0; c < cells_.size(); ++c) {
      if (cells_[c].status == CellStatus::Off) continue;
      if (!load_subscribed_[scenario_.cells[c].site]) continue;
      bus_.publish({Interface::E2, Kind::Indication, t_s, Endpoint::cell(c), Endpoint::coos_xapp(),
                    CellLoadPayload{c, cells_[c].load}});
      ++published;
    }
  }
  for (std::size_t i = 0; i < ues_.size(); ++i) {
    const Ue& ue = ues_[i];
    if (!ue.serving_cell || !ue_subscribed_[scenario_.cells[*ue.serving_cell].site]) continue;
    const auto rs = rsrp_of(i);
    UeMeasurementPayload p{ue.id, ue.serving_cell, std::vector<double>(rs.begin(), rs.end())};
    bus_.publish({Interface::E2, Kind::Indication, t_s, Endpoint::ue(ue.id), Endpoint::ts_xapp(), std::move(p)});
    ++published;
  }
  return published;
}

void Ran::accumulate(double dt_s) {
  for (std::size_t i = 0; i < ues_.size(); ++i) {
    if (!ues_[i].serving_cell) continue;
    auto& acc = pm_[*ues_[i].serving_cell];
    acc.ue_seconds += dt_s;
    if (outage_[i]) acc.deficit_ue_seconds += dt_s;
  }
}

std::size_t Ran::emit_pm_reports(double t_s) {
  const double period = t_s - last_pm_s_;
  for (CellIndex c = 0; c < cells_.size(); ++c) {
    PmReportPayload p{c, cells_[c].layer, cells_[c].status, period, pm_[c].ue_seconds, pm_[c].deficit_ue_seconds,
                      std::move(pm_[c].switch_times_s)};
    pm_[c] = {};
    bus_.publish({Interface::O1, Kind::PmReport, t_s, Endpoint::cell(c), Endpoint::coos_rapp(), std::move(p)});
  }
  last_pm_s_ = t_s;
  return cells_.size();
}

double Ran::network_power_w() const {
  double total = 0.0;
  for (CellIndex c = 0; c < cells_.size(); ++c)
    total += cell_power(cells_[c].status, cells_[c].load, scenario_.cells[c].power);
  return total;
}

double Ran::offered_bps() const {
  double total = 0.0;
  for (const auto& ue : ues_) total += ue.demand_bps;
  return total;
}

std::size_t Ran::transmitting_count() const {
  return static_cast<std::size_t>(
      std::count_if(cells_.begin(), cells_.end(), [](const CellState& c) { return c.status != CellStatus::Off; }));
}

std::size_t Ran::ues_served_by(CellIndex cell) const {
  return static_cast<std::size_t>(
      std::count_if(ues_.begin(), ues_.end(), [cell](const Ue& u) { return u.serving_cell == cell; }));
}

}  // namespace tandem
