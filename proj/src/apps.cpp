#include "tandem/apps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tandem {

std::vector<CellCommandPayload> xapp_decide(double t_s, std::span<const CellView> cells, const NeighborMap& neighbors,
                                            const CoosPolicy& policy, BlockList& blocks, const XappConfig& cfg) {
  struct Candidate {
    CellIndex cell;
    double key;
  };
  const double on_threshold = policy.alpha_on / 100.0;
  const double off_threshold = policy.alpha_off / 100.0;

  std::vector<Candidate> on;
  std::vector<Candidate> off;
  for (const CellView& v : cells) {
    if (v.layer == Layer::Coverage || blocks.blocked(v.cell, t_s)) continue;
    if (v.status == CellStatus::Off) {
      double sum = 0.0;
      std::size_t n = 0;
      for (CellIndex nb : neighbors.neighbors(v.cell)) {
        if (cells[nb].status != CellStatus::Active) continue;
        sum += cells[nb].load;
        ++n;
      }
      if (n > 0 && sum / n > on_threshold) on.push_back({v.cell, sum / n});
    } else if (v.status == CellStatus::Active && v.load < off_threshold) {
      off.push_back({v.cell, v.load});
    }
  }
  std::stable_sort(on.begin(), on.end(), [](const Candidate& a, const Candidate& b) { return a.key > b.key; });
  std::stable_sort(off.begin(), off.end(), [](const Candidate& a, const Candidate& b) { return a.key < b.key; });

  std::vector<CellCommandPayload> commands;
  auto issue = [&](const Candidate& c, CellAction action) {
    if (commands.size() >= cfg.max_commands || blocks.blocked(c.cell, t_s)) return;
    commands.push_back({action, c.cell});
    const double until = t_s + cfg.t_block_s;
    blocks.block(c.cell, until);
    for (CellIndex nb : neighbors.neighbors(c.cell)) blocks.block(nb, until);
  };
  for (const auto& c : on) issue(c, CellAction::On);
  for (const auto& c : off) issue(c, CellAction::Off);
  return commands;
}

void RappConfig::validate() const {
  if (!(step_off > 0 && step_on > 0)) throw std::invalid_argument("rapp: step sizes must be > 0");
  if (!(alpha_off_max >= 0 && alpha_off_max <= 100)) throw std::invalid_argument("rapp: alpha_off_max must lie in [0, 100]");
  if (!(alpha_on_min >= 0 && alpha_on_min <= 100)) throw std::invalid_argument("rapp: alpha_on_min must lie in [0, 100]");
}

int rapp_case(double beta_sys_pct, const CoosPolicy& policy, bool pp, std::size_t n_off,
              std::size_t n_active_capacity) {
  const bool above = beta_sys_pct > policy.target_outage_hi;
  const bool below = beta_sys_pct < policy.target_outage_lo;
  if (above && pp) return 1;
  if (above && n_off > 0) return 2;
  if (below && pp) return 3;
  if (below && n_active_capacity > 0) return 4;
  return 5;
}

RappUpdate rapp_update(const RappState& state, double beta_sys_pct, bool pp, std::size_t n_off,
                       std::size_t n_active_capacity) {
  RappUpdate out{state, std::nullopt};
  CoosPolicy& p = out.state.policy;
  const RappConfig& cfg = state.cfg;
  const int id = rapp_case(beta_sys_pct, p, pp, n_off, n_active_capacity);
  switch (id) {
    case 1: p.alpha_off = std::max(0.0, p.alpha_off - cfg.step_off); break;
    case 2: p.alpha_on = std::max(cfg.alpha_on_min, p.alpha_on - cfg.step_on); break;
    case 3: p.alpha_on = std::min(100.0, p.alpha_on + cfg.step_on); break;
    case 4: p.alpha_off = std::min(cfg.alpha_off_max, p.alpha_off + cfg.step_off); break;
    default: break;
  }
  out.state.last_case = id;
  if (!(p == state.policy)) out.policy = p;
  return out;
}

bool detect_ping_pong(std::span<const StateChange> log, double t_s, double window_s) {
  std::map<CellIndex, int> counts;
  for (const StateChange& e : log) {
    if (e.from == CellStatus::PendingOff && e.to == CellStatus::Off) continue;
    if (e.t_s <= t_s - window_s || e.t_s > t_s) continue;
    if (++counts[e.cell] >= 2) return true;
  }
  return false;
}

std::vector<Handover> ts_on_cell_to_be_off(CellIndex cell, std::span<const UeReport> ues,
                                           std::span<const CellStatus> status, std::span<const double> cio_db) {
  std::vector<Handover> out;
  for (const UeReport& ue : ues) {
    if (ue.serving != cell) continue;
    if (auto target = associate(ue.rsrp_dbm, status, cio_db, cell)) out.push_back({ue.ue, *target});
  }
  return out;
}

std::optional<CellIndex> ts_mobility(const UeReport& ue, std::span<const CellStatus> status,
                                     std::span<const double> cio_db, double hysteresis_db) {
  if (!ue.serving) return std::nullopt;
  const CellIndex s = *ue.serving;
  const auto best = associate(ue.rsrp_dbm, status, cio_db, s);
  if (!best) return std::nullopt;
  if (status[s] != CellStatus::Active) return best;
  const double serving = ue.rsrp_dbm[s] + cio_db[s];
  const double candidate = ue.rsrp_dbm[*best] + cio_db[*best];
  if (candidate > serving + hysteresis_db) return best;
  return std::nullopt;
}

void Topology::learn(const E2SetupPayload& setup) {
  sites.push_back(setup.site);
  for (const CellInfo& c : setup.cells) {
    if (c.cell >= layer.size()) {
      layer.resize(c.cell + 1, Layer::Capacity);
      site.resize(c.cell + 1, 0);
      cio_db.resize(c.cell + 1, 0.0);
    }
    layer[c.cell] = c.layer;
    site[c.cell] = setup.site;
    cio_db[c.cell] = c.cio_db;
  }
}

// COOS xApp

CoosXApp::CoosXApp(RicBus& bus, NeighborMap neighbors, CoosPolicy initial, XappConfig cfg)
    : bus_(bus), neighbors_(std::move(neighbors)), policy_(initial), cfg_(cfg) {
  bus_.subscribe({Interface::E2, Kind::Setup, Endpoint::near_rt_ric()}, [this](const Message& m) { on_message(m); });
  bus_.subscribe({Interface::E2, std::nullopt, Endpoint::coos_xapp()}, [this](const Message& m) { on_message(m); });
  bus_.subscribe({Interface::A1, Kind::Policy, Endpoint::coos_xapp()}, [this](const Message& m) { on_message(m); });
}

void CoosXApp::subscribe_all(double t_s) {
  for (SiteIndex s : topo_.sites)
    bus_.publish({Interface::E2, Kind::SubscriptionReq, t_s, Endpoint::coos_xapp(), Endpoint::site(s),
                  SubscriptionPayload{Topic::CellLoad, s, true}});
}

void CoosXApp::on_message(const Message& m) {
  if (const auto* setup = std::get_if<E2SetupPayload>(&m.payload)) {
    topo_.learn(*setup);
    const std::size_t n = topo_.layer.size();
    status_.resize(n, CellStatus::Active);
    load_sum_.resize(n, 0.0);
    load_n_.resize(n, 0);
    last_load_.resize(n, 0.0);
    BlockList grown(n);
    for (CellIndex c = 0; c < blocks_.size(); ++c) grown.block(c, blocks_.blocked_until(c));
    blocks_ = std::move(grown);
  } else if (const auto* load = std::get_if<CellLoadPayload>(&m.payload)) {
    load_sum_[load->cell] += load->load;
    ++load_n_[load->cell];
  } else if (const auto* state = std::get_if<CellStatePayload>(&m.payload)) {
    status_[state->cell] = state->status;
  } else if (const auto* policy = std::get_if<PolicyPayload>(&m.payload)) {
    policy_ = policy->policy;
  } else if (const auto* ack = std::get_if<ControlAckPayload>(&m.payload)) {
    if (!ack->accepted) ++rejected_;
  }
}

std::size_t CoosXApp::decide(double t_s) {
  const std::size_t n = topo_.layer.size();
  std::vector<CellView> view(n);
  for (CellIndex c = 0; c < n; ++c) {
    if (load_n_[c] > 0) last_load_[c] = load_sum_[c] / static_cast<double>(load_n_[c]);
    if (status_[c] == CellStatus::Off) last_load_[c] = 0.0;
    load_sum_[c] = 0.0;
    load_n_[c] = 0;
    view[c] = {c, topo_.layer[c], status_[c], last_load_[c]};
  }
  const auto commands = xapp_decide(t_s, view, neighbors_, policy_, blocks_, cfg_);
  for (const auto& cmd : commands)
    bus_.publish({Interface::E2, Kind::ControlReq, t_s, Endpoint::coos_xapp(), Endpoint::site(topo_.site[cmd.cell]),
                  cmd});
  return commands.size();
}

// TS xApp

TsXApp::TsXApp(RicBus& bus, double hysteresis_db, bool enabled)
    : bus_(bus), hysteresis_db_(hysteresis_db), enabled_(enabled) {
  bus_.subscribe({Interface::E2, Kind::Setup, Endpoint::near_rt_ric()}, [this](const Message& m) { on_message(m); });
  bus_.subscribe({Interface::E2, Kind::Indication, Endpoint::ts_xapp()}, [this](const Message& m) { on_message(m); });
}

void TsXApp::subscribe_all(double t_s) {
  for (SiteIndex s : topo_.sites)
    bus_.publish({Interface::E2, Kind::SubscriptionReq, t_s, Endpoint::ts_xapp(), Endpoint::site(s),
                  SubscriptionPayload{Topic::UeMeasurement, s, true}});
}

void TsXApp::command(const Handover& h, double t_s) {
  bus_.publish({Interface::E2, Kind::ControlReq, t_s, Endpoint::ts_xapp(), Endpoint::site(topo_.site[h.target]),
                HandoverPayload{h.ue, h.target}});
}

void TsXApp::on_message(const Message& m) {
  if (const auto* setup = std::get_if<E2SetupPayload>(&m.payload)) {
    topo_.learn(*setup);
    status_.resize(topo_.layer.size(), CellStatus::Active);
  } else if (const auto* meas = std::get_if<UeMeasurementPayload>(&m.payload)) {
    if (m.t_s != reports_t_s_) {
      reports_.clear();
      reports_t_s_ = m.t_s;
    }
    reports_.push_back({meas->ue, meas->serving, meas->rsrp_dbm});
    if (!enabled_) return;
    if (auto target = ts_mobility(reports_.back(), status_, topo_.cio_db, hysteresis_db_)) {
      ++mobility_;
      command({meas->ue, *target}, m.t_s);
    }
  } else if (const auto* off = std::get_if<CellToBeOffPayload>(&m.payload)) {
    status_[off->cell] = CellStatus::PendingOff;
    if (!enabled_) return;
    for (const Handover& h : ts_on_cell_to_be_off(off->cell, reports_, status_, topo_.cio_db)) {
      ++cleanup_;
      command(h, m.t_s);
    }
  } else if (const auto* state = std::get_if<CellStatePayload>(&m.payload)) {
    status_[state->cell] = state->status;
  }
}

// COOS rApp

CoosRApp::CoosRApp(RicBus& bus, RappState initial, double pp_window_s)
    : bus_(bus), state_(initial), pp_window_s_(pp_window_s) {
  state_.cfg.validate();
  bus_.subscribe({Interface::O1, Kind::PmReport, Endpoint::coos_rapp()}, [this](const Message& m) { on_message(m); });
}

void CoosRApp::on_message(const Message& m) {
  const auto* pm = std::get_if<PmReportPayload>(&m.payload);
  if (!pm) return;
  ue_seconds_ += pm->ue_seconds;
  deficit_ue_seconds_ += pm->deficit_ue_seconds;
  cells_[pm->cell] = {pm->layer, pm->status};
  for (double t : pm->switch_times_s) switches_.push_back({t, pm->cell, CellStatus::Active, CellStatus::Active, ChangeCause::Command});
}

const RappRecord& CoosRApp::update(double t_s) {
  RappRecord r;
  r.t_s = t_s;
  r.beta_sys_pct = ue_seconds_ > 0 ? 100.0 * deficit_ue_seconds_ / ue_seconds_ : 0.0;
  std::erase_if(switches_, [&](const StateChange& e) { return e.t_s <= t_s - pp_window_s_; });
  r.pp = detect_ping_pong(switches_, t_s, pp_window_s_);
  for (const auto& [cell, info] : cells_) {
    if (info.first != Layer::Capacity) continue;
    if (info.second == CellStatus::Off) ++r.n_off;
    if (info.second == CellStatus::Active) ++r.n_active_capacity;
  }
  const RappUpdate u = rapp_update(state_, r.beta_sys_pct, r.pp, r.n_off, r.n_active_capacity);
  state_ = u.state;
  r.case_id = state_.last_case;
  r.policy = state_.policy;
  r.emitted = u.policy.has_value();
  if (u.policy)
    bus_.publish({Interface::A1, Kind::Policy, t_s, Endpoint::coos_rapp(), Endpoint::coos_xapp(), PolicyPayload{*u.policy}});
  ue_seconds_ = 0.0;
  deficit_ue_seconds_ = 0.0;
  records_.push_back(r);
  return records_.back();
}

}  // namespace tandem
