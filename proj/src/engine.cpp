#include "tandem/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <thread>
#include <unordered_map>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace tandem {

namespace {

long long ticks_of(double period_s, double tick_s) { return std::llround(period_s / tick_s); }

bool is_multiple(double period_s, double tick_s) {
  const long long k = ticks_of(period_s, tick_s);
  return k >= 1 && std::abs(static_cast<double>(k) * tick_s - period_s) <= 1e-9 * period_s;
}

}  // namespace

void SimConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("config: " + what); };
  if (!(tick_s > 0)) fail("tick_s must be > 0");
  if (!is_multiple(horizon_s, tick_s)) fail("horizon_s must be a positive multiple of tick_s");
  const std::pair<const char*, double> periods[] = {{"t_x_s", t_x_s},           {"t_r_s", t_r_s},
                                                    {"kpm_period_s", kpm_period_s}, {"pm_period_s", pm_period_s},
                                                    {"series_period_s", series_period_s}};
  for (const auto& [name, value] : periods)
    if (!is_multiple(value, tick_s)) fail(fmt::format("{} must be a positive multiple of tick_s", name));
  if (!(t_x_s < t_r_s)) fail("t_x_s must be smaller than t_r_s");
  if (!(t_block_s >= 0)) fail("t_block_s must be >= 0");
  if (!(w_pp_s >= t_block_s)) fail("w_pp_s must be >= t_block_s");
  if (!(warmup_s >= 0)) fail("warmup_s must be >= 0");
  if (!(cleanup_timeout_s >= 0)) fail("cleanup_timeout_s must be >= 0");
  if (!(hysteresis_db >= 0)) fail("hysteresis_db must be >= 0");
  if (!(neighbor_radius_m > 0)) fail("neighbor_radius_m must be > 0");
  if (max_commands < 1) fail("max_commands must be >= 1");
  if (!(policy.alpha_off >= 0 && policy.alpha_off <= rapp.alpha_off_max))
    fail("policy.alpha_off must lie in [0, alpha_off_max]");
  if (!(policy.alpha_on >= rapp.alpha_on_min && policy.alpha_on <= 100))
    fail("policy.alpha_on must lie in [alpha_on_min, 100]");
  if (!(policy.target_outage_lo < policy.target_outage_hi)) fail("target_outage_lo must be < target_outage_hi");
  if (fixed_slot && (*fixed_slot < 0 || *fixed_slot >= kSlotsPerDay)) fail("fixed_slot must lie in [0, 47]");
  if (!(e2_latency_s >= 0 && a1_latency_s >= 0 && o1_latency_s >= 0)) fail("latencies must be >= 0");
  propagation.validate();
  arrivals.validate();
  rapp.validate();
}

void SimConfig::set_goal(double goal_pct, double tolerance_pct) {
  policy.target_outage_lo = goal_pct - tolerance_pct;
  policy.target_outage_hi = goal_pct + tolerance_pct;
}

std::size_t RunResult::commanded_changes() const {
  return static_cast<std::size_t>(
      std::count_if(events.begin(), events.end(), [](const StateChange& e) { return e.cause == ChangeCause::Command; }));
}

std::uint64_t RunResult::digest() const {
  Digest d;
  for (const auto& p : series) {
    d.add(p.t_s);
    d.add(p.beta_sys_pct);
    d.add(p.alpha_off);
    d.add(p.alpha_on);
    d.add(p.n_off);
    d.add(p.power_w);
    d.add(p.n_ues);
    d.add(p.offered_bps);
    d.add(p.ue_seconds);
    d.add(p.deficit_ue_seconds);
  }
  for (const auto& e : events) {
    d.add(e.t_s);
    d.add(e.cell);
    d.add(e.from);
    d.add(e.to);
    d.add(e.cause);
  }
  for (const auto& c : commands) {
    d.add(c.t_s);
    d.add(c.seq);
    d.add(c.source);
    d.add(std::string_view(c.action));
    d.add(c.cell);
    d.add(c.ue);
    d.add(c.accepted);
  }
  for (const auto& r : rapp) {
    d.add(r.t_s);
    d.add(r.beta_sys_pct);
    d.add(r.pp);
    d.add(r.case_id);
    d.add(r.policy.alpha_off);
    d.add(r.policy.alpha_on);
  }
  for (const auto& per_iface : counters.by_kind)
    for (auto v : per_iface) d.add(v);
  d.add(log_digest);
  d.add(energy_j);
  d.add(mean_power_w);
  d.add(mean_outage_pct);
  for (double v : cell_energy_j) d.add(v);
  for (double v : cell_mean_load) d.add(v);
  d.add(ue_reports);
  d.add(load_reports);
  return d.value();
}

OutageValue compute_outage(std::span<const UeWindowRecord> records, OutageWeighting weighting) {
  if (weighting == OutageWeighting::PerUe) {
    std::size_t n = 0;
    std::size_t in_outage = 0;
    for (const auto& r : records) {
      if (!(r.ue_seconds > 0)) continue;
      ++n;
      if (r.deficit_ue_seconds > 0) ++in_outage;
    }
    if (n == 0) return {0.0, true};
    return {100.0 * static_cast<double>(in_outage) / static_cast<double>(n), false};
  }
  double total = 0.0;
  double deficit = 0.0;
  for (const auto& r : records) {
    total += r.ue_seconds;
    deficit += r.deficit_ue_seconds;
  }
  if (!(total > 0)) return {0.0, true};
  return {100.0 * deficit / total, false};
}

RunResult run(const Scenario& scenario, const SimConfig& config, const RunOptions& options) {
  config.validate();
  const std::uint64_t shadow_seed = config.shadowing_seed.value_or(scenario.seed_shadowing);
  const ShadowField field = generate_shadow_field(scenario, config.propagation, shadow_seed);
  return run(scenario, field, config, options);
}

RunResult run(const Scenario& scenario, const ShadowField& field, const SimConfig& config, const RunOptions& options) {
  config.validate();
  const double tick = config.tick_s;
  const long long n_ticks = ticks_of(config.horizon_s, tick);
  const long long x_ticks = ticks_of(config.t_x_s, tick);
  const long long r_ticks = ticks_of(config.t_r_s, tick);
  const long long kpm_ticks = ticks_of(config.kpm_period_s, tick);
  const long long pm_ticks = ticks_of(config.pm_period_s, tick);
  const long long series_ticks = ticks_of(config.series_period_s, tick);
  const std::size_t n_cells = scenario.cells.size();

  RunResult res;
  res.horizon_s = static_cast<double>(n_ticks) * tick;
  res.warmup_s = config.warmup_s;

  RicBus bus;
  bus.set_latency(Interface::E2, config.e2_latency_s);
  bus.set_latency(Interface::A1, config.a1_latency_s);
  bus.set_latency(Interface::O1, config.o1_latency_s);
  bus.set_log_sink(options.message_log);

  // Registered before the RAN so that requests are logged before their acks.
  std::unordered_map<std::uint64_t, std::size_t> command_by_seq;
  bus.subscribe({Interface::E2, Kind::ControlReq, std::nullopt}, [&](const Message& m) {
    CommandRecord rec;
    rec.t_s = m.t_s;
    rec.seq = m.seq;
    rec.source = m.source.role;
    if (const auto* c = std::get_if<CellCommandPayload>(&m.payload)) {
      rec.action = c->action == CellAction::Off ? "off" : "on";
      rec.cell = c->cell;
      if (c->cell < n_cells && scenario.cells[c->cell].layer == Layer::Coverage)
        throw InvariantViolation(fmt::format("coverage cell {} commanded at t={}", scenario.cells[c->cell].id, m.t_s));
    } else if (const auto* h = std::get_if<HandoverPayload>(&m.payload)) {
      rec.action = "handover";
      rec.cell = h->target;
      rec.ue = h->ue;
    }
    command_by_seq[m.seq] = res.commands.size();
    res.commands.push_back(std::move(rec));
  });
  bus.subscribe({Interface::E2, Kind::ControlAck, std::nullopt}, [&](const Message& m) {
    const auto& ack = std::get<ControlAckPayload>(m.payload);
    if (auto it = command_by_seq.find(ack.request_seq); it != command_by_seq.end()) {
      res.commands[it->second].accepted = ack.accepted;
      command_by_seq.erase(it);
    }
  });

  const bool reference = config.reference != ReferenceMode::None;
  Ran ran(scenario, field, config.propagation,
          RanConfig{config.kpm_period_s, config.pm_period_s, config.cleanup_timeout_s, config.t_block_s}, bus);
  CoosXApp xapp(bus, build_neighbor_map(scenario, config.neighbor_radius_m), config.policy,
                XappConfig{config.t_block_s, config.max_commands});
  TsXApp ts(bus, config.hysteresis_db, config.ts_xapp);
  CoosRApp rapp(bus, RappState{config.policy, config.rapp, 0}, config.w_pp_s);
  const bool run_xapp = config.coos_xapp && !reference;
  const bool run_rapp = config.rapp_enabled && !reference;

  ran.publish_setup(0.0);
  xapp.subscribe_all(0.0);
  ts.subscribe_all(0.0);
  if (config.reference == ReferenceMode::AllCapacityOff)
    for (CellIndex c = 0; c < n_cells; ++c)
      if (scenario.cells[c].layer == Layer::Capacity) ran.force_off(c, 0.0);

  const std::size_t n_pixels = scenario.pixels.size();
  const ArrivalProcess arrival_process(scenario, config.arrivals);
  Rng arrival_rng(derive_seed(config.seed, "arrivals", 0));
  Rng mobility_rng(derive_seed(config.seed, "mobility", 0));
  UeIdSource ids;
  auto slot_at = [&](double t) { return config.fixed_slot.value_or(slot_of(t)); };

  if (config.prefill) {
    std::vector<Ue> initial;
    for (std::size_t p = 0; p < n_pixels; ++p) {
      auto ues = spawn_stationary(scenario, p, slot_at(0.0), 0.0, config.arrivals, arrival_rng, ids);
      std::move(ues.begin(), ues.end(), std::back_inserter(initial));
    }
    ran.admit(std::move(initial));
  }

  double win_ue_s = 0.0;
  double win_deficit_s = 0.0;
  double post_ue_s = 0.0;
  double post_deficit_s = 0.0;
  double post_energy = 0.0;
  double ue_tick_sum = 0.0;
  std::unordered_map<UeId, UeWindowRecord> per_ue;
  res.cell_energy_j.assign(n_cells, 0.0);
  res.cell_mean_load.assign(n_cells, 0.0);
  res.cell_off_s.assign(n_cells, 0.0);

  for (long long k = 1; k <= n_ticks; ++k) {
    const double t = static_cast<double>(k) * tick;
    const bool post = t - tick >= config.warmup_s - 1e-9;

    ran.remove_departed(t);
    ran.execute_handovers(t);
    ran.progress_pending(t);

    for (auto& ue : ran.ues()) step_mobility(ue, tick, scenario.area, config.arrivals, mobility_rng);

    auto arrivals = arrival_process.spawn(slot_at(t - tick), t, tick, arrival_rng, ids);
    ran.admit(std::move(arrivals));

    ran.update_links();
    ran.schedule();

    const auto& cells = ran.cells();
    const auto outage = ran.outage_flags();
    const auto& ues = ran.ues();
    std::size_t served = 0;
    for (const auto& ue : ues) {
      if (!ue.serving_cell) continue;
      ++served;
      if (cells[*ue.serving_cell].status == CellStatus::Off)
        throw InvariantViolation(fmt::format("UE {} served by an off cell at t={}", ue.id, t));
    }
    res.ue_reports += served;
    if (k % kpm_ticks == 0) res.load_reports += ran.transmitting_count();
    ran.emit_kpm_reports(t);

    ran.accumulate(tick);
    double tick_deficit = 0.0;
    for (std::size_t i = 0; i < ues.size(); ++i) {
      if (outage[i]) tick_deficit += tick;
      if (post && config.outage_weighting == OutageWeighting::PerUe) {
        auto& r = per_ue[ues[i].id];
        r.ue_seconds += tick;
        if (outage[i]) r.deficit_ue_seconds += tick;
      }
    }
    const double tick_ue_s = tick * static_cast<double>(ues.size());
    win_ue_s += tick_ue_s;
    win_deficit_s += tick_deficit;

    double power = 0.0;
    for (CellIndex c = 0; c < n_cells; ++c) {
      const double p = cell_power(cells[c].status, cells[c].load, scenario.cells[c].power);
      power += p;
      if (post) {
        res.cell_energy_j[c] += p * tick;
        res.cell_mean_load[c] += cells[c].load * tick;
        if (cells[c].status == CellStatus::Off) res.cell_off_s[c] += tick;
      }
    }
    res.energy_j += power * tick;
    if (post) {
      post_energy += power * tick;
      post_ue_s += tick_ue_s;
      post_deficit_s += tick_deficit;
      ue_tick_sum += static_cast<double>(ues.size());
    }

    if (k % pm_ticks == 0) ran.emit_pm_reports(t);
    if (run_rapp && k % r_ticks == 0) rapp.update(t);
    if (run_xapp && k % x_ticks == 0) xapp.decide(t);
    bus.deliver_due(t);

    if (k % series_ticks == 0) {
      SeriesPoint sp;
      sp.t_s = t;
      sp.beta_sys_pct = win_ue_s > 0 ? 100.0 * win_deficit_s / win_ue_s : 0.0;
      sp.alpha_off = xapp.policy().alpha_off;
      sp.alpha_on = xapp.policy().alpha_on;
      for (CellIndex c = 0; c < n_cells; ++c)
        if (scenario.cells[c].layer == Layer::Capacity && ran.cells()[c].status == CellStatus::Off) ++sp.n_off;
      sp.power_w = power;
      sp.n_ues = ues.size();
      sp.offered_bps = ran.offered_bps();
      sp.ue_seconds = win_ue_s;
      sp.deficit_ue_seconds = win_deficit_s;
      res.series.push_back(sp);
      win_ue_s = 0.0;
      win_deficit_s = 0.0;
    }
  }

  const double post_span = res.horizon_s - std::min(res.horizon_s, config.warmup_s);
  if (post_span > 0) {
    res.mean_power_w = post_energy / post_span;
    for (CellIndex c = 0; c < n_cells; ++c) res.cell_mean_load[c] /= post_span;
    res.mean_active_ues = ue_tick_sum * tick / post_span;
  }
  OutageValue ov;
  if (config.outage_weighting == OutageWeighting::PerUe) {
    std::vector<std::pair<UeId, UeWindowRecord>> sorted(per_ue.begin(), per_ue.end());
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<UeWindowRecord> records;
    records.reserve(sorted.size());
    for (const auto& [id, r] : sorted) records.push_back(r);
    ov = compute_outage(records, OutageWeighting::PerUe);
  } else {
    const UeWindowRecord total{post_ue_s, post_deficit_s};
    ov = compute_outage(std::span<const UeWindowRecord>(&total, 1));
  }
  res.mean_outage_pct = ov.pct;
  res.outage_window_empty = ov.empty;

  for (const auto& cs : ran.cells()) res.events.insert(res.events.end(), cs.log.begin(), cs.log.end());
  std::stable_sort(res.events.begin(), res.events.end(), [](const StateChange& a, const StateChange& b) {
    return a.t_s != b.t_s ? a.t_s < b.t_s : a.cell < b.cell;
  });
  res.rapp = rapp.records();
  res.counters = bus.snapshot_counters();
  res.log_digest = bus.log_digest();
  res.forced_cleanups = ran.forced_cleanups();
  res.xapp_rejections = xapp.rejected();
  res.mobility_handovers = ts.mobility_handovers();
  res.cleanup_handovers = ts.cleanup_handovers();
  return res;
}

SimConfig reference_config(const SimConfig& config, ReferenceMode mode) {
  SimConfig c = config;
  c.reference = mode;
  return c;
}

std::vector<SweepRow> sweep_outage_goals(const Scenario& scenario, const SimConfig& config, std::vector<double> goals,
                                         unsigned threads) {
  if (goals.empty()) throw std::invalid_argument("sweep: at least one goal is required");
  config.validate();
  std::sort(goals.begin(), goals.end());
  const double tolerance = (config.policy.target_outage_hi - config.policy.target_outage_lo) / 2.0;

  std::vector<SimConfig> configs;
  for (double g : goals) {
    SimConfig c = config;
    c.set_goal(g, tolerance);
    c.validate();
    configs.push_back(c);
  }
  configs.push_back(reference_config(config, ReferenceMode::AllActive));
  configs.push_back(reference_config(config, ReferenceMode::AllCapacityOff));

  const ShadowField field = generate_shadow_field(scenario, config.propagation,
                                                  config.shadowing_seed.value_or(scenario.seed_shadowing));
  std::vector<RunResult> results(configs.size());
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(configs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      try {
        results[i] = run(scenario, field, configs[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned n_threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(configs.size())));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < n_threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<SweepRow> rows;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    SweepRow row;
    if (i < goals.size()) {
      row.label = "goal";
      row.goal_pct = goals[i];
    } else {
      row.label = i == goals.size() ? "all_active" : "all_capacity_off";
    }
    row.outage_pct = results[i].mean_outage_pct;
    row.power_w = results[i].mean_power_w;
    row.state_changes = results[i].commanded_changes();
    rows.push_back(row);
  }
  return rows;
}

void write_timeseries_csv(std::ostream& out, const RunResult& result) {
  out << "t_s,beta_sys_pct,alpha_off,alpha_on,n_off,power_w,n_ues,offered_bps\n";
  for (const auto& p : result.series)
    fmt::print(out, "{},{},{},{},{},{},{},{}\n", p.t_s, p.beta_sys_pct, p.alpha_off, p.alpha_on, p.n_off, p.power_w,
               p.n_ues, p.offered_bps);
}

void write_events_csv(std::ostream& out, const RunResult& result, const Scenario& scenario) {
  out << "t_s,cell,cell_id,from,to,cause\n";
  for (const auto& e : result.events)
    fmt::print(out, "{},{},{},{},{},{}\n", e.t_s, e.cell, scenario.cells[e.cell].id, to_string(e.from), to_string(e.to),
               to_string(e.cause));
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "label,goal_pct,outage_pct,power_w\n";
  for (const auto& r : rows)
    fmt::print(out, "{},{},{},{}\n", r.label, r.goal_pct ? fmt::format("{}", *r.goal_pct) : std::string{}, r.outage_pct,
               r.power_w);
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("spearman: need two equally sized samples");
  auto ranks = [](std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t m = i; m <= j; ++m) r[idx[m]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace tandem
