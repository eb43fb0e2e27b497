#include "tandem/radio.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>

#include <fftw3.h>

#include "tandem/seeding.hpp"

namespace tandem {

void PropagationConfig::validate() const {
  if (!(sinr_min_db < sinr_max_db)) throw std::invalid_argument("propagation: sinr_min_db must be < sinr_max_db");
  if (!(shannon_alpha > 0 && shannon_alpha <= 1))
    throw std::invalid_argument("propagation: shannon_alpha must lie in (0, 1]");
  if (!(se_max_bps_hz > 0)) throw std::invalid_argument("propagation: se_max_bps_hz must be > 0");
  if (!(shadowing_sigma_db >= 0)) throw std::invalid_argument("propagation: shadowing_sigma_db must be >= 0");
  if (!(shadowing_dcorr_m >= 0)) throw std::invalid_argument("propagation: shadowing_dcorr_m must be >= 0");
}

namespace {

double breakpoint_distance(double h_bs, double h_ut, double carrier_hz) {
  constexpr double effective_env_height = 1.0;
  return 4.0 * (h_bs - effective_env_height) * (h_ut - effective_env_height) * carrier_hz / kSpeedOfLight;
}

double uma_los(double d2d, double d3d, double fc_ghz, double h_bs, double h_ut, double d_bp) {
  if (d2d <= d_bp) return 28.0 + 22.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz);
  return 28.0 + 40.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) -
         9.0 * std::log10(d_bp * d_bp + (h_bs - h_ut) * (h_bs - h_ut));
}

double umi_los(double d2d, double d3d, double fc_ghz, double h_bs, double h_ut, double d_bp) {
  if (d2d <= d_bp) return 32.4 + 21.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz);
  return 32.4 + 40.0 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) -
         9.5 * std::log10(d_bp * d_bp + (h_bs - h_ut) * (h_bs - h_ut));
}

double wrap_degrees(double deg) {
  deg = std::fmod(deg + 180.0, 360.0);
  if (deg < 0) deg += 360.0;
  return deg - 180.0;
}

std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

}  // namespace

double propagation_loss(Environment env, double carrier_hz, double h_bs, double h_ut, double d2d,
                        LinkCondition condition) {
  d2d = std::max(d2d, 1.0);
  const double d3d = std::sqrt(d2d * d2d + (h_bs - h_ut) * (h_bs - h_ut));
  const double fc_ghz = carrier_hz / 1e9;
  const double d_bp = breakpoint_distance(h_bs, h_ut, carrier_hz);
  if (env == Environment::UrbanMacro) {
    const double los = uma_los(d2d, d3d, fc_ghz, h_bs, h_ut, d_bp);
    if (condition == LinkCondition::Los) return los;
    const double nlos = 13.54 + 39.08 * std::log10(d3d) + 20.0 * std::log10(fc_ghz) - 0.6 * (h_ut - 1.5);
    return std::max(los, nlos);
  }
  const double los = umi_los(d2d, d3d, fc_ghz, h_bs, h_ut, d_bp);
  if (condition == LinkCondition::Los) return los;
  const double nlos = 35.3 * std::log10(d3d) + 22.4 + 21.3 * std::log10(fc_ghz) - 0.3 * (h_ut - 1.5);
  return std::max(los, nlos);
}

double los_probability(Environment env, double d2d) {
  if (d2d <= 18.0) return 1.0;
  const double near = 18.0 / d2d;
  const double decay = env == Environment::UrbanMacro ? 63.0 : 36.0;
  return near + std::exp(-d2d / decay) * (1.0 - near);
}

double antenna_gain_db(const CellDef& cell, const Site& site, Position pos, const PropagationConfig& cfg) {
  double horizontal = 0.0;
  if (cell.azimuth_deg) {
    const double bearing = std::atan2(pos.y - site.pos.y, pos.x - site.pos.x) * 180.0 / std::numbers::pi;
    const double theta = wrap_degrees(bearing - *cell.azimuth_deg);
    horizontal = -std::min(12.0 * (theta / 65.0) * (theta / 65.0), 30.0);
  }
  if (!cfg.use_tilt) return horizontal;
  const double d2d = std::max(distance(site.pos, pos), 1.0);
  const double elevation = std::atan2(cell.height_m - cfg.ue_height_m, d2d) * 180.0 / std::numbers::pi;
  const double off = (elevation - cell.tilt_deg) / 10.0;
  const double vertical = -std::min(12.0 * off * off, 30.0);
  return -std::min(-(horizontal + vertical), 30.0);
}

double path_loss(const CellDef& cell, const Site& site, Position pos, const PropagationConfig& cfg,
                 LinkCondition condition) {
  const double d2d = distance(site.pos, pos);
  return propagation_loss(site.environment, cell.carrier_hz, cell.height_m, cfg.ue_height_m, d2d, condition) -
         antenna_gain_db(cell, site, pos, cfg);
}

LinkModel::LinkModel(const Scenario& scenario, const PropagationConfig& cfg) : scenario_(&scenario), cfg_(cfg) {
  terms_.reserve(scenario.cells.size());
  for (const auto& cell : scenario.cells) {
    const Site& site = scenario.sites[cell.site];
    const double h_bs = cell.height_m;
    const double h_ut = cfg.ue_height_m;
    const double lf = std::log10(cell.carrier_hz / 1e9);
    Terms t;
    t.site = site.pos;
    t.dh2 = (h_bs - h_ut) * (h_bs - h_ut);
    t.d_bp = breakpoint_distance(h_bs, h_ut, cell.carrier_hz);
    t.sectorized = cell.azimuth_deg.has_value();
    if (t.sectorized) {
      const double az = *cell.azimuth_deg * std::numbers::pi / 180.0;
      t.az_cos = std::cos(az);
      t.az_sin = std::sin(az);
    }
    if (site.environment == Environment::UrbanMacro) {
      t.los_near0 = 28.0 + 20.0 * lf;
      t.los_near_slope = 22.0;
      t.los_far0 = 28.0 + 20.0 * lf - 9.0 * std::log10(t.d_bp * t.d_bp + t.dh2);
      t.nlos0 = 13.54 + 20.0 * lf - 0.6 * (h_ut - 1.5);
      t.nlos_slope = 39.08;
    } else {
      t.los_near0 = 32.4 + 20.0 * lf;
      t.los_near_slope = 21.0;
      t.los_far0 = 32.4 + 20.0 * lf - 9.5 * std::log10(t.d_bp * t.d_bp + t.dh2);
      t.nlos0 = 22.4 + 21.3 * lf - 0.3 * (h_ut - 1.5);
      t.nlos_slope = 35.3;
    }
    terms_.push_back(t);
  }
}

double LinkModel::loss_db(CellIndex cell, Position pos, LinkCondition condition) const {
  const Terms& t = terms_[cell];
  const double dx = pos.x - t.site.x;
  const double dy = pos.y - t.site.y;
  const double d2d = std::max(std::sqrt(dx * dx + dy * dy), 1.0);
  const double l = 0.5 * std::log10(d2d * d2d + t.dh2);
  const double los = d2d <= t.d_bp ? t.los_near0 + t.los_near_slope * l : t.los_far0 + 40.0 * l;
  double pl = los;
  if (condition == LinkCondition::Nlos) pl = std::max(los, t.nlos0 + t.nlos_slope * l);
  if (cfg_.use_tilt) {
    const CellDef& c = scenario_->cells[cell];
    return pl - antenna_gain_db(c, scenario_->sites[c.site], pos, cfg_);
  }
  if (!t.sectorized) return pl;
  // angle off boresight from the rotated offset vector
  const double along = dx * t.az_cos + dy * t.az_sin;
  const double across = dy * t.az_cos - dx * t.az_sin;
  const double theta = std::atan2(across, along) * 180.0 / std::numbers::pi;
  return pl + std::min(12.0 * (theta / 65.0) * (theta / 65.0), 30.0);
}

std::vector<double> correlated_gaussian_field(int nx, int ny, double spacing_m, double sigma_db, double dcorr_m,
                                              std::uint64_t seed) {
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  std::vector<double> out(n, 0.0);
  if (n == 0 || sigma_db == 0.0) return out;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  if (!(dcorr_m > 0)) {
    for (auto& v : out) v = sigma_db * normal(rng);
    return out;
  }

  // Periodic embedding of the covariance on a (2ny) x (2nx) torus.
  const int mx = 2 * nx;
  const int my = 2 * ny;
  const std::size_t m = static_cast<std::size_t>(mx) * my;
  auto* buf = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * m));
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_2d(my, mx, buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
  }

  const double var = sigma_db * sigma_db;
  for (int j = 0; j < my; ++j) {
    const double dy = std::min(j, my - j) * spacing_m;
    for (int i = 0; i < mx; ++i) {
      const double dx = std::min(i, mx - i) * spacing_m;
      auto& cell = buf[static_cast<std::size_t>(j) * mx + i];
      cell[0] = var * std::exp(-std::hypot(dx, dy) / dcorr_m);
      cell[1] = 0.0;
    }
  }
  fftw_execute(plan);

  const double scale = 1.0 / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) {
    // Tiny negative eigenvalues from the truncated embedding are clipped.
    const double amp = std::sqrt(std::max(buf[k][0], 0.0) * scale);
    const double re = normal(rng);
    const double im = normal(rng);
    buf[k][0] = amp * re;
    buf[k][1] = amp * im;
  }
  fftw_execute(plan);

  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      out[static_cast<std::size_t>(j) * nx + i] = buf[static_cast<std::size_t>(j) * mx + i][0];

  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(buf);
  return out;
}

ShadowField generate_shadow_field(const Scenario& scenario, const PropagationConfig& cfg, std::uint64_t seed) {
  const int nx = scenario.area.nx();
  const int ny = scenario.area.ny();
  std::vector<std::vector<double>> values;
  values.reserve(scenario.cells.size());
  for (CellIndex c = 0; c < scenario.cells.size(); ++c)
    values.push_back(correlated_gaussian_field(nx, ny, scenario.area.pixel_size_m, cfg.shadowing_sigma_db,
                                               cfg.shadowing_dcorr_m, derive_seed(seed, "shadow", c)));

  std::vector<std::vector<std::uint8_t>> los;
  if (cfg.los_probability) {
    for (CellIndex c = 0; c < scenario.cells.size(); ++c) {
      std::mt19937_64 rng(derive_seed(seed, "los", c));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      const auto& site = scenario.site_of(c);
      std::vector<std::uint8_t> map(scenario.area.pixel_count());
      for (std::size_t p = 0; p < map.size(); ++p) {
        const Position o = scenario.pixel_origin(p);
        const Position centre{o.x + scenario.area.pixel_size_m / 2, o.y + scenario.area.pixel_size_m / 2};
        map[p] = u(rng) < los_probability(site.environment, distance(site.pos, centre)) ? 1 : 0;
      }
      los.push_back(std::move(map));
    }
  }
  return ShadowField(nx, ny, seed, std::move(values), std::move(los));
}

double received_power_dbm(const Scenario& scenario, CellIndex cell, Position pos, const ShadowField& field,
                          const PropagationConfig& cfg) {
  const std::size_t pixel = scenario.pixel_index(pos);
  const auto& def = scenario.cells[cell];
  return def.tx_power_dbm - path_loss(def, scenario.site_of(cell), pos, cfg, field.condition(cell, pixel)) +
         field.at(cell, pixel);
}

double rsrp(const Scenario& scenario, CellIndex cell, Position pos, const ShadowField& field,
            const PropagationConfig& cfg) {
  return received_power_dbm(scenario, cell, pos, field, cfg) -
         linear_to_db(static_cast<double>(scenario.cells[cell].n_prb));
}

double noise_power_dbm(const CellDef& cell, const PropagationConfig& cfg) {
  return kThermalNoiseDbmPerHz + linear_to_db(cell.bandwidth_hz) + cfg.noise_figure_db;
}

double sinr_from_rx(const Scenario& scenario, std::span<const double> rx_mw, CellIndex serving,
                    std::span<const char> transmitting, const PropagationConfig& cfg) {
  if (!transmitting[serving]) throw std::logic_error("sinr: serving cell is not transmitting");
  const auto& def = scenario.cells[serving];
  double interference = 0.0;
  for (CellIndex c = 0; c < scenario.cells.size(); ++c) {
    if (c == serving || !transmitting[c] || scenario.cells[c].carrier_hz != def.carrier_hz) continue;
    interference += rx_mw[c];
  }
  const double noise = dbm_to_mw(noise_power_dbm(def, cfg));
  return linear_to_db(rx_mw[serving] / (noise + interference));
}

double sinr(const Scenario& scenario, Position ue_pos, CellIndex serving, std::span<const char> transmitting,
            const ShadowField& field, const PropagationConfig& cfg) {
  if (!transmitting[serving]) throw std::logic_error("sinr: serving cell is not transmitting");
  std::vector<double> rx(scenario.cells.size(), 0.0);
  for (CellIndex c = 0; c < scenario.cells.size(); ++c)
    if (transmitting[c]) rx[c] = dbm_to_mw(received_power_dbm(scenario, c, ue_pos, field, cfg));
  return sinr_from_rx(scenario, rx, serving, transmitting, cfg);
}

double spectral_efficiency(double sinr_db, const PropagationConfig& cfg) {
  if (sinr_db < cfg.sinr_min_db) return 0.0;
  if (sinr_db > cfg.sinr_max_db) return cfg.se_max_bps_hz;
  return std::min(cfg.se_max_bps_hz, cfg.shannon_alpha * std::log2(1.0 + db_to_linear(sinr_db)));
}

}  // namespace tandem
