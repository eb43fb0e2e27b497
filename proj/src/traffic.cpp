#include "tandem/traffic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tandem {

void ArrivalConfig::validate() const {
  if (!(mean_service_s > 0)) throw std::invalid_argument("arrivals: mean_service_s must be > 0");
  if (!(waypoint_radius_m >= 0)) throw std::invalid_argument("arrivals: waypoint_radius_m must be >= 0");
  if (!(speed_min_mps >= 0 && speed_max_mps >= speed_min_mps))
    throw std::invalid_argument("arrivals: need 0 <= speed_min_mps <= speed_max_mps");
}

namespace {

Position draw_waypoint(Position origin, const Area& area, const ArrivalConfig& cfg, Rng& rng) {
  if (cfg.waypoint_radius_m == 0.0) return origin;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = cfg.waypoint_radius_m * std::sqrt(u(rng));
  const double phi = 2.0 * std::numbers::pi * u(rng);
  return {std::clamp(origin.x + r * std::cos(phi), 0.0, area.width_m),
          std::clamp(origin.y + r * std::sin(phi), 0.0, area.height_m)};
}

double draw_speed(const ArrivalConfig& cfg, Rng& rng) {
  return std::uniform_real_distribution<double>(cfg.speed_min_mps, cfg.speed_max_mps)(rng);
}

Ue make_ue(const Scenario& scenario, std::size_t pixel, const SlotProfile& profile, double t_s, double lifetime_s,
           const ArrivalConfig& cfg, Rng& rng, UeIdSource& ids) {
  const Position o = scenario.pixel_origin(pixel);
  const double size = scenario.area.pixel_size_m;
  // edge pixels may extend past the area boundary
  const double w = std::min(size, scenario.area.width_m - o.x);
  const double h = std::min(size, scenario.area.height_m - o.y);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Ue ue;
  ue.id = ids.next();
  ue.origin_pixel = pixel;
  ue.origin = {o.x + w * u(rng), o.y + h * u(rng)};
  ue.pos = ue.origin;
  ue.demand_bps = std::exponential_distribution<double>(1.0 / profile.mean_demand_bps)(rng);
  if (!(ue.demand_bps > 0)) ue.demand_bps = std::numeric_limits<double>::min();
  ue.spawned_at_s = t_s;
  ue.departs_at_s = t_s + lifetime_s;
  ue.waypoint = draw_waypoint(ue.origin, scenario.area, cfg, rng);
  ue.speed_mps = draw_speed(cfg, rng);
  return ue;
}

double draw_lifetime(const ArrivalConfig& cfg, Rng& rng) {
  double life = std::exponential_distribution<double>(1.0 / cfg.mean_service_s)(rng);
  return life > 0 ? life : std::numeric_limits<double>::min();
}

}  // namespace

std::vector<Ue> spawn_arrivals(const Scenario& scenario, std::size_t pixel, int slot, double t_s, double dt_s,
                               const ArrivalConfig& cfg, Rng& rng, UeIdSource& ids) {
  const auto& profile = scenario.pixels[pixel].slots[slot];
  std::vector<Ue> out;
  if (profile.mean_active_ues <= 0.0) return out;
  const double rate = profile.mean_active_ues / cfg.mean_service_s;
  const int count = std::poisson_distribution<int>(rate * dt_s)(rng);
  for (int k = 0; k < count; ++k) out.push_back(make_ue(scenario, pixel, profile, t_s, draw_lifetime(cfg, rng), cfg, rng, ids));
  return out;
}

ArrivalProcess::ArrivalProcess(const Scenario& scenario, const ArrivalConfig& cfg)
    : scenario_(&scenario), cfg_(cfg), cumulative_(kSlotsPerDay), total_(kSlotsPerDay, 0.0) {
  for (int slot = 0; slot < kSlotsPerDay; ++slot) {
    auto& cum = cumulative_[slot];
    cum.reserve(scenario.pixels.size());
    double acc = 0.0;
    for (const auto& p : scenario.pixels) {
      acc += std::max(p.slots[slot].mean_active_ues, 0.0) / cfg.mean_service_s;
      cum.push_back(acc);
    }
    total_[slot] = acc;
  }
}

std::vector<Ue> ArrivalProcess::spawn(int slot, double t_s, double dt_s, Rng& rng, UeIdSource& ids) const {
  std::vector<Ue> out;
  if (total_[slot] <= 0.0) return out;
  const auto& cum = cumulative_[slot];
  const int count = std::poisson_distribution<int>(total_[slot] * dt_s)(rng);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    const double x = u(rng) * total_[slot];
    auto it = std::upper_bound(cum.begin(), cum.end(), x);
    if (it == cum.end()) --it;
    const auto pixel = static_cast<std::size_t>(it - cum.begin());
    const double arrival = t_s - dt_s * u(rng);
    Ue ue = make_ue(*scenario_, pixel, scenario_->pixels[pixel].slots[slot], arrival, draw_lifetime(cfg_, rng), cfg_,
                    rng, ids);
    if (ue.departs_at_s > t_s) out.push_back(std::move(ue));
  }
  return out;
}

std::vector<Ue> spawn_stationary(const Scenario& scenario, std::size_t pixel, int slot, double t_s,
                                 const ArrivalConfig& cfg, Rng& rng, UeIdSource& ids) {
  const auto& profile = scenario.pixels[pixel].slots[slot];
  std::vector<Ue> out;
  if (profile.mean_active_ues <= 0.0) return out;
  const int count = std::poisson_distribution<int>(profile.mean_active_ues)(rng);
  for (int k = 0; k < count; ++k) out.push_back(make_ue(scenario, pixel, profile, t_s, draw_lifetime(cfg, rng), cfg, rng, ids));
  return out;
}

void step_mobility(Ue& ue, double dt_s, const Area& area, const ArrivalConfig& cfg, Rng& rng) {
  if (cfg.waypoint_radius_m == 0.0) return;
  const double remaining = distance(ue.pos, ue.waypoint);
  const double reach = ue.speed_mps * dt_s;
  if (reach < remaining) {
    const double f = reach / remaining;
    ue.pos = {ue.pos.x + f * (ue.waypoint.x - ue.pos.x), ue.pos.y + f * (ue.waypoint.y - ue.pos.y)};
    return;
  }
  ue.pos = ue.waypoint;
  ue.waypoint = draw_waypoint(ue.origin, area, cfg, rng);
  ue.speed_mps = draw_speed(cfg, rng);
}

}  // namespace tandem
