#pragma once

#include <optional>
#include <random>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/scenario.hpp"

namespace tandem {

using Rng = std::mt19937_64;

struct ArrivalConfig {
  double mean_service_s{120.0};
  double waypoint_radius_m{200.0};
  double speed_min_mps{0.5};
  double speed_max_mps{1.5};

  void validate() const;
};

/// A live user session.
struct Ue {
  UeId id{0};
  std::size_t origin_pixel{0};
  Position origin;
  Position pos;
  Position waypoint;
  double speed_mps{0.0};
  double demand_bps{0.0};
  double spawned_at_s{0.0};
  double departs_at_s{0.0};
  std::optional<CellIndex> serving_cell;
  double achieved_bps{0.0};

  friend bool operator==(const Ue&, const Ue&) = default;
};

/// Monotone UE id source shared by all pixels of a run.
class UeIdSource {
 public:
  UeId next() { return next_++; }

 private:
  UeId next_{0};
};

/// Poisson arrivals for one pixel over `dt_s`: rate = mean_active_ues / mean_service_s,
/// exponential demand and lifetime, uniform position inside the pixel.
std::vector<Ue> spawn_arrivals(const Scenario& scenario, std::size_t pixel, int slot, double t_s, double dt_s,
                               const ArrivalConfig& cfg, Rng& rng, UeIdSource& ids);

/// Network-wide Poisson arrivals: one draw for the total rate of a slot,
/// then each arrival is placed in a pixel with probability proportional to
/// its rate (superposition of the per-pixel processes). Arrival instants are
/// uniform over (t - dt, t]; sessions that already ended are dropped.
class ArrivalProcess {
 public:
  ArrivalProcess(const Scenario& scenario, const ArrivalConfig& cfg);

  std::vector<Ue> spawn(int slot, double t_s, double dt_s, Rng& rng, UeIdSource& ids) const;
  double total_rate(int slot) const { return total_[slot]; }

 private:
  const Scenario* scenario_;
  ArrivalConfig cfg_;
  std::vector<std::vector<double>> cumulative_;  // per slot, over pixels
  std::vector<double> total_;
};

/// Stationary M/M/inf population for a pixel: Poisson(mean_active_ues) UEs with
/// exponential residual lifetimes.
std::vector<Ue> spawn_stationary(const Scenario& scenario, std::size_t pixel, int slot, double t_s,
                                 const ArrivalConfig& cfg, Rng& rng, UeIdSource& ids);

/// Random-waypoint step confined to a disc around the UE's origin.
void step_mobility(Ue& ue, double dt_s, const Area& area, const ArrivalConfig& cfg, Rng& rng);

}  // namespace tandem
