#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/scenario.hpp"

namespace tandem {

struct PropagationConfig {
  double shadowing_sigma_db{6.0};
  double shadowing_dcorr_m{50.0};
  double noise_figure_db{9.0};
  double sinr_min_db{-10.0};
  double sinr_max_db{22.0};
  double shannon_alpha{0.6};
  double se_max_bps_hz{4.4};
  double ue_height_m{1.5};
  bool los_probability{false};  // draw a frozen LOS/NLOS state per cell and pixel
  bool use_tilt{false};         // apply the vertical antenna pattern

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
};

enum class LinkCondition { Los, Nlos };

/// Bundled per-link outputs.
struct LinkResult {
  double rsrp_dbm{0.0};
  double sinr_db{0.0};
  double se_bps_hz{0.0};
};

/// Frozen per-cell shadowing maps at pixel resolution (row-major, same
/// grid as the scenario's traffic pixels).
class ShadowField {
 public:
  ShadowField() = default;
  ShadowField(int nx, int ny, std::uint64_t seed, std::vector<std::vector<double>> values,
              std::vector<std::vector<std::uint8_t>> los = {})
      : nx_(nx), ny_(ny), seed_(seed), values_(std::move(values)), los_(std::move(los)) {}

  double at(CellIndex cell, std::size_t pixel) const { return values_[cell][pixel]; }
  std::span<const double> cell_map(CellIndex cell) const { return values_[cell]; }
  bool has_los_map() const { return !los_.empty(); }
  LinkCondition condition(CellIndex cell, std::size_t pixel) const {
    return los_.empty() || !los_[cell][pixel] ? LinkCondition::Nlos : LinkCondition::Los;
  }

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t cells() const { return values_.size(); }

  friend bool operator==(const ShadowField&, const ShadowField&) = default;

 private:
  int nx_{0};
  int ny_{0};
  std::uint64_t seed_{0};
  std::vector<std::vector<double>> values_;
  std::vector<std::vector<std::uint8_t>> los_;
};

/// 3GPP TR 38.901 UMa / UMi-Street-Canyon path loss (dB) for a UE at `pos`.
/// The NLOS value is max(PL_LOS, PL'_NLOS) as the model prescribes.
double propagation_loss(Environment env, double carrier_hz, double height_bs_m, double height_ut_m,
                        double distance_2d_m, LinkCondition condition = LinkCondition::Nlos);

/// Antenna attenuation (dB, <= 0) of a cell towards `pos`.
double antenna_gain_db(const CellDef& cell, const Site& site, Position pos, const PropagationConfig& cfg);

/// Path loss plus sector attenuation; the 2D distance is clamped at 1 m.
double path_loss(const CellDef& cell, const Site& site, Position pos, const PropagationConfig& cfg = {},
                 LinkCondition condition = LinkCondition::Nlos);

/// Per-cell constants of path_loss hoisted out of the per-link loop: the
/// distance enters every branch only through log10(d3D).
class LinkModel {
 public:
  LinkModel() = default;
  LinkModel(const Scenario& scenario, const PropagationConfig& cfg);

  /// Same value as path_loss() for the cell and position.
  double loss_db(CellIndex cell, Position pos, LinkCondition condition = LinkCondition::Nlos) const;

 private:
  struct Terms {
    Position site;
    double dh2{0.0};
    double d_bp{0.0};
    double los_near0{0.0}, los_near_slope{0.0};
    double los_far0{0.0};
    double nlos0{0.0}, nlos_slope{0.0};
    bool sectorized{false};
    double az_cos{1.0}, az_sin{0.0};
  };
  const Scenario* scenario_{nullptr};
  PropagationConfig cfg_;
  std::vector<Terms> terms_;
};

/// 38.901 LOS probability for the site environment (UE below 13 m).
double los_probability(Environment env, double distance_2d_m);

/// Zero-mean Gaussian field on an nx-by-ny grid with covariance
/// sigma^2 exp(-d / dcorr), sampled by circulant embedding.
std::vector<double> correlated_gaussian_field(int nx, int ny, double spacing_m, double sigma_db,
                                              double dcorr_m, std::uint64_t seed);

ShadowField generate_shadow_field(const Scenario& scenario, const PropagationConfig& cfg,
                                  std::uint64_t seed);

/// Wideband received power (dBm) of `cell` at `pos`.
double received_power_dbm(const Scenario& scenario, CellIndex cell, Position pos, const ShadowField& field,
                          const PropagationConfig& cfg = {});

/// Per-PRB reference signal received power: wideband power / n_prb.
double rsrp(const Scenario& scenario, CellIndex cell, Position pos, const ShadowField& field,
            const PropagationConfig& cfg = {});

double noise_power_dbm(const CellDef& cell, const PropagationConfig& cfg);

/// SINR (dB) given the wideband received power (mW) from every cell;
/// only cells flagged in `transmitting` and sharing the serving carrier
/// interfere.
double sinr_from_rx(const Scenario& scenario, std::span<const double> rx_mw, CellIndex serving,
                    std::span<const char> transmitting, const PropagationConfig& cfg);

/// Throws std::logic_error if `serving` is not transmitting.
double sinr(const Scenario& scenario, Position ue_pos, CellIndex serving, std::span<const char> transmitting,
            const ShadowField& field, const PropagationConfig& cfg = {});

/// Truncated Shannon: 0 below the floor, the cap above the ceiling,
/// alpha * log2(1 + SINR) (capped) in between.
double spectral_efficiency(double sinr_db, const PropagationConfig& cfg = {});

}  // namespace tandem
