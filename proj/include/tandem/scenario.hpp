#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tandem/common.hpp"

namespace tandem {

/// Linear load-dependent base-station power model.
struct PowerParams {
  double p0_w{500.0};
  double delta_p{4.0};
  double p_tx_max_w{40.0};
  double p_sleep_w{50.0};

  friend bool operator==(const PowerParams&, const PowerParams&) = default;
};

struct Site {
  std::string id;
  Position pos;
  Environment environment{Environment::UrbanMacro};

  friend bool operator==(const Site&, const Site&) = default;
};

struct CellDef {
  std::string id;
  std::string site_id;
  SiteIndex site{0};  // resolved from site_id
  double carrier_hz{0.0};
  double bandwidth_hz{0.0};
  int n_prb{0};
  double tx_power_dbm{46.0};
  double height_m{25.0};
  std::optional<double> azimuth_deg;  // empty: omnidirectional
  double tilt_deg{0.0};
  Layer layer{Layer::Capacity};
  double cio_db{0.0};  // cell individual offset used for cell selection
  PowerParams power;

  double prb_bandwidth_hz() const { return bandwidth_hz / n_prb; }

  friend bool operator==(const CellDef&, const CellDef&) = default;
};

struct SlotProfile {
  double mean_active_ues{0.0};
  double mean_demand_bps{0.0};

  friend bool operator==(const SlotProfile&, const SlotProfile&) = default;
};

struct TrafficPixel {
  int ix{0};
  int iy{0};
  std::array<SlotProfile, kSlotsPerDay> slots{};

  friend bool operator==(const TrafficPixel&, const TrafficPixel&) = default;
};

struct Area {
  double width_m{0.0};
  double height_m{0.0};
  double pixel_size_m{100.0};

  int nx() const { return static_cast<int>(std::ceil(width_m / pixel_size_m)); }
  int ny() const { return static_cast<int>(std::ceil(height_m / pixel_size_m)); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(nx()) * ny(); }
  bool contains(Position p) const {
    return p.x >= 0 && p.y >= 0 && p.x <= width_m && p.y <= height_m;
  }

  friend bool operator==(const Area&, const Area&) = default;
};

/// Immutable network description. Pixels are stored row-major
/// (index = iy * nx + ix) with the grid origin at (0, 0).
struct Scenario {
  int version{1};
  Area area;
  std::vector<Site> sites;
  std::vector<CellDef> cells;
  std::vector<TrafficPixel> pixels;
  std::uint64_t seed_shadowing{1};

  std::size_t pixel_index(Position p) const;
  Position pixel_origin(std::size_t index) const;
  const Site& site_of(CellIndex cell) const { return sites[cells[cell].site]; }
  std::size_t count_layer(Layer layer) const;

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

class ScenarioError : public std::runtime_error {
 public:
  enum class Kind { Parse, Validation };

  ScenarioError(Kind kind, std::vector<std::string> issues);

  Kind kind() const { return kind_; }
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  Kind kind_;
  std::vector<std::string> issues_;
};

/// Every violated invariant, each prefixed with its field path.
std::vector<std::string> validate(const Scenario& scenario);

Scenario scenario_from_json(const nlohmann::json& doc);
nlohmann::json scenario_to_json(const Scenario& scenario);

Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const Scenario& scenario, const std::filesystem::path& path);

// Synthetic generation

enum class SiteKind { Macro, Micro };

struct LayerSpec {
  std::string name;
  Layer layer{Layer::Capacity};
  SiteKind host{SiteKind::Macro};
  int site_count{0};  // hosting sites of that kind; 0 = all of them
  int sectors{3};     // 1 = omnidirectional
  double carrier_hz{2.16e9};
  double bandwidth_hz{20e6};
  int n_prb{100};
  double tx_power_dbm{46.0};
  double height_m{25.0};
  double tilt_deg{6.0};
  double cio_db{0.0};
  double p0_w{500.0};
  double delta_p{4.0};
  double p_sleep_w{50.0};
};

struct GeneratorConfig {
  double width_m{2500.0};
  double height_m{2500.0};
  double pixel_size_m{100.0};
  int macro_sites{4};
  int micro_sites{0};
  std::vector<LayerSpec> layers;
  int hotspots{3};
  double hotspot_radius_m{400.0};
  double background{0.15};  // spatial intensity floor in [0, 1]
  double ues_min{0.01};
  double ues_max{0.21};
  double demand_min_bps{0.56e6};
  double demand_max_bps{19e6};
  double demand_shape{2.0};  // exponent on the spatial intensity for demand
  double diurnal_amplitude{0.3};
  double peak_hour{19.0};
};

/// Named generator presets: "dt-like" (13 sites, 60 cells) and
/// "desk" (a reduced variant of dt-like with at most 20 cells).
GeneratorConfig generator_preset(const std::string& name);

/// Throws std::invalid_argument on infeasible parameters.
Scenario generate_synthetic(const GeneratorConfig& config, std::uint64_t seed);

// Neighbor relation

class NeighborMap {
 public:
  NeighborMap() = default;
  explicit NeighborMap(std::vector<std::vector<CellIndex>> lists) : lists_(std::move(lists)) {}

  const std::vector<CellIndex>& neighbors(CellIndex cell) const { return lists_[cell]; }
  bool are_neighbors(CellIndex a, CellIndex b) const;
  std::size_t size() const { return lists_.size(); }

 private:
  std::vector<std::vector<CellIndex>> lists_;
};

/// Cells are neighbors iff their sites are at most `radius_m` apart.
/// Co-sited cells (any carrier) are always neighbors.
NeighborMap build_neighbor_map(const Scenario& scenario, double radius_m);

}  // namespace tandem
