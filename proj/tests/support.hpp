#pragma once

// Small hand-built networks shared by the unit tests.

#include <optional>
#include <string>
#include <vector>

#include "tandem/scenario.hpp"

namespace tandem::testing {

inline TrafficPixel flat_pixel(int ix, int iy, double ues, double demand_bps) {
  TrafficPixel p;
  p.ix = ix;
  p.iy = iy;
  for (auto& s : p.slots) s = {ues, demand_bps};
  return p;
}

inline CellDef make_cell(std::string id, std::string site_id, SiteIndex site, Layer layer, double carrier_hz,
                         std::optional<double> azimuth = std::nullopt) {
  CellDef c;
  c.id = std::move(id);
  c.site_id = std::move(site_id);
  c.site = site;
  c.carrier_hz = carrier_hz;
  c.bandwidth_hz = layer == Layer::Coverage ? 10e6 : 20e6;
  c.n_prb = layer == Layer::Coverage ? 50 : 100;
  c.tx_power_dbm = 46.0;
  c.height_m = 25.0;
  c.azimuth_deg = azimuth;
  c.layer = layer;
  c.power = {500.0, 4.0, 40.0, 50.0};
  return c;
}

/// Square area with flat traffic and the given sites; every site gets one
/// omni coverage cell at 773 MHz and `capacity_per_site` omni capacity
/// cells at 2160 MHz.
inline Scenario grid_scenario(std::vector<Position> sites, int capacity_per_site = 1, double side_m = 1000.0,
                              double ues = 0.05, double demand_bps = 1e6) {
  Scenario s;
  s.area = {side_m, side_m, 100.0};
  for (std::size_t i = 0; i < sites.size(); ++i)
    s.sites.push_back({"S" + std::to_string(i), sites[i], Environment::UrbanMacro});
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const std::string sid = "S" + std::to_string(i);
    s.cells.push_back(make_cell("C" + std::to_string(s.cells.size()), sid, i, Layer::Coverage, 773e6));
    for (int k = 0; k < capacity_per_site; ++k)
      s.cells.push_back(make_cell("C" + std::to_string(s.cells.size()), sid, i, Layer::Capacity, 2160e6));
  }
  for (int iy = 0; iy < s.area.ny(); ++iy)
    for (int ix = 0; ix < s.area.nx(); ++ix) s.pixels.push_back(flat_pixel(ix, iy, ues, demand_bps));
  return s;
}

}  // namespace tandem::testing
