#include "tandem/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>

namespace tandem {

std::string_view to_string(Layer layer) {
  return layer == Layer::Coverage ? "coverage" : "capacity";
}

std::string_view to_string(Environment env) {
  return env == Environment::UrbanMacro ? "UMa" : "UMi";
}

std::string_view to_string(CellStatus status) {
  switch (status) {
    case CellStatus::Active: return "active";
    case CellStatus::PendingOff: return "pending_off";
    case CellStatus::Off: return "off";
  }
  return "?";
}

std::size_t Scenario::pixel_index(Position p) const {
  const int nx = area.nx();
  const int ny = area.ny();
  int ix = static_cast<int>(std::floor(p.x / area.pixel_size_m));
  int iy = static_cast<int>(std::floor(p.y / area.pixel_size_m));
  ix = std::clamp(ix, 0, nx - 1);
  iy = std::clamp(iy, 0, ny - 1);
  return static_cast<std::size_t>(iy) * nx + ix;
}

Position Scenario::pixel_origin(std::size_t index) const {
  const auto nx = static_cast<std::size_t>(area.nx());
  return {static_cast<double>(index % nx) * area.pixel_size_m,
          static_cast<double>(index / nx) * area.pixel_size_m};
}

std::size_t Scenario::count_layer(Layer layer) const {
  return static_cast<std::size_t>(
      std::count_if(cells.begin(), cells.end(), [&](const CellDef& c) { return c.layer == layer; }));
}

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out;
  for (const auto& issue : issues) {
    if (!out.empty()) out += "; ";
    out += issue;
  }
  return out;
}

}  // namespace

ScenarioError::ScenarioError(Kind kind, std::vector<std::string> issues)
    : std::runtime_error(
          fmt::format("{} error: {}", kind == Kind::Parse ? "scenario parse" : "scenario validation",
                      join_issues(issues))),
      kind_(kind),
      issues_(std::move(issues)) {}

std::vector<std::string> validate(const Scenario& s) {
  std::vector<std::string> issues;
  auto add = [&](std::string msg) { issues.push_back(std::move(msg)); };

  if (s.version != 1) add(fmt::format("version: unsupported value {}", s.version));
  if (!(s.area.width_m > 0)) add("area.width_m: must be > 0");
  if (!(s.area.height_m > 0)) add("area.height_m: must be > 0");
  if (!(s.area.pixel_size_m > 0)) add("area.pixel_size_m: must be > 0");
  const bool area_ok = s.area.width_m > 0 && s.area.height_m > 0 && s.area.pixel_size_m > 0;

  std::unordered_map<std::string, std::size_t> site_ids;
  for (std::size_t i = 0; i < s.sites.size(); ++i) {
    const auto& site = s.sites[i];
    if (!site_ids.emplace(site.id, i).second)
      add(fmt::format("sites[{}].id: duplicate id '{}'", i, site.id));
    if (area_ok && !s.area.contains(site.pos))
      add(fmt::format("sites[{}]: position ({}, {}) outside area", i, site.pos.x, site.pos.y));
  }

  std::set<std::string> cell_ids;
  bool has_coverage = false;
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    const auto& c = s.cells[i];
    if (!cell_ids.insert(c.id).second) add(fmt::format("cells[{}].id: duplicate id '{}'", i, c.id));
    auto it = site_ids.find(c.site_id);
    if (it == site_ids.end())
      add(fmt::format("cells[{}].site_id: unknown site '{}'", i, c.site_id));
    else if (it->second != c.site)
      add(fmt::format("cells[{}].site_id: index does not match '{}'", i, c.site_id));
    if (c.n_prb <= 0) add(fmt::format("cells[{}].n_prb: must be > 0", i));
    if (!(c.bandwidth_hz > 0)) add(fmt::format("cells[{}].bandwidth_hz: must be > 0", i));
    if (!(c.carrier_hz > 0)) add(fmt::format("cells[{}].carrier_hz: must be > 0", i));
    if (!(c.height_m > 0)) add(fmt::format("cells[{}].height_m: must be > 0", i));
    if (!(c.power.p_sleep_w < c.power.p0_w))
      add(fmt::format("cells[{}].power: p_sleep_w must be < p0_w", i));
    if (c.power.p0_w < 0 || c.power.delta_p < 0 || c.power.p_tx_max_w < 0 || c.power.p_sleep_w < 0)
      add(fmt::format("cells[{}].power: values must be >= 0", i));
    if (c.layer == Layer::Coverage) has_coverage = true;
  }
  if (!has_coverage) add("cells: at least one cell must have layer 'coverage'");

  if (area_ok) {
    const int nx = s.area.nx();
    const int ny = s.area.ny();
    const std::size_t expected = s.area.pixel_count();
    if (s.pixels.size() != expected)
      add(fmt::format("pixels: expected {} pixels ({}x{}), found {}", expected, nx, ny,
                      s.pixels.size()));
    std::vector<char> seen(expected, 0);
    for (std::size_t i = 0; i < s.pixels.size(); ++i) {
      const auto& p = s.pixels[i];
      if (p.ix < 0 || p.iy < 0 || p.ix >= nx || p.iy >= ny) {
        add(fmt::format("pixels[{}]: index ({}, {}) outside {}x{} grid", i, p.ix, p.iy, nx, ny));
        continue;
      }
      auto& flag = seen[static_cast<std::size_t>(p.iy) * nx + p.ix];
      if (flag) add(fmt::format("pixels[{}]: duplicate index ({}, {})", i, p.ix, p.iy));
      flag = 1;
      for (int k = 0; k < kSlotsPerDay; ++k) {
        const auto& slot = p.slots[k];
        if (!(slot.mean_active_ues >= 0))
          add(fmt::format("pixels[{}].mean_active_ues[{}]: must be >= 0", i, k));
        if (!(slot.mean_demand_bps > 0))
          add(fmt::format("pixels[{}].mean_demand_bps[{}]: must be > 0", i, k));
      }
    }
  }
  return issues;
}

// JSON

namespace {

Environment parse_environment(const std::string& s) {
  if (s == "UMa" || s == "UrbanMacro") return Environment::UrbanMacro;
  if (s == "UMi" || s == "UrbanMicro") return Environment::UrbanMicro;
  throw std::invalid_argument(fmt::format("unknown environment '{}'", s));
}

Layer parse_layer(const std::string& s) {
  if (s == "coverage") return Layer::Coverage;
  if (s == "capacity") return Layer::Capacity;
  throw std::invalid_argument(fmt::format("unknown layer '{}'", s));
}

template <typename T>
T field(const nlohmann::json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw std::invalid_argument(fmt::format("{}.{}: missing", path, key));
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw std::invalid_argument(fmt::format("{}.{}: wrong type", path, key));
  }
}

template <typename T>
T field_or(const nlohmann::json& obj, const char* key, T fallback, const std::string& path) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return field<T>(obj, key, path);
}

}  // namespace

Scenario scenario_from_json(const nlohmann::json& doc) {
  Scenario s;
  std::vector<std::string> parse_issues;
  auto guard = [&](auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& e) {
      parse_issues.emplace_back(e.what());
    }
  };

  if (!doc.is_object()) throw ScenarioError(ScenarioError::Kind::Parse, {"document: not an object"});

  guard([&] { s.version = field<int>(doc, "version", "$"); });
  guard([&] {
    const auto& area = doc.at("area");
    s.area.width_m = field<double>(area, "width_m", "area");
    s.area.height_m = field<double>(area, "height_m", "area");
    s.area.pixel_size_m = field_or<double>(area, "pixel_size_m", 100.0, "area");
  });
  guard([&] { s.seed_shadowing = field_or<std::uint64_t>(doc, "seed_shadowing", 1, "$"); });

  guard([&] {
    const auto& sites = doc.at("sites");
    for (std::size_t i = 0; i < sites.size(); ++i) {
      const std::string path = fmt::format("sites[{}]", i);
      guard([&] {
        const auto& j = sites[i];
        Site site;
        site.id = field<std::string>(j, "id", path);
        site.pos = {field<double>(j, "x", path), field<double>(j, "y", path)};
        try {
          site.environment = parse_environment(field_or<std::string>(j, "environment", "UMa", path));
        } catch (const std::invalid_argument& e) {
          throw std::invalid_argument(fmt::format("{}.environment: {}", path, e.what()));
        }
        s.sites.push_back(std::move(site));
      });
    }
  });

  std::unordered_map<std::string, SiteIndex> site_lookup;
  for (std::size_t i = 0; i < s.sites.size(); ++i) site_lookup.emplace(s.sites[i].id, i);

  guard([&] {
    const auto& cells = doc.at("cells");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      const std::string path = fmt::format("cells[{}]", i);
      guard([&] {
        const auto& j = cells[i];
        CellDef c;
        c.id = field<std::string>(j, "id", path);
        c.site_id = field<std::string>(j, "site_id", path);
        auto it = site_lookup.find(c.site_id);
        c.site = it == site_lookup.end() ? static_cast<SiteIndex>(-1) : it->second;
        c.carrier_hz = field<double>(j, "carrier_hz", path);
        c.bandwidth_hz = field<double>(j, "bandwidth_hz", path);
        c.n_prb = field<int>(j, "n_prb", path);
        c.tx_power_dbm = field<double>(j, "tx_power_dbm", path);
        c.height_m = field<double>(j, "height_m", path);
        if (j.contains("azimuth_deg") && !j.at("azimuth_deg").is_null())
          c.azimuth_deg = field<double>(j, "azimuth_deg", path);
        c.tilt_deg = field_or<double>(j, "tilt_deg", 0.0, path);
        try {
          c.layer = parse_layer(field<std::string>(j, "layer", path));
        } catch (const std::invalid_argument& e) {
          throw std::invalid_argument(fmt::format("{}.layer: {}", path, e.what()));
        }
        c.cio_db = field_or<double>(j, "cio_db", 0.0, path);
        const auto power = j.contains("power") ? j.at("power") : nlohmann::json::object();
        const std::string ppath = path + ".power";
        c.power.p0_w = field_or<double>(power, "p0_w", 500.0, ppath);
        c.power.delta_p = field_or<double>(power, "delta_p", 4.0, ppath);
        c.power.p_sleep_w = field_or<double>(power, "p_sleep_w", 50.0, ppath);
        c.power.p_tx_max_w = field_or<double>(power, "p_tx_max_w", dbm_to_w(c.tx_power_dbm), ppath);
        s.cells.push_back(std::move(c));
      });
    }
  });

  guard([&] {
    const auto& pixels = doc.at("pixels");
    s.pixels.reserve(pixels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
      const std::string path = fmt::format("pixels[{}]", i);
      guard([&] {
        const auto& j = pixels[i];
        TrafficPixel p;
        p.ix = field<int>(j, "ix", path);
        p.iy = field<int>(j, "iy", path);
        auto ues = field<std::vector<double>>(j, "mean_active_ues", path);
        auto demand = field<std::vector<double>>(j, "mean_demand_bps", path);
        if (ues.size() != kSlotsPerDay || demand.size() != kSlotsPerDay)
          throw std::invalid_argument(
              fmt::format("{}: expected {} slots, found {}/{}", path, kSlotsPerDay, ues.size(),
                          demand.size()));
        for (int k = 0; k < kSlotsPerDay; ++k) p.slots[k] = {ues[k], demand[k]};
        s.pixels.push_back(p);
      });
    }
  });

  if (!parse_issues.empty()) throw ScenarioError(ScenarioError::Kind::Parse, parse_issues);

  auto issues = validate(s);
  if (!issues.empty()) throw ScenarioError(ScenarioError::Kind::Validation, std::move(issues));

  const int nx = s.area.nx();
  std::sort(s.pixels.begin(), s.pixels.end(), [nx](const TrafficPixel& a, const TrafficPixel& b) {
    return a.iy * nx + a.ix < b.iy * nx + b.ix;
  });
  return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
  using nlohmann::json;
  json doc;
  doc["version"] = s.version;
  doc["area"] = {{"width_m", s.area.width_m},
                 {"height_m", s.area.height_m},
                 {"pixel_size_m", s.area.pixel_size_m}};
  doc["seed_shadowing"] = s.seed_shadowing;
  json sites = json::array();
  for (const auto& site : s.sites)
    sites.push_back({{"id", site.id},
                     {"x", site.pos.x},
                     {"y", site.pos.y},
                     {"environment", to_string(site.environment)}});
  doc["sites"] = std::move(sites);
  json cells = json::array();
  for (const auto& c : s.cells) {
    json j = {{"id", c.id},
              {"site_id", c.site_id},
              {"carrier_hz", c.carrier_hz},
              {"bandwidth_hz", c.bandwidth_hz},
              {"n_prb", c.n_prb},
              {"tx_power_dbm", c.tx_power_dbm},
              {"height_m", c.height_m},
              {"tilt_deg", c.tilt_deg},
              {"layer", to_string(c.layer)},
              {"cio_db", c.cio_db},
              {"power",
               {{"p0_w", c.power.p0_w},
                {"delta_p", c.power.delta_p},
                {"p_tx_max_w", c.power.p_tx_max_w},
                {"p_sleep_w", c.power.p_sleep_w}}}};
    j["azimuth_deg"] = c.azimuth_deg ? json(*c.azimuth_deg) : json(nullptr);
    cells.push_back(std::move(j));
  }
  doc["cells"] = std::move(cells);
  json pixels = json::array();
  for (const auto& p : s.pixels) {
    json ues = json::array();
    json demand = json::array();
    for (const auto& slot : p.slots) {
      ues.push_back(slot.mean_active_ues);
      demand.push_back(slot.mean_demand_bps);
    }
    pixels.push_back(
        {{"ix", p.ix}, {"iy", p.iy}, {"mean_active_ues", std::move(ues)}, {"mean_demand_bps", std::move(demand)}});
  }
  doc["pixels"] = std::move(pixels);
  return doc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(ScenarioError::Kind::Parse, {fmt::format("{}: cannot open", path.string())});
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioError(ScenarioError::Kind::Parse, {fmt::format("{}: {}", path.string(), e.what())});
  }
  return scenario_from_json(doc);
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error(fmt::format("{}: cannot open for writing", path.string()));
  out << scenario_to_json(scenario).dump() << '\n';
}

// Synthetic generation

GeneratorConfig generator_preset(const std::string& name) {
  GeneratorConfig g;
  LayerSpec coverage;
  coverage.name = "L773";
  coverage.layer = Layer::Coverage;
  coverage.host = SiteKind::Macro;
  coverage.carrier_hz = 773e6;
  coverage.bandwidth_hz = 10e6;
  coverage.n_prb = 50;
  coverage.tx_power_dbm = 46.0;
  coverage.height_m = 30.0;
  coverage.cio_db = 0.0;

  LayerSpec mid;
  mid.name = "L2160";
  mid.layer = Layer::Capacity;
  mid.carrier_hz = 2.16e9;
  mid.bandwidth_hz = 20e6;
  mid.n_prb = 100;
  mid.tx_power_dbm = 46.0;
  mid.height_m = 25.0;
  mid.cio_db = 12.0;

  LayerSpec high;
  high.name = "L3655";
  high.layer = Layer::Capacity;
  high.host = SiteKind::Micro;
  high.carrier_hz = 3.655e9;
  high.bandwidth_hz = 100e6;
  high.n_prb = 273;
  high.tx_power_dbm = 40.0;
  high.height_m = 10.0;
  high.cio_db = 15.0;
  high.p0_w = 100.0;
  high.p_sleep_w = 10.0;

  // Dense background with demand concentrated near the low end of the
  // range: only hotspot centres approach the upper demand values.
  g.background = 0.7;
  g.demand_shape = 24.0;

  if (name == "dt-like") {
    // 66 x 81 pixels of 100 m = 5346 pixels
    g.width_m = 6550.0;
    g.height_m = 8050.0;
    g.macro_sites = 11;
    g.micro_sites = 2;
    g.hotspots = 6;
    g.hotspot_radius_m = 700.0;
    coverage.site_count = 5;
    coverage.sectors = 3;
    mid.host = SiteKind::Macro;  // plus the micro sites, below
    mid.site_count = 0;
    g.layers = {coverage, mid, high};
    // 2160 MHz sectors are deployed on every site, macro and micro
    LayerSpec mid_micro = mid;
    mid_micro.name = "L2160m";
    mid_micro.host = SiteKind::Micro;
    mid_micro.height_m = 15.0;
    g.layers.insert(g.layers.begin() + 2, mid_micro);
    return g;
  }
  if (name == "desk") {
    g.width_m = 2500.0;
    g.height_m = 2500.0;
    // 9 coverage + 9 L2160 sectors on 3 macro sites, one omni L3655 cell on
    // each of 2 micro sites: 20 cells, 11 of them switchable
    g.macro_sites = 3;
    g.micro_sites = 2;
    g.hotspots = 3;
    g.hotspot_radius_m = 450.0;
    coverage.site_count = 0;
    coverage.sectors = 3;
    mid.host = SiteKind::Macro;
    high.sectors = 1;
    g.layers = {coverage, mid, high};
    return g;
  }
  throw std::invalid_argument(fmt::format("unknown preset '{}'", name));
}

namespace {

std::vector<Position> place_macro_sites(const GeneratorConfig& g, std::mt19937_64& rng) {
  const int n = g.macro_sites;
  int cols = std::max(1, static_cast<int>(std::lround(std::sqrt(n * g.width_m / g.height_m))));
  int rows = (n + cols - 1) / cols;
  const double dx = g.width_m / cols;
  const double dy = g.height_m / rows;
  const int slots = rows * cols;
  std::uniform_real_distribution<double> jitter(-0.2, 0.2);
  std::vector<Position> out;
  for (int k = 0; k < n; ++k) {
    int cell = static_cast<int>(static_cast<long long>(k) * slots / n);
    int r = cell / cols;
    int c = cell % cols;
    double x = (c + 0.5 + jitter(rng)) * dx;
    double y = (r + 0.5 + jitter(rng)) * dy;
    out.push_back({std::clamp(x, 0.0, g.width_m), std::clamp(y, 0.0, g.height_m)});
  }
  return out;
}

std::vector<std::size_t> spread_pick(std::size_t available, int wanted) {
  std::vector<std::size_t> out;
  if (wanted <= 0 || static_cast<std::size_t>(wanted) >= available) {
    for (std::size_t i = 0; i < available; ++i) out.push_back(i);
    return out;
  }
  for (int k = 0; k < wanted; ++k) out.push_back(static_cast<std::size_t>(k) * available / wanted);
  return out;
}

}  // namespace

Scenario generate_synthetic(const GeneratorConfig& g, std::uint64_t seed) {
  if (!(g.width_m > 0 && g.height_m > 0 && g.pixel_size_m > 0))
    throw std::invalid_argument("generator: area and pixel size must be > 0");
  if (g.macro_sites < 1) throw std::invalid_argument("generator: at least one macro site is required");
  if (g.micro_sites < 0) throw std::invalid_argument("generator: micro_sites must be >= 0");
  const auto n_coverage = std::count_if(g.layers.begin(), g.layers.end(),
                                        [](const LayerSpec& l) { return l.layer == Layer::Coverage; });
  if (n_coverage != 1) throw std::invalid_argument("generator: exactly one coverage layer is required");
  for (const auto& l : g.layers) {
    if (l.layer == Layer::Coverage && (l.host != SiteKind::Macro || l.sectors < 1))
      throw std::invalid_argument("generator: coverage layer must be hosted on macro sites with >= 1 sector");
    if (l.sectors < 1 || l.n_prb < 1 || !(l.bandwidth_hz > 0) || !(l.carrier_hz > 0))
      throw std::invalid_argument(fmt::format("generator: layer '{}' has invalid radio parameters", l.name));
    if (!(l.p_sleep_w < l.p0_w))
      throw std::invalid_argument(fmt::format("generator: layer '{}' needs p_sleep_w < p0_w", l.name));
  }
  if (!(g.ues_min >= 0 && g.ues_max >= g.ues_min))
    throw std::invalid_argument("generator: need 0 <= ues_min <= ues_max");
  if (!(g.demand_min_bps > 0 && g.demand_max_bps >= g.demand_min_bps))
    throw std::invalid_argument("generator: need 0 < demand_min_bps <= demand_max_bps");
  if (!(g.diurnal_amplitude >= 0 && g.diurnal_amplitude <= 1))
    throw std::invalid_argument("generator: diurnal_amplitude must lie in [0, 1]");
  if (g.hotspots < 0 || !(g.background >= 0 && g.background <= 1))
    throw std::invalid_argument("generator: invalid hotspot parameters");

  std::mt19937_64 rng(seed);
  Scenario s;
  s.area = {g.width_m, g.height_m, g.pixel_size_m};
  s.seed_shadowing = seed;

  std::uniform_real_distribution<double> ux(0.1 * g.width_m, 0.9 * g.width_m);
  std::uniform_real_distribution<double> uy(0.1 * g.height_m, 0.9 * g.height_m);
  std::vector<Position> hotspots;
  for (int h = 0; h < g.hotspots; ++h) hotspots.push_back({ux(rng), uy(rng)});

  const auto macro = place_macro_sites(g, rng);
  std::vector<SiteIndex> macro_idx;
  std::vector<SiteIndex> micro_idx;
  for (std::size_t i = 0; i < macro.size(); ++i) {
    macro_idx.push_back(s.sites.size());
    s.sites.push_back({fmt::format("S{}", s.sites.size()), macro[i], Environment::UrbanMacro});
  }
  for (int m = 0; m < g.micro_sites; ++m) {
    Position p = m < static_cast<int>(hotspots.size()) ? hotspots[m] : Position{ux(rng), uy(rng)};
    micro_idx.push_back(s.sites.size());
    s.sites.push_back({fmt::format("S{}", s.sites.size()), p, Environment::UrbanMicro});
  }

  // Cells are ordered by site, then by layer, then by sector.
  std::vector<std::vector<std::size_t>> hosts(g.layers.size());
  for (std::size_t l = 0; l < g.layers.size(); ++l) {
    const auto& pool = g.layers[l].host == SiteKind::Macro ? macro_idx : micro_idx;
    for (auto k : spread_pick(pool.size(), g.layers[l].site_count)) hosts[l].push_back(pool[k]);
  }
  for (SiteIndex site = 0; site < s.sites.size(); ++site) {
    for (std::size_t l = 0; l < g.layers.size(); ++l) {
      const auto& spec = g.layers[l];
      if (std::find(hosts[l].begin(), hosts[l].end(), site) == hosts[l].end()) continue;
      for (int sec = 0; sec < spec.sectors; ++sec) {
        CellDef c;
        c.id = fmt::format("{}-{}-{}", s.sites[site].id, spec.name, sec);
        c.site_id = s.sites[site].id;
        c.site = site;
        c.carrier_hz = spec.carrier_hz;
        c.bandwidth_hz = spec.bandwidth_hz;
        c.n_prb = spec.n_prb;
        c.tx_power_dbm = spec.tx_power_dbm;
        c.height_m = spec.height_m;
        if (spec.sectors > 1) c.azimuth_deg = 30.0 + 360.0 * sec / spec.sectors;
        c.tilt_deg = spec.tilt_deg;
        c.layer = spec.layer;
        c.cio_db = spec.cio_db;
        c.power = {spec.p0_w, spec.delta_p, dbm_to_w(spec.tx_power_dbm), spec.p_sleep_w};
        s.cells.push_back(std::move(c));
      }
    }
  }

  std::array<double, kSlotsPerDay> diurnal{};
  for (int k = 0; k < kSlotsPerDay; ++k) {
    const double hour = (k + 0.5) * kSlotDurationS / 3600.0;
    const double phase = 2.0 * std::numbers::pi * (hour - g.peak_hour) / 24.0;
    diurnal[k] = 1.0 - g.diurnal_amplitude * (1.0 - std::cos(phase)) / 2.0;
  }

  std::uniform_real_distribution<double> texture(0.8, 1.0);
  const int nx = s.area.nx();
  const int ny = s.area.ny();
  s.pixels.reserve(static_cast<std::size_t>(nx) * ny);
  for (int iy = 0; iy < ny; ++iy) {
    for (int ix = 0; ix < nx; ++ix) {
      const Position centre{(ix + 0.5) * g.pixel_size_m, (iy + 0.5) * g.pixel_size_m};
      double peak = 0.0;
      for (const auto& h : hotspots) {
        const double d = distance(centre, h);
        peak = std::max(peak, std::exp(-d * d / (2.0 * g.hotspot_radius_m * g.hotspot_radius_m)));
      }
      const double intensity =
          std::clamp((g.background + (1.0 - g.background) * peak) * texture(rng), 0.0, 1.0);
      TrafficPixel p;
      p.ix = ix;
      p.iy = iy;
      for (int k = 0; k < kSlotsPerDay; ++k) {
        p.slots[k].mean_active_ues = g.ues_min + (g.ues_max - g.ues_min) * intensity * diurnal[k];
        p.slots[k].mean_demand_bps =
            g.demand_min_bps +
            (g.demand_max_bps - g.demand_min_bps) * std::pow(intensity, g.demand_shape) * diurnal[k];
      }
      s.pixels.push_back(p);
    }
  }
  return s;
}

// Neighbors

bool NeighborMap::are_neighbors(CellIndex a, CellIndex b) const {
  const auto& list = lists_[a];
  return std::binary_search(list.begin(), list.end(), b);
}

NeighborMap build_neighbor_map(const Scenario& scenario, double radius_m) {
  if (!(radius_m > 0)) throw std::invalid_argument("neighbor radius must be > 0");
  const std::size_t n = scenario.cells.size();
  std::vector<std::vector<CellIndex>> lists(n);
  for (CellIndex a = 0; a < n; ++a) {
    for (CellIndex b = a + 1; b < n; ++b) {
      const double d = distance(scenario.site_of(a).pos, scenario.site_of(b).pos);
      if (d <= radius_m) {
        lists[a].push_back(b);
        lists[b].push_back(a);
      }
    }
  }
  for (auto& l : lists) std::sort(l.begin(), l.end());
  return NeighborMap(std::move(lists));
}

}  // namespace tandem
