#include "tandem/config.hpp"

#include <fstream>
#include <set>

#include <fmt/format.h>

namespace tandem {

namespace {

std::string join_issues(const std::vector<std::string>& issues) {
  std::string out = "invalid run configuration";
  for (const auto& i : issues) out += "\n  " + i;
  return out;
}

// Reads optional keys from one JSON object and remembers which were consumed.
class Reader {
 public:
  Reader(const nlohmann::json& obj, std::string path, std::vector<std::string>& issues)
      : obj_(obj), path_(std::move(path)), issues_(issues) {
    if (!obj_.is_object()) issues_.push_back(fmt::format("{}: expected an object", path_.empty() ? "<root>" : path_));
  }

  ~Reader() {
    if (!obj_.is_object()) return;
    for (const auto& [key, value] : obj_.items())
      if (!seen_.contains(key)) issues_.push_back(fmt::format("{}: unknown key", where(key)));
  }

  template <typename T>
  void get(const char* key, T& target) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    try {
      target = obj_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      issues_.push_back(fmt::format("{}: wrong type", where(key)));
    }
  }

  template <typename T>
  void get_optional(const char* key, std::optional<T>& target) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return;
    if (obj_.at(key).is_null()) {
      target.reset();
      return;
    }
    T value{};
    get(key, value);
    target = value;
  }

  const nlohmann::json* child(const char* key) {
    seen_.insert(key);
    if (!obj_.is_object() || !obj_.contains(key)) return nullptr;
    return &obj_.at(key);
  }

  bool has(const char* key) const { return obj_.is_object() && obj_.contains(key); }

  std::string where(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  const nlohmann::json& obj_;
  std::string path_;
  std::vector<std::string>& issues_;
  std::set<std::string> seen_;
};

template <typename Enum>
struct EnumName {
  Enum value;
  const char* name;
};

constexpr EnumName<ReferenceMode> kReferenceNames[] = {
    {ReferenceMode::None, "none"}, {ReferenceMode::AllActive, "all_active"}, {ReferenceMode::AllCapacityOff, "all_capacity_off"}};
constexpr EnumName<OutageWeighting> kWeightingNames[] = {{OutageWeighting::UeSeconds, "ue_seconds"},
                                                         {OutageWeighting::PerUe, "per_ue"}};

template <typename Enum, std::size_t N>
void get_enum(Reader& r, const char* key, const EnumName<Enum> (&names)[N], Enum& target,
              std::vector<std::string>& issues) {
  if (!r.has(key)) return;
  std::string text;
  r.get(key, text);
  for (const auto& n : names)
    if (text == n.name) {
      target = n.value;
      return;
    }
  issues.push_back(fmt::format("{}: unknown value '{}'", r.where(key), text));
}

template <typename Enum, std::size_t N>
const char* enum_name(const EnumName<Enum> (&names)[N], Enum value) {
  for (const auto& n : names)
    if (n.value == value) return n.name;
  return "?";
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> issues)
    : std::invalid_argument(join_issues(issues)), issues_(std::move(issues)) {}

SimConfig sim_config_from_json(const nlohmann::json& doc) {
  SimConfig c;
  std::vector<std::string> issues;
  {
    Reader r(doc, "", issues);
    r.get("horizon_s", c.horizon_s);
    r.get("tick_s", c.tick_s);
    r.get("t_x_s", c.t_x_s);
    r.get("t_r_s", c.t_r_s);
    r.get("t_block_s", c.t_block_s);
    r.get("w_pp_s", c.w_pp_s);
    r.get("kpm_period_s", c.kpm_period_s);
    r.get("pm_period_s", c.pm_period_s);
    r.get("series_period_s", c.series_period_s);
    r.get("warmup_s", c.warmup_s);
    r.get("cleanup_timeout_s", c.cleanup_timeout_s);
    r.get("hysteresis_db", c.hysteresis_db);
    r.get("neighbor_radius_m", c.neighbor_radius_m);
    r.get("max_commands", c.max_commands);
    r.get("seed", c.seed);
    r.get_optional("shadowing_seed", c.shadowing_seed);
    r.get_optional("fixed_slot", c.fixed_slot);
    r.get("prefill", c.prefill);
    get_enum(r, "reference", kReferenceNames, c.reference, issues);
    get_enum(r, "outage_weighting", kWeightingNames, c.outage_weighting, issues);

    if (const auto* j = r.child("propagation")) {
      Reader p(*j, "propagation", issues);
      auto& v = c.propagation;
      p.get("shadowing_sigma_db", v.shadowing_sigma_db);
      p.get("shadowing_dcorr_m", v.shadowing_dcorr_m);
      p.get("noise_figure_db", v.noise_figure_db);
      p.get("sinr_min_db", v.sinr_min_db);
      p.get("sinr_max_db", v.sinr_max_db);
      p.get("shannon_alpha", v.shannon_alpha);
      p.get("se_max_bps_hz", v.se_max_bps_hz);
      p.get("ue_height_m", v.ue_height_m);
      p.get("los_probability", v.los_probability);
      p.get("use_tilt", v.use_tilt);
    }
    if (const auto* j = r.child("arrivals")) {
      Reader a(*j, "arrivals", issues);
      a.get("mean_service_s", c.arrivals.mean_service_s);
      a.get("waypoint_radius_m", c.arrivals.waypoint_radius_m);
      a.get("speed_min_mps", c.arrivals.speed_min_mps);
      a.get("speed_max_mps", c.arrivals.speed_max_mps);
    }
    if (const auto* j = r.child("policy")) {
      Reader p(*j, "policy", issues);
      p.get("alpha_off", c.policy.alpha_off);
      p.get("alpha_on", c.policy.alpha_on);
      p.get("target_outage_lo", c.policy.target_outage_lo);
      p.get("target_outage_hi", c.policy.target_outage_hi);
    }
    if (const auto* j = r.child("rapp")) {
      Reader p(*j, "rapp", issues);
      p.get("step_off", c.rapp.step_off);
      p.get("step_on", c.rapp.step_on);
      p.get("alpha_off_max", c.rapp.alpha_off_max);
      p.get("alpha_on_min", c.rapp.alpha_on_min);
    }
    if (const auto* j = r.child("controllers")) {
      Reader p(*j, "controllers", issues);
      p.get("coos_xapp", c.coos_xapp);
      p.get("ts_xapp", c.ts_xapp);
      p.get("rapp", c.rapp_enabled);
    }
    if (const auto* j = r.child("latency_s")) {
      Reader p(*j, "latency_s", issues);
      p.get("E2", c.e2_latency_s);
      p.get("A1", c.a1_latency_s);
      p.get("O1", c.o1_latency_s);
    }
  }
  if (issues.empty()) {
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      issues.push_back(e.what());
    }
  }
  if (!issues.empty()) throw ConfigError(std::move(issues));
  return c;
}

nlohmann::json sim_config_to_json(const SimConfig& c) {
  nlohmann::json j;
  j["horizon_s"] = c.horizon_s;
  j["tick_s"] = c.tick_s;
  j["t_x_s"] = c.t_x_s;
  j["t_r_s"] = c.t_r_s;
  j["t_block_s"] = c.t_block_s;
  j["w_pp_s"] = c.w_pp_s;
  j["kpm_period_s"] = c.kpm_period_s;
  j["pm_period_s"] = c.pm_period_s;
  j["series_period_s"] = c.series_period_s;
  j["warmup_s"] = c.warmup_s;
  j["cleanup_timeout_s"] = c.cleanup_timeout_s;
  j["hysteresis_db"] = c.hysteresis_db;
  j["neighbor_radius_m"] = c.neighbor_radius_m;
  j["max_commands"] = c.max_commands;
  j["seed"] = c.seed;
  j["shadowing_seed"] = c.shadowing_seed ? nlohmann::json(*c.shadowing_seed) : nlohmann::json(nullptr);
  j["fixed_slot"] = c.fixed_slot ? nlohmann::json(*c.fixed_slot) : nlohmann::json(nullptr);
  j["prefill"] = c.prefill;
  j["reference"] = enum_name(kReferenceNames, c.reference);
  j["outage_weighting"] = enum_name(kWeightingNames, c.outage_weighting);
  const auto& p = c.propagation;
  j["propagation"] = {{"shadowing_sigma_db", p.shadowing_sigma_db}, {"shadowing_dcorr_m", p.shadowing_dcorr_m},
                      {"noise_figure_db", p.noise_figure_db},       {"sinr_min_db", p.sinr_min_db},
                      {"sinr_max_db", p.sinr_max_db},               {"shannon_alpha", p.shannon_alpha},
                      {"se_max_bps_hz", p.se_max_bps_hz},           {"ue_height_m", p.ue_height_m},
                      {"los_probability", p.los_probability},       {"use_tilt", p.use_tilt}};
  j["arrivals"] = {{"mean_service_s", c.arrivals.mean_service_s},
                   {"waypoint_radius_m", c.arrivals.waypoint_radius_m},
                   {"speed_min_mps", c.arrivals.speed_min_mps},
                   {"speed_max_mps", c.arrivals.speed_max_mps}};
  j["policy"] = {{"alpha_off", c.policy.alpha_off},
                 {"alpha_on", c.policy.alpha_on},
                 {"target_outage_lo", c.policy.target_outage_lo},
                 {"target_outage_hi", c.policy.target_outage_hi}};
  j["rapp"] = {{"step_off", c.rapp.step_off},
               {"step_on", c.rapp.step_on},
               {"alpha_off_max", c.rapp.alpha_off_max},
               {"alpha_on_min", c.rapp.alpha_on_min}};
  j["controllers"] = {{"coos_xapp", c.coos_xapp}, {"ts_xapp", c.ts_xapp}, {"rapp", c.rapp_enabled}};
  j["latency_s"] = {{"E2", c.e2_latency_s}, {"A1", c.a1_latency_s}, {"O1", c.o1_latency_s}};
  return j;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({fmt::format("cannot open {}", path.string())});
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError({fmt::format("{}: {}", path.string(), e.what())});
  }
  return sim_config_from_json(doc);
}

LogParseError::LogParseError(std::size_t line, const std::string& what)
    : std::runtime_error(fmt::format("line {}: {}", line, what)), line_(line) {}

Counters tally_message_log(std::istream& in) {
  Counters c;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error&) {
      throw LogParseError(line, "not valid JSON");
    }
    if (!rec.is_object() || !rec.contains("interface") || !rec.contains("kind") || !rec["interface"].is_string() ||
        !rec["kind"].is_string())
      throw LogParseError(line, "missing interface or kind");
    const auto iface = parse_interface(rec["interface"].get<std::string>());
    const auto kind = parse_kind(rec["kind"].get<std::string>());
    if (!iface) throw LogParseError(line, "unknown interface");
    if (!kind) throw LogParseError(line, "unknown kind");
    if (!is_legal(*iface, *kind)) throw LogParseError(line, "kind not allowed on interface");
    const auto i = static_cast<std::size_t>(*iface);
    ++c.by_kind[i][static_cast<std::size_t>(*kind)];
    ++c.total[i];
    if (*kind == Kind::Indication) {
      const std::string type = rec.value("type", "");
      if (type == "ue_measurement") ++c.indications.ue_measurement;
      else if (type == "cell_load") ++c.indications.cell_load;
      else if (type == "cell_to_be_off") ++c.indications.cell_to_be_off;
      else if (type == "cell_state") ++c.indications.cell_state;
    }
  }
  return c;
}

}  // namespace tandem
