#pragma once

#include <cmath>
#include <numbers>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace tandem {

using CellIndex = std::size_t;
using SiteIndex = std::size_t;
using UeId = std::uint64_t;

constexpr double kSpeedOfLight = 299792458.0;
constexpr double kThermalNoiseDbmPerHz = -174.0;

constexpr int kSlotsPerDay = 48;
constexpr double kSlotDurationS = 1800.0;
constexpr double kDayS = 86400.0;

struct Position {
  double x{0.0};
  double y{0.0};

  friend bool operator==(const Position&, const Position&) = default;
};

inline double distance(Position a, Position b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline double db_to_linear(double db) { return std::exp(db * (std::numbers::ln10 / 10.0)); }
inline double linear_to_db(double linear) { return 10.0 * std::log10(linear); }
inline double dbm_to_mw(double dbm) { return db_to_linear(dbm); }
inline double mw_to_dbm(double mw) { return linear_to_db(mw); }
inline double dbm_to_w(double dbm) { return db_to_linear(dbm) / 1000.0; }

/// Half-hour traffic slot (0..47) containing time-of-day `t_s`.
inline int slot_of(double t_s) {
  double tod = std::fmod(t_s, kDayS);
  if (tod < 0) tod += kDayS;
  int slot = static_cast<int>(tod / kSlotDurationS);
  return slot < kSlotsPerDay ? slot : kSlotsPerDay - 1;
}

enum class Layer { Coverage, Capacity };
enum class Environment { UrbanMacro, UrbanMicro };
enum class CellStatus { Active, PendingOff, Off };

std::string_view to_string(Layer layer);
std::string_view to_string(Environment env);
std::string_view to_string(CellStatus status);

}  // namespace tandem
