#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "tandem/common.hpp"
#include "tandem/seeding.hpp"

namespace tandem {

enum class Interface : std::uint8_t { E2, A1, O1 };
enum class Kind : std::uint8_t {
  Setup,
  SubscriptionReq,
  SubscriptionResp,
  Indication,
  ControlReq,
  ControlAck,
  Policy,
  PmReport,
};

constexpr std::size_t kInterfaceCount = 3;
constexpr std::size_t kKindCount = 8;

std::string_view to_string(Interface iface);
std::string_view to_string(Kind kind);
std::optional<Interface> parse_interface(std::string_view s);
std::optional<Kind> parse_kind(std::string_view s);

/// policy travels only on A1, pm_report only on O1, everything else on E2.
bool is_legal(Interface iface, Kind kind);

enum class Role : std::uint8_t { Ran, Site, Cell, Ue, NearRtRic, CoosXApp, TsXApp, CoosRApp };

struct Endpoint {
  Role role{Role::Ran};
  std::uint64_t id{0};

  static Endpoint ran() { return {Role::Ran, 0}; }
  static Endpoint site(SiteIndex s) { return {Role::Site, s}; }
  static Endpoint cell(CellIndex c) { return {Role::Cell, c}; }
  static Endpoint ue(UeId u) { return {Role::Ue, u}; }
  static Endpoint near_rt_ric() { return {Role::NearRtRic, 0}; }
  static Endpoint coos_xapp() { return {Role::CoosXApp, 0}; }
  static Endpoint ts_xapp() { return {Role::TsXApp, 0}; }
  static Endpoint coos_rapp() { return {Role::CoosRApp, 0}; }

  friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

std::string to_string(const Endpoint& e);

// Payloads

/// Policy pair sent by the rApp over A1, together with the outage goal.
struct CoosPolicy {
  double alpha_off{0.0};
  double alpha_on{100.0};
  double target_outage_lo{14.0};
  double target_outage_hi{16.0};

  friend bool operator==(const CoosPolicy&, const CoosPolicy&) = default;
};

struct CellInfo {
  CellIndex cell{0};
  Layer layer{Layer::Capacity};
  double cio_db{0.0};
};

struct E2SetupPayload {
  SiteIndex site{0};
  std::vector<CellInfo> cells;
};

enum class Topic : std::uint8_t { CellLoad, UeMeasurement, CellState };

struct SubscriptionPayload {
  Topic topic{Topic::CellLoad};
  SiteIndex node{0};
  bool accepted{true};
};

struct UeMeasurementPayload {
  UeId ue{0};
  std::optional<CellIndex> serving;
  std::vector<double> rsrp_dbm;  // per cell; NaN for cells that do not transmit
};

struct CellLoadPayload {
  CellIndex cell{0};
  double load{0.0};
};

struct CellToBeOffPayload {
  CellIndex cell{0};
};

enum class ChangeCause : std::uint8_t { Command, Drained, ForcedTimeout, Manual };

struct CellStatePayload {
  CellIndex cell{0};
  CellStatus status{CellStatus::Active};
  ChangeCause cause{ChangeCause::Command};
};

enum class CellAction : std::uint8_t { Off, On };

struct CellCommandPayload {
  CellAction action{CellAction::Off};
  CellIndex cell{0};
};

struct HandoverPayload {
  UeId ue{0};
  CellIndex target{0};
};

struct ControlAckPayload {
  std::uint64_t request_seq{0};
  bool accepted{true};
  std::string reason;
};

struct PolicyPayload {
  CoosPolicy policy;
};

struct PmReportPayload {
  CellIndex cell{0};
  Layer layer{Layer::Capacity};
  CellStatus status{CellStatus::Active};
  double period_s{0.0};
  double ue_seconds{0.0};
  double deficit_ue_seconds{0.0};
  std::vector<double> switch_times_s;  // commanded state changes within the period
};

using Payload = std::variant<std::monostate, E2SetupPayload, SubscriptionPayload, UeMeasurementPayload,
                             CellLoadPayload, CellToBeOffPayload, CellStatePayload, CellCommandPayload,
                             HandoverPayload, ControlAckPayload, PolicyPayload, PmReportPayload>;

std::string_view payload_type(const Payload& payload);

struct Message {
  Interface iface{Interface::E2};
  Kind kind{Kind::Indication};
  double t_s{0.0};
  Endpoint source;
  Endpoint destination;
  Payload payload;
  std::uint64_t seq{0};  // assigned by the bus
};

class IllegalMessage : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Per-indication-type breakdown of E2 indications.
struct IndicationBreakdown {
  std::uint64_t ue_measurement{0};
  std::uint64_t cell_load{0};
  std::uint64_t cell_to_be_off{0};
  std::uint64_t cell_state{0};

  std::uint64_t total() const { return ue_measurement + cell_load + cell_to_be_off + cell_state; }
  friend bool operator==(const IndicationBreakdown&, const IndicationBreakdown&) = default;
};

struct Counters {
  std::array<std::array<std::uint64_t, kKindCount>, kInterfaceCount> by_kind{};
  std::array<std::uint64_t, kInterfaceCount> total{};
  IndicationBreakdown indications;

  std::uint64_t count(Interface iface, Kind kind) const {
    return by_kind[static_cast<std::size_t>(iface)][static_cast<std::size_t>(kind)];
  }
  std::uint64_t interface_total(Interface iface) const { return total[static_cast<std::size_t>(iface)]; }
  std::uint64_t grand_total() const { return total[0] + total[1] + total[2]; }
  /// total = sum over kinds, for every interface.
  bool identity_holds() const;

  friend bool operator==(const Counters&, const Counters&) = default;
};

struct SubscriptionFilter {
  std::optional<Interface> iface;
  std::optional<Kind> kind;
  std::optional<Endpoint> destination;

  bool matches(const Message& m) const;
};

/// One newline-delimited JSON record per published message.
std::string format_log_record(const Message& m);

/// In-process message fabric with E2 / A1 / O1 semantics. Delivery is
/// synchronous (or delayed by a fixed per-interface latency), in
/// subscription order; each published message is counted exactly once.
class RicBus {
 public:
  using Handler = std::function<void(const Message&)>;
  using SubscriptionId = std::size_t;

  SubscriptionId subscribe(SubscriptionFilter filter, Handler handler);

  /// Throws IllegalMessage (and counts nothing) for an illegal pair.
  std::uint64_t publish(Message msg);

  Counters snapshot_counters() const { return counters_; }
  std::uint64_t delivered(SubscriptionId id) const { return subscribers_.at(id).delivered; }

  void set_latency(Interface iface, double seconds);
  /// Delivers queued messages whose due time is <= t_s.
  void deliver_due(double t_s);
  std::size_t queued() const { return queue_.size(); }

  /// Streams every published message as NDJSON to `out` (nullptr disables).
  void set_log_sink(std::ostream* out) { sink_ = out; }
  std::uint64_t log_digest() const { return digest_.value(); }

 private:
  struct Subscriber {
    SubscriptionFilter filter;
    Handler handler;
    std::uint64_t delivered{0};
  };

  void dispatch(const Message& msg);

  std::vector<Subscriber> subscribers_;
  Counters counters_;
  std::array<double, kInterfaceCount> latency_{};
  std::multimap<std::pair<double, std::uint64_t>, Message> queue_;
  std::uint64_t next_seq_{1};
  std::ostream* sink_{nullptr};
  Digest digest_;
};

}  // namespace tandem
