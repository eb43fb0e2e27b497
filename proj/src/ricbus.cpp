#include "tandem/ricbus.hpp"

#include <ostream>

#include <fmt/format.h>

namespace tandem {

namespace {

constexpr std::array<std::string_view, kInterfaceCount> kInterfaceNames{"E2", "A1", "O1"};
constexpr std::array<std::string_view, kKindCount> kKindNames{
    "setup", "subscription_req", "subscription_resp", "indication",
    "control_req", "control_ack", "policy", "pm_report"};

}  // namespace

std::string_view to_string(Interface iface) { return kInterfaceNames[static_cast<std::size_t>(iface)]; }
std::string_view to_string(Kind kind) { return kKindNames[static_cast<std::size_t>(kind)]; }

std::optional<Interface> parse_interface(std::string_view s) {
  for (std::size_t i = 0; i < kInterfaceNames.size(); ++i)
    if (kInterfaceNames[i] == s) return static_cast<Interface>(i);
  return std::nullopt;
}

std::optional<Kind> parse_kind(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i)
    if (kKindNames[i] == s) return static_cast<Kind>(i);
  return std::nullopt;
}

bool is_legal(Interface iface, Kind kind) {
  switch (kind) {
    case Kind::Policy: return iface == Interface::A1;
    case Kind::PmReport: return iface == Interface::O1;
    default: return iface == Interface::E2;
  }
}

std::string to_string(const Endpoint& e) {
  switch (e.role) {
    case Role::Ran: return "ran";
    case Role::Site: return fmt::format("site:{}", e.id);
    case Role::Cell: return fmt::format("cell:{}", e.id);
    case Role::Ue: return fmt::format("ue:{}", e.id);
    case Role::NearRtRic: return "near-rt-ric";
    case Role::CoosXApp: return "coos-xapp";
    case Role::TsXApp: return "ts-xapp";
    case Role::CoosRApp: return "coos-rapp";
  }
  return "?";
}

std::string_view payload_type(const Payload& payload) {
  struct Visitor {
    std::string_view operator()(const std::monostate&) const { return "none"; }
    std::string_view operator()(const E2SetupPayload&) const { return "e2_setup"; }
    std::string_view operator()(const SubscriptionPayload&) const { return "subscription"; }
    std::string_view operator()(const UeMeasurementPayload&) const { return "ue_measurement"; }
    std::string_view operator()(const CellLoadPayload&) const { return "cell_load"; }
    std::string_view operator()(const CellToBeOffPayload&) const { return "cell_to_be_off"; }
    std::string_view operator()(const CellStatePayload&) const { return "cell_state"; }
    std::string_view operator()(const CellCommandPayload&) const { return "cell_command"; }
    std::string_view operator()(const HandoverPayload&) const { return "handover"; }
    std::string_view operator()(const ControlAckPayload&) const { return "ack"; }
    std::string_view operator()(const PolicyPayload&) const { return "policy"; }
    std::string_view operator()(const PmReportPayload&) const { return "pm_report"; }
  };
  return std::visit(Visitor{}, payload);
}

bool Counters::identity_holds() const {
  for (std::size_t i = 0; i < kInterfaceCount; ++i) {
    std::uint64_t sum = 0;
    for (auto v : by_kind[i]) sum += v;
    if (sum != total[i]) return false;
  }
  return true;
}

bool SubscriptionFilter::matches(const Message& m) const {
  if (iface && *iface != m.iface) return false;
  if (kind && *kind != m.kind) return false;
  if (destination && !(*destination == m.destination)) return false;
  return true;
}

std::string format_log_record(const Message& m) {
  std::string line = fmt::format(R"({{"t_s":{},"interface":"{}","kind":"{}","source":"{}","destination":"{}","type":"{}")",
                                 m.t_s, to_string(m.iface), to_string(m.kind), to_string(m.source),
                                 to_string(m.destination), payload_type(m.payload));
  if (const auto* p = std::get_if<PolicyPayload>(&m.payload)) {
    line += fmt::format(R"(,"payload":{{"alpha_off":{},"alpha_on":{},"target_outage_lo":{},"target_outage_hi":{}}})",
                        p->policy.alpha_off, p->policy.alpha_on, p->policy.target_outage_lo,
                        p->policy.target_outage_hi);
  } else if (const auto* c = std::get_if<CellCommandPayload>(&m.payload)) {
    line += fmt::format(R"(,"payload":{{"action":"{}","cell":{}}})", c->action == CellAction::Off ? "off" : "on",
                        c->cell);
  } else if (const auto* h = std::get_if<HandoverPayload>(&m.payload)) {
    line += fmt::format(R"(,"payload":{{"ue":{},"target":{}}})", h->ue, h->target);
  }
  line += "}";
  return line;
}

RicBus::SubscriptionId RicBus::subscribe(SubscriptionFilter filter, Handler handler) {
  subscribers_.push_back({std::move(filter), std::move(handler), 0});
  return subscribers_.size() - 1;
}

void RicBus::set_latency(Interface iface, double seconds) {
  if (!(seconds >= 0)) throw std::invalid_argument("bus latency must be >= 0");
  latency_[static_cast<std::size_t>(iface)] = seconds;
}

std::uint64_t RicBus::publish(Message msg) {
  if (!is_legal(msg.iface, msg.kind))
    throw IllegalMessage(fmt::format("{} is not allowed on {}", to_string(msg.kind), to_string(msg.iface)));

  msg.seq = next_seq_++;
  const auto i = static_cast<std::size_t>(msg.iface);
  ++counters_.by_kind[i][static_cast<std::size_t>(msg.kind)];
  ++counters_.total[i];
  if (msg.kind == Kind::Indication) {
    if (std::holds_alternative<UeMeasurementPayload>(msg.payload)) ++counters_.indications.ue_measurement;
    else if (std::holds_alternative<CellLoadPayload>(msg.payload)) ++counters_.indications.cell_load;
    else if (std::holds_alternative<CellToBeOffPayload>(msg.payload)) ++counters_.indications.cell_to_be_off;
    else if (std::holds_alternative<CellStatePayload>(msg.payload)) ++counters_.indications.cell_state;
  }
#ifndef NDEBUG
  if (!counters_.identity_holds()) throw std::logic_error("bus counter identity violated");
#endif

  digest_.add(msg.t_s);
  digest_.add(msg.iface);
  digest_.add(msg.kind);
  digest_.add(msg.source.role);
  digest_.add(msg.source.id);
  digest_.add(msg.destination.role);
  digest_.add(msg.destination.id);
  digest_.add(payload_type(msg.payload));
  if (const auto* p = std::get_if<PolicyPayload>(&msg.payload)) {
    digest_.add(p->policy.alpha_off);
    digest_.add(p->policy.alpha_on);
  } else if (const auto* c = std::get_if<CellCommandPayload>(&msg.payload)) {
    digest_.add(c->action);
    digest_.add(c->cell);
  } else if (const auto* h = std::get_if<HandoverPayload>(&msg.payload)) {
    digest_.add(h->ue);
    digest_.add(h->target);
  } else if (const auto* l = std::get_if<CellLoadPayload>(&msg.payload)) {
    digest_.add(l->load);
  }

  if (sink_) *sink_ << format_log_record(msg) << '\n';

  const std::uint64_t seq = msg.seq;
  const double latency = latency_[i];
  if (latency > 0) {
    queue_.emplace(std::make_pair(msg.t_s + latency, seq), std::move(msg));
  } else {
    dispatch(msg);
  }
  return seq;
}

void RicBus::deliver_due(double t_s) {
  while (!queue_.empty() && queue_.begin()->first.first <= t_s) {
    auto node = queue_.extract(queue_.begin());
    dispatch(node.mapped());
  }
}

void RicBus::dispatch(const Message& msg) {
  // Handlers may subscribe or publish re-entrantly; index-based iteration
  // keeps delivery order stable.
  const std::size_t n = subscribers_.size();
  for (std::size_t k = 0; k < n; ++k) {
    if (!subscribers_[k].filter.matches(msg)) continue;
    ++subscribers_[k].delivered;
    auto handler = subscribers_[k].handler;
    handler(msg);
  }
}

}  // namespace tandem
