#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "tandem/ricbus.hpp"

using namespace tandem;

namespace {

Message indication(double t = 0.0) {
  return {Interface::E2, Kind::Indication, t, Endpoint::cell(1), Endpoint::coos_xapp(), CellLoadPayload{1, 0.4}};
}

}  // namespace

TEST(Legality, PolicyOnlyOnA1PmOnlyOnO1) {
  for (std::size_t i = 0; i < kInterfaceCount; ++i)
    for (std::size_t k = 0; k < kKindCount; ++k) {
      const auto iface = static_cast<Interface>(i);
      const auto kind = static_cast<Kind>(k);
      bool expected;
      if (kind == Kind::Policy) expected = iface == Interface::A1;
      else if (kind == Kind::PmReport) expected = iface == Interface::O1;
      else expected = iface == Interface::E2;
      EXPECT_EQ(is_legal(iface, kind), expected) << to_string(iface) << " " << to_string(kind);
    }
}

TEST(Names, RoundTrip) {
  for (std::size_t i = 0; i < kInterfaceCount; ++i)
    EXPECT_EQ(parse_interface(to_string(static_cast<Interface>(i))), static_cast<Interface>(i));
  for (std::size_t k = 0; k < kKindCount; ++k) EXPECT_EQ(parse_kind(to_string(static_cast<Kind>(k))), static_cast<Kind>(k));
  EXPECT_FALSE(parse_kind("bogus").has_value());
  EXPECT_FALSE(parse_interface("X2").has_value());
}

TEST(RicBus, CountsPerMessageNotPerDelivery) {
  RicBus bus;
  int a = 0, b = 0;
  const auto sa = bus.subscribe({Interface::E2, Kind::Indication, std::nullopt}, [&](const Message&) { ++a; });
  const auto sb = bus.subscribe({}, [&](const Message&) { ++b; });
  bus.publish(indication());
  EXPECT_EQ(a, 1);
  EXPECT_EQ(b, 1);
  EXPECT_EQ(bus.delivered(sa), 1u);
  EXPECT_EQ(bus.delivered(sb), 1u);
  const Counters c = bus.snapshot_counters();
  EXPECT_EQ(c.count(Interface::E2, Kind::Indication), 1u);
  EXPECT_EQ(c.grand_total(), 1u);
  EXPECT_EQ(c.indications.cell_load, 1u);
}

TEST(RicBus, IllegalMessageRejectedAndNotCounted) {
  RicBus bus;
  int delivered = 0;
  bus.subscribe({}, [&](const Message&) { ++delivered; });
  Message m{Interface::E2, Kind::Policy, 0.0, Endpoint::coos_rapp(), Endpoint::coos_xapp(), PolicyPayload{}};
  EXPECT_THROW(bus.publish(m), IllegalMessage);
  m.iface = Interface::A1;
  m.kind = Kind::PmReport;
  EXPECT_THROW(bus.publish(m), IllegalMessage);
  EXPECT_EQ(bus.snapshot_counters(), Counters{});
  EXPECT_EQ(delivered, 0);
}

TEST(RicBus, EmptyCountersBeforePublish) {
  RicBus bus;
  const Counters c = bus.snapshot_counters();
  EXPECT_EQ(c.grand_total(), 0u);
  EXPECT_TRUE(c.identity_holds());
}

TEST(RicBus, NPublishesOfOneKind) {
  RicBus bus;
  for (int i = 0; i < 37; ++i)
    bus.publish({Interface::O1, Kind::PmReport, 1.0 * i, Endpoint::cell(0), Endpoint::coos_rapp(), PmReportPayload{}});
  const Counters c = bus.snapshot_counters();
  EXPECT_EQ(c.count(Interface::O1, Kind::PmReport), 37u);
  EXPECT_EQ(c.interface_total(Interface::O1), 37u);
  EXPECT_EQ(c.grand_total(), 37u);
  EXPECT_TRUE(c.identity_holds());
}

TEST(RicBus, FilterByDestination) {
  RicBus bus;
  int xapp = 0;
  bus.subscribe({std::nullopt, std::nullopt, Endpoint::coos_xapp()}, [&](const Message&) { ++xapp; });
  bus.publish(indication());
  Message other = indication();
  other.destination = Endpoint::ts_xapp();
  bus.publish(other);
  EXPECT_EQ(xapp, 1);
}

TEST(RicBus, NoLossAndDeterministicOrder) {
  auto run = [] {
    RicBus bus;
    std::vector<std::pair<int, std::uint64_t>> log;
    for (int k = 0; k < 4; ++k)
      bus.subscribe({k % 2 ? std::optional<Interface>(Interface::E2) : std::nullopt, std::nullopt, std::nullopt},
                    [&, k](const Message& m) { log.emplace_back(k, m.seq); });
    std::uint64_t e2 = 0;
    for (int i = 0; i < 500; ++i) {
      if (i % 7 == 0) {
        bus.publish({Interface::A1, Kind::Policy, 1.0 * i, Endpoint::coos_rapp(), Endpoint::coos_xapp(), PolicyPayload{}});
      } else {
        bus.publish(indication(i));
        ++e2;
      }
    }
    EXPECT_EQ(bus.delivered(0), 500u);
    EXPECT_EQ(bus.delivered(1), e2);
    return std::make_pair(log, bus.log_digest());
  };
  EXPECT_EQ(run(), run());
}

TEST(RicBus, ReentrantPublishIsCountedOnce) {
  RicBus bus;
  bus.subscribe({Interface::E2, Kind::ControlReq, std::nullopt}, [&](const Message& m) {
    bus.publish({Interface::E2, Kind::ControlAck, m.t_s, m.destination, m.source, ControlAckPayload{m.seq, true, {}}});
  });
  int acks = 0;
  bus.subscribe({Interface::E2, Kind::ControlAck, std::nullopt}, [&](const Message&) { ++acks; });
  bus.publish({Interface::E2, Kind::ControlReq, 0.0, Endpoint::coos_xapp(), Endpoint::cell(2),
               CellCommandPayload{CellAction::Off, 2}});
  EXPECT_EQ(acks, 1);
  EXPECT_EQ(bus.snapshot_counters().grand_total(), 2u);
}

TEST(RicBus, LatencyDelaysDeliveryNotCounting) {
  RicBus bus;
  bus.set_latency(Interface::E2, 0.5);
  int delivered = 0;
  bus.subscribe({}, [&](const Message&) { ++delivered; });
  bus.publish(indication(1.0));
  EXPECT_EQ(bus.snapshot_counters().grand_total(), 1u);
  EXPECT_EQ(delivered, 0);
  bus.deliver_due(1.4);
  EXPECT_EQ(delivered, 0);
  bus.deliver_due(1.5);
  EXPECT_EQ(delivered, 1);
  EXPECT_EQ(bus.queued(), 0u);
  EXPECT_THROW(bus.set_latency(Interface::A1, -1.0), std::invalid_argument);
}

TEST(RicBus, LogRecordsAreJson) {
  RicBus bus;
  std::ostringstream out;
  bus.set_log_sink(&out);
  bus.publish(indication(3.0));
  bus.publish({Interface::A1, Kind::Policy, 300.0, Endpoint::coos_rapp(), Endpoint::coos_xapp(),
               PolicyPayload{{5.0, 100.0, 14.0, 16.0}}});
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["interface"], "E2");
  EXPECT_EQ(j["kind"], "indication");
  EXPECT_EQ(j["source"], "cell:1");
  std::getline(in, line);
  j = nlohmann::json::parse(line);
  EXPECT_EQ(j["payload"]["alpha_off"], 5.0);
  EXPECT_EQ(j["payload"]["target_outage_hi"], 16.0);
}

TEST(Counters, PublishedFixtureIdentity) {
  // Published totals: 1,192,618 E2 messages, of which 432 control and
  // 1,191,418 indications; the rest are setup and subscription traffic.
  constexpr std::uint64_t kTotal = 1192618, kControl = 432, kIndications = 1191418;
  constexpr std::uint64_t kRemainder = kTotal - kControl - kIndications;
  static_assert(kRemainder == 768);
  Counters c;
  auto set = [&](Kind k, std::uint64_t n) {
    c.by_kind[0][static_cast<std::size_t>(k)] = n;
    c.total[0] += n;
  };
  set(Kind::ControlReq, kControl);
  set(Kind::Indication, kIndications);
  set(Kind::Setup, 39);
  set(Kind::SubscriptionReq, (kRemainder - 39) / 2 + 1);
  set(Kind::SubscriptionResp, kRemainder - 39 - ((kRemainder - 39) / 2 + 1));
  EXPECT_EQ(c.interface_total(Interface::E2), kTotal);
  EXPECT_TRUE(c.identity_holds());
  c.total[0] += 1;
  EXPECT_FALSE(c.identity_holds());
}
