#include <gtest/gtest.h>

#include <random>

#include "arpsim/arp_server.hpp"

using namespace arpsim;
using namespace std::chrono_literals;

namespace {

const Ipv4Addr kSrvIp = Ipv4Addr::parse("192.0.0.108");
const MacAddr kSrvMac = MacAddr::parse("00:0e:7f:5f:ba:40");

Ipv4Addr ip(int last) { return Ipv4Addr({192, 0, 0, static_cast<std::uint8_t>(last)}); }
MacAddr mac(int n) { return MacAddr({0x00, 0x0c, 0x29, 0x4a, 0x10, static_cast<std::uint8_t>(n)}); }

ArpServer make_server() { return ArpServer(ServerConfig{kSrvIp, kSrvMac}); }

EtherFrame arp(ArpOp op, Ipv4Addr sip, MacAddr smac, Ipv4Addr tip, std::optional<MacAddr> eth_src = std::nullopt,
               MacAddr eth_dst = MacAddr::broadcast()) {
  ArpPacket p;
  p.op = op;
  p.sender_ip = sip;
  p.sender_mac = smac;
  p.target_ip = tip;
  return make_arp_frame(eth_dst, eth_src.value_or(smac), p);
}

EtherFrame gratuitous(Ipv4Addr sip, MacAddr smac) { return arp(ArpOp::request, sip, smac, sip); }

}  // namespace

TEST(ArpServer, LearnsFromBroadcastThenAnswers) {
  ArpServer s = make_server();
  ServerOutput out = s.learn_from_broadcast(gratuitous(ip(15), mac(15)), 1, SimTime{0});
  EXPECT_EQ(out.step, CascadeStep::insert);
  EXPECT_TRUE(out.frames.empty());

  out = s.handle_arp(arp(ArpOp::request, ip(13), mac(13), ip(15)), 2, SimTime{0});
  ASSERT_TRUE(out.answered);
  ASSERT_EQ(out.frames.size(), 1u);
  const EtherFrame& r = out.frames[0];
  EXPECT_EQ(r.src, kSrvMac);
  EXPECT_EQ(r.dst, mac(13));
  const ArpPacket p = decode_arp(r.payload);
  EXPECT_EQ(p.op, ArpOp::reply);
  EXPECT_EQ(p.sender_ip, ip(15));
  EXPECT_EQ(p.sender_mac, mac(15));
  EXPECT_EQ(p.target_ip, ip(13));
}

TEST(ArpServer, RepeatedPairOnlyRefreshes) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(15), mac(15)), 1, SimTime{0});
  ServerOutput out = s.learn_from_broadcast(gratuitous(ip(15), mac(15)), 2, from_seconds(5));
  EXPECT_EQ(out.step, CascadeStep::refresh);
  EXPECT_TRUE(out.table_changes.empty());
  EXPECT_EQ(s.table().find(ip(15))->updated_at, from_seconds(5));
}

TEST(ArpServer, SilentForUnknownTargetAndOwnAddress) {
  ArpServer s = make_server();
  s.add_manual(kSrvIp, kSrvMac);
  EXPECT_FALSE(s.handle_arp(arp(ArpOp::request, ip(13), mac(13), ip(77)), 1, SimTime{0}).answered);
  EXPECT_FALSE(s.handle_arp(arp(ArpOp::request, ip(13), mac(13), kSrvIp), 2, SimTime{0}).answered);
}

TEST(ArpServer, HidingAlarmStopsEverything) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(15), mac(15)), 1, SimTime{0});
  // Ethernet source is the attacker, ARP sender claims host 100.
  const EtherFrame f = arp(ArpOp::request, ip(100), mac(100), ip(15), MacAddr::parse("00:0e:7f:5f:ba:41"));
  ServerOutput out = s.handle_arp(f, 7, SimTime{0});
  EXPECT_EQ(out.step, CascadeStep::hiding);
  EXPECT_FALSE(out.answered);
  EXPECT_TRUE(out.table_changes.empty());
  ASSERT_EQ(out.alarms.size(), 1u);
  EXPECT_EQ(out.alarms[0].reason, SpoofReason::hiding);
  EXPECT_EQ(out.alarms[0].evidence_frame, 7u);
  EXPECT_FALSE(s.table().find(ip(100)));
}

TEST(ArpServer, IpChangeToUnusedAddressRebindsSilently) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(13), mac(13)), 1, SimTime{0});
  ServerOutput out = s.learn_from_broadcast(gratuitous(ip(17), mac(13)), 2, from_seconds(1));
  EXPECT_EQ(out.step, CascadeStep::rebind);
  EXPECT_TRUE(out.alarms.empty());
  EXPECT_FALSE(s.table().find(ip(13)));
  EXPECT_EQ(s.table().find(ip(17))->mac, mac(13));
}

TEST(ArpServer, ConflictWithLiveOwnerIsImpersonation) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(13), mac(13)), 1, SimTime{0});
  s.learn_from_broadcast(gratuitous(ip(14), mac(14)), 2, SimTime{0});
  // Host 13 claims 14: both B and C match, C wins.
  ServerOutput out = s.learn_from_broadcast(gratuitous(ip(14), mac(13)), 3, from_seconds(1));
  EXPECT_EQ(out.step, CascadeStep::probe);
  ASSERT_EQ(out.frames.size(), 1u);
  const EtherFrame& probe = out.frames[0];
  EXPECT_EQ(probe.dst, mac(14));
  const ArpPacket pp = decode_arp(probe.payload);
  EXPECT_EQ(pp.sender_ip, kSrvIp);
  EXPECT_EQ(pp.sender_mac, kSrvMac);
  EXPECT_EQ(pp.target_ip, ip(14));
  EXPECT_TRUE(pp.target_mac.is_zero());
  EXPECT_EQ(s.table().find(ip(13))->mac, mac(13));  // no rebind either

  // The real owner answers.
  out = s.handle_arp(arp(ArpOp::reply, ip(14), mac(14), kSrvIp, std::nullopt, kSrvMac), 4, from_seconds(1.002));
  ASSERT_EQ(out.alarms.size(), 1u);
  EXPECT_EQ(out.alarms[0].reason, SpoofReason::impersonation);
  EXPECT_EQ(out.alarms[0].mac, mac(13));
  EXPECT_EQ(s.table().find(ip(14))->mac, mac(14));
  EXPECT_TRUE(s.probes().empty());
  EXPECT_FALSE(s.next_deadline());
}

TEST(ArpServer, ConflictWithDeadOwnerCommitsAfterRetry) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(13), mac(13)), 1, SimTime{0});
  s.learn_from_broadcast(gratuitous(ip(14), mac(14)), 2, SimTime{0});
  s.learn_from_broadcast(gratuitous(ip(14), mac(13)), 3, from_seconds(1));
  EXPECT_EQ(*s.next_deadline(), from_seconds(3));
  ServerOutput retry = s.tick(from_seconds(3));
  EXPECT_EQ(retry.frames.size(), 1u);
  EXPECT_TRUE(retry.table_changes.empty());
  ServerOutput commit = s.tick(from_seconds(5));
  EXPECT_TRUE(commit.alarms.empty());
  ASSERT_EQ(commit.table_changes.size(), 1u);
  EXPECT_EQ(commit.table_changes[0].what, TableChange::What::committed);
  EXPECT_EQ(s.table().find(ip(14))->mac, mac(13));
  EXPECT_FALSE(s.table().find(ip(13)));
  EXPECT_TRUE(s.spoof_list().empty());
}

TEST(ArpServer, SecondClaimDuringProbeDoesNotStackProbes) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(14), mac(14)), 1, SimTime{0});
  s.learn_from_broadcast(gratuitous(ip(14), mac(13)), 2, SimTime{0});
  ServerOutput out = s.learn_from_broadcast(gratuitous(ip(14), mac(13)), 3, from_seconds(0.5));
  EXPECT_EQ(out.step, CascadeStep::probe_pending);
  EXPECT_TRUE(out.frames.empty());
  EXPECT_EQ(s.probes().size(), 1u);
}

TEST(ArpServer, ManualEntryIsPinnedOnTimeout) {
  ArpServer s = make_server();
  s.add_manual(ip(1), mac(1));
  s.learn_from_broadcast(gratuitous(ip(1), mac(66)), 1, SimTime{0});
  s.tick(from_seconds(2));
  ServerOutput out = s.tick(from_seconds(4));
  ASSERT_EQ(out.alarms.size(), 1u);
  EXPECT_EQ(out.alarms[0].reason, SpoofReason::impersonation);
  EXPECT_EQ(out.alarms[0].mac, mac(66));
  EXPECT_EQ(s.table().find(ip(1))->mac, mac(1));
  EXPECT_EQ(s.table().find(ip(1))->source, EntrySource::manual);
}

TEST(ArpServer, ManualEntryAliveOwnerAlarms) {
  ArpServer s = make_server();
  s.add_manual(ip(1), mac(1));
  s.learn_from_broadcast(gratuitous(ip(1), mac(66)), 1, SimTime{0});
  ServerOutput out = s.handle_arp(arp(ArpOp::reply, ip(1), mac(1), kSrvIp, std::nullopt, kSrvMac), 2, from_seconds(0.1));
  ASSERT_EQ(out.alarms.size(), 1u);
  EXPECT_EQ(out.alarms[0].mac, mac(66));
}

TEST(ArpServer, AddManualOverLearnedChangesSource) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(15), mac(15)), 1, SimTime{0});
  s.add_manual(ip(15), mac(15));
  EXPECT_EQ(s.table().find(ip(15))->source, EntrySource::manual);
}

TEST(ArpServer, ZeroSenderIsNotLearnedButIsAnswered) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(100), mac(100)), 1, SimTime{0});
  ServerOutput out = s.handle_arp(arp(ArpOp::request, Ipv4Addr{}, mac(9), ip(100)), 2, SimTime{0});
  EXPECT_TRUE(out.answered);
  EXPECT_EQ(s.table().size(), 1u);
}

TEST(ArpServer, FlapThresholdAndWindow) {
  ArpServer s = make_server();
  EXPECT_FALSE(s.flap_monitor(mac(14), from_seconds(0)));
  EXPECT_FALSE(s.flap_monitor(mac(14), from_seconds(10)));
  auto alarm = s.flap_monitor(mac(14), from_seconds(20));
  ASSERT_TRUE(alarm);
  EXPECT_EQ(alarm->reason, SpoofReason::mac_flap);
  // History was cleared: the next two do not alarm.
  EXPECT_FALSE(s.flap_monitor(mac(14), from_seconds(21)));
  EXPECT_FALSE(s.flap_monitor(mac(14), from_seconds(22)));

  ArpServer slow = make_server();
  EXPECT_FALSE(slow.flap_monitor(mac(1), from_seconds(0)));
  EXPECT_FALSE(slow.flap_monitor(mac(1), from_seconds(50)));
  EXPECT_FALSE(slow.flap_monitor(mac(1), from_seconds(120)));  // first one aged out
}

TEST(ArpServer, ClonedMacFlapsThroughRebinds) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(14), mac(14)), 1, SimTime{0});
  s.learn_from_broadcast(gratuitous(ip(16), mac(14)), 2, from_seconds(1));
  s.learn_from_broadcast(gratuitous(ip(14), mac(14)), 3, from_seconds(2));
  ServerOutput out = s.learn_from_broadcast(gratuitous(ip(16), mac(14)), 4, from_seconds(3));
  ASSERT_EQ(out.alarms.size(), 1u);
  EXPECT_EQ(out.alarms[0].reason, SpoofReason::mac_flap);
}

TEST(ArpServer, CloningIpAndMacIsInvisible) {
  ArpServer s = make_server();
  s.learn_from_broadcast(gratuitous(ip(14), mac(14)), 1, SimTime{0});
  for (int i = 0; i < 10; ++i) {
    ServerOutput out = s.learn_from_broadcast(gratuitous(ip(14), mac(14)), 2 + i, from_seconds(i));
    EXPECT_EQ(out.step, CascadeStep::refresh);
  }
  EXPECT_TRUE(s.spoof_list().empty());
}

TEST(ArpServer, CapacityIs254) {
  ArpServer s = make_server();
  for (int i = 0; i < 254; ++i) {
    const MacAddr m({0x02, 0, 0, 0, static_cast<std::uint8_t>(i >> 8), static_cast<std::uint8_t>(i)});
    const Ipv4Addr a = Ipv4Addr::from_u32(0x0a000000u + static_cast<std::uint32_t>(i) + 1);
    ASSERT_EQ(s.learn_from_broadcast(gratuitous(a, m), 1, SimTime{0}).step, CascadeStep::insert);
  }
  ServerOutput out = s.learn_from_broadcast(gratuitous(Ipv4Addr::parse("10.1.0.1"), mac(200)), 2, SimTime{0});
  EXPECT_EQ(out.step, CascadeStep::insert_refused);
  EXPECT_FALSE(out.notes.empty());
  EXPECT_EQ(s.table().size(), 254u);
}

TEST(ArpServer, SweepCoversClassC) {
  ArpServer s = make_server();
  const auto frames = s.sweep(Ipv4Addr::parse("192.0.0.0"), 24, 1);
  ASSERT_EQ(frames.size(), 254u);
  EXPECT_EQ(decode_icmp(frames.front().payload).dst_ip, ip(1));
  EXPECT_EQ(decode_icmp(frames.back().payload).dst_ip, ip(254));
  for (const auto& f : frames) EXPECT_TRUE(f.dst.is_broadcast());
}

// For any frame, at most one of {hiding alarm, rebind, probe, insert}.
TEST(ArpServer, CascadeBranchesAreExclusive) {
  std::mt19937 rng(4242);
  ArpServer s = make_server();
  s.add_manual(ip(1), mac(1));
  for (int i = 0; i < 5000; ++i) {
    const int sip = 1 + static_cast<int>(rng() % 8);
    const int smac = 1 + static_cast<int>(rng() % 8);
    const bool hide = rng() % 5 == 0;
    const ArpOp op = rng() % 2 ? ArpOp::request : ArpOp::reply;
    const EtherFrame f = arp(op, ip(sip), mac(smac), ip(1 + static_cast<int>(rng() % 8)),
                             hide ? std::optional<MacAddr>(mac(50)) : std::nullopt);
    const std::size_t before_probes = s.probes().size();
    const std::size_t before_alarms = s.spoof_list().size();
    ServerOutput out = s.handle_arp(f, static_cast<std::uint64_t>(i), from_seconds(i * 0.5));
    int fired = 0;
    bool hiding = false;
    for (const auto& a : out.alarms) hiding = hiding || a.reason == SpoofReason::hiding;
    fired += hiding;
    for (const auto& c : out.table_changes) {
      fired += c.what == TableChange::What::rebound || c.what == TableChange::What::inserted;
    }
    fired += s.probes().size() > before_probes;
    ASSERT_LE(fired, 1) << "frame " << i;
    if (hiding) {
      ASSERT_TRUE(out.table_changes.empty());
    }
    ASSERT_GE(s.spoof_list().size(), before_alarms);  // append-only

    // Table invariants: no IP twice (map), manual entry untouched.
    ASSERT_EQ(s.table().find(ip(1))->mac, mac(1));
    ASSERT_LE(s.table().size(), 254u);
    s.tick(from_seconds(i * 0.5));
  }
}
