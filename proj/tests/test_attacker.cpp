#include <gtest/gtest.h>

#include "arpsim/attacker.hpp"

using namespace arpsim;
using namespace std::chrono_literals;

namespace {

const MacAddr kAtk = MacAddr::parse("00:0e:7f:5f:ba:40");
const Ipv4Addr kAtkIp = Ipv4Addr::parse("192.0.0.108");
const MacAddr kMacA = MacAddr::parse("00:0b:cd:b6:3e:a2");
const Ipv4Addr kIpA = Ipv4Addr::parse("192.0.0.15");
const MacAddr kMacB = MacAddr::parse("00:08:c7:9f:bd:a8");
const Ipv4Addr kIpB = Ipv4Addr::parse("192.0.0.100");

MitmPlan plan() {
  MitmPlan p;
  p.victim_a_ip = kIpA;
  p.victim_b_ip = kIpB;
  return p;
}

EtherFrame reply_from(Ipv4Addr ip, MacAddr m) {
  ArpPacket p;
  p.op = ArpOp::reply;
  p.sender_ip = ip;
  p.sender_mac = m;
  p.target_mac = kAtk;
  return make_arp_frame(kAtk, m, p);
}

}  // namespace

TEST(Attacker, RejectsDegeneratePlans) {
  MitmPlan p = plan();
  p.victim_b_ip = kIpA;
  EXPECT_THROW(Attacker(kAtk, kAtkIp, p), std::invalid_argument);
  p = plan();
  p.victim_a_ip = kAtkIp;
  EXPECT_THROW(Attacker(kAtk, kAtkIp, p), std::invalid_argument);
}

TEST(Attacker, FullSequenceMatchesCapture) {
  Attacker a(kAtk, kAtkIp, plan());
  std::vector<EtherFrame> sent;
  auto take = [&](AttackerOutput o) {
    for (auto& f : o.frames) sent.push_back(f);
  };
  take(a.start(SimTime{0}));
  take(a.handle_frame(reply_from(kIpB, kMacB), from_seconds(0.004)));
  take(a.handle_frame(reply_from(kIpA, kMacA), from_seconds(0.008)));
  take(a.tick(from_seconds(0.108)));
  take(a.tick(from_seconds(0.208)));
  ASSERT_EQ(sent.size(), 6u);
  EXPECT_EQ(a.phase(), AttackPhase::poisoned);

  // 1, 3: probes with sender 0.0.0.0 for B then A.
  for (auto [i, ip] : {std::pair{0, kIpB}, std::pair{1, kIpA}}) {
    const ArpPacket p = decode_arp(sent[i].payload);
    EXPECT_TRUE(sent[i].dst.is_broadcast());
    EXPECT_EQ(p.op, ArpOp::request);
    EXPECT_TRUE(p.sender_ip.is_unspecified());
    EXPECT_EQ(p.target_ip, ip);
  }
  // 5: echo forged from B to A.
  IcmpEcho e = decode_icmp(sent[2].payload);
  EXPECT_EQ(e.src_ip, kIpB);
  EXPECT_EQ(e.dst_ip, kIpA);
  EXPECT_EQ(sent[2].dst, kMacA);
  // 6: "B is at attacker" to A.
  ArpPacket p6 = decode_arp(sent[3].payload);
  EXPECT_EQ(p6.op, ArpOp::reply);
  EXPECT_EQ(p6.sender_ip, kIpB);
  EXPECT_EQ(p6.sender_mac, kAtk);
  EXPECT_EQ(sent[3].dst, kMacA);
  // 7: echo forged from A to B.
  e = decode_icmp(sent[4].payload);
  EXPECT_EQ(e.src_ip, kIpA);
  EXPECT_EQ(e.dst_ip, kIpB);
  // 8: "A is at attacker" to B.
  ArpPacket p8 = decode_arp(sent[5].payload);
  EXPECT_EQ(p8.sender_ip, kIpA);
  EXPECT_EQ(p8.sender_mac, kAtk);
  EXPECT_EQ(sent[5].dst, kMacB);

  // Re-poison on the interval.
  EXPECT_EQ(*a.next_deadline(), from_seconds(10.208));
  EXPECT_EQ(a.tick(from_seconds(10.208)).frames.size(), 2u);
}

TEST(Attacker, AbortsWhenVictimSilent) {
  Attacker a(kAtk, kAtkIp, plan());
  a.start(SimTime{0});
  AttackerOutput out = a.tick(from_seconds(2));
  ASSERT_EQ(out.events.size(), 1u);
  EXPECT_TRUE(std::holds_alternative<attack_event::Aborted>(out.events[0]));
  EXPECT_EQ(a.phase(), AttackPhase::aborted);
}

TEST(Attacker, RelayRewritesOnlyDestinationMac) {
  Attacker a(kAtk, kAtkIp, plan());
  a.start(SimTime{0});
  a.handle_frame(reply_from(kIpB, kMacB), SimTime{0});
  a.handle_frame(reply_from(kIpA, kMacA), SimTime{0});
  const EtherFrame in = make_icmp_frame(kAtk, kMacA, IcmpEcho{EchoKind::request, kIpA, kIpB, 3, 4});
  AttackerOutput out = a.handle_frame(in, from_seconds(1));
  ASSERT_EQ(out.frames.size(), 1u);
  EXPECT_EQ(out.frames[0].dst, kMacB);
  EXPECT_EQ(out.frames[0].payload, in.payload);
  ASSERT_EQ(out.events.size(), 1u);
  EXPECT_TRUE(std::get<attack_event::Intercepted>(out.events[0]).relayed);
}

TEST(Attacker, RelayWithUnknownTrueMacDrops) {
  Attacker a(kAtk, kAtkIp, plan());
  a.start(SimTime{0});
  const EtherFrame in = make_icmp_frame(kAtk, kMacA, IcmpEcho{EchoKind::request, kIpA, kIpB, 3, 4});
  EXPECT_FALSE(a.relay(in));
  AttackerOutput out = a.handle_frame(in, from_seconds(1));
  EXPECT_TRUE(out.frames.empty());
  ASSERT_EQ(out.events.size(), 1u);
  EXPECT_FALSE(std::get<attack_event::Intercepted>(out.events[0]).relayed);
}

TEST(Attacker, ForgeArpCanHideBehindAnotherMac) {
  Attacker a(kAtk, kAtkIp, plan());
  const EtherFrame f = a.forge_arp(kIpB, kMacB, kIpA, kMacA, ArpOp::reply, std::nullopt, kMacA);
  EXPECT_EQ(f.src, kAtk);
  EXPECT_EQ(decode_arp(f.payload).sender_mac, kMacB);
}
