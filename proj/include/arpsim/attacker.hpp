// Ettercap-style MITM actor. Bypasses the host stack: every frame it emits
// is forged explicitly.
//
// Sequence: probe victim B and victim A for their MACs (sender IP 0.0.0.0),
// prime A's cache with an echo request forged from B, poison A, then the
// mirror steps toward B, and re-poison periodically after that.
#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "arpsim/frame.hpp"
#include "arpsim/sim_time.hpp"

namespace arpsim {

using namespace std::chrono_literals;

struct MitmPlan {
  Ipv4Addr victim_a_ip;  // primed and poisoned first
  Ipv4Addr victim_b_ip;
  Duration repoison_interval = 10s;
  bool relay = true;
  Duration reply_timeout = 2s;
  /// Gap between a priming echo request and the forged reply that follows it.
  Duration prime_delay = 100ms;
};

enum class AttackPhase { idle, awaiting_b, awaiting_a, priming_a, priming_b, poisoned, aborted, stopped };

inline std::string to_string(AttackPhase p) {
  switch (p) {
    case AttackPhase::idle: return "idle";
    case AttackPhase::awaiting_b: return "awaiting_b";
    case AttackPhase::awaiting_a: return "awaiting_a";
    case AttackPhase::priming_a: return "priming_a";
    case AttackPhase::priming_b: return "priming_b";
    case AttackPhase::poisoned: return "poisoned";
    case AttackPhase::aborted: return "aborted";
    case AttackPhase::stopped: return "stopped";
  }
  return "?";
}

namespace attack_event {

struct VictimLearned {
  Ipv4Addr ip;
  MacAddr mac;
};
struct Intercepted {
  IcmpEcho echo;
  bool relayed;
  std::string detail;
};
struct Aborted {
  std::string reason;
};

}  // namespace attack_event

using AttackEvent = std::variant<attack_event::VictimLearned, attack_event::Intercepted, attack_event::Aborted>;

struct AttackerOutput {
  std::vector<EtherFrame> frames;
  std::vector<AttackEvent> events;
};

inline constexpr std::uint16_t kForgedEchoIdent = 0x4554;

class Attacker {
 public:
  Attacker(MacAddr mac, Ipv4Addr ip, MitmPlan plan) : mac_(mac), ip_(ip), plan_(plan) {
    if (plan.victim_a_ip == plan.victim_b_ip || plan.victim_a_ip == ip || plan.victim_b_ip == ip) {
      throw std::invalid_argument("MITM plan needs two distinct victims, both different from the attacker");
    }
  }

  AttackPhase phase() const { return phase_; }
  const MitmPlan& plan() const { return plan_; }
  MacAddr mac() const { return mac_; }
  std::optional<MacAddr> victim_a_mac() const { return mac_a_; }
  std::optional<MacAddr> victim_b_mac() const { return mac_b_; }

  /// Arbitrary ARP frame. eth_src defaults to the attacker's MAC and may
  /// deliberately differ from sender_mac.
  EtherFrame forge_arp(Ipv4Addr sender_ip, MacAddr sender_mac, Ipv4Addr target_ip, MacAddr target_mac, ArpOp op,
                       std::optional<MacAddr> eth_src, MacAddr eth_dst) const {
    ArpPacket p;
    p.op = op;
    p.sender_ip = sender_ip;
    p.sender_mac = sender_mac;
    p.target_ip = target_ip;
    p.target_mac = target_mac;
    return make_arp_frame(eth_dst, eth_src.value_or(mac_), p);
  }

  /// Starts the poisoning sequence (run_mitm).
  AttackerOutput start(SimTime now) {
    AttackerOutput out;
    if (phase_ != AttackPhase::idle && phase_ != AttackPhase::stopped && phase_ != AttackPhase::aborted) return out;
    mac_a_.reset();
    mac_b_.reset();
    out.frames.push_back(probe(plan_.victim_b_ip));
    phase_ = AttackPhase::awaiting_b;
    deadline_ = now + plan_.reply_timeout;
    return out;
  }

  void stop() {
    phase_ = AttackPhase::stopped;
    deadline_.reset();
  }

  std::optional<SimTime> next_deadline() const { return deadline_; }

  AttackerOutput handle_frame(const EtherFrame& frame, SimTime now) {
    AttackerOutput out;
    if (frame.dst != mac_) return out;
    if (frame.ethertype == kEtherTypeArp) {
      learn_victim(frame, now, out);
    } else if (frame.ethertype == kEtherTypeIpv4 && phase_ != AttackPhase::idle) {
      relay_frame(frame, out);
    }
    return out;
  }

  /// Re-addresses an intercepted victim-to-victim frame to its true owner.
  /// The payload is forwarded untouched.
  std::optional<EtherFrame> relay(const EtherFrame& frame) const {
    if (!plan_.relay) return std::nullopt;
    IcmpEcho echo;
    try {
      echo = decode_icmp(frame.payload);
    } catch (const CodecError&) {
      return std::nullopt;
    }
    std::optional<MacAddr> true_mac;
    if (echo.dst_ip == plan_.victim_a_ip) true_mac = mac_a_;
    if (echo.dst_ip == plan_.victim_b_ip) true_mac = mac_b_;
    if (!true_mac) return std::nullopt;
    return EtherFrame{*true_mac, mac_, frame.ethertype, frame.payload};
  }

  AttackerOutput tick(SimTime now) {
    AttackerOutput out;
    if (!deadline_ || *deadline_ > now) return out;
    switch (phase_) {
      case AttackPhase::awaiting_b:
      case AttackPhase::awaiting_a: {
        const Ipv4Addr missing = phase_ == AttackPhase::awaiting_b ? plan_.victim_b_ip : plan_.victim_a_ip;
        out.events.push_back(attack_event::Aborted{"no ARP reply from " + missing.to_string()});
        phase_ = AttackPhase::aborted;
        deadline_.reset();
        break;
      }
      case AttackPhase::priming_a:
        out.frames.push_back(poison(plan_.victim_a_ip, *mac_a_, plan_.victim_b_ip));
        out.frames.push_back(prime(plan_.victim_a_ip, plan_.victim_b_ip, *mac_b_));
        phase_ = AttackPhase::priming_b;
        deadline_ = now + plan_.prime_delay;
        break;
      case AttackPhase::priming_b:
        out.frames.push_back(poison(plan_.victim_b_ip, *mac_b_, plan_.victim_a_ip));
        phase_ = AttackPhase::poisoned;
        deadline_ = now + plan_.repoison_interval;
        break;
      case AttackPhase::poisoned:
        out.frames.push_back(poison(plan_.victim_a_ip, *mac_a_, plan_.victim_b_ip));
        out.frames.push_back(poison(plan_.victim_b_ip, *mac_b_, plan_.victim_a_ip));
        deadline_ = now + plan_.repoison_interval;
        break;
      default:
        deadline_.reset();
        break;
    }
    return out;
  }

 private:
  // "Who has <ip>? Tell 0.0.0.0"
  EtherFrame probe(Ipv4Addr ip) const {
    return forge_arp(Ipv4Addr{}, mac_, ip, MacAddr::zero(), ArpOp::request, std::nullopt, MacAddr::broadcast());
  }

  // Echo request to `victim`, forged as coming from `spoofed_src`.
  EtherFrame prime(Ipv4Addr spoofed_src, Ipv4Addr victim, MacAddr victim_mac) const {
    IcmpEcho e{EchoKind::request, spoofed_src, victim, kForgedEchoIdent, 1};
    return make_icmp_frame(victim_mac, mac_, e);
  }

  // Unsolicited "<impersonated> is at <attacker MAC>" sent to the victim.
  EtherFrame poison(Ipv4Addr victim, MacAddr victim_mac, Ipv4Addr impersonated) const {
    return forge_arp(impersonated, mac_, victim, victim_mac, ArpOp::reply, std::nullopt, victim_mac);
  }

  void learn_victim(const EtherFrame& frame, SimTime now, AttackerOutput& out) {
    ArpPacket p;
    try {
      p = decode_arp(frame.payload);
    } catch (const CodecError&) {
      return;
    }
    if (p.op != ArpOp::reply) return;
    if (phase_ == AttackPhase::awaiting_b && p.sender_ip == plan_.victim_b_ip) {
      mac_b_ = p.sender_mac;
      out.events.push_back(attack_event::VictimLearned{p.sender_ip, p.sender_mac});
      out.frames.push_back(probe(plan_.victim_a_ip));
      phase_ = AttackPhase::awaiting_a;
      deadline_ = now + plan_.reply_timeout;
    } else if (phase_ == AttackPhase::awaiting_a && p.sender_ip == plan_.victim_a_ip) {
      mac_a_ = p.sender_mac;
      out.events.push_back(attack_event::VictimLearned{p.sender_ip, p.sender_mac});
      out.frames.push_back(prime(plan_.victim_b_ip, plan_.victim_a_ip, *mac_a_));
      phase_ = AttackPhase::priming_a;
      deadline_ = now + plan_.prime_delay;
    }
  }

  void relay_frame(const EtherFrame& frame, AttackerOutput& out) {
    IcmpEcho echo;
    try {
      echo = decode_icmp(frame.payload);
    } catch (const CodecError&) {
      return;
    }
    if (echo.dst_ip == ip_) return;  // our own traffic, handled by the host stack
    const bool between_victims = (echo.src_ip == plan_.victim_a_ip && echo.dst_ip == plan_.victim_b_ip) ||
                                 (echo.src_ip == plan_.victim_b_ip && echo.dst_ip == plan_.victim_a_ip);
    if (!between_victims) return;
    if (auto forwarded = relay(frame)) {
      out.frames.push_back(std::move(*forwarded));
      out.events.push_back(attack_event::Intercepted{echo, true, "relayed"});
    } else {
      out.events.push_back(attack_event::Intercepted{echo, false, plan_.relay ? "true MAC unknown" : "relay disabled"});
    }
  }

  MacAddr mac_;
  Ipv4Addr ip_;
  MitmPlan plan_;
  AttackPhase phase_ = AttackPhase::idle;
  std::optional<SimTime> deadline_;
  std::optional<MacAddr> mac_a_;
  std::optional<MacAddr> mac_b_;
};

}  // namespace arpsim
