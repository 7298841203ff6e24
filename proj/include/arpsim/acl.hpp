// Ordered first-match MAC/EtherType access lists and the two shipped rule
// sets: the inbound+outbound pair and the inbound-only "ARPblok" list.
#pragma once

#include <cstdio>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "arpsim/frame.hpp"

namespace arpsim {

enum class AclAction { permit, deny };
enum class Direction { inbound, outbound };

inline std::string to_string(AclAction a) { return a == AclAction::permit ? "permit" : "deny"; }
inline std::string to_string(Direction d) { return d == Direction::inbound ? "inbound" : "outbound"; }

struct AclRule {
  AclAction action = AclAction::permit;
  std::optional<MacAddr> src;  // nullopt: any
  std::optional<MacAddr> dst;
  std::optional<std::uint16_t> ethertype;
  Direction direction = Direction::inbound;

  bool matches(MacAddr s, MacAddr d, std::uint16_t type) const {
    return (!src || *src == s) && (!dst || *dst == d) && (!ethertype || *ethertype == type);
  }

  /// IOS "mac access-list extended" line, e.g. "deny any any 0x806 0x0".
  std::string to_string() const {
    auto addr = [](const std::optional<MacAddr>& m) { return m ? "host " + m->to_cisco() : std::string("any"); };
    std::string s = arpsim::to_string(action) + " " + addr(src) + " " + addr(dst);
    if (ethertype) {
      char buf[16];
      std::snprintf(buf, sizeof buf, " 0x%x 0x0", *ethertype);
      s += buf;
    }
    return s;
  }

  bool operator==(const AclRule&) const = default;
};

struct AclVerdict {
  AclAction action = AclAction::deny;
  std::optional<std::size_t> rule_index;  // nullopt: fell through to the implicit deny
  std::string rule_text;

  bool permitted() const { return action == AclAction::permit; }
};

/// First match wins; no match is an implicit deny.
inline AclVerdict evaluate_acl(std::span<const AclRule> rules, MacAddr src, MacAddr dst, std::uint16_t ethertype) {
  for (std::size_t i = 0; i < rules.size(); ++i) {
    if (rules[i].matches(src, dst, ethertype)) return AclVerdict{rules[i].action, i, rules[i].to_string()};
  }
  return AclVerdict{AclAction::deny, std::nullopt, "implicit deny"};
}

struct AclRuleSet {
  std::string name;
  Direction direction = Direction::inbound;
  std::vector<AclRule> rules;
};

enum class AclPreset { none, ideal_4_4_1, cisco_4_5_1 };

inline AclPreset parse_acl_preset(std::string_view s) {
  if (s == "none") return AclPreset::none;
  if (s == "ideal-4.4.1") return AclPreset::ideal_4_4_1;
  if (s == "cisco-4.5.1") return AclPreset::cisco_4_5_1;
  throw std::invalid_argument("unknown acl preset '" + std::string(s) + "' (expected none, ideal-4.4.1, cisco-4.5.1)");
}

inline std::string to_string(AclPreset p) {
  switch (p) {
    case AclPreset::none: return "none";
    case AclPreset::ideal_4_4_1: return "ideal-4.4.1";
    case AclPreset::cisco_4_5_1: return "cisco-4.5.1";
  }
  return "?";
}

namespace acl_presets {

inline constexpr std::uint16_t kAnyArp = kEtherTypeArp;

/// Inbound: ARP frames claiming the server's MAC are dropped.
inline AclRuleSet ideal_inbound(MacAddr server_mac) {
  return AclRuleSet{"ARPSERVER-IN",
                    Direction::inbound,
                    {
                        AclRule{AclAction::deny, server_mac, std::nullopt, kAnyArp, Direction::inbound},
                        AclRule{AclAction::permit, std::nullopt, std::nullopt, std::nullopt, Direction::inbound},
                    }};
}

/// Outbound: only ARP frames sourced by the server leave toward hosts.
inline AclRuleSet ideal_outbound(MacAddr server_mac) {
  return AclRuleSet{"ARPSERVER-OUT",
                    Direction::outbound,
                    {
                        AclRule{AclAction::permit, server_mac, std::nullopt, kAnyArp, Direction::outbound},
                        AclRule{AclAction::deny, std::nullopt, std::nullopt, kAnyArp, Direction::outbound},
                        AclRule{AclAction::permit, std::nullopt, std::nullopt, std::nullopt, Direction::outbound},
                    }};
}

/// The inbound-only list for switches without egress ACL support.
inline AclRuleSet arpblok(MacAddr server_mac) {
  return AclRuleSet{"ARPblok",
                    Direction::inbound,
                    {
                        AclRule{AclAction::permit, std::nullopt, server_mac, kAnyArp, Direction::inbound},
                        AclRule{AclAction::permit, std::nullopt, MacAddr::broadcast(), kAnyArp, Direction::inbound},
                        AclRule{AclAction::deny, std::nullopt, std::nullopt, kAnyArp, Direction::inbound},
                        AclRule{AclAction::permit, std::nullopt, std::nullopt, std::nullopt, Direction::inbound},
                    }};
}

}  // namespace acl_presets

}  // namespace arpsim
