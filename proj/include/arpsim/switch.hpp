// Layer-2 learning switch: <MAC, port> table with aging and a move
// hold-down, flooding, and per-port inbound/outbound ACLs.
#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arpsim/acl.hpp"
#include "arpsim/frame.hpp"
#include "arpsim/sim_time.hpp"

namespace arpsim {

using namespace std::chrono_literals;

using PortId = int;

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ForwardingEntry {
  MacAddr mac;
  PortId port = 0;
  SimTime learned_at{0};
  Duration aging{300s};
};

struct PortBinding {
  PortId port = 0;
  std::string attached;
  std::optional<std::string> inbound_acl;
  std::optional<std::string> outbound_acl;
};

enum class LearnResult { learned, refreshed, moved, held, ignored };

inline std::string to_string(LearnResult r) {
  switch (r) {
    case LearnResult::learned: return "learned";
    case LearnResult::refreshed: return "refreshed";
    case LearnResult::moved: return "moved";
    case LearnResult::held: return "held";
    case LearnResult::ignored: return "ignored";
  }
  return "?";
}

struct Delivery {
  PortId port = 0;
  EtherFrame frame;
};

struct DropRecord {
  PortId port = 0;  // arrival port for inbound drops, egress port for outbound drops
  Direction stage = Direction::inbound;
  std::string acl;
  std::optional<std::size_t> rule_index;
  std::string rule_text;
};

struct IngressResult {
  bool admitted = false;            // passed the inbound ACL
  std::vector<PortId> candidates;   // egress ports before outbound filtering
  bool flooded = false;
  std::vector<Delivery> deliveries;
  std::vector<DropRecord> drops;
  LearnResult learn = LearnResult::ignored;
  std::optional<PortId> previous_port;  // for moved/held
};

class Switch {
 public:
  struct Config {
    Duration aging = 300s;
    Duration hold_down = 60s;
  };

  Switch() = default;
  explicit Switch(Config config) : config_(config) {}

  const Config& config() const { return config_; }

  void add_port(PortBinding binding) {
    const PortId id = binding.port;
    if (!ports_.emplace(id, std::move(binding)).second) {
      throw SimulationError("port " + std::to_string(id) + " bound twice");
    }
  }

  void define_acl(AclRuleSet set) {
    const std::string name = set.name;
    acls_.insert_or_assign(name, std::move(set));
  }

  void bind_acl(PortId port, Direction dir, std::optional<std::string> acl_name) {
    PortBinding& b = binding(port);
    if (acl_name && !acls_.contains(*acl_name)) throw SimulationError("unknown ACL '" + *acl_name + "'");
    (dir == Direction::inbound ? b.inbound_acl : b.outbound_acl) = std::move(acl_name);
  }

  /// Binds a preset to every port except the server's.
  void apply_preset(AclPreset preset, MacAddr server_mac, std::optional<PortId> server_port) {
    if (preset == AclPreset::none) return;
    std::optional<std::string> in, out;
    if (preset == AclPreset::cisco_4_5_1) {
      auto set = acl_presets::arpblok(server_mac);
      in = set.name;
      define_acl(std::move(set));
    } else {
      auto inbound = acl_presets::ideal_inbound(server_mac);
      auto outbound = acl_presets::ideal_outbound(server_mac);
      in = inbound.name;
      out = outbound.name;
      define_acl(std::move(inbound));
      define_acl(std::move(outbound));
    }
    for (auto& [id, b] : ports_) {
      if (server_port && id == *server_port) continue;
      b.inbound_acl = in;
      b.outbound_acl = out;
    }
  }

  const std::map<PortId, PortBinding>& ports() const { return ports_; }
  const std::map<MacAddr, ForwardingEntry>& forwarding_table() const { return table_; }

  std::optional<PortId> lookup(MacAddr mac, SimTime now) const {
    auto it = table_.find(mac);
    if (it == table_.end() || expired(it->second, now)) return std::nullopt;
    return it->second.port;
  }

  /// Source learning. A MAC seen on a new port only moves once the hold-down
  /// measured from its last refresh has elapsed.
  LearnResult learn(PortId port, MacAddr src, SimTime now) {
    if (src.is_multicast() || src.is_zero()) return LearnResult::ignored;
    auto it = table_.find(src);
    if (it == table_.end() || expired(it->second, now)) {
      table_.insert_or_assign(src, ForwardingEntry{src, port, now, config_.aging});
      return LearnResult::learned;
    }
    ForwardingEntry& e = it->second;
    if (e.port == port) {
      e.learned_at = now;
      return LearnResult::refreshed;
    }
    if (now < e.learned_at + config_.hold_down) return LearnResult::held;
    e.port = port;
    e.learned_at = now;
    return LearnResult::moved;
  }

  std::size_t age_forwarding(SimTime now) {
    return std::erase_if(table_, [&](const auto& kv) { return expired(kv.second, now); });
  }

  IngressResult ingress(PortId port, const EtherFrame& frame, SimTime now) {
    const PortBinding& in_binding = binding(port);
    IngressResult r;
    age_forwarding(now);

    if (in_binding.inbound_acl) {
      const AclRuleSet& set = acls_.at(*in_binding.inbound_acl);
      AclVerdict v = evaluate_acl(set.rules, frame.src, frame.dst, frame.ethertype);
      if (!v.permitted()) {
        r.drops.push_back(DropRecord{port, Direction::inbound, set.name, v.rule_index, v.rule_text});
        return r;
      }
    }
    r.admitted = true;

    if (auto prev = lookup(frame.src, now)) r.previous_port = prev;
    r.learn = learn(port, frame.src, now);

    std::optional<PortId> out_port;
    if (!frame.dst.is_multicast()) out_port = lookup(frame.dst, now);
    if (out_port) {
      if (*out_port != port) r.candidates.push_back(*out_port);
    } else {
      r.flooded = true;
      for (const auto& [id, b] : ports_) {
        if (id != port) r.candidates.push_back(id);
      }
    }

    for (PortId egress : r.candidates) {
      const PortBinding& b = ports_.at(egress);
      if (b.outbound_acl) {
        const AclRuleSet& set = acls_.at(*b.outbound_acl);
        AclVerdict v = evaluate_acl(set.rules, frame.src, frame.dst, frame.ethertype);
        if (!v.permitted()) {
          r.drops.push_back(DropRecord{egress, Direction::outbound, set.name, v.rule_index, v.rule_text});
          continue;
        }
      }
      r.deliveries.push_back(Delivery{egress, frame});
    }
    return r;
  }

 private:
  static bool expired(const ForwardingEntry& e, SimTime now) { return now > e.learned_at + e.aging; }

  PortBinding& binding(PortId port) {
    auto it = ports_.find(port);
    if (it == ports_.end()) throw SimulationError("unknown switch port " + std::to_string(port));
    return it->second;
  }

  Config config_;
  std::map<PortId, PortBinding> ports_;
  std::map<std::string, AclRuleSet> acls_;
  std::map<MacAddr, ForwardingEntry> table_;
};

}  // namespace arpsim
