// Per-host ARP cache: solicited, unsolicited and static entries with
// OS-specific update rules.
#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arpsim/frame.hpp"
#include "arpsim/sim_time.hpp"

namespace arpsim {

using namespace std::chrono_literals;

enum class OsProfile { windows, solaris, linux_os };

inline std::string to_string(OsProfile p) {
  switch (p) {
    case OsProfile::windows: return "windows";
    case OsProfile::solaris: return "solaris";
    case OsProfile::linux_os: return "linux";
  }
  return "?";
}

inline OsProfile parse_profile(std::string_view s) {
  if (s == "windows") return OsProfile::windows;
  if (s == "solaris") return OsProfile::solaris;
  if (s == "linux") return OsProfile::linux_os;
  throw std::invalid_argument("unknown cache profile '" + std::string(s) + "'");
}

struct CachePolicy {
  OsProfile profile = OsProfile::windows;
  Duration solicited_lifetime = 1200s;
  Duration unsolicited_lifetime = 1200s;
  /// Number of times an unsolicited entry's lifetime may be extended; the
  /// total lifetime is capped at unsolicited_lifetime * this value.
  int unsolicited_max_refreshes = 0;
  bool unsolicited_creates_entry = false;
  bool unsolicited_updates_entry = true;
  bool static_overwritable_by_arp = false;

  static CachePolicy windows() { return CachePolicy{}; }

  static CachePolicy linux_os() {
    CachePolicy p;
    p.profile = OsProfile::linux_os;
    return p;
  }

  static CachePolicy solaris() {
    CachePolicy p;
    p.profile = OsProfile::solaris;
    p.unsolicited_lifetime = 300s;
    p.unsolicited_max_refreshes = 3;
    p.unsolicited_creates_entry = true;
    return p;
  }

  static CachePolicy for_profile(OsProfile profile) {
    switch (profile) {
      case OsProfile::solaris: return solaris();
      case OsProfile::linux_os: return linux_os();
      case OsProfile::windows: break;
    }
    return windows();
  }

  Duration unsolicited_cap() const { return unsolicited_lifetime * std::max(unsolicited_max_refreshes, 1); }
};

enum class EntryKind { solicited, unsolicited, static_entry };

inline std::string to_string(EntryKind k) {
  switch (k) {
    case EntryKind::solicited: return "solicited";
    case EntryKind::unsolicited: return "unsolicited";
    case EntryKind::static_entry: return "static";
  }
  return "?";
}

struct CacheEntry {
  Ipv4Addr ip;
  MacAddr mac;
  EntryKind kind = EntryKind::solicited;
  SimTime inserted_at{0};
  std::optional<SimTime> expires_at;  // nullopt: never
  int refresh_count = 0;

  // Closed interval: still valid at the instant it expires.
  bool valid_at(SimTime now) const { return !expires_at || now <= *expires_at; }
};

enum class CacheEffect { created, updated, refreshed, ignored };

inline std::string to_string(CacheEffect e) {
  switch (e) {
    case CacheEffect::created: return "created";
    case CacheEffect::updated: return "updated";
    case CacheEffect::refreshed: return "refreshed";
    case CacheEffect::ignored: return "ignored";
  }
  return "?";
}

/// What the receiving host knows about an incoming ARP packet.
struct ArpObservation {
  bool addressed_to_me = false;  // target_ip is the host's own address
  bool awaited = false;          // reply to an outstanding request of ours
};

class ArpCache {
 public:
  explicit ArpCache(CachePolicy policy = CachePolicy::windows()) : policy_(policy) {}

  const CachePolicy& policy() const { return policy_; }
  void set_policy(const CachePolicy& p) { policy_ = p; }

  std::optional<MacAddr> lookup(Ipv4Addr ip, SimTime now) const {
    auto it = entries_.find(ip);
    if (it == entries_.end() || !it->second.valid_at(now)) return std::nullopt;
    return it->second.mac;
  }

  const CacheEntry* find(Ipv4Addr ip) const {
    auto it = entries_.find(ip);
    return it == entries_.end() ? nullptr : &it->second;
  }

  /// Applies the policy's case table to the packet's sender pair.
  ///
  /// A packet is treated as solicited when it answers one of our requests
  /// or is a request asking for our own address; everything else is
  /// unsolicited. Senders of 0.0.0.0 (address probes) never touch the cache.
  CacheEffect observe_arp(const ArpPacket& packet, ArpObservation obs, SimTime now) {
    if (packet.sender_ip.is_unspecified() || packet.sender_mac.is_zero() || packet.sender_mac.is_multicast()) {
      return CacheEffect::ignored;
    }
    const bool solicited = obs.awaited || (obs.addressed_to_me && packet.op == ArpOp::request);

    auto it = entries_.find(packet.sender_ip);
    if (it != entries_.end() && !it->second.valid_at(now)) {
      entries_.erase(it);
      it = entries_.end();
    }

    if (it == entries_.end()) {
      if (solicited) {
        insert(packet.sender_ip, packet.sender_mac, EntryKind::solicited, now, now + policy_.solicited_lifetime);
        return CacheEffect::created;
      }
      if (policy_.unsolicited_creates_entry) {
        insert(packet.sender_ip, packet.sender_mac, EntryKind::unsolicited, now, now + policy_.unsolicited_lifetime);
        return CacheEffect::created;
      }
      return CacheEffect::ignored;
    }

    CacheEntry& e = it->second;
    const bool mac_changed = e.mac != packet.sender_mac;

    if (e.kind == EntryKind::static_entry) {
      if (!policy_.static_overwritable_by_arp) return CacheEffect::ignored;
      e.mac = packet.sender_mac;
      return mac_changed ? CacheEffect::updated : CacheEffect::refreshed;
    }

    if (solicited) {
      e.mac = packet.sender_mac;
      e.kind = EntryKind::solicited;
      e.inserted_at = now;
      e.expires_at = now + policy_.solicited_lifetime;
      e.refresh_count = 0;
      return mac_changed ? CacheEffect::updated : CacheEffect::refreshed;
    }

    if (!policy_.unsolicited_updates_entry) return CacheEffect::ignored;
    e.mac = packet.sender_mac;
    if (e.kind == EntryKind::unsolicited) {
      // Each refresh adds one lifetime, never past the cap measured from insertion.
      if (e.refresh_count < policy_.unsolicited_max_refreshes) {
        ++e.refresh_count;
        e.expires_at = std::min(*e.expires_at + policy_.unsolicited_lifetime, e.inserted_at + policy_.unsolicited_cap());
      }
    } else {
      e.expires_at = now + policy_.solicited_lifetime;
    }
    return mac_changed ? CacheEffect::updated : CacheEffect::refreshed;
  }

  /// Manual entry: never expires, replaces any dynamic entry for the address.
  void add_static(Ipv4Addr ip, MacAddr mac, SimTime now = SimTime{0}) {
    entries_.insert_or_assign(ip, CacheEntry{ip, mac, EntryKind::static_entry, now, std::nullopt, 0});
  }

  std::size_t purge_expired(SimTime now) {
    return std::erase_if(entries_, [now](const auto& kv) { return !kv.second.valid_at(now); });
  }

  void clear() { entries_.clear(); }

  std::vector<CacheEntry> entries() const {
    std::vector<CacheEntry> out;
    out.reserve(entries_.size());
    for (const auto& [ip, e] : entries_) out.push_back(e);
    return out;
  }

  std::size_t size() const { return entries_.size(); }

 private:
  void insert(Ipv4Addr ip, MacAddr mac, EntryKind kind, SimTime now, SimTime expires) {
    entries_.insert_or_assign(ip, CacheEntry{ip, mac, kind, now, expires, 0});
  }

  CachePolicy policy_;
  std::map<Ipv4Addr, CacheEntry> entries_;
};

}  // namespace arpsim
