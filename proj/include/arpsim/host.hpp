// Simulated end host: ARP resolution with pending-request tracking, ICMP
// echo responder, gratuitous ARP.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "arpsim/arp_cache.hpp"
#include "arpsim/frame.hpp"
#include "arpsim/sim_time.hpp"

namespace arpsim {

struct HostConfig {
  std::string name;
  MacAddr mac;
  Ipv4Addr ip;
  CachePolicy policy = CachePolicy::windows();
  std::vector<std::pair<Ipv4Addr, MacAddr>> static_entries;
  bool reply_to_arp = true;
  bool up = true;
  Duration resolution_timeout = 1s;
  int resolution_retries = 1;
};

struct PendingResolution {
  Ipv4Addr target_ip;
  std::vector<IcmpEcho> queued_payloads;
  SimTime issued_at{0};
  SimTime deadline{0};
  int retries_left = 0;
};

namespace host_event {

struct CacheChanged {
  CacheEffect effect;
  CacheEntry entry;
};
struct EchoReceived {
  IcmpEcho echo;
};
struct Flushed {
  Ipv4Addr ip;
  std::size_t count;
};
struct ResolutionRetry {
  Ipv4Addr ip;
};
/// Queued payloads discarded: resolution timed out or was cancelled.
struct Unreachable {
  Ipv4Addr ip;
  std::size_t dropped;
  std::string reason;
};
struct Malformed {
  std::string what;
};

}  // namespace host_event

using HostEvent = std::variant<host_event::CacheChanged, host_event::EchoReceived, host_event::Flushed,
                               host_event::ResolutionRetry, host_event::Unreachable, host_event::Malformed>;

struct HostOutput {
  std::vector<EtherFrame> frames;
  std::vector<HostEvent> events;

  void append(HostOutput&& other) {
    for (auto& f : other.frames) frames.push_back(std::move(f));
    for (auto& e : other.events) events.push_back(std::move(e));
  }
};

class Host {
 public:
  explicit Host(HostConfig config) : config_(std::move(config)), cache_(config_.policy) { load_static_entries(); }

  const std::string& name() const { return config_.name; }
  MacAddr mac() const { return config_.mac; }
  Ipv4Addr ip() const { return config_.ip; }
  bool up() const { return config_.up; }
  const HostConfig& config() const { return config_; }
  const ArpCache& cache() const { return cache_; }
  ArpCache& cache() { return cache_; }
  const std::map<Ipv4Addr, PendingResolution>& pending() const { return pending_; }

  /// Sends an IPv4/ICMP payload, resolving the destination first if needed.
  HostOutput send_ip(Ipv4Addr dst_ip, const IcmpEcho& payload, SimTime now) {
    HostOutput out;
    if (!config_.up) return out;
    if (auto mac = cache_.lookup(dst_ip, now)) {
      out.frames.push_back(make_icmp_frame(*mac, config_.mac, payload));
      return out;
    }
    auto [it, inserted] = pending_.try_emplace(dst_ip);
    it->second.queued_payloads.push_back(payload);
    if (inserted) {
      it->second.target_ip = dst_ip;
      it->second.issued_at = now;
      it->second.deadline = now + config_.resolution_timeout;
      it->second.retries_left = config_.resolution_retries;
      out.frames.push_back(arp_request_for(dst_ip));
    }
    return out;
  }

  HostOutput ping(Ipv4Addr dst_ip, std::uint16_t ident, std::uint16_t seq, SimTime now) {
    return send_ip(dst_ip, IcmpEcho{EchoKind::request, config_.ip, dst_ip, ident, seq}, now);
  }

  HostOutput handle_frame(const EtherFrame& frame, SimTime now) {
    HostOutput out;
    if (!config_.up) return out;
    if (frame.dst != config_.mac && !frame.dst.is_broadcast()) return out;

    if (frame.ethertype == kEtherTypeArp) {
      ArpPacket p;
      try {
        p = decode_arp(frame.payload);
      } catch (const CodecError& e) {
        out.events.push_back(host_event::Malformed{e.what()});
        return out;
      }
      handle_arp(p, now, out);
    } else if (frame.ethertype == kEtherTypeIpv4) {
      IcmpEcho echo;
      try {
        echo = decode_icmp(frame.payload);
      } catch (const CodecError& e) {
        out.events.push_back(host_event::Malformed{e.what()});
        return out;
      }
      if (echo.dst_ip != config_.ip) return out;
      out.events.push_back(host_event::EchoReceived{echo});
      if (echo.kind == EchoKind::request) {
        // Answering may itself require resolving the requester's address.
        out.append(send_ip(echo.src_ip, IcmpEcho{EchoKind::reply, config_.ip, echo.src_ip, echo.ident, echo.seq}, now));
      }
    }
    return out;
  }

  /// Broadcast request for our own address: sender_ip = target_ip.
  EtherFrame gratuitous_arp() const {
    ArpPacket p;
    p.op = ArpOp::request;
    p.sender_mac = config_.mac;
    p.sender_ip = config_.ip;
    p.target_mac = MacAddr::zero();
    p.target_ip = config_.ip;
    return make_arp_frame(MacAddr::broadcast(), config_.mac, p);
  }

  /// Changes identity in place. The cache is kept; outstanding resolutions
  /// are cancelled and their payloads dropped.
  HostOutput reconfigure(std::optional<Ipv4Addr> new_ip, std::optional<MacAddr> new_mac) {
    HostOutput out;
    if (new_ip) config_.ip = *new_ip;
    if (new_mac) config_.mac = *new_mac;
    cancel_pending("cancelled", out);
    return out;
  }

  /// Powering on is a reboot: dynamic entries are gone, statics reloaded.
  HostOutput set_power(bool up) {
    HostOutput out;
    if (up == config_.up) return out;
    config_.up = up;
    cancel_pending(up ? "rebooted" : "powered off", out);
    if (up) {
      cache_.clear();
      load_static_entries();
    }
    return out;
  }

  std::optional<SimTime> next_deadline() const {
    if (!config_.up) return std::nullopt;
    std::optional<SimTime> best;
    for (const auto& [ip, p] : pending_) {
      if (!best || p.deadline < *best) best = p.deadline;
    }
    return best;
  }

  /// Fires resolution timers due at or before now.
  HostOutput tick(SimTime now) {
    HostOutput out;
    if (!config_.up) return out;
    for (auto it = pending_.begin(); it != pending_.end();) {
      PendingResolution& p = it->second;
      if (p.deadline > now) {
        ++it;
        continue;
      }
      if (p.retries_left > 0) {
        --p.retries_left;
        p.deadline = now + config_.resolution_timeout;
        out.frames.push_back(arp_request_for(p.target_ip));
        out.events.push_back(host_event::ResolutionRetry{p.target_ip});
        ++it;
      } else {
        out.events.push_back(host_event::Unreachable{p.target_ip, p.queued_payloads.size(), "resolution timeout"});
        it = pending_.erase(it);
      }
    }
    return out;
  }

 private:
  void load_static_entries() {
    for (const auto& [ip, mac] : config_.static_entries) cache_.add_static(ip, mac);
  }

  EtherFrame arp_request_for(Ipv4Addr target) const {
    ArpPacket p;
    p.op = ArpOp::request;
    p.sender_mac = config_.mac;
    p.sender_ip = config_.ip;
    p.target_mac = MacAddr::zero();
    p.target_ip = target;
    return make_arp_frame(MacAddr::broadcast(), config_.mac, p);
  }

  void handle_arp(const ArpPacket& p, SimTime now, HostOutput& out) {
    // Our own address coming back (ours, or a conflicting host's) is never cached.
    if (p.sender_ip != config_.ip) {
      ArpObservation obs;
      obs.addressed_to_me = p.target_ip == config_.ip;
      obs.awaited = p.op == ArpOp::reply && obs.addressed_to_me && pending_.contains(p.sender_ip);
      const CacheEffect effect = cache_.observe_arp(p, obs, now);
      if (effect != CacheEffect::ignored) {
        out.events.push_back(host_event::CacheChanged{effect, *cache_.find(p.sender_ip)});
      }
      flush_resolved(p.sender_ip, now, out);
    }

    if (p.op == ArpOp::request && p.target_ip == config_.ip && p.sender_ip != p.target_ip && config_.reply_to_arp) {
      ArpPacket reply;
      reply.op = ArpOp::reply;
      reply.sender_mac = config_.mac;
      reply.sender_ip = config_.ip;
      reply.target_mac = p.sender_mac;
      reply.target_ip = p.sender_ip;
      out.frames.push_back(make_arp_frame(p.sender_mac, config_.mac, reply));
    }
  }

  void flush_resolved(Ipv4Addr ip, SimTime now, HostOutput& out) {
    auto it = pending_.find(ip);
    if (it == pending_.end()) return;
    auto mac = cache_.lookup(ip, now);
    if (!mac) return;
    for (const auto& payload : it->second.queued_payloads) {
      out.frames.push_back(make_icmp_frame(*mac, config_.mac, payload));
    }
    out.events.push_back(host_event::Flushed{ip, it->second.queued_payloads.size()});
    pending_.erase(it);
  }

  void cancel_pending(const std::string& reason, HostOutput& out) {
    for (const auto& [ip, p] : pending_) {
      out.events.push_back(host_event::Unreachable{ip, p.queued_payloads.size(), reason});
    }
    pending_.clear();
  }

  HostConfig config_;
  ArpCache cache_;
  std::map<Ipv4Addr, PendingResolution> pending_;
};

}  // namespace arpsim
