// Central ARP responder. Keeps the authoritative <IP, MAC> table, answers
// requests on behalf of every host, and runs the spoof-detection cascade:
//
//   A  Ethernet source differs from the ARP sender MAC  -> alarm (hiding)
//   B  sender MAC known under another IP                -> rebind the IP
//   C  sender IP known under another MAC                -> probe the old MAC;
//        a reply means impersonation, silence means the old host is gone
//   D  sender MAC unknown                               -> insert
//
// When B and C both match, C wins so a rebind can never bypass the probe.
#pragma once

#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "arpsim/frame.hpp"
#include "arpsim/sim_time.hpp"

namespace arpsim {

using namespace std::chrono_literals;

inline constexpr std::size_t kServerTableCapacity = 254;

enum class EntrySource { manual, learned };

inline std::string to_string(EntrySource s) { return s == EntrySource::manual ? "manual" : "learned"; }

struct ServerEntry {
  MacAddr mac;
  EntrySource source = EntrySource::learned;
  SimTime updated_at{0};
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ServerTable {
 public:
  explicit ServerTable(std::size_t capacity = kServerTableCapacity) : capacity_(capacity) {}

  std::size_t size() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return entries_.size() >= capacity_; }

  const ServerEntry* find(Ipv4Addr ip) const {
    auto it = entries_.find(ip);
    return it == entries_.end() ? nullptr : &it->second;
  }
  ServerEntry* find(Ipv4Addr ip) {
    auto it = entries_.find(ip);
    return it == entries_.end() ? nullptr : &it->second;
  }

  /// The IP currently bound to mac, if any (lowest address if several manual entries share it).
  std::optional<Ipv4Addr> find_by_mac(MacAddr mac) const {
    for (const auto& [ip, e] : entries_) {
      if (e.mac == mac) return ip;
    }
    return std::nullopt;
  }

  /// Inserts or overwrites. Throws CapacityError when a new IP would exceed capacity.
  void put(Ipv4Addr ip, ServerEntry entry) {
    if (!entries_.contains(ip) && full()) {
      throw CapacityError("server table full (" + std::to_string(capacity_) + " entries); refused " + ip.to_string());
    }
    entries_.insert_or_assign(ip, entry);
  }

  void erase(Ipv4Addr ip) { entries_.erase(ip); }

  const std::map<Ipv4Addr, ServerEntry>& entries() const { return entries_; }

 private:
  std::size_t capacity_;
  std::map<Ipv4Addr, ServerEntry> entries_;
};

enum class SpoofReason { hiding, impersonation, mac_flap };

inline std::string to_string(SpoofReason r) {
  switch (r) {
    case SpoofReason::hiding: return "hiding";
    case SpoofReason::impersonation: return "impersonation";
    case SpoofReason::mac_flap: return "mac_flap";
  }
  return "?";
}

struct SpoofRecord {
  MacAddr mac;  // the ARP sender MAC named by the alarm
  SpoofReason reason = SpoofReason::hiding;
  std::uint64_t evidence_frame = 0;
  SimTime at{0};
  std::optional<Ipv4Addr> ip;        // disputed address, when there is one
  std::optional<MacAddr> eth_src;    // Ethernet source of the evidence frame
};

/// Append-only alarm ledger.
class SpoofList {
 public:
  void append(SpoofRecord r) { records_.push_back(r); }
  const std::vector<SpoofRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  bool contains(MacAddr mac, std::optional<SpoofReason> reason = std::nullopt) const {
    for (const auto& r : records_) {
      if (r.mac == mac && (!reason || r.reason == *reason)) return true;
    }
    return false;
  }

 private:
  std::vector<SpoofRecord> records_;
};

struct Probe {
  Ipv4Addr questioned_ip;
  MacAddr old_mac;
  MacAddr claimant_mac;
  SimTime deadline{0};
  int retries_left = 0;
  std::uint64_t evidence_frame = 0;
};

struct ServerConfig {
  Ipv4Addr ip;
  MacAddr mac;
  Duration probe_timeout = 2s;
  int probe_retries = 1;
  int flap_threshold = 3;
  Duration flap_window = 60s;
  std::size_t capacity = kServerTableCapacity;
};

/// Which branch of the cascade a frame took.
enum class CascadeStep { none, hiding, rebind, rebind_refused, probe, probe_pending, insert, insert_refused, refresh };

inline std::string to_string(CascadeStep s) {
  switch (s) {
    case CascadeStep::none: return "none";
    case CascadeStep::hiding: return "hiding";
    case CascadeStep::rebind: return "rebind";
    case CascadeStep::rebind_refused: return "rebind_refused";
    case CascadeStep::probe: return "probe";
    case CascadeStep::probe_pending: return "probe_pending";
    case CascadeStep::insert: return "insert";
    case CascadeStep::insert_refused: return "insert_refused";
    case CascadeStep::refresh: return "refresh";
  }
  return "?";
}

struct TableChange {
  enum class What { inserted, rebound, committed, manual };
  What what = What::inserted;
  Ipv4Addr ip;
  MacAddr mac;
  std::optional<Ipv4Addr> previous_ip;
  std::optional<MacAddr> previous_mac;
  EntrySource source = EntrySource::learned;
};

inline std::string to_string(TableChange::What w) {
  switch (w) {
    case TableChange::What::inserted: return "inserted";
    case TableChange::What::rebound: return "rebound";
    case TableChange::What::committed: return "committed";
    case TableChange::What::manual: return "manual";
  }
  return "?";
}

struct ServerOutput {
  std::vector<EtherFrame> frames;
  std::vector<TableChange> table_changes;
  std::vector<SpoofRecord> alarms;
  std::vector<std::string> notes;
  CascadeStep step = CascadeStep::none;
  bool answered = false;

  void append(ServerOutput&& o) {
    for (auto& f : o.frames) frames.push_back(std::move(f));
    for (auto& c : o.table_changes) table_changes.push_back(c);
    for (auto& a : o.alarms) alarms.push_back(a);
    for (auto& n : o.notes) notes.push_back(std::move(n));
  }
};

class ArpServer {
 public:
  explicit ArpServer(ServerConfig config) : config_(config), table_(config.capacity) {}

  const ServerConfig& config() const { return config_; }
  const ServerTable& table() const { return table_; }
  const SpoofList& spoof_list() const { return spoof_list_; }
  const std::map<Ipv4Addr, Probe>& probes() const { return probes_; }

  /// Manual entries are pinned: learned traffic never overwrites them.
  void add_manual(Ipv4Addr ip, MacAddr mac, SimTime now = SimTime{0}) {
    table_.put(ip, ServerEntry{mac, EntrySource::manual, now});
  }

  /// Full processing of an ARP frame that reached the server port:
  /// pending-probe resolution, the detection cascade, then answering.
  ServerOutput handle_arp(const EtherFrame& frame, std::uint64_t frame_id, SimTime now) {
    ServerOutput out;
    ArpPacket p;
    try {
      p = decode_arp(frame.payload);
    } catch (const CodecError& e) {
      out.notes.push_back(std::string("malformed ARP dropped: ") + e.what());
      return out;
    }

    if (p.op == ArpOp::reply) resolve_probe(p, frame_id, now, out);
    run_cascade(frame.src, p, frame_id, now, out);
    if (out.step == CascadeStep::hiding) return out;

    if (p.op == ArpOp::request && p.target_ip != p.sender_ip && p.target_ip != config_.ip) {
      if (const ServerEntry* e = table_.find(p.target_ip)) {
        ArpPacket reply;
        reply.op = ArpOp::reply;
        reply.sender_mac = e->mac;
        reply.sender_ip = p.target_ip;
        reply.target_mac = p.sender_mac;
        reply.target_ip = p.sender_ip;
        out.frames.push_back(make_arp_frame(p.sender_mac, config_.mac, reply));
        out.answered = true;
      }
    }
    return out;
  }

  /// Passive learning from a broadcast; same cascade, never answers.
  ServerOutput learn_from_broadcast(const EtherFrame& frame, std::uint64_t frame_id, SimTime now) {
    ServerOutput out;
    if (!frame.dst.is_broadcast()) return out;
    ArpPacket p;
    try {
      p = decode_arp(frame.payload);
    } catch (const CodecError& e) {
      out.notes.push_back(std::string("malformed ARP dropped: ") + e.what());
      return out;
    }
    run_cascade(frame.src, p, frame_id, now, out);
    return out;
  }

  /// One echo request per host address of the /prefix_len subnet, sent to
  /// the Ethernet broadcast address.
  std::vector<EtherFrame> sweep(Ipv4Addr network, int prefix_len, std::uint16_t ident) const {
    std::vector<EtherFrame> frames;
    if (prefix_len < 0 || prefix_len > 30) return frames;
    const std::uint32_t mask = prefix_len == 0 ? 0 : ~std::uint32_t{0} << (32 - prefix_len);
    const std::uint32_t base = network.to_u32() & mask;
    const std::uint32_t count = (~mask) - 1;
    frames.reserve(count);
    for (std::uint32_t host = 1; host <= count; ++host) {
      IcmpEcho e{EchoKind::request, config_.ip, Ipv4Addr::from_u32(base + host), ident, static_cast<std::uint16_t>(host)};
      frames.push_back(make_icmp_frame(MacAddr::broadcast(), config_.mac, e));
    }
    return frames;
  }

  /// Records a rebind of mac and raises mac_flap once flap_threshold rebinds
  /// fall inside flap_window. The history is cleared after each alarm.
  std::optional<SpoofRecord> flap_monitor(MacAddr mac, SimTime now, std::uint64_t frame_id = 0) {
    auto& history = rebinds_[mac];
    history.push_back(now);
    return check_flap(mac, now, frame_id);
  }

  std::optional<SimTime> next_deadline() const {
    std::optional<SimTime> best;
    for (const auto& [ip, probe] : probes_) {
      if (!best || probe.deadline < *best) best = probe.deadline;
    }
    return best;
  }

  /// Probe timers: retry, then commit the held claim (or alarm for a manual entry).
  ServerOutput tick(SimTime now) {
    ServerOutput out;
    for (auto it = probes_.begin(); it != probes_.end();) {
      Probe& probe = it->second;
      if (probe.deadline > now) {
        ++it;
        continue;
      }
      if (probe.retries_left > 0) {
        --probe.retries_left;
        probe.deadline = now + config_.probe_timeout;
        out.frames.push_back(probe_frame(probe));
        out.notes.push_back("probe retry for " + probe.questioned_ip.to_string());
        ++it;
        continue;
      }
      commit_claim(probe, now, out);
      it = probes_.erase(it);
    }
    return out;
  }

 private:
  EtherFrame probe_frame(const Probe& probe) const {
    ArpPacket p;
    p.op = ArpOp::request;
    p.sender_mac = config_.mac;
    p.sender_ip = config_.ip;
    p.target_mac = MacAddr::zero();
    p.target_ip = probe.questioned_ip;
    return make_arp_frame(probe.old_mac, config_.mac, p);
  }

  void raise(ServerOutput& out, SpoofRecord r) {
    spoof_list_.append(r);
    out.alarms.push_back(r);
  }

  void resolve_probe(const ArpPacket& p, std::uint64_t frame_id, SimTime now, ServerOutput& out) {
    auto it = probes_.find(p.sender_ip);
    if (it == probes_.end() || it->second.old_mac != p.sender_mac) return;
    const Probe probe = it->second;
    probes_.erase(it);
    // The original owner answered: the claimant is impersonating it.
    raise(out, SpoofRecord{probe.claimant_mac, SpoofReason::impersonation, frame_id, now, probe.questioned_ip,
                           std::nullopt});
  }

  void commit_claim(const Probe& probe, SimTime now, ServerOutput& out) {
    ServerEntry* current = table_.find(probe.questioned_ip);
    if (current && current->source == EntrySource::manual) {
      raise(out, SpoofRecord{probe.claimant_mac, SpoofReason::impersonation, probe.evidence_frame, now,
                             probe.questioned_ip, std::nullopt});
      out.notes.push_back("claim on pinned entry " + probe.questioned_ip.to_string() + " refused");
      return;
    }
    std::optional<Ipv4Addr> claimant_old_ip = table_.find_by_mac(probe.claimant_mac);
    if (claimant_old_ip == probe.questioned_ip) claimant_old_ip.reset();
    if (claimant_old_ip) {
      const ServerEntry* old = table_.find(*claimant_old_ip);
      if (old && old->source == EntrySource::learned) {
        table_.erase(*claimant_old_ip);
      } else {
        claimant_old_ip.reset();
      }
    }
    TableChange change{TableChange::What::committed, probe.questioned_ip, probe.claimant_mac, claimant_old_ip,
                       probe.old_mac, EntrySource::learned};
    table_.put(probe.questioned_ip, ServerEntry{probe.claimant_mac, EntrySource::learned, now});
    out.table_changes.push_back(change);
    if (claimant_old_ip) {
      if (auto alarm = flap_monitor(probe.claimant_mac, now, probe.evidence_frame)) raise(out, *alarm);
    }
  }

  std::optional<SpoofRecord> check_flap(MacAddr mac, SimTime now, std::uint64_t frame_id) {
    auto& history = rebinds_[mac];
    while (!history.empty() && history.front() < now - config_.flap_window) history.pop_front();
    if (static_cast<int>(history.size()) < config_.flap_threshold) return std::nullopt;
    history.clear();
    return SpoofRecord{mac, SpoofReason::mac_flap, frame_id, now, std::nullopt, std::nullopt};
  }

  void run_cascade(MacAddr eth_src, const ArpPacket& p, std::uint64_t frame_id, SimTime now, ServerOutput& out) {
    // Address probes (sender 0.0.0.0) carry no binding to learn or check.
    if (p.sender_ip.is_unspecified()) return;
    // The server's own traffic reflected back is not a claim.
    if (p.sender_mac == config_.mac && eth_src == config_.mac) return;

    if (eth_src != p.sender_mac) {
      out.step = CascadeStep::hiding;
      raise(out, SpoofRecord{p.sender_mac, SpoofReason::hiding, frame_id, now, p.sender_ip, eth_src});
      return;
    }

    const ServerEntry* by_ip = table_.find(p.sender_ip);
    const std::optional<Ipv4Addr> ip_of_mac = table_.find_by_mac(p.sender_mac);
    const bool ip_conflict = by_ip && by_ip->mac != p.sender_mac;                  // case C
    const bool mac_moved = ip_of_mac && *ip_of_mac != p.sender_ip;                 // case B

    if (ip_conflict) {
      if (probes_.contains(p.sender_ip)) {
        out.step = CascadeStep::probe_pending;
        return;
      }
      Probe probe{p.sender_ip, by_ip->mac, p.sender_mac, now + config_.probe_timeout, config_.probe_retries, frame_id};
      out.frames.push_back(probe_frame(probe));
      probes_.emplace(p.sender_ip, probe);
      out.step = CascadeStep::probe;
      return;
    }

    if (mac_moved) {
      const ServerEntry old = *table_.find(*ip_of_mac);
      if (old.source == EntrySource::manual) {
        out.step = CascadeStep::rebind_refused;
        out.notes.push_back("rebind of pinned entry " + ip_of_mac->to_string() + " to " + p.sender_ip.to_string() +
                            " refused");
        return;
      }
      table_.erase(*ip_of_mac);
      table_.put(p.sender_ip, ServerEntry{p.sender_mac, EntrySource::learned, now});
      out.table_changes.push_back(TableChange{TableChange::What::rebound, p.sender_ip, p.sender_mac, *ip_of_mac,
                                              std::nullopt, EntrySource::learned});
      out.step = CascadeStep::rebind;
      if (auto alarm = flap_monitor(p.sender_mac, now, frame_id)) raise(out, *alarm);
      return;
    }

    if (by_ip) {
      if (by_ip->source == EntrySource::learned) table_.find(p.sender_ip)->updated_at = now;
      out.step = CascadeStep::refresh;
      return;
    }

    try {
      table_.put(p.sender_ip, ServerEntry{p.sender_mac, EntrySource::learned, now});
    } catch (const CapacityError& e) {
      out.step = CascadeStep::insert_refused;
      out.notes.push_back(e.what());
      return;
    }
    out.table_changes.push_back(
        TableChange{TableChange::What::inserted, p.sender_ip, p.sender_mac, std::nullopt, std::nullopt,
                    EntrySource::learned});
    out.step = CascadeStep::insert;
  }

  ServerConfig config_;
  ServerTable table_;
  SpoofList spoof_list_;
  std::map<Ipv4Addr, Probe> probes_;
  std::map<MacAddr, std::deque<SimTime>> rebinds_;
};

}  // namespace arpsim
