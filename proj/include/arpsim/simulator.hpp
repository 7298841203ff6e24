// Discrete-event loop wiring hosts, the switch, the ARP server and the
// attacker together. Events run in (virtual time, insertion order); every
// link has the same fixed propagation delay, so a run is fully determined by
// its scenario.
#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <vector>

#include "arpsim/arp_server.hpp"
#include "arpsim/attacker.hpp"
#include "arpsim/event_log.hpp"
#include "arpsim/host.hpp"
#include "arpsim/scenario.hpp"
#include "arpsim/switch.hpp"

namespace arpsim {

inline constexpr std::uint16_t kSweepIdent = 0x5357;
inline constexpr std::uint16_t kPingIdentBase = 0x1000;

struct PingRecord {
  std::string label;
  std::string from;
  Ipv4Addr to;
  std::uint16_t ident = 0;
  SimTime sent_at{0};
  std::optional<SimTime> reply_at;
};

inline Json describe_frame(const EtherFrame& f) {
  Json j;
  j["eth_src"] = f.src.to_string();
  j["eth_dst"] = f.dst.to_string();
  if (f.ethertype == kEtherTypeArp) j["ethertype"] = "arp";
  else if (f.ethertype == kEtherTypeIpv4) j["ethertype"] = "ipv4";
  else j["ethertype"] = f.ethertype;
  try {
    if (f.ethertype == kEtherTypeArp) {
      const ArpPacket p = decode_arp(f.payload);
      j["op"] = to_string(p.op);
      j["sender_ip"] = p.sender_ip.to_string();
      j["sender_mac"] = p.sender_mac.to_string();
      j["target_ip"] = p.target_ip.to_string();
      j["target_mac"] = p.target_mac.to_string();
    } else if (f.ethertype == kEtherTypeIpv4) {
      const IcmpEcho e = decode_icmp(f.payload);
      j["icmp"] = to_string(e.kind);
      j["src_ip"] = e.src_ip.to_string();
      j["dst_ip"] = e.dst_ip.to_string();
      j["ident"] = e.ident;
      j["icmp_seq"] = e.seq;
    }
  } catch (const CodecError& e) {
    j["malformed"] = e.what();
  }
  return j;
}

class Simulator {
 public:
  explicit Simulator(Scenario scenario) : scenario_(std::move(scenario)), switch_(scenario_.switch_spec.config) {
    for (const auto& spec : scenario_.hosts) {
      auto node = std::make_unique<Node>();
      node->name = spec.config.name;
      node->port = spec.port;
      node->host = std::make_unique<Host>(spec.config);
      switch_.add_port(PortBinding{spec.port, spec.config.name, std::nullopt, std::nullopt});
      ports_[spec.port] = node.get();
      nodes_[spec.config.name] = std::move(node);
    }

    std::optional<PortId> server_port;
    std::optional<MacAddr> server_mac = scenario_.switch_spec.server_mac;
    if (scenario_.server) {
      Node& n = node(scenario_.server->host);
      const ServerSpec& sv = *scenario_.server;
      ServerConfig cfg;
      cfg.ip = n.host->ip();
      cfg.mac = n.host->mac();
      cfg.probe_timeout = sv.probe_timeout;
      cfg.probe_retries = sv.probe_retries;
      cfg.flap_threshold = sv.flap_threshold;
      cfg.flap_window = sv.flap_window;
      n.server = std::make_unique<ArpServer>(cfg);
      for (const auto& [ip, mac] : sv.manual) n.server->add_manual(ip, mac);
      server_node_ = &n;
      server_port = n.port;
      if (!scenario_.switch_spec.server_mac) server_mac = cfg.mac;
    }
    if (scenario_.switch_spec.preset != AclPreset::none) {
      switch_.apply_preset(scenario_.switch_spec.preset, *server_mac, server_port);
    }
    for (const auto& o : scenario_.switch_spec.overrides) {
      if (o.inbound) switch_.bind_acl(o.port, Direction::inbound, acl_name(*o.inbound));
      if (o.outbound) switch_.bind_acl(o.port, Direction::outbound, acl_name(*o.outbound));
    }
    if (scenario_.attack) {
      Node& n = node(scenario_.attack->attacker);
      n.attacker = std::make_unique<Attacker>(n.host->mac(), n.host->ip(), scenario_.attack->plan);
      attacker_node_ = &n;
    }

    if (server_node_ && scenario_.server->running) schedule(SimTime{0}, [this] { start_server(); });
    for (const auto& action : scenario_.script) {
      schedule(action.at, [this, &action] { perform(action); });
    }
  }

  Simulator(const Simulator&) = delete;
  Simulator& operator=(const Simulator&) = delete;

  /// Runs every event due at or before `until` (the scenario's horizon by default).
  const EventLog& run(std::optional<SimTime> until = std::nullopt) {
    const SimTime horizon = until.value_or(scenario_.until);
    while (!queue_.empty() && queue_.top().at <= horizon) {
      Event e = queue_.top();
      queue_.pop();
      now_ = e.at;
      e.fn();
    }
    if (now_ < horizon) now_ = horizon;
    return log_;
  }

  /// Transmits an arbitrary frame from a node's port at `at`.
  void inject(const std::string& node_name, EtherFrame frame, SimTime at) {
    Node* n = &node(node_name);
    schedule(at, [this, n, frame = std::move(frame)] { transmit(*n, frame, "injected"); });
  }

  const Scenario& scenario() const { return scenario_; }
  const EventLog& log() const { return log_; }
  SimTime now() const { return now_; }
  const Switch& network_switch() const { return switch_; }

  const Host& host(const std::string& name) const { return *node(name).host; }
  Host& host(const std::string& name) { return *node(name).host; }
  const ArpServer* server() const { return server_node_ ? server_node_->server.get() : nullptr; }
  bool server_running() const { return server_running_; }
  const Attacker* attacker() const { return attacker_node_ ? attacker_node_->attacker.get() : nullptr; }
  const std::map<std::string, PingRecord>& pings() const { return pings_; }

  std::size_t assert_count() const { return asserts_; }
  std::size_t assert_failures() const { return assert_failures_; }

 private:
  struct Node {
    std::string name;
    PortId port = 0;
    std::unique_ptr<Host> host;
    std::unique_ptr<ArpServer> server;
    std::unique_ptr<Attacker> attacker;
    std::set<SimTime> wakes;
  };

  struct Event {
    SimTime at;
    std::uint64_t seq;
    std::function<void()> fn;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.at != b.at ? a.at > b.at : a.seq > b.seq;
    }
  };

  static std::optional<std::string> acl_name(const std::string& v) {
    if (v == "none") return std::nullopt;
    return v;
  }

  Node& node(const std::string& name) const {
    auto it = nodes_.find(name);
    if (it == nodes_.end()) throw SimulationError("unknown host '" + name + "'");
    return *it->second;
  }

  void schedule(SimTime at, std::function<void()> fn) { queue_.push(Event{at, next_event_seq_++, std::move(fn)}); }

  void record(RecordKind kind, Json fields) { log_.append(now_, kind, std::move(fields)); }

  // ---- wire ---------------------------------------------------------------

  void transmit(Node& from, const EtherFrame& frame, const char* origin) {
    const std::uint64_t id = next_frame_id_++;
    Json j;
    j["frame"] = id;
    j["origin"] = origin;
    j["node"] = from.name;
    j["port"] = from.port;
    j.update(describe_frame(frame));
    j["bytes"] = to_hex(encode_frame(frame));
    record(RecordKind::frame_tx, std::move(j));
    const PortId port = from.port;
    schedule(now_ + scenario_.propagation_delay, [this, port, frame, id] { switch_ingress(port, frame, id); });
  }

  void switch_ingress(PortId port, const EtherFrame& frame, std::uint64_t id) {
    IngressResult r = switch_.ingress(port, frame, now_);
    for (const auto& d : r.drops) {
      if (d.stage != Direction::inbound) continue;
      record(RecordKind::frame_drop, drop_json(id, d));
    }
    if (!r.admitted) return;
    if (r.learn == LearnResult::learned || r.learn == LearnResult::moved || r.learn == LearnResult::held) {
      Json j;
      j["mac"] = frame.src.to_string();
      j["port"] = port;
      j["result"] = to_string(r.learn);
      if (r.previous_port) j["previous_port"] = *r.previous_port;
      j["frame"] = id;
      record(RecordKind::switch_learn, std::move(j));
    }
    Json fan;
    fan["frame"] = id;
    fan["in_port"] = port;
    fan["flooded"] = r.flooded;
    fan["ports"] = r.candidates;
    record(RecordKind::switch_fanout, std::move(fan));
    for (const auto& d : r.drops) {
      if (d.stage == Direction::outbound) record(RecordKind::frame_drop, drop_json(id, d));
    }
    for (auto& d : r.deliveries) {
      schedule(now_ + scenario_.propagation_delay,
               [this, p = d.port, f = std::move(d.frame), id] { deliver(p, f, id); });
    }
  }

  static Json drop_json(std::uint64_t id, const DropRecord& d) {
    Json j;
    j["frame"] = id;
    j["port"] = d.port;
    j["stage"] = d.stage == Direction::inbound ? "inbound_acl" : "outbound_acl";
    j["acl"] = d.acl;
    if (d.rule_index) j["rule_index"] = *d.rule_index;
    else j["rule_index"] = nullptr;
    j["rule"] = d.rule_text;
    return j;
  }

  void deliver(PortId port, const EtherFrame& frame, std::uint64_t id) {
    Node& n = *ports_.at(port);
    if (!n.host->up()) {
      Json j;
      j["frame"] = id;
      j["port"] = port;
      j["stage"] = "host_down";
      j["node"] = n.name;
      record(RecordKind::frame_drop, std::move(j));
      return;
    }
    Json j;
    j["frame"] = id;
    j["port"] = port;
    j["node"] = n.name;
    j["addressed"] = frame.dst == n.host->mac() || frame.dst.is_broadcast() ||
                     (n.attacker && frame.dst == n.attacker->mac());
    record(RecordKind::frame_rx, std::move(j));

    if (n.attacker) absorb(n, n.attacker->handle_frame(frame, now_));
    if (n.server && server_running_ && frame.ethertype == kEtherTypeArp &&
        (frame.dst == n.server->config().mac || frame.dst.is_broadcast())) {
      absorb(n, n.server->handle_arp(frame, id, now_), id);
    }
    absorb(n, n.host->handle_frame(frame, now_));
    schedule_wake(n);
  }

  // ---- timers -------------------------------------------------------------

  void schedule_wake(Node& n) {
    std::optional<SimTime> next = n.host->next_deadline();
    auto earliest = [&](std::optional<SimTime> t) {
      if (t && (!next || *t < *next)) next = t;
    };
    if (n.server && server_running_) earliest(n.server->next_deadline());
    if (n.attacker) earliest(n.attacker->next_deadline());
    if (!next) return;
    const SimTime at = std::max(*next, now_);
    if (!n.wakes.insert(at).second) return;
    Node* p = &n;
    schedule(at, [this, p, at] {
      p->wakes.erase(at);
      wake(*p);
    });
  }

  void wake(Node& n) {
    absorb(n, n.host->tick(now_));
    if (n.server && server_running_) absorb(n, n.server->tick(now_), 0);
    if (n.attacker) absorb(n, n.attacker->tick(now_));
    schedule_wake(n);
  }

  // ---- component output -----------------------------------------------------

  void absorb(Node& n, HostOutput&& out) {
    for (const auto& ev : out.events) log_host_event(n, ev);
    for (const auto& f : out.frames) transmit(n, f, "host");
  }

  void absorb(Node& n, ServerOutput&& out, std::uint64_t frame_id) {
    if (out.step != CascadeStep::none || out.answered) {
      Json j;
      j["frame"] = frame_id;
      j["step"] = to_string(out.step);
      j["answered"] = out.answered;
      record(RecordKind::server_event, std::move(j));
    }
    for (const auto& note : out.notes) {
      Json j;
      j["note"] = note;
      record(RecordKind::server_event, std::move(j));
    }
    for (const auto& c : out.table_changes) {
      Json j;
      j["change"] = to_string(c.what);
      j["ip"] = c.ip.to_string();
      j["mac"] = c.mac.to_string();
      if (c.previous_ip) j["previous_ip"] = c.previous_ip->to_string();
      if (c.previous_mac) j["previous_mac"] = c.previous_mac->to_string();
      j["source"] = to_string(c.source);
      record(RecordKind::table_change, std::move(j));
    }
    for (const auto& a : out.alarms) {
      Json j;
      j["at"] = format_seconds(a.at);
      j["mac"] = a.mac.to_string();
      j["reason"] = to_string(a.reason);
      j["evidence_frame"] = a.evidence_frame;
      if (a.ip) j["ip"] = a.ip->to_string();
      if (a.eth_src) j["eth_src"] = a.eth_src->to_string();
      record(RecordKind::alarm, std::move(j));
    }
    for (const auto& f : out.frames) transmit(n, f, "server");
  }

  void absorb(Node& n, AttackerOutput&& out) {
    for (const auto& ev : out.events) {
      Json j;
      j["node"] = n.name;
      if (const auto* v = std::get_if<attack_event::VictimLearned>(&ev)) {
        j["event"] = "victim_learned";
        j["ip"] = v->ip.to_string();
        j["mac"] = v->mac.to_string();
      } else if (const auto* i = std::get_if<attack_event::Intercepted>(&ev)) {
        j["event"] = "intercepted";
        j["icmp"] = to_string(i->echo.kind);
        j["src_ip"] = i->echo.src_ip.to_string();
        j["dst_ip"] = i->echo.dst_ip.to_string();
        j["relayed"] = i->relayed;
        j["detail"] = i->detail;
      } else if (const auto* a = std::get_if<attack_event::Aborted>(&ev)) {
        j["event"] = "aborted";
        j["reason"] = a->reason;
      }
      record(RecordKind::attack_event, std::move(j));
    }
    for (const auto& f : out.frames) transmit(n, f, "attacker");
  }

  static Json entry_json(const CacheEntry& e) {
    Json j;
    j["ip"] = e.ip.to_string();
    j["mac"] = e.mac.to_string();
    j["entry_kind"] = to_string(e.kind);
    if (e.expires_at) j["expires_at"] = format_seconds(*e.expires_at);
    else j["expires_at"] = nullptr;
    return j;
  }

  void log_host_event(Node& n, const HostEvent& ev) {
    if (const auto* c = std::get_if<host_event::CacheChanged>(&ev)) {
      Json j;
      j["host"] = n.name;
      j["effect"] = to_string(c->effect);
      j.update(entry_json(c->entry));
      record(RecordKind::cache_change, std::move(j));
      return;
    }
    Json j;
    j["host"] = n.name;
    if (const auto* e = std::get_if<host_event::EchoReceived>(&ev)) {
      j["event"] = "echo_received";
      j["icmp"] = to_string(e->echo.kind);
      j["src_ip"] = e->echo.src_ip.to_string();
      j["dst_ip"] = e->echo.dst_ip.to_string();
      j["ident"] = e->echo.ident;
      if (e->echo.kind == EchoKind::reply) {
        if (auto it = ping_by_ident_.find(e->echo.ident); it != ping_by_ident_.end()) {
          PingRecord& p = pings_.at(it->second);
          if (p.from == n.name && !p.reply_at) {
            p.reply_at = now_;
            j["ping"] = p.label;
          }
        }
      }
      // Sweep replies would swamp the log; they are visible as frames already.
      if (e->echo.ident == kSweepIdent) return;
    } else if (const auto* f = std::get_if<host_event::Flushed>(&ev)) {
      j["event"] = "flushed";
      j["ip"] = f->ip.to_string();
      j["count"] = f->count;
    } else if (const auto* r = std::get_if<host_event::ResolutionRetry>(&ev)) {
      j["event"] = "resolution_retry";
      j["ip"] = r->ip.to_string();
    } else if (const auto* u = std::get_if<host_event::Unreachable>(&ev)) {
      j["event"] = "unreachable";
      j["ip"] = u->ip.to_string();
      j["dropped"] = u->dropped;
      j["reason"] = u->reason;
    } else if (const auto* m = std::get_if<host_event::Malformed>(&ev)) {
      j["event"] = "malformed";
      j["detail"] = m->what;
    }
    record(RecordKind::host_event, std::move(j));
  }

  // ---- server lifecycle ------------------------------------------------------

  void start_server() {
    if (!server_node_ || server_running_) return;
    server_running_ = true;
    ++sweep_generation_;
    Json j;
    j["event"] = "started";
    j["node"] = server_node_->name;
    record(RecordKind::server_event, std::move(j));
    if (scenario_.server->sweep) run_sweep(sweep_generation_);
    schedule_wake(*server_node_);
  }

  void stop_server() {
    if (!server_running_) return;
    server_running_ = false;
    ++sweep_generation_;
    Json j;
    j["event"] = "stopped";
    j["node"] = server_node_->name;
    record(RecordKind::server_event, std::move(j));
  }

  void run_sweep(std::uint64_t generation) {
    if (generation != sweep_generation_ || !server_running_) return;
    sweep_once();
    if (scenario_.server->sweep_interval) {
      schedule(now_ + *scenario_.server->sweep_interval, [this, generation] { run_sweep(generation); });
    }
  }

  void sweep_once() {
    if (!server_node_->host->up()) return;
    const ServerSpec& sv = *scenario_.server;
    auto frames = server_node_->server->sweep(sv.subnet, sv.prefix_len, kSweepIdent);
    Json j;
    j["event"] = "sweep";
    j["subnet"] = sv.subnet.to_string() + "/" + std::to_string(sv.prefix_len);
    j["requests"] = frames.size();
    record(RecordKind::server_event, std::move(j));
    for (const auto& f : frames) transmit(*server_node_, f, "server");
  }

  // ---- script ------------------------------------------------------------------

  void perform(const ScriptAction& a) {
    if (a.kind != ActionKind::check) {
      Json j;
      j["action"] = to_string(a.kind);
      if (!a.host.empty()) j["host"] = a.host;
      if (a.ip) j["ip"] = a.ip->to_string();
      if (a.mac) j["mac"] = a.mac->to_string();
      if (!a.label.empty()) j["label"] = a.label;
      if (a.kind == ActionKind::power) j["up"] = a.up;
      j["line"] = a.line;
      record(RecordKind::action, std::move(j));
    }
    switch (a.kind) {
      case ActionKind::ping: {
        Node& n = node(a.host);
        const auto ident = static_cast<std::uint16_t>(kPingIdentBase + pings_.size());
        std::string label = a.label.empty() ? "ping-" + std::to_string(pings_.size() + 1) : a.label;
        pings_[label] = PingRecord{label, a.host, *a.ip, ident, now_, std::nullopt};
        ping_by_ident_[ident] = label;
        absorb(n, n.host->ping(*a.ip, ident, 1, now_));
        schedule_wake(n);
        break;
      }
      case ActionKind::reconfigure: {
        Node& n = node(a.host);
        absorb(n, n.host->reconfigure(a.ip, a.mac));
        if (a.announce && n.host->up()) transmit(n, n.host->gratuitous_arp(), "host");
        break;
      }
      case ActionKind::gratuitous: {
        Node& n = node(a.host);
        if (n.host->up()) transmit(n, n.host->gratuitous_arp(), "host");
        break;
      }
      case ActionKind::power: {
        Node& n = node(a.host);
        absorb(n, n.host->set_power(a.up));
        break;
      }
      case ActionKind::start_server: start_server(); break;
      case ActionKind::stop_server: stop_server(); break;
      case ActionKind::start_attack: {
        absorb(*attacker_node_, attacker_node_->attacker->start(now_));
        schedule_wake(*attacker_node_);
        break;
      }
      case ActionKind::stop_attack: attacker_node_->attacker->stop(); break;
      case ActionKind::sweep:
        if (server_running_) sweep_once();
        break;
      case ActionKind::wait: break;
      case ActionKind::dump_cache: {
        Node& n = node(a.host);
        Json entries = Json::array();
        for (const auto& e : n.host->cache().entries()) {
          if (e.valid_at(now_)) entries.push_back(entry_json(e));
        }
        Json j;
        j["host"] = n.name;
        j["entries"] = std::move(entries);
        record(RecordKind::cache_dump, std::move(j));
        break;
      }
      case ActionKind::dump_table: {
        Json entries = Json::array();
        for (const auto& [ip, e] : server_node_->server->table().entries()) {
          Json row;
          row["ip"] = ip.to_string();
          row["mac"] = e.mac.to_string();
          row["source"] = to_string(e.source);
          row["updated_at"] = format_seconds(e.updated_at);
          entries.push_back(std::move(row));
        }
        Json j;
        j["entries"] = std::move(entries);
        record(RecordKind::table_dump, std::move(j));
        break;
      }
      case ActionKind::check: evaluate(a); break;
    }
  }

  std::size_t alarms_logged(std::optional<SpoofReason> reason) const {
    std::size_t count = 0;
    for (const auto* r : log_.of_kind(RecordKind::alarm)) {
      if (!reason || r->fields["reason"] == to_string(*reason)) ++count;
    }
    return count;
  }

  void evaluate(const ScriptAction& a) {
    const CheckSpec& c = a.check;
    bool pass = false;
    std::string detail;
    auto mac_text = [](std::optional<MacAddr> m) { return m ? m->to_string() : std::string("none"); };
    const ArpServer* srv = server();

    switch (c.kind) {
      case CheckKind::ping: {
        auto it = pings_.find(c.label);
        if (it == pings_.end()) {
          detail = "no ping labelled '" + c.label + "'";
          break;
        }
        const bool replied = it->second.reply_at.has_value();
        pass = replied == c.expect_reply;
        detail = replied ? "reply after " + format_seconds(*it->second.reply_at - it->second.sent_at) + " s"
                         : "no reply";
        break;
      }
      case CheckKind::cache: {
        const auto got = node(c.host).host->cache().lookup(*c.ip, now_);
        pass = c.absent ? !got : got == c.mac;
        detail = c.host + " maps " + c.ip->to_string() + " to " + mac_text(got);
        break;
      }
      case CheckKind::server_table: {
        if (!srv) {
          detail = "no server";
          break;
        }
        const ServerEntry* e = srv->table().find(*c.ip);
        std::optional<MacAddr> got;
        if (e) got = e->mac;
        pass = c.absent ? !got : got == c.mac;
        detail = "table maps " + c.ip->to_string() + " to " + mac_text(got);
        break;
      }
      case CheckKind::spoof_list: {
        if (!srv) {
          detail = "no server";
          break;
        }
        pass = srv->spoof_list().contains(*c.mac, c.reason);
        detail = std::to_string(srv->spoof_list().size()) + " record(s) in spoof list";
        break;
      }
      case CheckKind::spoof_list_size: {
        std::size_t n = 0;
        if (srv) {
          for (const auto& r : srv->spoof_list().records()) {
            if (!c.reason || r.reason == *c.reason) ++n;
          }
        }
        pass = n == c.count;
        detail = "size " + std::to_string(n);
        break;
      }
      case CheckKind::alarm_count: {
        const std::size_t n = alarms_logged(c.reason);
        pass = n == c.count;
        detail = std::to_string(n) + " alarm(s) logged";
        break;
      }
      case CheckKind::forwarding: {
        const auto got = switch_.lookup(*c.mac, now_);
        pass = got == c.port;
        detail = c.mac->to_string() + " on port " + (got ? std::to_string(*got) : std::string("none"));
        break;
      }
    }

    ++asserts_;
    if (!pass) ++assert_failures_;
    Json j;
    j["check"] = to_string(c.kind);
    j["result"] = pass ? "pass" : "fail";
    j["detail"] = detail;
    j["line"] = a.line;
    record(RecordKind::assert_result, std::move(j));
  }

  Scenario scenario_;
  Switch switch_;
  std::map<std::string, std::unique_ptr<Node>> nodes_;
  std::map<PortId, Node*> ports_;
  Node* server_node_ = nullptr;
  Node* attacker_node_ = nullptr;
  bool server_running_ = false;
  std::uint64_t sweep_generation_ = 0;

  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_event_seq_ = 0;
  std::uint64_t next_frame_id_ = 1;
  SimTime now_{0};
  EventLog log_;

  std::map<std::string, PingRecord> pings_;
  std::map<std::uint16_t, std::string> ping_by_ident_;
  std::size_t asserts_ = 0;
  std::size_t assert_failures_ = 0;
};

/// Convenience: load, run to the scenario horizon, return the simulator for inspection.
inline std::unique_ptr<Simulator> run_scenario(Scenario s, std::optional<SimTime> until = std::nullopt) {
  auto sim = std::make_unique<Simulator>(std::move(s));
  sim->run(until);
  return sim;
}

}  // namespace arpsim
