// Declarative experiment description and its TOML loader.
//
// A scenario names the hosts and the switch port each one sits on, the ACL
// preset, an optional ARP server and MITM plan, and a time-sorted script.
#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <toml++/toml.hpp>

#include "arpsim/acl.hpp"
#include "arpsim/arp_server.hpp"
#include "arpsim/attacker.hpp"
#include "arpsim/host.hpp"
#include "arpsim/switch.hpp"

namespace arpsim {

struct SchemaIssue {
  int line = 0;  // 0 when the location is unknown
  std::string field;
  std::string message;

  std::string to_string() const {
    std::string s = line > 0 ? "line " + std::to_string(line) + ": " : std::string();
    return s + field + ": " + message;
  }
};

class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string source, std::vector<SchemaIssue> issues)
      : std::runtime_error(render(source, issues)), source_(std::move(source)), issues_(std::move(issues)) {}

  const std::vector<SchemaIssue>& issues() const { return issues_; }
  const std::string& source() const { return source_; }

 private:
  static std::string render(const std::string& source, const std::vector<SchemaIssue>& issues) {
    std::string s = source + ": " + std::to_string(issues.size()) + " schema error(s)";
    for (const auto& i : issues) s += "\n  " + i.to_string();
    return s;
  }

  std::string source_;
  std::vector<SchemaIssue> issues_;
};

struct HostSpec {
  HostConfig config;
  PortId port = 0;
};

struct PortOverride {
  PortId port = 0;
  // nullopt: leave as the preset set it; "none": remove.
  std::optional<std::string> inbound;
  std::optional<std::string> outbound;
};

struct SwitchSpec {
  AclPreset preset = AclPreset::none;
  Switch::Config config;
  std::optional<MacAddr> server_mac;  // only needed for presets without a [server] block
  std::vector<PortOverride> overrides;
};

struct ServerSpec {
  std::string host;
  bool running = true;
  bool sweep = true;
  std::optional<Duration> sweep_interval;
  Ipv4Addr subnet;
  int prefix_len = 24;
  Duration probe_timeout = 2s;
  int probe_retries = 1;
  int flap_threshold = 3;
  Duration flap_window = 60s;
  std::vector<std::pair<Ipv4Addr, MacAddr>> manual;
};

struct AttackSpec {
  std::string attacker;
  MitmPlan plan;
};

enum class ActionKind {
  ping,
  reconfigure,
  gratuitous,
  power,
  start_server,
  stop_server,
  start_attack,
  stop_attack,
  sweep,
  wait,
  dump_cache,
  dump_table,
  check,
};

inline std::string to_string(ActionKind k) {
  switch (k) {
    case ActionKind::ping: return "ping";
    case ActionKind::reconfigure: return "reconfigure";
    case ActionKind::gratuitous: return "gratuitous";
    case ActionKind::power: return "power";
    case ActionKind::start_server: return "start_server";
    case ActionKind::stop_server: return "stop_server";
    case ActionKind::start_attack: return "start_attack";
    case ActionKind::stop_attack: return "stop_attack";
    case ActionKind::sweep: return "sweep";
    case ActionKind::wait: return "wait";
    case ActionKind::dump_cache: return "dump_cache";
    case ActionKind::dump_table: return "dump_table";
    case ActionKind::check: return "assert";
  }
  return "?";
}

enum class CheckKind { ping, cache, spoof_list, spoof_list_size, server_table, alarm_count, forwarding };

inline std::string to_string(CheckKind k) {
  switch (k) {
    case CheckKind::ping: return "ping";
    case CheckKind::cache: return "cache";
    case CheckKind::spoof_list: return "spoof_list";
    case CheckKind::spoof_list_size: return "spoof_list_size";
    case CheckKind::server_table: return "server_table";
    case CheckKind::alarm_count: return "alarm_count";
    case CheckKind::forwarding: return "forwarding";
  }
  return "?";
}

struct CheckSpec {
  CheckKind kind = CheckKind::ping;
  std::string label;        // ping
  bool expect_reply = true; // ping
  std::string host;         // cache
  std::optional<Ipv4Addr> ip;
  std::optional<MacAddr> mac;
  bool absent = false;      // cache / server_table: assert no entry
  std::optional<SpoofReason> reason;
  std::size_t count = 0;
  PortId port = 0;
};

struct ScriptAction {
  SimTime at{0};
  ActionKind kind = ActionKind::wait;
  int line = 0;
  std::string host;          // acting host for ping/reconfigure/gratuitous/power/dump_cache
  std::optional<Ipv4Addr> ip;    // ping destination or reconfigure target
  std::optional<MacAddr> mac;    // reconfigure target
  std::string label;         // ping label
  bool up = true;            // power
  bool announce = false;     // reconfigure: send a gratuitous ARP afterwards
  CheckSpec check;
};

struct Scenario {
  std::string name;
  std::string description;
  SimTime until{60s};
  Duration propagation_delay{1ms};
  bool allow_duplicate_addresses = false;
  std::vector<HostSpec> hosts;
  SwitchSpec switch_spec;
  std::optional<ServerSpec> server;
  std::optional<AttackSpec> attack;
  std::vector<ScriptAction> script;

  const HostSpec* find_host(std::string_view name) const {
    for (const auto& h : hosts) {
      if (h.config.name == name) return &h;
    }
    return nullptr;
  }
};

namespace detail {

class ScenarioParser {
 public:
  explicit ScenarioParser(std::string source) : source_(std::move(source)) {}

  Scenario parse(const toml::table& root) {
    Scenario s;
    check_keys(root, "", {"scenario", "host", "switch", "server", "attack", "script"});
    parse_meta(root, s);
    parse_hosts(root, s);
    parse_switch(root, s);
    parse_server(root, s);
    parse_attack(root, s);
    parse_script(root, s);
    cross_check(s);
    if (!issues_.empty()) throw ScenarioError(source_, issues_);
    return s;
  }

  void fail(const toml::node* node, std::string field, std::string message) {
    issues_.push_back(SchemaIssue{line_of(node), std::move(field), std::move(message)});
  }

  const std::vector<SchemaIssue>& issues() const { return issues_; }

 private:
  static int line_of(const toml::node* node) {
    return node ? static_cast<int>(node->source().begin.line) : 0;
  }

  void check_keys(const toml::table& t, const std::string& path, std::set<std::string> allowed) {
    for (const auto& [key, node] : t) {
      if (!allowed.contains(std::string(key.str()))) {
        fail(&node, path.empty() ? std::string(key.str()) : path + "." + std::string(key.str()), "unknown field");
      }
    }
  }

  std::optional<std::string> get_string(const toml::table& t, std::string_view key, const std::string& path,
                                        bool required) {
    const toml::node* n = t.get(key);
    const std::string field = path + "." + std::string(key);
    if (!n) {
      if (required) fail(&t, field, "missing required field");
      return std::nullopt;
    }
    if (auto v = n->value<std::string>(); v && n->is_string()) return *v;
    fail(n, field, "expected a string");
    return std::nullopt;
  }

  std::optional<double> get_number(const toml::table& t, std::string_view key, const std::string& path, bool required) {
    const toml::node* n = t.get(key);
    const std::string field = path + "." + std::string(key);
    if (!n) {
      if (required) fail(&t, field, "missing required field");
      return std::nullopt;
    }
    if (n->is_integer() || n->is_floating_point()) return n->value<double>();
    fail(n, field, "expected a number");
    return std::nullopt;
  }

  std::optional<std::int64_t> get_int(const toml::table& t, std::string_view key, const std::string& path,
                                      bool required) {
    const toml::node* n = t.get(key);
    const std::string field = path + "." + std::string(key);
    if (!n) {
      if (required) fail(&t, field, "missing required field");
      return std::nullopt;
    }
    if (n->is_integer()) return n->value<std::int64_t>();
    fail(n, field, "expected an integer");
    return std::nullopt;
  }

  std::optional<bool> get_bool(const toml::table& t, std::string_view key, const std::string& path) {
    const toml::node* n = t.get(key);
    if (!n) return std::nullopt;
    if (n->is_boolean()) return n->value<bool>();
    fail(n, path + "." + std::string(key), "expected true or false");
    return std::nullopt;
  }

  std::optional<Duration> get_seconds(const toml::table& t, std::string_view key, const std::string& path,
                                      bool required = false) {
    auto v = get_number(t, key, path, required);
    if (!v) return std::nullopt;
    if (*v < 0) {
      fail(t.get(key), path + "." + std::string(key), "must be non-negative");
      return std::nullopt;
    }
    return from_seconds(*v);
  }

  std::optional<Ipv4Addr> get_ip(const toml::table& t, std::string_view key, const std::string& path, bool required) {
    auto s = get_string(t, key, path, required);
    if (!s) return std::nullopt;
    try {
      return Ipv4Addr::parse(*s);
    } catch (const AddressParseError& e) {
      fail(t.get(key), path + "." + std::string(key), e.what());
      return std::nullopt;
    }
  }

  std::optional<MacAddr> get_mac(const toml::table& t, std::string_view key, const std::string& path, bool required) {
    auto s = get_string(t, key, path, required);
    if (!s) return std::nullopt;
    try {
      return MacAddr::parse(*s);
    } catch (const AddressParseError& e) {
      fail(t.get(key), path + "." + std::string(key), e.what());
      return std::nullopt;
    }
  }

  std::vector<std::pair<Ipv4Addr, MacAddr>> get_pairs(const toml::table& t, std::string_view key,
                                                     const std::string& path) {
    std::vector<std::pair<Ipv4Addr, MacAddr>> out;
    const toml::node* n = t.get(key);
    if (!n) return out;
    const toml::array* arr = n->as_array();
    if (!arr) {
      fail(n, path + "." + std::string(key), "expected an array of {ip, mac} tables");
      return out;
    }
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string p = path + "." + std::string(key) + "[" + std::to_string(i) + "]";
      const toml::table* entry = (*arr)[i].as_table();
      if (!entry) {
        fail(&(*arr)[i], p, "expected a table with ip and mac");
        continue;
      }
      check_keys(*entry, p, {"ip", "mac"});
      auto ip = get_ip(*entry, "ip", p, true);
      auto mac = get_mac(*entry, "mac", p, true);
      if (ip && mac) out.emplace_back(*ip, *mac);
    }
    return out;
  }

  void parse_meta(const toml::table& root, Scenario& s) {
    const toml::table* meta = root["scenario"].as_table();
    if (!meta) {
      fail(&root, "scenario", "missing [scenario] table");
      return;
    }
    check_keys(*meta, "scenario", {"name", "description", "until", "propagation_delay", "allow_duplicate_addresses"});
    if (auto v = get_string(*meta, "name", "scenario", true)) s.name = *v;
    if (auto v = get_string(*meta, "description", "scenario", false)) s.description = *v;
    if (auto v = get_seconds(*meta, "until", "scenario")) s.until = *v;
    if (auto v = get_seconds(*meta, "propagation_delay", "scenario")) s.propagation_delay = *v;
    if (auto v = get_bool(*meta, "allow_duplicate_addresses", "scenario")) s.allow_duplicate_addresses = *v;
  }

  void parse_hosts(const toml::table& root, Scenario& s) {
    const toml::node* n = root.get("host");
    if (!n) return;
    const toml::array* arr = n->as_array();
    if (!arr) {
      fail(n, "host", "expected [[host]] array of tables");
      return;
    }
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string path = "host[" + std::to_string(i) + "]";
      const toml::table* t = (*arr)[i].as_table();
      if (!t) {
        fail(&(*arr)[i], path, "expected a table");
        continue;
      }
      check_keys(*t, path,
                 {"name", "ip", "mac", "port", "profile", "up", "reply_to_arp", "static", "solicited_lifetime",
                  "unsolicited_lifetime", "static_overwritable", "resolution_timeout", "resolution_retries"});
      HostSpec h;
      if (auto v = get_string(*t, "name", path, true)) h.config.name = *v;
      if (auto v = get_ip(*t, "ip", path, true)) h.config.ip = *v;
      if (auto v = get_mac(*t, "mac", path, true)) h.config.mac = *v;
      if (auto v = get_int(*t, "port", path, true)) h.port = static_cast<PortId>(*v);
      if (auto v = get_string(*t, "profile", path, false)) {
        try {
          h.config.policy = CachePolicy::for_profile(parse_profile(*v));
        } catch (const std::invalid_argument& e) {
          fail(t->get("profile"), path + ".profile", e.what());
        }
      }
      if (auto v = get_bool(*t, "up", path)) h.config.up = *v;
      if (auto v = get_bool(*t, "reply_to_arp", path)) h.config.reply_to_arp = *v;
      if (auto v = get_seconds(*t, "solicited_lifetime", path)) h.config.policy.solicited_lifetime = *v;
      if (auto v = get_seconds(*t, "unsolicited_lifetime", path)) h.config.policy.unsolicited_lifetime = *v;
      if (auto v = get_bool(*t, "static_overwritable", path)) h.config.policy.static_overwritable_by_arp = *v;
      if (auto v = get_seconds(*t, "resolution_timeout", path)) h.config.resolution_timeout = *v;
      if (auto v = get_int(*t, "resolution_retries", path, false)) h.config.resolution_retries = static_cast<int>(*v);
      h.config.static_entries = get_pairs(*t, "static", path);
      s.hosts.push_back(std::move(h));
      host_lines_.push_back(line_of(t));
    }
  }

  void parse_switch(const toml::table& root, Scenario& s) {
    const toml::table* t = root["switch"].as_table();
    if (!t) return;
    check_keys(*t, "switch", {"acl", "aging", "hold_down", "server_mac", "override"});
    if (auto v = get_string(*t, "acl", "switch", false)) {
      try {
        s.switch_spec.preset = parse_acl_preset(*v);
      } catch (const std::invalid_argument& e) {
        fail(t->get("acl"), "switch.acl", e.what());
      }
    }
    if (auto v = get_seconds(*t, "aging", "switch")) s.switch_spec.config.aging = *v;
    if (auto v = get_seconds(*t, "hold_down", "switch")) s.switch_spec.config.hold_down = *v;
    s.switch_spec.server_mac = get_mac(*t, "server_mac", "switch", false);
    if (const toml::node* n = t->get("override")) {
      const toml::array* arr = n->as_array();
      if (!arr) {
        fail(n, "switch.override", "expected [[switch.override]] array of tables");
        return;
      }
      for (std::size_t i = 0; i < arr->size(); ++i) {
        const std::string path = "switch.override[" + std::to_string(i) + "]";
        const toml::table* o = (*arr)[i].as_table();
        if (!o) {
          fail(&(*arr)[i], path, "expected a table");
          continue;
        }
        check_keys(*o, path, {"port", "inbound", "outbound"});
        PortOverride po;
        if (auto v = get_int(*o, "port", path, true)) po.port = static_cast<PortId>(*v);
        po.inbound = get_string(*o, "inbound", path, false);
        po.outbound = get_string(*o, "outbound", path, false);
        s.switch_spec.overrides.push_back(po);
        override_lines_.push_back(line_of(o));
      }
    }
  }

  void parse_server(const toml::table& root, Scenario& s) {
    const toml::table* t = root["server"].as_table();
    if (!t) return;
    server_line_ = line_of(t);
    check_keys(*t, "server",
               {"host", "running", "sweep", "sweep_interval", "subnet", "probe_timeout", "probe_retries",
                "flap_threshold", "flap_window", "manual"});
    ServerSpec sv;
    if (auto v = get_string(*t, "host", "server", true)) sv.host = *v;
    if (auto v = get_bool(*t, "running", "server")) sv.running = *v;
    if (auto v = get_bool(*t, "sweep", "server")) sv.sweep = *v;
    sv.sweep_interval = get_seconds(*t, "sweep_interval", "server");
    if (sv.sweep_interval && sv.sweep_interval->count() == 0) sv.sweep_interval.reset();
    if (auto v = get_string(*t, "subnet", "server", false)) {
      const auto slash = v->find('/');
      try {
        sv.subnet = Ipv4Addr::parse(v->substr(0, slash));
        if (slash != std::string::npos) sv.prefix_len = std::stoi(v->substr(slash + 1));
        if (sv.prefix_len < 8 || sv.prefix_len > 30) throw std::invalid_argument("prefix length out of range");
      } catch (const std::exception& e) {
        fail(t->get("subnet"), "server.subnet", std::string("expected a.b.c.d/len: ") + e.what());
      }
      has_subnet_ = true;
    }
    if (auto v = get_seconds(*t, "probe_timeout", "server")) sv.probe_timeout = *v;
    if (auto v = get_int(*t, "probe_retries", "server", false)) sv.probe_retries = static_cast<int>(*v);
    if (auto v = get_int(*t, "flap_threshold", "server", false)) sv.flap_threshold = static_cast<int>(*v);
    if (auto v = get_seconds(*t, "flap_window", "server")) sv.flap_window = *v;
    sv.manual = get_pairs(*t, "manual", "server");
    s.server = sv;
  }

  void parse_attack(const toml::table& root, Scenario& s) {
    const toml::table* t = root["attack"].as_table();
    if (!t) return;
    attack_line_ = line_of(t);
    check_keys(*t, "attack",
               {"attacker", "victim_a", "victim_b", "repoison_interval", "relay", "reply_timeout", "prime_delay"});
    AttackSpec a;
    if (auto v = get_string(*t, "attacker", "attack", true)) a.attacker = *v;
    if (auto v = get_ip(*t, "victim_a", "attack", true)) a.plan.victim_a_ip = *v;
    if (auto v = get_ip(*t, "victim_b", "attack", true)) a.plan.victim_b_ip = *v;
    if (auto v = get_seconds(*t, "repoison_interval", "attack")) a.plan.repoison_interval = *v;
    if (auto v = get_bool(*t, "relay", "attack")) a.plan.relay = *v;
    if (auto v = get_seconds(*t, "reply_timeout", "attack")) a.plan.reply_timeout = *v;
    if (auto v = get_seconds(*t, "prime_delay", "attack")) a.plan.prime_delay = *v;
    s.attack = a;
  }

  void parse_check(const toml::table& t, const std::string& path, ScriptAction& a) {
    auto check = get_string(t, "check", path, true);
    if (!check) return;
    CheckSpec& c = a.check;
    static const std::map<std::string, CheckKind> kinds = {
        {"ping", CheckKind::ping},
        {"cache", CheckKind::cache},
        {"spoof_list", CheckKind::spoof_list},
        {"spoof_list_size", CheckKind::spoof_list_size},
        {"server_table", CheckKind::server_table},
        {"alarm_count", CheckKind::alarm_count},
        {"forwarding", CheckKind::forwarding},
    };
    auto it = kinds.find(*check);
    if (it == kinds.end()) {
      fail(t.get("check"), path + ".check", "unknown check '" + *check + "'");
      return;
    }
    c.kind = it->second;
    auto reason = [&] {
      if (auto r = get_string(t, "reason", path, false)) {
        if (*r == "hiding") c.reason = SpoofReason::hiding;
        else if (*r == "impersonation") c.reason = SpoofReason::impersonation;
        else if (*r == "mac_flap") c.reason = SpoofReason::mac_flap;
        else fail(t.get("reason"), path + ".reason", "expected hiding, impersonation or mac_flap");
      }
    };
    switch (c.kind) {
      case CheckKind::ping: {
        if (auto v = get_string(t, "label", path, true)) c.label = *v;
        if (auto v = get_string(t, "expect", path, true)) {
          if (*v == "reply") c.expect_reply = true;
          else if (*v == "timeout") c.expect_reply = false;
          else fail(t.get("expect"), path + ".expect", "expected \"reply\" or \"timeout\"");
        }
        break;
      }
      case CheckKind::cache:
        if (auto v = get_string(t, "host", path, true)) c.host = *v;
        c.ip = get_ip(t, "ip", path, true);
        c.mac = get_mac(t, "mac", path, false);
        c.absent = get_bool(t, "absent", path).value_or(false);
        if (!c.mac && !c.absent) fail(&t, path, "cache check needs mac or absent = true");
        break;
      case CheckKind::server_table:
        c.ip = get_ip(t, "ip", path, true);
        c.mac = get_mac(t, "mac", path, false);
        c.absent = get_bool(t, "absent", path).value_or(false);
        if (!c.mac && !c.absent) fail(&t, path, "server_table check needs mac or absent = true");
        break;
      case CheckKind::spoof_list:
        c.mac = get_mac(t, "mac", path, true);
        reason();
        break;
      case CheckKind::spoof_list_size:
      case CheckKind::alarm_count:
        if (auto v = get_int(t, "count", path, true)) c.count = static_cast<std::size_t>(*v);
        reason();
        break;
      case CheckKind::forwarding:
        c.mac = get_mac(t, "mac", path, true);
        if (auto v = get_int(t, "port", path, true)) c.port = static_cast<PortId>(*v);
        break;
    }
  }

  void parse_script(const toml::table& root, Scenario& s) {
    const toml::node* n = root.get("script");
    if (!n) return;
    const toml::array* arr = n->as_array();
    if (!arr) {
      fail(n, "script", "expected [[script]] array of tables");
      return;
    }
    static const std::map<std::string, ActionKind> actions = {
        {"ping", ActionKind::ping},
        {"reconfigure", ActionKind::reconfigure},
        {"gratuitous", ActionKind::gratuitous},
        {"power", ActionKind::power},
        {"start_server", ActionKind::start_server},
        {"stop_server", ActionKind::stop_server},
        {"start_attack", ActionKind::start_attack},
        {"stop_attack", ActionKind::stop_attack},
        {"sweep", ActionKind::sweep},
        {"wait", ActionKind::wait},
        {"dump_cache", ActionKind::dump_cache},
        {"dump_table", ActionKind::dump_table},
        {"assert", ActionKind::check},
    };
    std::optional<SimTime> previous;
    for (std::size_t i = 0; i < arr->size(); ++i) {
      const std::string path = "script[" + std::to_string(i) + "]";
      const toml::table* t = (*arr)[i].as_table();
      if (!t) {
        fail(&(*arr)[i], path, "expected a table");
        continue;
      }
      ScriptAction a;
      a.line = line_of(t);
      if (auto v = get_seconds(*t, "at", path, true)) a.at = *v;
      if (previous && a.at < *previous) fail(t->get("at"), path + ".at", "script is not sorted by time");
      previous = a.at;

      auto action = get_string(*t, "action", path, true);
      if (!action) continue;
      auto it = actions.find(*action);
      if (it == actions.end()) {
        fail(t->get("action"), path + ".action", "unknown action '" + *action + "'");
        continue;
      }
      a.kind = it->second;
      switch (a.kind) {
        case ActionKind::ping:
          check_keys(*t, path, {"at", "action", "host", "to", "label"});
          if (auto v = get_string(*t, "host", path, true)) a.host = *v;
          a.ip = get_ip(*t, "to", path, true);
          if (auto v = get_string(*t, "label", path, false)) a.label = *v;
          break;
        case ActionKind::reconfigure:
          check_keys(*t, path, {"at", "action", "host", "ip", "mac", "announce"});
          if (auto v = get_string(*t, "host", path, true)) a.host = *v;
          a.ip = get_ip(*t, "ip", path, false);
          a.mac = get_mac(*t, "mac", path, false);
          a.announce = get_bool(*t, "announce", path).value_or(false);
          if (!a.ip && !a.mac) fail(t, path, "reconfigure needs ip and/or mac");
          break;
        case ActionKind::gratuitous:
        case ActionKind::dump_cache:
          check_keys(*t, path, {"at", "action", "host"});
          if (auto v = get_string(*t, "host", path, true)) a.host = *v;
          break;
        case ActionKind::power:
          check_keys(*t, path, {"at", "action", "host", "up"});
          if (auto v = get_string(*t, "host", path, true)) a.host = *v;
          if (auto v = get_bool(*t, "up", path)) a.up = *v;
          else fail(t, path + ".up", "missing required field");
          break;
        case ActionKind::check:
          check_keys(*t, path,
                     {"at", "action", "check", "label", "expect", "host", "ip", "mac", "absent", "reason", "count",
                      "port"});
          parse_check(*t, path, a);
          break;
        default:
          check_keys(*t, path, {"at", "action"});
          break;
      }
      s.script.push_back(std::move(a));
    }
  }

  void cross_check(const Scenario& s) {
    std::map<std::string, int> names;
    std::map<PortId, std::string> ports;
    std::map<Ipv4Addr, std::string> ips;
    std::map<MacAddr, std::string> macs;
    for (std::size_t i = 0; i < s.hosts.size(); ++i) {
      const auto& h = s.hosts[i];
      const int line = host_lines_[i];
      const std::string path = "host[" + std::to_string(i) + "]";
      if (h.config.name.empty()) continue;
      if (!names.emplace(h.config.name, line).second) {
        issues_.push_back({line, path + ".name", "duplicate host name '" + h.config.name + "'"});
      }
      if (auto [it, ok] = ports.emplace(h.port, h.config.name); !ok) {
        issues_.push_back({line, path + ".port", "port " + std::to_string(h.port) + " already used by " + it->second});
      }
      if (!s.allow_duplicate_addresses) {
        if (auto [it, ok] = ips.emplace(h.config.ip, h.config.name); !ok) {
          issues_.push_back({line, path + ".ip", "duplicate IP " + h.config.ip.to_string() + " (also " + it->second +
                                                     "); set scenario.allow_duplicate_addresses for conflict tests"});
        }
        if (auto [it, ok] = macs.emplace(h.config.mac, h.config.name); !ok) {
          issues_.push_back({line, path + ".mac", "duplicate MAC " + h.config.mac.to_string() + " (also " +
                                                      it->second + "); set scenario.allow_duplicate_addresses"});
        }
      }
    }
    auto known = [&](const std::string& name) { return names.contains(name); };

    for (std::size_t i = 0; i < s.switch_spec.overrides.size(); ++i) {
      const auto& o = s.switch_spec.overrides[i];
      if (!ports.contains(o.port)) {
        issues_.push_back({override_lines_[i], "switch.override[" + std::to_string(i) + "].port",
                           "no host on port " + std::to_string(o.port)});
      }
    }
    if (s.switch_spec.preset != AclPreset::none && !s.server && !s.switch_spec.server_mac) {
      issues_.push_back({0, "switch.acl", "ACL preset needs a [server] block or switch.server_mac"});
    }
    if (s.server) {
      if (!s.server->host.empty() && !known(s.server->host)) {
        issues_.push_back({server_line_, "server.host", "undefined host '" + s.server->host + "'"});
      }
      if (!has_subnet_ && !s.server->host.empty()) {
        // default subnet derived later from the server host address
      }
    }
    if (s.attack) {
      if (!s.attack->attacker.empty() && !known(s.attack->attacker)) {
        issues_.push_back({attack_line_, "attack.attacker", "undefined host '" + s.attack->attacker + "'"});
      }
      if (s.attack->plan.victim_a_ip == s.attack->plan.victim_b_ip) {
        issues_.push_back({attack_line_, "attack.victim_b", "victims must differ"});
      }
      if (const HostSpec* h = s.find_host(s.attack->attacker)) {
        if (h->config.ip == s.attack->plan.victim_a_ip || h->config.ip == s.attack->plan.victim_b_ip) {
          issues_.push_back({attack_line_, "attack.attacker", "attacker IP equals a victim IP"});
        }
      }
    }
    for (std::size_t i = 0; i < s.script.size(); ++i) {
      const auto& a = s.script[i];
      const std::string path = "script[" + std::to_string(i) + "]";
      if (!a.host.empty() && !known(a.host)) {
        issues_.push_back({a.line, path + ".host", "undefined host '" + a.host + "'"});
      }
      if (a.kind == ActionKind::check && a.check.kind == CheckKind::cache && !a.check.host.empty() &&
          !known(a.check.host)) {
        issues_.push_back({a.line, path + ".host", "undefined host '" + a.check.host + "'"});
      }
      if ((a.kind == ActionKind::start_server || a.kind == ActionKind::stop_server || a.kind == ActionKind::sweep ||
           a.kind == ActionKind::dump_table) &&
          !s.server) {
        issues_.push_back({a.line, path + ".action", to_string(a.kind) + " needs a [server] block"});
      }
      if ((a.kind == ActionKind::start_attack || a.kind == ActionKind::stop_attack) && !s.attack) {
        issues_.push_back({a.line, path + ".action", to_string(a.kind) + " needs an [attack] block"});
      }
    }
  }

  std::string source_;
  std::vector<SchemaIssue> issues_;
  std::vector<int> host_lines_;
  std::vector<int> override_lines_;
  int server_line_ = 0;
  int attack_line_ = 0;
  bool has_subnet_ = false;
};

}  // namespace detail

/// Parses and validates scenario text. Throws ScenarioError listing every issue found.
inline Scenario parse_scenario(std::string_view text, const std::string& source_name = "<scenario>") {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    throw ScenarioError(source_name, {SchemaIssue{static_cast<int>(e.source().begin.line), "toml",
                                                  std::string(e.description())}});
  }
  Scenario s = detail::ScenarioParser(source_name).parse(root);
  if (s.server) {
    const HostSpec* h = s.find_host(s.server->host);
    if (h && s.server->subnet.is_unspecified()) {
      const std::uint32_t mask = ~std::uint32_t{0} << (32 - s.server->prefix_len);
      s.server->subnet = Ipv4Addr::from_u32(h->config.ip.to_u32() & mask);
    }
  }
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path.string(), {SchemaIssue{0, "file", "cannot open scenario file"}});
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str(), path.string());
}

}  // namespace arpsim
