// Log checks shared by the unit and acceptance tests. They work from the
// jsonl records alone, not from simulator internals.
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "arpsim/event_log.hpp"

namespace arpsim::audit {

struct AuditResult {
  bool ok = true;
  std::size_t frames_checked = 0;
  std::vector<std::string> problems;

  void fail(std::string p) {
    ok = false;
    if (problems.size() < 20) problems.push_back(std::move(p));
  }
};

/// Every frame_tx must be accounted for: one inbound drop, or one fan-out
/// whose ports are each covered by exactly one frame_rx or frame_drop.
/// Frames still in flight at `settled_before` are skipped.
inline AuditResult audit_conservation(const EventLog& log, SimTime settled_before) {
  struct Trace {
    SimTime sent{0};
    int inbound_drops = 0;
    int fanouts = 0;
    std::multiset<int> expected;
    std::multiset<int> seen;
  };
  std::map<std::uint64_t, Trace> frames;
  AuditResult r;
  for (const auto& rec : log.records()) {
    const auto& f = rec.fields;
    switch (rec.kind) {
      case RecordKind::frame_tx: frames[f["frame"].get<std::uint64_t>()].sent = rec.t; break;
      case RecordKind::switch_fanout: {
        Trace& t = frames[f["frame"].get<std::uint64_t>()];
        ++t.fanouts;
        for (const auto& p : f["ports"]) t.expected.insert(p.get<int>());
        break;
      }
      case RecordKind::frame_rx: frames[f["frame"].get<std::uint64_t>()].seen.insert(f["port"].get<int>()); break;
      case RecordKind::frame_drop: {
        Trace& t = frames[f["frame"].get<std::uint64_t>()];
        if (f["stage"] == "inbound_acl") ++t.inbound_drops;
        else t.seen.insert(f["port"].get<int>());
        break;
      }
      default: break;
    }
  }
  for (const auto& [id, t] : frames) {
    if (t.sent >= settled_before) continue;
    ++r.frames_checked;
    const std::string tag = "frame " + std::to_string(id) + ": ";
    if (t.inbound_drops > 0) {
      if (t.inbound_drops != 1 || t.fanouts != 0 || !t.seen.empty()) r.fail(tag + "inbound drop with other records");
      continue;
    }
    if (t.fanouts != 1) {
      r.fail(tag + std::to_string(t.fanouts) + " fan-out records");
      continue;
    }
    if (t.expected != t.seen) r.fail(tag + "fan-out copies not matched by rx/drop records");
  }
  return r;
}

/// seq strictly increasing and time never decreasing.
inline bool monotonic(const EventLog& log) {
  const LogRecord* prev = nullptr;
  for (const auto& rec : log.records()) {
    if (prev && (rec.seq <= prev->seq || rec.t < prev->t)) return false;
    prev = &rec;
  }
  return true;
}

}  // namespace arpsim::audit
