// Timestamped record of every frame, cache change, table change and alarm.
// JSONL is the machine interface; the text form is for people.
#pragma once

#include <cstdint>
#include <ostream>
#include <sstream>
#include <string>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "arpsim/sim_time.hpp"

namespace arpsim {

using Json = nlohmann::ordered_json;

enum class RecordKind {
  frame_tx,
  frame_rx,
  frame_drop,
  switch_fanout,
  switch_learn,
  cache_change,
  cache_dump,
  table_change,
  table_dump,
  alarm,
  host_event,
  server_event,
  attack_event,
  action,
  assert_result,
};

inline std::string to_string(RecordKind k) {
  switch (k) {
    case RecordKind::frame_tx: return "frame_tx";
    case RecordKind::frame_rx: return "frame_rx";
    case RecordKind::frame_drop: return "frame_drop";
    case RecordKind::switch_fanout: return "switch_fanout";
    case RecordKind::switch_learn: return "switch_learn";
    case RecordKind::cache_change: return "cache_change";
    case RecordKind::cache_dump: return "cache_dump";
    case RecordKind::table_change: return "table_change";
    case RecordKind::table_dump: return "table_dump";
    case RecordKind::alarm: return "alarm";
    case RecordKind::host_event: return "host_event";
    case RecordKind::server_event: return "server_event";
    case RecordKind::attack_event: return "attack_event";
    case RecordKind::action: return "action";
    case RecordKind::assert_result: return "assert_result";
  }
  return "?";
}

struct LogRecord {
  std::uint64_t seq = 0;
  SimTime t{0};
  RecordKind kind = RecordKind::action;
  Json fields = Json::object();

  Json to_json() const {
    Json j;
    j["seq"] = seq;
    j["t"] = format_seconds(t);
    j["kind"] = to_string(kind);
    for (const auto& [k, v] : fields.items()) j[k] = v;
    return j;
  }
};

class EventLog {
 public:
  const LogRecord& append(SimTime t, RecordKind kind, Json fields) {
    for (const char* reserved : {"seq", "t", "kind"}) {
      if (fields.contains(reserved)) throw std::logic_error(std::string("log field '") + reserved + "' is reserved");
    }
    records_.push_back(LogRecord{next_seq_++, t, kind, std::move(fields)});
    return records_.back();
  }

  const std::vector<LogRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  std::vector<const LogRecord*> of_kind(RecordKind kind) const {
    std::vector<const LogRecord*> out;
    for (const auto& r : records_) {
      if (r.kind == kind) out.push_back(&r);
    }
    return out;
  }

  void write_jsonl(std::ostream& os) const {
    for (const auto& r : records_) os << r.to_json().dump() << '\n';
  }

  void write_text(std::ostream& os) const {
    for (const auto& r : records_) {
      os << '[' << format_seconds(r.t) << "] #" << r.seq << ' ' << to_string(r.kind);
      for (const auto& [k, v] : r.fields.items()) {
        os << ' ' << k << '=' << (v.is_string() ? v.get<std::string>() : v.dump());
      }
      os << '\n';
    }
  }

  std::string jsonl() const {
    std::ostringstream os;
    write_jsonl(os);
    return os.str();
  }

 private:
  std::uint64_t next_seq_ = 1;
  std::vector<LogRecord> records_;
};

}  // namespace arpsim
