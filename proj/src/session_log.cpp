#include "replica_sync/session_log.hpp"

#include <set>
#include <sstream>

#include "replica_sync/errors.hpp"

namespace replica_sync {

namespace {

Json valves_json(const ValveStates& valves) {
  Json j = Json::object();
  for (const auto& [id, s] : valves) j[id] = to_string(s);
  return j;
}

ValveStates valves_from_json(const Json& j) {
  ValveStates out;
  for (const auto& [id, s] : j.items()) out[id] = valve_state_from_string(s.get<std::string>());
  return out;
}

}  // namespace

std::string_view to_string(Condition condition) { return condition == Condition::Tablet ? "tablet" : "hmd"; }

Condition condition_from_string(std::string_view text) {
  if (text == "tablet" || text == "Tablet") return Condition::Tablet;
  if (text == "hmd" || text == "HMD") return Condition::HMD;
  throw ParseError("unknown condition '" + std::string(text) + "'");
}

std::string_view to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::OneHanded: return "OneHanded";
    case BlockKind::TwoHanded: return "TwoHanded";
    case BlockKind::NoManipulation: return "NoManipulation";
  }
  return "?";
}

BlockKind block_kind_from_string(std::string_view text) {
  if (text == "OneHanded") return BlockKind::OneHanded;
  if (text == "TwoHanded") return BlockKind::TwoHanded;
  if (text == "NoManipulation") return BlockKind::NoManipulation;
  throw ParseError("unknown block kind '" + std::string(text) + "'");
}

namespace {
constexpr std::string_view kEventNames[] = {"CallStart",  "Instruction", "ReplicaIndication",
                                            "Identify",   "Manipulate",  "RepeatRequest",
                                            "Breakpoint", "TemperatureReport", "CallEnd"};
}

std::string_view to_string(EventKind kind) { return kEventNames[static_cast<int>(kind)]; }

EventKind event_kind_from_string(std::string_view text) {
  for (std::size_t i = 0; i < std::size(kEventNames); ++i) {
    if (kEventNames[i] == text) return static_cast<EventKind>(i);
  }
  throw ParseError("unknown event kind '" + std::string(text) + "'");
}

void validate_log(const SessionLog& log) {
  const auto& ev = log.events;
  if (ev.empty() || ev.front().kind != EventKind::CallStart) throw ParseError("log must start with CallStart");
  if (ev.back().kind != EventKind::CallEnd) throw ParseError("log must end with CallEnd");
  std::set<std::string> manipulation_blocks;
  std::set<std::string> closed;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    if (i > 0 && ev[i].t_ms < ev[i - 1].t_ms) {
      throw ParseError("timestamps decrease at event " + std::to_string(i));
    }
    if ((ev[i].kind == EventKind::CallStart && i != 0) || (ev[i].kind == EventKind::CallEnd && i + 1 != ev.size())) {
      throw ParseError("CallStart/CallEnd out of place at event " + std::to_string(i));
    }
    if (ev[i].block_kind && *ev[i].block_kind != BlockKind::NoManipulation && !ev[i].block.empty()) {
      manipulation_blocks.insert(ev[i].block);
    }
    if (ev[i].kind == EventKind::Breakpoint) {
      if (ev[i].block.empty()) throw ParseError("Breakpoint without block id at event " + std::to_string(i));
      closed.insert(ev[i].block);
    }
  }
  for (const auto& b : manipulation_blocks) {
    if (!closed.contains(b)) throw ParseError("manipulation block '" + b + "' has no Breakpoint");
  }
}

Json to_json(const SessionEvent& e) {
  Json j{{"t_ms", e.t_ms}, {"kind", to_string(e.kind)}};
  if (!e.block.empty()) j["block"] = e.block;
  if (e.block_kind) j["block_kind"] = to_string(*e.block_kind);
  if (e.step) j["step"] = *e.step;
  if (e.valve) j["valve"] = *e.valve;
  if (e.correct) j["correct"] = *e.correct;
  if (e.value) j["value"] = *e.value;
  if (e.commit_version) j["commit_version"] = *e.commit_version;
  return j;
}

SessionEvent session_event_from_json(const Json& j) {
  try {
    SessionEvent e;
    e.t_ms = j.at("t_ms").get<SimTime>();
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.block = j.value("block", std::string{});
    if (j.contains("block_kind")) e.block_kind = block_kind_from_string(j.at("block_kind").get<std::string>());
    if (j.contains("step")) e.step = j.at("step").get<int>();
    if (j.contains("valve")) e.valve = j.at("valve").get<std::string>();
    if (j.contains("correct")) e.correct = j.at("correct").get<bool>();
    if (j.contains("value")) e.value = j.at("value").get<double>();
    if (j.contains("commit_version")) e.commit_version = j.at("commit_version").get<std::uint64_t>();
    return e;
  } catch (const Json::exception& ex) {
    throw ParseError(std::string("malformed session event: ") + ex.what());
  }
}

std::string to_jsonl(const SessionLog& log) {
  std::ostringstream out;
  out << Json{{"kind", "Header"},
              {"condition", to_string(log.condition)},
              {"seed", log.seed},
              {"initial_valves", valves_json(log.initial_valves)}}
             .dump()
      << '\n';
  for (const auto& e : log.events) out << to_json(e).dump() << '\n';
  out << Json{{"kind", "Footer"}, {"final_valves", valves_json(log.final_valves)}}.dump() << '\n';
  return out.str();
}

SessionLog session_log_from_jsonl(const std::string& text) {
  SessionLog log;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
    const std::string kind = j.value("kind", std::string{});
    try {
      if (kind == "Header") {
        log.condition = condition_from_string(j.at("condition").get<std::string>());
        log.seed = j.at("seed").get<std::uint64_t>();
        log.initial_valves = valves_from_json(j.at("initial_valves"));
        header = true;
      } else if (kind == "Footer") {
        log.final_valves = valves_from_json(j.at("final_valves"));
      } else {
        log.events.push_back(session_event_from_json(j));
      }
    } catch (const Json::exception& e) {
      throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!header) throw ParseError("session log has no header line");
  return log;
}

}  // namespace replica_sync
