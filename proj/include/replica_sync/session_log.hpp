#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replica_sync/net_sim.hpp"
#include "replica_sync/scene_json.hpp"

namespace replica_sync {

enum class Condition { Tablet, HMD };
std::string_view to_string(Condition condition);
Condition condition_from_string(std::string_view text);

enum class BlockKind { OneHanded, TwoHanded, NoManipulation };
std::string_view to_string(BlockKind kind);
BlockKind block_kind_from_string(std::string_view text);

enum class EventKind {
  CallStart,
  Instruction,
  ReplicaIndication,
  Identify,
  Manipulate,
  RepeatRequest,
  Breakpoint,
  TemperatureReport,
  CallEnd,
};
std::string_view to_string(EventKind kind);
EventKind event_kind_from_string(std::string_view text);

using ValveStates = std::map<NodeId, ValveState>;

/// One timestamped observation recorded on the operator side.
struct SessionEvent {
  SimTime t_ms = 0;
  EventKind kind = EventKind::Instruction;
  /// Block context; empty outside blocks.
  std::string block;
  std::optional<BlockKind> block_kind;
  /// 1-based operation index within a manipulation block.
  std::optional<int> step;
  /// Valve the instruction targets (Instruction) or the valve acted on.
  std::optional<NodeId> valve;
  std::optional<bool> correct;
  /// Temperature (°C) for TemperatureReport.
  std::optional<double> value;
  /// Shared-model version carried by the commit behind a ReplicaIndication.
  std::optional<std::uint64_t> commit_version;

  friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

struct SessionLog {
  Condition condition = Condition::Tablet;
  std::uint64_t seed = 0;
  ValveStates initial_valves;
  ValveStates final_valves;
  std::vector<SessionEvent> events;

  friend bool operator==(const SessionLog&, const SessionLog&) = default;
};

/// Throws ParseError describing the first violated invariant: starts with
/// CallStart, ends with CallEnd, non-decreasing time, every manipulation
/// block closed by a Breakpoint.
void validate_log(const SessionLog& log);

Json to_json(const SessionEvent& event);
SessionEvent session_event_from_json(const Json& j);

/// Header line, one line per event, footer line.
std::string to_jsonl(const SessionLog& log);
SessionLog session_log_from_jsonl(const std::string& text);

}  // namespace replica_sync
