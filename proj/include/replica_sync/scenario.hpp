#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replica_sync/net_sim.hpp"
#include "replica_sync/session_log.hpp"

namespace replica_sync {

// ---------------------------------------------------------------- plant --

enum class ExchangerKind { ShellAndTube, Plate, Mixed };
enum class FlowMode { Parallel, Counter, Undefined };

std::string_view to_string(ExchangerKind kind);
std::string_view to_string(FlowMode mode);
ExchangerKind exchanger_from_string(std::string_view text);
FlowMode flow_from_string(std::string_view text);

struct Route {
  ExchangerKind exchanger = ExchangerKind::Mixed;
  FlowMode flow = FlowMode::Undefined;

  friend bool operator==(const Route&, const Route&) = default;
};

/// A routing configuration: when every listed valve is in the listed state
/// the plant runs through `route`. Unlisted valves do not matter.
struct RouteRow {
  Route route;
  /// Heat-exchange effectiveness in [0,1).
  double effectiveness = 0.0;
  ValveStates valves;
};

struct RoutingTable {
  double hot_inlet_c = 60.0;
  double cold_inlet_c = 15.0;
  std::vector<RouteRow> rows;

  /// Throws ConfigError: effectiveness outside [0,1), hot inlet not above
  /// cold inlet, or two rows that can match the same configuration.
  void validate() const;
  std::vector<NodeId> referenced_valves() const;
};

RoutingTable routing_from_json(const Json& j);
RoutingTable load_routing_file(const std::string& path);
Json to_json(const RoutingTable& table);

/// Active exchanger and flow direction for a valve configuration; (Mixed,
/// Undefined) when no row matches. Throws ConfigError if a valve referenced
/// by the table is absent from `valves`.
Route route(const ValveStates& valves, const RoutingTable& table);

struct PlantState {
  ValveStates valve_states;
  double hot_inlet_c = 60.0;
  double cold_inlet_c = 15.0;

  static PlantState from_model(const SceneModel& model, const RoutingTable& table);
};

/// T_out = T_hot - eps * (T_hot - T_cold), eps looked up from the matching
/// routing row (0 when no row matches).
double outlet_temperature(const PlantState& plant, const RoutingTable& table);

// ----------------------------------------------------------------- plan --

struct ValveOperation {
  NodeId valve;
  ValveState target = ValveState::Open;

  friend bool operator==(const ValveOperation&, const ValveOperation&) = default;
};

struct Block {
  std::string id;
  BlockKind kind = BlockKind::NoManipulation;
  /// Exactly 4 for OneHanded, 2 for TwoHanded, none otherwise.
  std::vector<ValveOperation> operations;
  std::string prompt;
  /// The operator reads the hot-water outlet temperature in this block.
  bool reports_temperature = false;

  friend bool operator==(const Block&, const Block&) = default;
};

enum class PartKind { InspectSystem, InitialState };
std::string_view to_string(PartKind kind);

struct PlanPart {
  PartKind kind = PartKind::InspectSystem;
  std::vector<Block> blocks;

  friend bool operator==(const PlanPart&, const PlanPart&) = default;
};

struct InspectionPlan {
  std::vector<PlanPart> parts;

  friend bool operator==(const InspectionPlan&, const InspectionPlan&) = default;
};

inline constexpr std::size_t kOneHandedOperations = 4;
inline constexpr std::size_t kTwoHandedOperations = 2;

struct ValveInfo {
  Handedness handedness = Handedness::OneHanded;
  ValveState initial = ValveState::Closed;
};
using ValveRegistry = std::map<NodeId, ValveInfo>;

ValveRegistry registry_from_model(const SceneModel& model);

/// Two-part plan: Inspect the system (switch to the plate exchanger and
/// counter-flow, report the outlet temperature) then Initial State (undo
/// it). With a shuffle seed, part two's one-handed operations are
/// reordered. Throws ConfigError if the registry lacks a referenced valve
/// or its handedness does not match.
InspectionPlan build_default_plan(const ValveRegistry& registry, std::optional<std::uint64_t> shuffle_seed = {});

/// Throws ConfigError on a malformed plan.
void validate_plan(const InspectionPlan& plan, const ValveRegistry& registry);

Json to_json(const InspectionPlan& plan);
InspectionPlan plan_from_json(const Json& j);
InspectionPlan load_plan_file(const std::string& path);

// -------------------------------------------------------------- agents --

/// Mean and standard deviation of a positive duration, in milliseconds.
struct LatencySpec {
  double mean_ms = 1000.0;
  double sd_ms = 0.0;
};

struct OperatorProfile {
  std::string name;
  /// Per instruction: wrong valve identified.
  double p_simple = 0.0;
  /// Per manipulation: wrong valve manipulated.
  double p_critical = 0.0;
  /// Per instruction: asks for a repeat.
  double p_repeat = 0.0;
  LatencySpec identify_latency;
  LatencySpec manipulate_latency_1h;
  LatencySpec manipulate_latency_2h;
  /// Answering a no-manipulation prompt.
  LatencySpec describe_latency;
  /// Added to two-handed manipulations in the Tablet condition.
  double tablet_putdown_penalty_ms = 0.0;
  /// SD of the per-session multiplicative speed factor (mean 1).
  double participant_speed_sd = 0.0;

  /// Throws ConfigError.
  void validate() const;
};

OperatorProfile profile_from_json(const Json& j);
OperatorProfile load_profile_file(const std::string& path);
Json to_json(const OperatorProfile& profile);

/// Deterministic timings of the single expert actor.
struct ExpertPolicy {
  SimTime instruction_ms = 6000;
  SimTime correction_ms = 5000;
  /// HMD: time spent moving/highlighting on the replica before syncing.
  SimTime replica_edit_ms = 3000;
  /// Response after the operator's answer in a no-manipulation block.
  SimTime followup_ms = 20000;
  /// Opening remarks after the call starts.
  SimTime greeting_ms = 10000;
  GodViewOptions god_view;
};

ExpertPolicy expert_policy_from_json(const Json& j);
Json to_json(const ExpertPolicy& policy);

struct NetworkSettings {
  /// Operator <-> host link; expert and host share a machine.
  LinkConfig operator_link{40, 15, 0, 0.0};
  LinkConfig expert_link{0, 0, 0, 0.0};
};

/// Everything a session needs besides the plan and the per-run knobs.
struct SessionEnvironment {
  SceneModel model;
  RoutingTable routing;
  NetworkSettings network;
  RoomId room = "maintenance-room";
};

/// Paths of the shipped data files.
std::string default_data_dir();
SessionEnvironment default_environment();
OperatorProfile default_profile(Condition condition);
ExpertPolicy default_expert_policy();

struct SessionRun {
  SessionLog log;
  Trace trace;
  /// Final shared model held by the host.
  SceneModel host_model;
  SceneModel expert_model;
  SceneModel operator_model;
  std::vector<std::string> protocol_errors;
};

/// Simulates one collaborative inspection through the host, two client
/// sessions and the simulated network. Deterministic in every argument.
SessionRun run_session_detailed(const InspectionPlan& plan, Condition condition, const OperatorProfile& profile,
                                const ExpertPolicy& expert, std::uint64_t seed, const SessionEnvironment& env);

SessionLog run_session(const InspectionPlan& plan, Condition condition, const OperatorProfile& profile,
                       const ExpertPolicy& expert, std::uint64_t seed, const SessionEnvironment& env);

}  // namespace replica_sync
