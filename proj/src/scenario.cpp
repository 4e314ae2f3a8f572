#include "replica_sync/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "replica_sync/errors.hpp"
#include "replica_sync/session_client.hpp"

namespace replica_sync {

namespace {

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

bool row_matches(const RouteRow& row, const ValveStates& valves) {
  for (const auto& [id, state] : row.valves) {
    auto it = valves.find(id);
    if (it == valves.end() || it->second != state) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- plant --

std::string_view to_string(ExchangerKind kind) {
  switch (kind) {
    case ExchangerKind::ShellAndTube: return "ShellAndTube";
    case ExchangerKind::Plate: return "Plate";
    case ExchangerKind::Mixed: return "Mixed";
  }
  return "?";
}

std::string_view to_string(FlowMode mode) {
  switch (mode) {
    case FlowMode::Parallel: return "Parallel";
    case FlowMode::Counter: return "Counter";
    case FlowMode::Undefined: return "Undefined";
  }
  return "?";
}

ExchangerKind exchanger_from_string(std::string_view text) {
  if (text == "ShellAndTube") return ExchangerKind::ShellAndTube;
  if (text == "Plate") return ExchangerKind::Plate;
  if (text == "Mixed") return ExchangerKind::Mixed;
  throw ConfigError("unknown exchanger '" + std::string(text) + "'");
}

FlowMode flow_from_string(std::string_view text) {
  if (text == "Parallel") return FlowMode::Parallel;
  if (text == "Counter") return FlowMode::Counter;
  if (text == "Undefined") return FlowMode::Undefined;
  throw ConfigError("unknown flow mode '" + std::string(text) + "'");
}

void RoutingTable::validate() const {
  if (!(hot_inlet_c > cold_inlet_c)) throw ConfigError("hot inlet must be warmer than cold inlet");
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (!(row.effectiveness >= 0.0 && row.effectiveness < 1.0)) {
      throw ConfigError("effectiveness of row " + std::to_string(i) + " must lie in [0,1)");
    }
    if (row.route.exchanger == ExchangerKind::Mixed || row.route.flow == FlowMode::Undefined) {
      throw ConfigError("row " + std::to_string(i) + " must name a concrete exchanger and flow mode");
    }
    for (std::size_t k = i + 1; k < rows.size(); ++k) {
      bool exclusive = false;
      for (const auto& [id, state] : row.valves) {
        auto it = rows[k].valves.find(id);
        if (it != rows[k].valves.end() && it->second != state) exclusive = true;
      }
      if (!exclusive) {
        throw ConfigError("routing rows " + std::to_string(i) + " and " + std::to_string(k) + " overlap");
      }
    }
  }
}

std::vector<NodeId> RoutingTable::referenced_valves() const {
  std::vector<NodeId> out;
  for (const auto& row : rows) {
    for (const auto& [id, s] : row.valves) {
      if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

RoutingTable routing_from_json(const Json& j) {
  try {
    RoutingTable t;
    t.hot_inlet_c = j.at("hot_inlet_c").get<double>();
    t.cold_inlet_c = j.at("cold_inlet_c").get<double>();
    for (const auto& jr : j.at("rows")) {
      RouteRow row;
      row.route = {exchanger_from_string(jr.at("exchanger").get<std::string>()),
                   flow_from_string(jr.at("flow").get<std::string>())};
      row.effectiveness = jr.at("effectiveness").get<double>();
      for (const auto& [id, s] : jr.at("valves").items()) row.valves[id] = valve_state_from_string(s.get<std::string>());
      t.rows.push_back(std::move(row));
    }
    t.validate();
    return t;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed routing table: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("malformed routing table: ") + e.what());
  }
}

RoutingTable load_routing_file(const std::string& path) { return routing_from_json(read_json_file(path)); }

Json to_json(const RoutingTable& table) {
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    Json valves = Json::object();
    for (const auto& [id, s] : r.valves) valves[id] = to_string(s);
    rows.push_back(Json{{"exchanger", to_string(r.route.exchanger)},
                        {"flow", to_string(r.route.flow)},
                        {"effectiveness", r.effectiveness},
                        {"valves", std::move(valves)}});
  }
  return Json{{"hot_inlet_c", table.hot_inlet_c}, {"cold_inlet_c", table.cold_inlet_c}, {"rows", std::move(rows)}};
}

namespace {

const RouteRow* matching_row(const ValveStates& valves, const RoutingTable& table) {
  for (const auto& id : table.referenced_valves()) {
    if (!valves.contains(id)) throw ConfigError("valve '" + id + "' referenced by the routing table is missing");
  }
  for (const auto& row : table.rows) {
    if (row_matches(row, valves)) return &row;
  }
  return nullptr;
}

}  // namespace

Route route(const ValveStates& valves, const RoutingTable& table) {
  const RouteRow* row = matching_row(valves, table);
  return row ? row->route : Route{};
}

PlantState PlantState::from_model(const SceneModel& model, const RoutingTable& table) {
  PlantState p;
  for (const auto& id : model.valve_ids()) p.valve_states[id] = *model.node(id).valve_state;
  p.hot_inlet_c = table.hot_inlet_c;
  p.cold_inlet_c = table.cold_inlet_c;
  return p;
}

double outlet_temperature(const PlantState& plant, const RoutingTable& table) {
  const RouteRow* row = matching_row(plant.valve_states, table);
  const double eps = row ? row->effectiveness : 0.0;
  if (!(eps >= 0.0 && eps < 1.0)) throw ConfigError("effectiveness must lie in [0,1)");
  return plant.hot_inlet_c - eps * (plant.hot_inlet_c - plant.cold_inlet_c);
}

// ----------------------------------------------------------------- plan --

std::string_view to_string(PartKind kind) { return kind == PartKind::InspectSystem ? "InspectSystem" : "InitialState"; }

ValveRegistry registry_from_model(const SceneModel& model) {
  ValveRegistry r;
  for (const auto& id : model.valve_ids()) {
    const auto& n = model.node(id);
    r[id] = ValveInfo{*n.handedness, *n.valve_state};
  }
  return r;
}

namespace {

ValveState flipped(ValveState s) { return s == ValveState::Open ? ValveState::Closed : ValveState::Open; }

// Valves switched during inspection: exchanger selection (one-handed) and
// the cold-side flow reversal pair (two-handed).
const std::vector<NodeId> kExchangerValves = {"1V1", "1V2", "1V3", "1V4"};
const std::vector<NodeId> kFlowValves = {"2V3", "2V4"};

const ValveInfo& registered(const ValveRegistry& registry, const NodeId& id, Handedness expected) {
  auto it = registry.find(id);
  if (it == registry.end()) throw ConfigError("valve registry lacks '" + id + "'");
  if (it->second.handedness != expected) throw ConfigError("valve '" + id + "' has the wrong handedness for its block");
  return it->second;
}

Block manipulation(std::string id, BlockKind kind, const std::vector<NodeId>& valves, const ValveRegistry& registry,
                   bool restore) {
  const auto hand = kind == BlockKind::OneHanded ? Handedness::OneHanded : Handedness::TwoHanded;
  Block b{std::move(id), kind, {}, "", false};
  for (const auto& v : valves) {
    const auto& info = registered(registry, v, hand);
    b.operations.push_back({v, restore ? info.initial : flipped(info.initial)});
  }
  return b;
}

}  // namespace

InspectionPlan build_default_plan(const ValveRegistry& registry, std::optional<std::uint64_t> shuffle_seed) {
  if (registry.empty()) throw ConfigError("valve registry is empty");
  PlanPart inspect{PartKind::InspectSystem, {}};
  inspect.blocks.push_back({"inspect.describe", BlockKind::NoManipulation, {}, "Describe the exchangers and the valves around you.", false});
  inspect.blocks.push_back(manipulation("inspect.1h", BlockKind::OneHanded, kExchangerValves, registry, false));
  inspect.blocks.push_back(manipulation("inspect.2h", BlockKind::TwoHanded, kFlowValves, registry, false));
  inspect.blocks.push_back({"inspect.temperature", BlockKind::NoManipulation, {}, "Read the hot water outlet temperature.", true});

  PlanPart restore{PartKind::InitialState, {}};
  restore.blocks.push_back(manipulation("restore.1h", BlockKind::OneHanded, kExchangerValves, registry, true));
  restore.blocks.push_back(manipulation("restore.2h", BlockKind::TwoHanded, kFlowValves, registry, true));
  restore.blocks.push_back({"restore.summary", BlockKind::NoManipulation, {}, "Confirm the system is back in its initial state.", false});

  if (shuffle_seed) {
    std::mt19937_64 rng(*shuffle_seed);
    for (auto& block : restore.blocks) {
      if (block.kind == BlockKind::OneHanded) std::shuffle(block.operations.begin(), block.operations.end(), rng);
    }
  }
  InspectionPlan plan{{std::move(inspect), std::move(restore)}};
  validate_plan(plan, registry);
  return plan;
}

void validate_plan(const InspectionPlan& plan, const ValveRegistry& registry) {
  if (plan.parts.size() != 2 || plan.parts[0].kind != PartKind::InspectSystem || plan.parts[1].kind != PartKind::InitialState) {
    throw ConfigError("plan must have the parts [InspectSystem, InitialState]");
  }
  std::map<std::string, int> ids;
  for (const auto& part : plan.parts) {
    for (const auto& block : part.blocks) {
      if (block.id.empty() || ids[block.id]++ > 0) throw ConfigError("block ids must be unique and non-empty");
      switch (block.kind) {
        case BlockKind::OneHanded:
          if (block.operations.size() != kOneHandedOperations) throw ConfigError("block '" + block.id + "' needs 4 operations");
          break;
        case BlockKind::TwoHanded:
          if (block.operations.size() != kTwoHandedOperations) throw ConfigError("block '" + block.id + "' needs 2 operations");
          break;
        case BlockKind::NoManipulation:
          if (!block.operations.empty()) throw ConfigError("block '" + block.id + "' must not manipulate valves");
          break;
      }
      for (const auto& op : block.operations) {
        registered(registry, op.valve, block.kind == BlockKind::OneHanded ? Handedness::OneHanded : Handedness::TwoHanded);
      }
    }
  }
}

Json to_json(const InspectionPlan& plan) {
  Json parts = Json::array();
  for (const auto& part : plan.parts) {
    Json blocks = Json::array();
    for (const auto& b : part.blocks) {
      Json ops = Json::array();
      for (const auto& op : b.operations) ops.push_back(Json{{"valve", op.valve}, {"target", to_string(op.target)}});
      Json jb{{"id", b.id}, {"kind", to_string(b.kind)}, {"operations", std::move(ops)}};
      if (!b.prompt.empty()) jb["prompt"] = b.prompt;
      if (b.reports_temperature) jb["reports_temperature"] = true;
      blocks.push_back(std::move(jb));
    }
    parts.push_back(Json{{"kind", to_string(part.kind)}, {"blocks", std::move(blocks)}});
  }
  return Json{{"parts", std::move(parts)}};
}

InspectionPlan plan_from_json(const Json& j) {
  try {
    InspectionPlan plan;
    for (const auto& jp : j.at("parts")) {
      PlanPart part;
      const auto kind = jp.at("kind").get<std::string>();
      if (kind == "InspectSystem") {
        part.kind = PartKind::InspectSystem;
      } else if (kind == "InitialState") {
        part.kind = PartKind::InitialState;
      } else {
        throw ConfigError("unknown plan part '" + kind + "'");
      }
      for (const auto& jb : jp.at("blocks")) {
        Block b;
        b.id = jb.at("id").get<std::string>();
        b.kind = block_kind_from_string(jb.at("kind").get<std::string>());
        for (const auto& jo : jb.value("operations", Json::array())) {
          b.operations.push_back({jo.at("valve").get<std::string>(), valve_state_from_string(jo.at("target").get<std::string>())});
        }
        b.prompt = jb.value("prompt", std::string{});
        b.reports_temperature = jb.value("reports_temperature", false);
        part.blocks.push_back(std::move(b));
      }
      plan.parts.push_back(std::move(part));
    }
    return plan;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed plan: ") + e.what());
  } catch (const ParseError& e) {
    throw ConfigError(std::string("malformed plan: ") + e.what());
  }
}

InspectionPlan load_plan_file(const std::string& path) { return plan_from_json(read_json_file(path)); }

// ------------------------------------------------------------- profiles --

void OperatorProfile::validate() const {
  for (double p : {p_simple, p_critical, p_repeat}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("profile probabilities must lie in [0,1]");
  }
  if (p_simple + p_critical > 1.0) throw ConfigError("p_simple + p_critical must not exceed 1");
  for (const auto* l : {&identify_latency, &manipulate_latency_1h, &manipulate_latency_2h, &describe_latency}) {
    if (!(l->mean_ms > 0.0) || !(l->sd_ms >= 0.0)) throw ConfigError("profile latencies must be positive");
  }
  if (!(tablet_putdown_penalty_ms >= 0.0)) throw ConfigError("putdown penalty must be non-negative");
  if (!(participant_speed_sd >= 0.0)) throw ConfigError("participant_speed_sd must be non-negative");
}

namespace {

LatencySpec latency_from_json(const Json& j) {
  return LatencySpec{j.at("mean_ms").get<double>(), j.at("sd_ms").get<double>()};
}

Json to_json(const LatencySpec& l) { return Json{{"mean_ms", l.mean_ms}, {"sd_ms", l.sd_ms}}; }

}  // namespace

OperatorProfile profile_from_json(const Json& j) {
  try {
    OperatorProfile p;
    p.name = j.value("name", std::string{});
    p.p_simple = j.at("p_simple").get<double>();
    p.p_critical = j.at("p_critical").get<double>();
    p.p_repeat = j.at("p_repeat").get<double>();
    p.identify_latency = latency_from_json(j.at("identify_latency"));
    p.manipulate_latency_1h = latency_from_json(j.at("manipulate_latency_1h"));
    p.manipulate_latency_2h = latency_from_json(j.at("manipulate_latency_2h"));
    p.describe_latency = latency_from_json(j.at("describe_latency"));
    p.tablet_putdown_penalty_ms = j.at("tablet_putdown_penalty_ms").get<double>();
    p.participant_speed_sd = j.value("participant_speed_sd", 0.0);
    p.validate();
    return p;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed operator profile: ") + e.what());
  }
}

OperatorProfile load_profile_file(const std::string& path) { return profile_from_json(read_json_file(path)); }

Json to_json(const OperatorProfile& p) {
  return Json{{"name", p.name},
              {"p_simple", p.p_simple},
              {"p_critical", p.p_critical},
              {"p_repeat", p.p_repeat},
              {"identify_latency", to_json(p.identify_latency)},
              {"manipulate_latency_1h", to_json(p.manipulate_latency_1h)},
              {"manipulate_latency_2h", to_json(p.manipulate_latency_2h)},
              {"describe_latency", to_json(p.describe_latency)},
              {"tablet_putdown_penalty_ms", p.tablet_putdown_penalty_ms},
              {"participant_speed_sd", p.participant_speed_sd}};
}

ExpertPolicy expert_policy_from_json(const Json& j) {
  try {
    ExpertPolicy e;
    e.instruction_ms = j.at("instruction_ms").get<SimTime>();
    e.correction_ms = j.at("correction_ms").get<SimTime>();
    e.replica_edit_ms = j.at("replica_edit_ms").get<SimTime>();
    e.followup_ms = j.at("followup_ms").get<SimTime>();
    e.greeting_ms = j.at("greeting_ms").get<SimTime>();
    e.god_view.elevation = j.value("elevation_m", kDefaultExpertElevation);
    for (SimTime t : {e.instruction_ms, e.correction_ms, e.replica_edit_ms, e.followup_ms, e.greeting_ms}) {
      if (t < 0) throw ConfigError("expert timings must be non-negative");
    }
    if (!(e.god_view.elevation > 0.0)) throw ConfigError("expert elevation must be positive");
    return e;
  } catch (const Json::exception& ex) {
    throw ConfigError(std::string("malformed expert policy: ") + ex.what());
  }
}

Json to_json(const ExpertPolicy& e) {
  return Json{{"instruction_ms", e.instruction_ms}, {"correction_ms", e.correction_ms},
              {"replica_edit_ms", e.replica_edit_ms}, {"followup_ms", e.followup_ms},
              {"greeting_ms", e.greeting_ms},         {"elevation_m", e.god_view.elevation}};
}

std::string default_data_dir() {
  if (const char* env = std::getenv("REPLICA_SYNC_DATA_DIR"); env && *env) return env;
  return REPLICA_SYNC_DATA_DIR;
}

SessionEnvironment default_environment() {
  const auto dir = default_data_dir();
  SessionEnvironment env;
  env.model = load_model_file(dir + "/plant.json");
  env.routing = load_routing_file(dir + "/routing.json");
  return env;
}

OperatorProfile default_profile(Condition condition) {
  return load_profile_file(default_data_dir() + "/profiles/" + std::string(to_string(condition)) + ".json");
}

ExpertPolicy default_expert_policy() {
  std::ifstream in(default_data_dir() + "/expert.json");
  if (!in) throw ConfigError("cannot open expert policy");
  return expert_policy_from_json(Json::parse(in));
}

// --------------------------------------------------------------- agents --

namespace {

constexpr const char* kExpertId = "expert";
constexpr const char* kOperatorId = "operator";

/// Endpoint with closure timers keyed by a monotone token.
class Agent : public Endpoint {
 public:
  void on_timer(std::uint64_t token, Context& ctx) override {
    auto it = timers_.find(token);
    if (it == timers_.end()) return;
    auto fn = std::move(it->second);
    timers_.erase(it);
    fn(ctx);
  }

 protected:
  void after(Context& ctx, SimTime delay, std::function<void(Context&)> fn) {
    const auto token = next_token_++;
    timers_.emplace(token, std::move(fn));
    ctx.schedule(std::max<SimTime>(delay, 0), token);
  }

 private:
  std::map<std::uint64_t, std::function<void(Context&)>> timers_;
  std::uint64_t next_token_ = 1;
};

std::string intent_of(const payload::Instruction& ins) {
  return ins.meta.is_object() ? ins.meta.value("intent", std::string{}) : std::string{};
}

struct Cursor {
  std::size_t part = 0;
  std::size_t block = 0;
  std::size_t step = 0;
};

std::vector<const Block*> flatten(const InspectionPlan& plan) {
  std::vector<const Block*> out;
  for (const auto& part : plan.parts) {
    for (const auto& b : part.blocks) out.push_back(&b);
  }
  return out;
}

constexpr Rgb kIndicationColor{1.0, 0.85, 0.0};

class ExpertAgent : public Agent {
 public:
  ExpertAgent(const InspectionPlan& plan, Condition condition, ExpertPolicy policy, ClientSession session)
      : blocks_(flatten(plan)), condition_(condition), policy_(policy), session_(std::move(session)) {}

  const ClientSession& session() const { return session_; }

  void on_start(Context& ctx) override { ctx.send(kHostId, session_.envelope(payload::Join{Role::Expert})); }

  void on_envelope(const std::string&, const Envelope& env, Context& ctx) override {
    session_.receive(env);
    std::visit(
        [&](const auto& p) {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, payload::CallStart>) {
            after(ctx, policy_.greeting_ms, [this](Context& c) { begin_block(c); });
          } else if constexpr (std::is_same_v<T, payload::MediaSignal>) {
            if (!answered_media_) {
              answered_media_ = true;
              std::vector<std::uint8_t> answer(p.bytes.rbegin(), p.bytes.rend());
              ctx.send(kHostId, session_.envelope(payload::MediaSignal{std::move(answer)}));
            }
          } else if constexpr (std::is_same_v<T, payload::SyncCommit>) {
            if (awaiting_commit_ && p.origin == session_.id() && p.origin_seq == *awaiting_commit_) {
              awaiting_commit_.reset();
              after(ctx, policy_.instruction_ms, [this](Context& c) { send_operate(c, "operate"); });
            }
          } else if constexpr (std::is_same_v<T, payload::Instruction>) {
            on_operator_speech(intent_of(p), ctx);
          }
        },
        env.payload);
  }

 private:
  const Block& block() const { return *blocks_.at(index_); }
  bool last_block() const { return index_ + 1 == blocks_.size(); }

  Json meta(const std::string& intent) const {
    const Block& b = block();
    Json m{{"intent", intent}, {"block", b.id}, {"block_kind", to_string(b.kind)}, {"last_block", last_block()}};
    if (b.kind != BlockKind::NoManipulation) {
      const auto& op = b.operations.at(step_);
      m["step"] = step_ + 1;
      m["steps"] = b.operations.size();
      m["valve"] = op.valve;
      m["target"] = to_string(op.target);
    } else {
      m["reports_temperature"] = b.reports_temperature;
    }
    return m;
  }

  void say(Context& ctx, std::string text, Json m) {
    ctx.send(kHostId, session_.envelope(payload::Instruction{std::move(text), std::move(m)}));
  }

  void begin_block(Context& ctx) {
    if (index_ >= blocks_.size()) return;
    step_ = 0;
    if (block().kind == BlockKind::NoManipulation) {
      after(ctx, policy_.instruction_ms, [this](Context& c) { say(c, block().prompt, meta("describe")); });
    } else {
      start_operation(ctx);
    }
  }

  void start_operation(Context& ctx) {
    if (condition_ == Condition::Tablet) {
      after(ctx, policy_.instruction_ms, [this](Context& c) { send_operate(c, "operate"); });
      return;
    }
    // Indicate on the replica, synchronise, then talk.
    after(ctx, policy_.replica_edit_ms, [this](Context& c) {
      const auto& valve = block().operations.at(step_).valve;
      session_.edit(SetIndication{valve, true});
      session_.edit(SetHighlight{valve, kIndicationColor});
      Envelope req = session_.request_sync();
      awaiting_commit_ = req.sender_seq;
      c.send(kHostId, std::move(req));
    });
  }

  void send_operate(Context& ctx, const std::string& intent) {
    const auto& op = block().operations.at(step_);
    say(ctx, "Set valve " + op.valve + " to " + std::string(to_string(op.target)) + ".", meta(intent));
  }

  void clear_indication(Context& ctx) {
    const auto& valve = block().operations.at(step_).valve;
    session_.edit(SetIndication{valve, false});
    session_.edit(SetHighlight{valve, std::nullopt});
    ctx.send(kHostId, session_.request_sync());
  }

  void next_block(Context& ctx) {
    ++index_;
    begin_block(ctx);
  }

  void on_operator_speech(const std::string& intent, Context& ctx) {
    if (index_ >= blocks_.size()) return;
    if (intent == "reply") {
      after(ctx, policy_.followup_ms, [this](Context& c) {
        say(c, "Thank you.", meta("ack"));
        next_block(c);
      });
    } else if (intent == "repeat") {
      after(ctx, policy_.instruction_ms, [this](Context& c) { send_operate(c, "operate"); });
    } else if (intent == "check") {
      after(ctx, policy_.correction_ms, [this](Context& c) { send_operate(c, "correct"); });
    } else if (intent == "done") {
      if (condition_ == Condition::HMD) clear_indication(ctx);
      if (++step_ < block().operations.size()) {
        start_operation(ctx);
      } else {
        next_block(ctx);
      }
    }
  }

  std::vector<const Block*> blocks_;
  Condition condition_;
  ExpertPolicy policy_;
  ClientSession session_;
  std::size_t index_ = 0;
  std::size_t step_ = 0;
  std::optional<std::uint64_t> awaiting_commit_;
  bool answered_media_ = false;
};

double draw_latency(std::mt19937_64& rng, const LatencySpec& spec) {
  if (spec.sd_ms <= 0.0) return spec.mean_ms;
  const double cv2 = (spec.sd_ms / spec.mean_ms) * (spec.sd_ms / spec.mean_ms);
  const double sigma = std::sqrt(std::log1p(cv2));
  const double mu = std::log(spec.mean_ms) - 0.5 * sigma * sigma;
  return std::lognormal_distribution<double>(mu, sigma)(rng);
}

class OperatorAgent : public Agent {
 public:
  OperatorAgent(Condition condition, OperatorProfile profile, std::uint64_t seed, const SessionEnvironment& env,
                ClientSession session)
      : condition_(condition),
        profile_(std::move(profile)),
        rng_(seed ^ 0x6F70657261746F72ULL),
        env_(env),
        registry_(registry_from_model(env.model)),
        plant_(PlantState::from_model(env.model, env.routing)),
        session_(std::move(session)) {
    speed_ = draw_latency(rng_, LatencySpec{1.0, profile_.participant_speed_sd});
  }

  const ClientSession& session() const { return session_; }
  const PlantState& plant() const { return plant_; }
  std::vector<SessionEvent>& events() { return events_; }

  void on_start(Context& ctx) override {
    ctx.send(kHostId, session_.envelope(payload::Join{Role::Operator}));
    move_avatar(ctx, std::nullopt);
    ctx.send(kHostId, session_.envelope(payload::CallStart{}));
    record(ctx, EventKind::CallStart);
    std::vector<std::uint8_t> offer(64);
    for (auto& b : offer) b = static_cast<std::uint8_t>(rng_() & 0xFF);
    ctx.send(kHostId, session_.envelope(payload::MediaSignal{std::move(offer)}));
  }

  void on_envelope(const std::string&, const Envelope& env, Context& ctx) override {
    session_.receive(env);
    if (const auto* commit = std::get_if<payload::SyncCommit>(&env.payload)) {
      for (const auto& e : commit->accepted) {
        const auto* ind = std::get_if<SetIndication>(&e.op);
        if (ind && ind->on && e.author_role == Role::Expert) {
          SessionEvent ev = make(ctx, EventKind::ReplicaIndication);
          ev.valve = ind->node;
          ev.commit_version = commit->new_version;
          events_.push_back(std::move(ev));
        }
      }
    } else if (const auto* ins = std::get_if<payload::Instruction>(&env.payload)) {
      on_instruction(*ins, ctx);
    }
  }

 private:
  struct Current {
    std::string block;
    BlockKind kind = BlockKind::NoManipulation;
    int step = 0;
    int steps = 0;
    NodeId valve;
    ValveState target = ValveState::Open;
    bool last_block = false;
    bool reports_temperature = false;
  };

  SessionEvent make(Context& ctx, EventKind kind) const {
    SessionEvent e;
    e.t_ms = ctx.now();
    e.kind = kind;
    return e;
  }

  SessionEvent in_block(Context& ctx, EventKind kind) const {
    SessionEvent e = make(ctx, kind);
    e.block = current_.block;
    e.block_kind = current_.kind;
    if (current_.kind != BlockKind::NoManipulation) e.step = current_.step;
    return e;
  }

  void record(Context& ctx, EventKind kind) { events_.push_back(make(ctx, kind)); }

  SimTime latency(const LatencySpec& spec) { return static_cast<SimTime>(std::llround(speed_ * draw_latency(rng_, spec))); }

  SimTime manipulate_time() {
    const bool two = current_.kind == BlockKind::TwoHanded;
    SimTime t = latency(two ? profile_.manipulate_latency_2h : profile_.manipulate_latency_1h);
    if (two && condition_ == Condition::Tablet) t += static_cast<SimTime>(std::llround(profile_.tablet_putdown_penalty_ms));
    return t;
  }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  NodeId wrong_valve() {
    const auto hand = registry_.at(current_.valve).handedness;
    std::vector<NodeId> candidates;
    for (const auto& [id, info] : registry_) {
      if (id != current_.valve && info.handedness == hand) candidates.push_back(id);
    }
    if (candidates.empty()) return current_.valve;
    std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
    return candidates[pick(rng_)];
  }

  void speak(Context& ctx, const std::string& intent, std::string text) {
    Json m{{"intent", intent}, {"block", current_.block}};
    ctx.send(kHostId, session_.envelope(payload::Instruction{std::move(text), std::move(m)}));
  }

  void move_avatar(Context& ctx, const std::optional<NodeId>& valve) {
    Vec3 target{0.0, 1.0, 0.0};
    if (valve) target = env_.model.world_anchor.compose(world_pose(*valve)).position;
    const Vec3 head{target.x, 1.7, target.z - 0.6};
    const Vec3 gaze = normalized(target - head);
    AvatarState a{session_.id(), Role::Operator, Pose::make(head, Quat::look_along(gaze)), gaze};
    ctx.send(kHostId, session_.envelope(payload::Avatar{a}));
  }

  Pose world_pose(const NodeId& id) const {
    const auto& n = env_.model.node(id);
    Pose p = n.local_pose;
    for (auto parent = n.parent; parent; parent = env_.model.node(*parent).parent) {
      p = env_.model.node(*parent).local_pose.compose(p);
    }
    return p;
  }

  void physically_set(Context& ctx, const NodeId& valve, ValveState state) {
    plant_.valve_states[valve] = state;
    if (condition_ == Condition::HMD) {
      session_.edit(SetValveState{valve, state});
      ctx.send(kHostId, session_.request_sync());
    }
  }

  void on_instruction(const payload::Instruction& ins, Context& ctx) {
    const std::string intent = intent_of(ins);
    if (intent.empty() || finished_) return;
    const Json& m = ins.meta;
    current_.block = m.value("block", std::string{});
    current_.kind = block_kind_from_string(m.value("block_kind", std::string("NoManipulation")));
    current_.last_block = m.value("last_block", false);
    if (intent == "describe") {
      current_.reports_temperature = m.value("reports_temperature", false);
      events_.push_back(in_block(ctx, EventKind::Instruction));
      after(ctx, latency(profile_.describe_latency), [this](Context& c) {
        if (current_.reports_temperature) {
          SessionEvent e = in_block(c, EventKind::TemperatureReport);
          e.value = outlet_temperature(plant_, env_.routing);
          events_.push_back(std::move(e));
        }
        speak(c, "reply", "Here is what I see.");
      });
    } else if (intent == "ack") {
      events_.push_back(in_block(ctx, EventKind::Breakpoint));
      if (current_.last_block) end_call(ctx);
    } else if (intent == "operate" || intent == "correct") {
      current_.step = m.at("step").get<int>();
      current_.steps = m.at("steps").get<int>();
      current_.valve = m.at("valve").get<std::string>();
      current_.target = valve_state_from_string(m.at("target").get<std::string>());
      SessionEvent e = in_block(ctx, EventKind::Instruction);
      e.valve = current_.valve;
      events_.push_back(std::move(e));
      if (intent == "correct") {
        retry(ctx);
      } else {
        attempt(ctx);
      }
    }
  }

  void attempt(Context& ctx) {
    if (uniform() < profile_.p_repeat) {
      events_.push_back(in_block(ctx, EventKind::RepeatRequest));
      speak(ctx, "repeat", "Could you repeat that?");
      return;
    }
    const double u = uniform();
    const SimTime identify = latency(profile_.identify_latency);
    if (u < profile_.p_critical) {
      const NodeId wrong = wrong_valve();
      after(ctx, identify, [this, wrong](Context& c) {
        identified(c, wrong, false);
        after(c, manipulate_time(), [this, wrong](Context& c2) {
          const ValveState before = plant_.valve_states.at(wrong);
          manipulated(c2, wrong, false, current_.target);
          pending_revert_ = std::make_pair(wrong, before);
          speak(c2, "check", "I moved " + wrong + ".");
        });
      });
    } else if (u < profile_.p_critical + profile_.p_simple) {
      const NodeId wrong = wrong_valve();
      after(ctx, identify, [this, wrong](Context& c) {
        identified(c, wrong, false);
        speak(c, "check", "Is it " + wrong + "?");
      });
    } else {
      after(ctx, identify, [this](Context& c) {
        identified(c, current_.valve, true);
        after(c, manipulate_time(), [this](Context& c2) { finish_operation(c2); });
      });
    }
  }

  /// After a correction: undo any wrong manipulation, then find the right valve.
  void retry(Context& ctx) {
    auto find_and_operate = [this](Context& c) {
      after(c, latency(profile_.identify_latency), [this](Context& c2) {
        identified(c2, current_.valve, true);
        after(c2, manipulate_time(), [this](Context& c3) { finish_operation(c3); });
      });
    };
    if (pending_revert_) {
      const auto [valve, state] = *pending_revert_;
      pending_revert_.reset();
      after(ctx, manipulate_time(), [this, valve, state, find_and_operate](Context& c) {
        physically_set(c, valve, state);
        find_and_operate(c);
      });
    } else {
      find_and_operate(ctx);
    }
  }

  void identified(Context& ctx, const NodeId& valve, bool correct) {
    SessionEvent e = in_block(ctx, EventKind::Identify);
    e.valve = valve;
    e.correct = correct;
    events_.push_back(std::move(e));
  }

  void manipulated(Context& ctx, const NodeId& valve, bool correct, ValveState state) {
    SessionEvent e = in_block(ctx, EventKind::Manipulate);
    e.valve = valve;
    e.correct = correct;
    events_.push_back(std::move(e));
    physically_set(ctx, valve, state);
  }

  void finish_operation(Context& ctx) {
    manipulated(ctx, current_.valve, true, current_.target);
    move_avatar(ctx, current_.valve);
    speak(ctx, "done", "Done.");
    if (current_.step == current_.steps) {
      events_.push_back(in_block(ctx, EventKind::Breakpoint));
      if (current_.last_block) end_call(ctx);
    }
  }

  void end_call(Context& ctx) {
    finished_ = true;
    ctx.send(kHostId, session_.envelope(payload::CallEnd{}));
    record(ctx, EventKind::CallEnd);
  }

  Condition condition_;
  OperatorProfile profile_;
  std::mt19937_64 rng_;
  const SessionEnvironment& env_;
  ValveRegistry registry_;
  PlantState plant_;
  ClientSession session_;
  double speed_ = 1.0;
  Current current_;
  std::optional<std::pair<NodeId, ValveState>> pending_revert_;
  std::vector<SessionEvent> events_;
  bool finished_ = false;
};

class HostEndpoint : public Endpoint {
 public:
  HostEndpoint(RoomId room, SceneModel shared, GodViewOptions god_view) : host_(std::move(room), std::move(shared), god_view) {}

  const RoomHost& host() const { return host_; }

  void on_envelope(const std::string& from, const Envelope& envelope, Context& ctx) override {
    for (auto& routed : host_.handle(from, envelope)) ctx.send(routed.to, std::move(routed.envelope));
  }

 private:
  RoomHost host_;
};

}  // namespace

SessionRun run_session_detailed(const InspectionPlan& plan, Condition condition, const OperatorProfile& profile,
                                const ExpertPolicy& expert, std::uint64_t seed, const SessionEnvironment& env) {
  profile.validate();
  const auto registry = registry_from_model(env.model);
  validate_plan(plan, registry);

  World world(seed);
  world.set_duplex(kExpertId, kHostId, env.network.expert_link);
  world.set_duplex(kOperatorId, kHostId, env.network.operator_link);

  GodViewOptions god_view = expert.god_view;
  god_view.look_at = env.model.world_anchor.position;
  auto& host = world.emplace_endpoint<HostEndpoint>(kHostId, env.room, env.model, god_view);
  auto& expert_agent = world.emplace_endpoint<ExpertAgent>(
      kExpertId, plan, condition, expert, ClientSession(kExpertId, Role::Expert, env.room, env.model));
  auto& operator_agent = world.emplace_endpoint<OperatorAgent>(
      kOperatorId, condition, profile, seed, env, ClientSession(kOperatorId, Role::Operator, env.room, env.model));

  SessionRun run;
  run.trace = world.run_until_quiescent();
  run.log.condition = condition;
  run.log.seed = seed;
  run.log.initial_valves = PlantState::from_model(env.model, env.routing).valve_states;
  run.log.final_valves = operator_agent.plant().valve_states;
  run.log.events = std::move(operator_agent.events());
  run.host_model = host.host().state().shared;
  run.expert_model = expert_agent.session().shared();
  run.operator_model = operator_agent.session().shared();
  run.protocol_errors = host.host().errors();
  for (const auto& e : expert_agent.session().errors()) run.protocol_errors.push_back("expert: " + e);
  for (const auto& e : operator_agent.session().errors()) run.protocol_errors.push_back("operator: " + e);
  validate_log(run.log);
  return run;
}

SessionLog run_session(const InspectionPlan& plan, Condition condition, const OperatorProfile& profile,
                       const ExpertPolicy& expert, std::uint64_t seed, const SessionEnvironment& env) {
  return run_session_detailed(plan, condition, profile, expert, seed, env).log;
}

}  // namespace replica_sync
