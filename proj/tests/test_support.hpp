#pragma once

// Fixtures and oracles shared by the unit tests and the acceptance binary.

#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "replica_sync/errors.hpp"
#include "replica_sync/net_sim.hpp"
#include "replica_sync/scenario.hpp"
#include "replica_sync/session_client.hpp"

namespace test_support {

using namespace replica_sync;

inline const SceneModel& plant() {
  static const SceneModel model = load_model_file(std::string(REPLICA_SYNC_DATA_DIR) + "/plant.json");
  return model;
}

inline double uniform01(std::mt19937_64& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

template <class T>
const T& pick(std::mt19937_64& rng, const std::vector<T>& items) {
  return items[std::uniform_int_distribution<std::size_t>(0, items.size() - 1)(rng)];
}

/// Random edit valid against `model`. Nodes come from a small hot set so
/// concurrent clients collide often; some annotation ids are shared on
/// purpose to exercise duplicate handling.
inline EditOp random_edit(std::mt19937_64& rng, const SceneModel& model, const std::string& tag, int& counter) {
  static const std::vector<NodeId> hot = {"2V4", "2V3", "1V1", "1V2", "HX-PLATE"};
  static const std::vector<NodeId> valves = {"2V4", "2V3", "1V1", "1V2"};
  static const std::vector<Rgb> palette = {{1, 0.85, 0}, {1, 0, 0}, {0, 1, 0}};
  const double u = uniform01(rng);
  if (u < 0.30) return SetValveState{pick(rng, valves), uniform01(rng) < 0.5 ? ValveState::Open : ValveState::Closed};
  if (u < 0.45) {
    std::optional<Rgb> color;
    if (uniform01(rng) < 0.7) color = pick(rng, palette);
    return SetHighlight{pick(rng, hot), color};
  }
  if (u < 0.60) return SetIndication{pick(rng, valves), uniform01(rng) < 0.5};
  if (u < 0.70) {
    const double yaw = std::uniform_int_distribution<int>(0, 3)(rng) * 1.5707963267948966;
    const Vec3 p{std::uniform_int_distribution<int>(-2, 2)(rng) * 0.25, 1.0, 0.5};
    return SetPose{pick(rng, hot), Pose::make(p, Quat::from_yaw(yaw))};
  }
  if (u < 0.88 || model.annotations.empty()) {
    const std::string id = uniform01(rng) < 0.25 ? "shared-" + std::to_string(counter % 3) : tag + "-" + std::to_string(counter);
    ++counter;
    if (model.annotations.contains(id)) return SetIndication{pick(rng, valves), true};
    return AddAnnotation{Annotation{id, Role::Operator, pick(rng, hot), "note " + id, Vec3{0, 0.1, 0}}};
  }
  std::vector<std::string> ids;
  for (const auto& [id, a] : model.annotations) ids.push_back(id);
  return RemoveAnnotation{pick(rng, ids)};
}

/// Sequential-application oracle for the merge rules, written without the
/// library's stamps: it tracks the last writer role of every field itself
/// and folds host-ordered requests with apply_edit.
class ReferenceMerge {
 public:
  explicit ReferenceMerge(SceneModel initial) : model_(std::move(initial)) {}

  void apply(const SyncRequest& request) {
    std::set<std::string> before;
    for (const auto& [id, a] : model_.annotations) before.insert(id);
    for (Edit edit : request.edits) {
      edit.author_role = request.owner_role;
      if (accept(edit, before, request.owner_role)) model_ = apply_edit(model_, edit);
    }
  }

  const SceneModel& model() const { return model_; }

 private:
  bool accept(const Edit& edit, const std::set<std::string>& before, Role role) {
    if (const auto* add = std::get_if<AddAnnotation>(&edit.op)) {
      return !model_.annotations.contains(add->annotation.id) && model_.has_node(add->annotation.anchor);
    }
    if (const auto* rem = std::get_if<RemoveAnnotation>(&edit.op)) {
      if (!model_.annotations.contains(rem->id)) return false;
      return role == Role::Expert || !before.contains(rem->id);
    }
    NodeId node;
    int field = 0;
    std::visit(
        [&](const auto& op) {
          using T = std::decay_t<decltype(op)>;
          if constexpr (std::is_same_v<T, SetPose>) {
            node = op.node, field = 0;
          } else if constexpr (std::is_same_v<T, SetValveState>) {
            node = op.node, field = 1;
          } else if constexpr (std::is_same_v<T, SetHighlight>) {
            node = op.node, field = 2;
          } else if constexpr (std::is_same_v<T, SetIndication>) {
            node = op.node, field = 3;
          }
        },
        edit.op);
    if (!model_.has_node(node)) return false;
    if (field == 1 && !model_.node(node).valve_state) return false;
    auto key = std::make_pair(node, field);
    auto it = writer_.find(key);
    if (role == Role::Operator && it != writer_.end() && it->second == Role::Expert) return false;
    writer_[key] = role;
    return true;
  }

  SceneModel model_;
  std::map<std::pair<NodeId, int>, Role> writer_;
};

class HostNode : public Endpoint {
 public:
  HostNode(RoomId room, SceneModel shared) : host_(std::move(room), std::move(shared)) {}
  const RoomHost& host() const { return host_; }
  void on_envelope(const std::string& from, const Envelope& envelope, Context& ctx) override {
    for (auto& r : host_.handle(from, envelope)) ctx.send(r.to, std::move(r.envelope));
  }

 private:
  RoomHost host_;
};

/// Client that interleaves random replica edits and syncs on timers, then
/// flushes with a final sync.
class RandomClient : public Endpoint {
 public:
  RandomClient(ClientId id, Role role, std::uint64_t seed, int actions, SimTime max_gap_ms)
      : session_(id, role, "room", plant()), rng_(seed), actions_(actions), max_gap_(max_gap_ms), tag_(id) {}

  const ClientSession& session() const { return session_; }

  void on_start(Context& ctx) override {
    ctx.send(kHostId, session_.envelope(payload::Join{session_.role()}));
    ctx.schedule(1 + gap(), 0);
  }

  void on_envelope(const std::string&, const Envelope& envelope, Context&) override { session_.receive(envelope); }

  void on_timer(std::uint64_t, Context& ctx) override {
    if (actions_-- <= 0) {
      if (!session_.replica().pending.empty()) ctx.send(kHostId, session_.request_sync());
      return;
    }
    if (uniform01(rng_) < 0.65) {
      session_.edit(random_edit(rng_, session_.replica().working, tag_, counter_));
    } else {
      ctx.send(kHostId, session_.request_sync());
    }
    ctx.schedule(gap(), 0);
  }

 private:
  SimTime gap() { return std::uniform_int_distribution<SimTime>(0, max_gap_)(rng_); }

  ClientSession session_;
  std::mt19937_64 rng_;
  int actions_;
  SimTime max_gap_;
  std::string tag_;
  int counter_ = 0;
};

struct ConvergenceResult {
  bool clients_match_host = false;
  bool working_copies_match = false;
  bool host_matches_oracle = false;
  std::size_t commits = 0;
  std::vector<std::string> errors;
};

/// One seeded trial: random latencies in [0,120] ms, jitter up to 40 ms.
inline ConvergenceResult convergence_trial(std::uint64_t seed, int actions = 12) {
  std::mt19937_64 rng(seed);
  World world(seed);
  auto link = [&] {
    LinkConfig c;
    c.base_latency_ms = std::uniform_int_distribution<SimTime>(0, 120)(rng);
    c.jitter_ms = std::uniform_int_distribution<SimTime>(0, std::min<SimTime>(40, c.base_latency_ms))(rng);
    return c;
  };
  world.set_duplex("expert", kHostId, link());
  world.set_duplex("operator", kHostId, link());
  auto& host = world.emplace_endpoint<HostNode>(kHostId, "room", plant());
  auto& expert = world.emplace_endpoint<RandomClient>("expert", "expert", Role::Expert, rng(), actions, 150);
  auto& op = world.emplace_endpoint<RandomClient>("operator", "operator", Role::Operator, rng(), actions, 150);
  world.run_until_quiescent();

  const SceneModel& shared = host.host().state().shared;
  ReferenceMerge oracle(plant());
  for (const auto& req : host.host().merged_requests()) oracle.apply(req);

  ConvergenceResult r;
  r.commits = host.host().merged_requests().size();
  r.clients_match_host = field_equal(expert.session().shared(), shared) && field_equal(op.session().shared(), shared) &&
                         expert.session().shared().version == shared.version &&
                         op.session().shared().version == shared.version;
  r.working_copies_match =
      field_equal(expert.session().replica().working, shared) && field_equal(op.session().replica().working, shared);
  r.host_matches_oracle = field_equal(oracle.model(), shared);
  r.errors = host.host().errors();
  for (const auto& e : expert.session().errors()) r.errors.push_back("expert: " + e);
  for (const auto& e : op.session().errors()) r.errors.push_back("operator: " + e);
  return r;
}

}  // namespace test_support
