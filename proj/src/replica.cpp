#include "replica_sync/replica.hpp"

#include "replica_sync/errors.hpp"

namespace replica_sync {

namespace {

/// Why `edit` cannot be merged, or nullptr if it can.
const char* rejection(const SyncRequest& request, const SceneModel& before, const SceneModel& working,
                      const Edit& edit, std::uint64_t batch_version) {
  if (const auto* add = std::get_if<AddAnnotation>(&edit.op)) {
    if (working.annotations.contains(add->annotation.id)) return reject_reason::kDuplicateAnnotation;
  } else if (const auto* remove = std::get_if<RemoveAnnotation>(&edit.op)) {
    if (request.owner_role != Role::Expert && before.annotations.contains(remove->id)) return reject_reason::kRetention;
  } else if (const auto key = field_of(edit)) {
    const auto stamp = working.stamp(key->first, key->second);
    if (request.owner_role == Role::Operator && stamp && stamp->author == Role::Expert && stamp->version != batch_version) {
      return reject_reason::kExpertPrecedence;
    }
  }
  if (!can_apply(working, edit)) return reject_reason::kInvalidTarget;
  return nullptr;
}

}  // namespace

Replica create_replica(const SceneModel& shared, ClientId owner, Role role, double scale) {
  if (!(scale > 0.0)) throw ConfigError("replica scale must be positive, got " + std::to_string(scale));
  return Replica{std::move(owner), role, scale, shared.version, shared, {}};
}

Replica edit_replica(const Replica& replica, const Edit& edit) {
  Replica out = replica;
  out.working = apply_edit(replica.working, edit);
  out.pending.push_back(edit);
  return out;
}

SyncRequest make_sync_request(const Replica& replica) {
  return SyncRequest{replica.owner, replica.owner_role, replica.base_version, replica.pending};
}

MergeOutcome synchronize(const SyncRequest& request, const SceneModel& shared) {
  if (request.base_version > shared.version) {
    throw ProtocolError("sync request from '" + request.owner + "' is based on version " +
                        std::to_string(request.base_version) + " but shared model is at " +
                        std::to_string(shared.version));
  }
  const std::uint64_t batch_version = shared.version + 1;
  MergeOutcome outcome{shared, {}, {}};
  for (const auto& original : request.edits) {
    Edit edit = original;
    edit.author_role = request.owner_role;
    if (const char* reason = rejection(request, shared, outcome.merged, edit, batch_version)) {
      outcome.rejected.push_back({original, reason});
      continue;
    }
    outcome.merged = apply_batch(outcome.merged, {edit}, batch_version);
    outcome.accepted.push_back(std::move(edit));
  }
  if (outcome.accepted.empty()) outcome.merged = shared;
  return outcome;
}

RebaseResult rebase_replica(const Replica& replica, const SceneModel& shared) {
  RebaseResult result{replica, {}};
  Replica& r = result.replica;
  r.base_version = shared.version;
  r.working = shared;
  r.pending.clear();
  for (const auto& edit : replica.pending) {
    if (can_apply(r.working, edit)) {
      r.working = apply_edit(r.working, edit);
      r.pending.push_back(edit);
    } else {
      result.dropped.push_back(edit);
    }
  }
  return result;
}

Json to_json(const SyncRequest& request) {
  Json edits = Json::array();
  for (const auto& e : request.edits) edits.push_back(to_json(e));
  return Json{{"owner", request.owner},
              {"owner_role", to_string(request.owner_role)},
              {"base_version", request.base_version},
              {"edits", std::move(edits)}};
}

SyncRequest sync_request_from_json(const Json& j) {
  try {
    SyncRequest r;
    r.owner = j.at("owner").get<std::string>();
    r.owner_role = role_from_string(j.at("owner_role").get<std::string>());
    r.base_version = j.at("base_version").get<std::uint64_t>();
    const Json& edits = j.at("edits");
    if (!edits.is_array()) throw ParseError("sync request 'edits' must be an array");
    for (const auto& e : edits) r.edits.push_back(edit_from_json(e));
    return r;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed sync request: ") + e.what());
  }
}

Json to_json(const RejectedEdit& rejected) {
  return Json{{"edit", to_json(rejected.edit)}, {"reason", rejected.reason}};
}

RejectedEdit rejected_edit_from_json(const Json& j) {
  try {
    return RejectedEdit{edit_from_json(j.at("edit")), j.at("reason").get<std::string>()};
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed rejected edit: ") + e.what());
  }
}

Json to_json(const MergeOutcome& outcome) {
  Json accepted = Json::array();
  for (const auto& e : outcome.accepted) accepted.push_back(to_json(e));
  Json rejected = Json::array();
  for (const auto& r : outcome.rejected) rejected.push_back(to_json(r));
  return Json{{"merged", to_json(outcome.merged)}, {"accepted", std::move(accepted)}, {"rejected", std::move(rejected)}};
}

MergeOutcome merge_outcome_from_json(const Json& j) {
  try {
    MergeOutcome o;
    o.merged = model_from_json(j.at("merged"));
    for (const auto& e : j.at("accepted")) o.accepted.push_back(edit_from_json(e));
    for (const auto& r : j.at("rejected")) o.rejected.push_back(rejected_edit_from_json(r));
    return o;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed merge outcome: ") + e.what());
  }
}

}  // namespace replica_sync
