#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "replica_sync/scene_json.hpp"
#include "replica_sync/scene_model.hpp"

namespace replica_sync {

using ClientId = std::string;

/// Display-only shrink factor applied to a fresh replica.
inline constexpr double kDefaultReplicaScale = 0.2;

/// Rejection reasons reported in MergeOutcome.
namespace reject_reason {
inline constexpr const char* kExpertPrecedence = "expert-precedence";
inline constexpr const char* kRetention = "retention";
inline constexpr const char* kDuplicateAnnotation = "duplicate-annotation";
inline constexpr const char* kInvalidTarget = "invalid-target";
}  // namespace reject_reason

/// A client-private scaled copy of the shared model. Edits made here are
/// visible only to the owner until synchronised.
struct Replica {
  ClientId owner;
  Role owner_role = Role::Operator;
  double scale_factor = kDefaultReplicaScale;
  /// Shared-model version the working copy was derived from.
  std::uint64_t base_version = 0;
  SceneModel working;
  std::vector<Edit> pending;
};

struct SyncRequest {
  ClientId owner;
  Role owner_role = Role::Operator;
  std::uint64_t base_version = 0;
  std::vector<Edit> edits;

  friend bool operator==(const SyncRequest&, const SyncRequest&) = default;
};

struct RejectedEdit {
  Edit edit;
  std::string reason;

  friend bool operator==(const RejectedEdit&, const RejectedEdit&) = default;
};

struct MergeOutcome {
  SceneModel merged;
  std::vector<Edit> accepted;
  std::vector<RejectedEdit> rejected;
};

struct RebaseResult {
  Replica replica;
  /// Pending edits no longer valid against the new shared model.
  std::vector<Edit> dropped;
};

/// Throws ConfigError when scale <= 0.
Replica create_replica(const SceneModel& shared, ClientId owner, Role role, double scale = kDefaultReplicaScale);

/// Applies an edit to the working copy and queues it. The shared model is
/// never touched. Throws ApplyError, leaving the input replica as it was.
Replica edit_replica(const Replica& replica, const Edit& edit);

SyncRequest make_sync_request(const Replica& replica);

/// Merges a replica's edits into the authoritative shared model.
///
/// Rules, applied edit by edit in request order:
///   - AddAnnotation appends; an id already present is rejected
///     (first writer kept).
///   - RemoveAnnotation of an annotation that existed before this request
///     is only honoured for an Expert request (retention).
///   - A field last written by the Expert is never overwritten by an
///     Operator request (expert-precedence). An Expert request always
///     overwrites. Same-role writes resolve to the later commit.
///   - Edits whose target no longer exists are rejected; the rest of the
///     batch still applies.
/// The version bumps once when at least one edit is accepted. Accepted
/// edits carry the request's owner role.
///
/// Throws ProtocolError when base_version is ahead of the shared model.
MergeOutcome synchronize(const SyncRequest& request, const SceneModel& shared);

/// Rebuilds the working copy on top of a newer shared model, re-applying
/// still-valid pending edits.
RebaseResult rebase_replica(const Replica& replica, const SceneModel& shared);

Json to_json(const SyncRequest& request);
SyncRequest sync_request_from_json(const Json& j);
Json to_json(const MergeOutcome& outcome);
MergeOutcome merge_outcome_from_json(const Json& j);
Json to_json(const RejectedEdit& rejected);
RejectedEdit rejected_edit_from_json(const Json& j);

}  // namespace replica_sync
