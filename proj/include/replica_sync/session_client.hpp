#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "replica_sync/session_protocol.hpp"

namespace replica_sync {

/// Client half of the protocol: a copy of the shared model replayed from the
/// commit stream, the owner's replica, and requests awaiting a commit.
///
/// The replica's working copy is shared + in-flight edits + pending edits;
/// `replica().pending` holds only edits not yet sent.
class ClientSession {
 public:
  ClientSession(ClientId id, Role role, RoomId room, SceneModel initial, double replica_scale = kDefaultReplicaScale);

  const ClientId& id() const { return id_; }
  Role role() const { return role_; }

  /// Stamps the next sender_seq.
  Envelope envelope(Payload payload);

  /// Applies an edit to the private replica. Throws ApplyError.
  const Edit& edit(EditOp op);

  /// Sends every pending edit (possibly none) for synchronisation.
  Envelope request_sync();

  /// Consumes an envelope from the host. Ordering violations and lost
  /// commits are recorded in errors().
  void receive(const Envelope& envelope);

  const SceneModel& shared() const { return shared_; }
  const Replica& replica() const { return replica_; }
  bool has_in_flight() const { return !in_flight_.empty(); }
  const std::vector<RejectedEdit>& rejected() const { return rejected_; }
  const std::vector<std::string>& errors() const { return errors_; }
  std::uint64_t commits_applied() const { return commits_applied_; }
  const std::optional<AvatarState>& peer_avatar() const { return peer_avatar_; }
  const std::optional<AvatarState>& own_avatar() const { return own_avatar_; }

 private:
  void on_commit(const payload::SyncCommit& commit);
  void rebase();

  ClientId id_;
  Role role_;
  RoomId room_;
  SceneModel shared_;
  Replica replica_;
  std::map<std::uint64_t, std::vector<Edit>> in_flight_;  // keyed by request sender_seq
  std::vector<RejectedEdit> rejected_;
  std::vector<std::string> errors_;
  std::uint64_t next_sender_seq_ = 1;
  std::uint64_t next_author_seq_ = 1;
  std::uint64_t last_host_seq_ = 0;
  std::uint64_t next_commit_index_ = 1;
  std::uint64_t commits_applied_ = 0;
  std::optional<AvatarState> peer_avatar_;
  std::optional<AvatarState> own_avatar_;
};

}  // namespace replica_sync
