#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "replica_sync/replica.hpp"

namespace replica_sync {

using RoomId = std::string;

/// Sender id used for envelopes that originate at the room host.
inline constexpr const char* kHostId = "host";

struct AvatarState {
  ClientId client;
  Role role = Role::Operator;
  Pose head_pose;
  /// Unit vector.
  Vec3 gaze_direction{0.0, 0.0, 1.0};

  friend bool operator==(const AvatarState&, const AvatarState&) = default;
};

namespace payload {

struct Join {
  Role role = Role::Operator;
  friend bool operator==(const Join&, const Join&) = default;
};
struct Leave {
  friend bool operator==(const Leave&, const Leave&) = default;
};
struct Avatar {
  AvatarState state;
  friend bool operator==(const Avatar&, const Avatar&) = default;
};
struct SyncReq {
  SyncRequest request;
  friend bool operator==(const SyncReq&, const SyncReq&) = default;
};
/// Host-only. Answers the sync request `origin`/`origin_seq`.
struct SyncCommit {
  ClientId origin;
  std::uint64_t origin_seq = 0;
  /// Consecutive per room, starting at 1; lets clients detect lost commits.
  std::uint64_t commit_index = 0;
  std::uint64_t new_version = 0;
  std::vector<Edit> accepted;
  std::vector<RejectedEdit> rejected;
  friend bool operator==(const SyncCommit&, const SyncCommit&) = default;
};
/// Spoken guidance. `meta` carries structured cues for scripted agents.
struct Instruction {
  std::string text;
  Json meta;
  friend bool operator==(const Instruction&, const Instruction&) = default;
};
struct CallStart {
  friend bool operator==(const CallStart&, const CallStart&) = default;
};
struct CallEnd {
  friend bool operator==(const CallEnd&, const CallEnd&) = default;
};
/// Opaque media-negotiation blob, relayed unmodified.
struct MediaSignal {
  std::vector<std::uint8_t> bytes;
  friend bool operator==(const MediaSignal&, const MediaSignal&) = default;
};

}  // namespace payload

using Payload = std::variant<payload::Join, payload::Leave, payload::Avatar, payload::SyncReq, payload::SyncCommit,
                             payload::Instruction, payload::CallStart, payload::CallEnd, payload::MediaSignal>;

std::string_view payload_name(const Payload& p);

struct Envelope {
  /// Assigned by the host when it emits the envelope; 0 before that.
  std::uint64_t host_seq = 0;
  ClientId sender;
  std::uint64_t sender_seq = 0;
  RoomId room;
  Payload payload;

  friend bool operator==(const Envelope&, const Envelope&) = default;
};

/// An envelope with its destination.
struct Routed {
  ClientId to;
  Envelope envelope;
};

struct RoomState {
  RoomId room;
  std::map<ClientId, Role> members;
  SceneModel shared;
  std::uint64_t next_host_seq = 1;
  std::uint64_t next_commit_index = 1;
  std::map<ClientId, AvatarState> avatar_map;

  std::optional<ClientId> member_with(Role role) const;
  std::optional<ClientId> peer_of(const ClientId& client) const;
};

RoomState make_room(RoomId room, SceneModel shared);

struct JoinResult {
  RoomState state;
  Envelope broadcast;
};

/// Throws ProtocolError if the role is already taken or the id is in use.
JoinResult join_room(const RoomState& state, const ClientId& client, Role role);

JoinResult leave_room(const RoomState& state, const ClientId& client);

struct SubmitResult {
  RoomState state;
  Envelope commit;
  MergeOutcome outcome;
};

/// Runs the merge on the authoritative model and produces the commit to
/// broadcast. Throws ProtocolError for a non-member sender, an owner/role
/// mismatch, or a base version ahead of the shared model.
SubmitResult submit_sync(const RoomState& state, const ClientId& sender, std::uint64_t sender_seq,
                         const SyncRequest& request);

inline constexpr double kDefaultExpertElevation = 1.5;

struct GodViewOptions {
  double elevation = kDefaultExpertElevation;
  /// Horizontal placement; defaults to the operator's X,Z.
  std::optional<double> x;
  std::optional<double> z;
  /// Point the expert looks toward, usually the model anchor.
  Vec3 look_at{};
};

/// Pose of the expert avatar above the operator. Throws ConfigError when
/// the elevation is not positive.
Pose place_expert_avatar(const AvatarState& operator_avatar, const GodViewOptions& options);

/// Forwards an opaque blob to the other member. Throws ProtocolError
/// (no-peer) when the room has no peer for `from`.
Routed relay_media(RoomState& state, const ClientId& from, std::uint64_t sender_seq, std::vector<std::uint8_t> blob);

/// Serialised envelope processor attached to whichever endpoint hosts the
/// room. Keeps the authoritative RoomState and assigns the total order.
class RoomHost {
 public:
  RoomHost(RoomId room, SceneModel shared, GodViewOptions god_view = {});

  /// Processes one envelope received from `from` and returns the envelopes
  /// to deliver. Protocol violations are recorded in errors() and the
  /// offending envelope is dropped.
  std::vector<Routed> handle(const ClientId& from, const Envelope& envelope);

  const RoomState& state() const { return state_; }
  const std::vector<std::string>& errors() const { return errors_; }
  /// Missing sender_seq values observed per client (drop detection).
  const std::vector<std::string>& gaps() const { return gaps_; }
  /// Every request in the order the host merged it.
  const std::vector<SyncRequest>& merged_requests() const { return merged_requests_; }
  /// Commits emitted so far; replayed to late joiners.
  const std::vector<payload::SyncCommit>& commit_log() const { return commit_log_; }

 private:
  std::vector<Routed> dispatch(const ClientId& from, const Envelope& envelope);
  std::vector<Routed> broadcast(Envelope envelope);
  Routed to_peer(const ClientId& from, Envelope envelope);

  RoomState state_;
  GodViewOptions god_view_;
  std::map<ClientId, std::uint64_t> last_sender_seq_;
  std::vector<std::string> errors_;
  std::vector<std::string> gaps_;
  std::vector<SyncRequest> merged_requests_;
  std::vector<payload::SyncCommit> commit_log_;
};

}  // namespace replica_sync
