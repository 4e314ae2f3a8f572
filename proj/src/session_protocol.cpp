#include "replica_sync/session_protocol.hpp"

#include <cmath>

#include "replica_sync/errors.hpp"

namespace replica_sync {

std::string_view payload_name(const Payload& p) {
  static constexpr std::string_view names[] = {"Join",        "Leave",     "Avatar",  "SyncReq",    "SyncCommit",
                                               "Instruction", "CallStart", "CallEnd", "MediaSignal"};
  return names[p.index()];
}

std::optional<ClientId> RoomState::member_with(Role role) const {
  for (const auto& [id, r] : members) {
    if (r == role) return id;
  }
  return std::nullopt;
}

std::optional<ClientId> RoomState::peer_of(const ClientId& client) const {
  for (const auto& [id, r] : members) {
    if (id != client) return id;
  }
  return std::nullopt;
}

RoomState make_room(RoomId room, SceneModel shared) {
  if (room.empty()) throw ConfigError("room id must be non-empty");
  RoomState s;
  s.room = std::move(room);
  s.shared = std::move(shared);
  return s;
}

JoinResult join_room(const RoomState& state, const ClientId& client, Role role) {
  if (client.empty() || client == kHostId) throw ProtocolError("invalid client id '" + client + "'");
  if (state.members.contains(client)) throw ProtocolError("client '" + client + "' already joined");
  if (state.member_with(role)) throw ProtocolError("role-occupied: " + std::string(to_string(role)));
  JoinResult r{state, {}};
  r.state.members.emplace(client, role);
  r.broadcast = Envelope{r.state.next_host_seq++, client, 0, state.room, payload::Join{role}};
  return r;
}

JoinResult leave_room(const RoomState& state, const ClientId& client) {
  if (!state.members.contains(client)) throw ProtocolError("client '" + client + "' is not a member");
  JoinResult r{state, {}};
  r.state.members.erase(client);
  r.state.avatar_map.erase(client);
  r.broadcast = Envelope{r.state.next_host_seq++, client, 0, state.room, payload::Leave{}};
  return r;
}

SubmitResult submit_sync(const RoomState& state, const ClientId& sender, std::uint64_t sender_seq,
                         const SyncRequest& request) {
  auto member = state.members.find(sender);
  if (member == state.members.end()) throw ProtocolError("sync from non-member '" + sender + "'");
  if (request.owner != sender || request.owner_role != member->second) {
    throw ProtocolError("sync request owner/role does not match sender '" + sender + "'");
  }
  MergeOutcome outcome = synchronize(request, state.shared);
  SubmitResult r{state, {}, {}};
  r.state.shared = outcome.merged;
  payload::SyncCommit commit{sender, sender_seq, r.state.next_commit_index++, outcome.merged.version,
                             outcome.accepted, outcome.rejected};
  r.commit = Envelope{r.state.next_host_seq++, kHostId, 0, state.room, std::move(commit)};
  r.outcome = std::move(outcome);
  return r;
}

Pose place_expert_avatar(const AvatarState& operator_avatar, const GodViewOptions& options) {
  if (!(options.elevation > 0.0) || !std::isfinite(options.elevation)) {
    throw ConfigError("expert elevation must be positive");
  }
  const Vec3& head = operator_avatar.head_pose.position;
  const Vec3 position{options.x.value_or(head.x), head.y + options.elevation, options.z.value_or(head.z)};
  const Vec3 forward = options.look_at - position;
  const Quat orientation = norm(forward) > 0.0 ? Quat::look_along(forward) : Quat::identity();
  return Pose::make(position, orientation);
}

Routed relay_media(RoomState& state, const ClientId& from, std::uint64_t sender_seq, std::vector<std::uint8_t> blob) {
  if (!state.members.contains(from)) throw ProtocolError("media from non-member '" + from + "'");
  const auto peer = state.peer_of(from);
  if (!peer) throw ProtocolError("no-peer: '" + from + "' is alone in room " + state.room);
  return Routed{*peer, Envelope{state.next_host_seq++, from, sender_seq, state.room, payload::MediaSignal{std::move(blob)}}};
}

RoomHost::RoomHost(RoomId room, SceneModel shared, GodViewOptions god_view)
    : state_(make_room(std::move(room), std::move(shared))), god_view_(god_view) {}

std::vector<Routed> RoomHost::handle(const ClientId& from, const Envelope& envelope) {
  if (envelope.sender != from) {
    errors_.push_back("envelope sender '" + envelope.sender + "' does not match link source '" + from + "'");
    return {};
  }
  if (envelope.room != state_.room) {
    errors_.push_back("envelope for room '" + envelope.room + "' reached room '" + state_.room + "'");
    return {};
  }
  auto& last = last_sender_seq_[from];
  if (envelope.sender_seq <= last) {
    errors_.push_back("sender_seq " + std::to_string(envelope.sender_seq) + " from '" + from + "' is not increasing");
    return {};
  }
  if (envelope.sender_seq != last + 1) {
    gaps_.push_back(from + ": expected sender_seq " + std::to_string(last + 1) + ", got " +
                    std::to_string(envelope.sender_seq));
  }
  last = envelope.sender_seq;
  try {
    return dispatch(from, envelope);
  } catch (const Error& e) {
    errors_.push_back(e.what());
    return {};
  }
}

std::vector<Routed> RoomHost::broadcast(Envelope envelope) {
  std::vector<Routed> out;
  for (const auto& [id, role] : state_.members) out.push_back({id, envelope});
  return out;
}

Routed RoomHost::to_peer(const ClientId& from, Envelope envelope) {
  const auto peer = state_.peer_of(from);
  if (!peer) throw ProtocolError("no-peer: '" + from + "' is alone in room " + state_.room);
  envelope.host_seq = state_.next_host_seq++;
  return Routed{*peer, std::move(envelope)};
}

std::vector<Routed> RoomHost::dispatch(const ClientId& from, const Envelope& envelope) {
  const bool member = state_.members.contains(from);
  if (!member && !std::holds_alternative<payload::Join>(envelope.payload)) {
    throw ProtocolError(std::string(payload_name(envelope.payload)) + " from non-member '" + from + "'");
  }
  return std::visit(
      [&](const auto& p) -> std::vector<Routed> {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, payload::Join>) {
          auto r = join_room(state_, from, p.role);
          state_ = std::move(r.state);
          r.broadcast.sender_seq = envelope.sender_seq;
          auto out = broadcast(std::move(r.broadcast));
          // Catch-up for a late joiner: earlier commits under fresh host_seq.
          for (const auto& c : commit_log_) {
            out.push_back({from, Envelope{state_.next_host_seq++, kHostId, 0, state_.room, c}});
          }
          return out;
        } else if constexpr (std::is_same_v<T, payload::Leave>) {
          auto r = leave_room(state_, from);
          state_ = std::move(r.state);
          r.broadcast.sender_seq = envelope.sender_seq;
          auto out = broadcast(r.broadcast);
          out.push_back({from, r.broadcast});
          return out;
        } else if constexpr (std::is_same_v<T, payload::Avatar>) {
          AvatarState a = p.state;
          if (a.client != from || a.role != state_.members.at(from)) throw ProtocolError("avatar identity mismatch from '" + from + "'");
          if (std::abs(norm(a.gaze_direction) - 1.0) > kUnitTolerance) throw ProtocolError("gaze direction is not normalised");
          const auto operator_id = state_.member_with(Role::Operator);
          if (a.role == Role::Expert && operator_id && state_.avatar_map.contains(*operator_id)) {
            const Pose above = place_expert_avatar(state_.avatar_map.at(*operator_id), god_view_);
            a.head_pose = Pose::make(above.position, a.head_pose.orientation);
          }
          state_.avatar_map[from] = a;
          std::vector<Routed> out;
          if (state_.peer_of(from)) {
            Envelope forwarded = envelope;
            forwarded.payload = payload::Avatar{a};
            out.push_back(to_peer(from, std::move(forwarded)));
          }
          // The expert avatar hovers above the operator: re-place it on every
          // operator move so the ordering holds at each host step.
          if (a.role == Role::Operator) {
            if (const auto expert = state_.member_with(Role::Expert)) {
              AvatarState e = state_.avatar_map.contains(*expert) ? state_.avatar_map.at(*expert)
                                                                  : AvatarState{*expert, Role::Expert, {}, {0.0, 0.0, 1.0}};
              e.head_pose = place_expert_avatar(a, god_view_);
              e.gaze_direction = e.head_pose.orientation.rotate({0.0, 0.0, 1.0});
              e.gaze_direction = normalized(e.gaze_direction);
              state_.avatar_map[*expert] = e;
              auto placed = broadcast(Envelope{state_.next_host_seq++, kHostId, 0, state_.room, payload::Avatar{e}});
              out.insert(out.end(), placed.begin(), placed.end());
            }
          }
          return out;
        } else if constexpr (std::is_same_v<T, payload::SyncReq>) {
          auto r = submit_sync(state_, from, envelope.sender_seq, p.request);
          state_ = std::move(r.state);
          merged_requests_.push_back(p.request);
          commit_log_.push_back(std::get<payload::SyncCommit>(r.commit.payload));
          return broadcast(std::move(r.commit));
        } else if constexpr (std::is_same_v<T, payload::SyncCommit>) {
          throw ProtocolError("SyncCommit may only originate from the host, got one from '" + from + "'");
        } else if constexpr (std::is_same_v<T, payload::MediaSignal>) {
          return {relay_media(state_, from, envelope.sender_seq, p.bytes)};
        } else {
          return {to_peer(from, envelope)};
        }
      },
      envelope.payload);
}

}  // namespace replica_sync
