#include "replica_sync/session_client.hpp"

#include <algorithm>
#include <set>

#include "replica_sync/errors.hpp"

namespace replica_sync {

ClientSession::ClientSession(ClientId id, Role role, RoomId room, SceneModel initial, double replica_scale)
    : id_(std::move(id)),
      role_(role),
      room_(std::move(room)),
      shared_(std::move(initial)),
      replica_(create_replica(shared_, id_, role_, replica_scale)) {}

Envelope ClientSession::envelope(Payload payload) {
  return Envelope{0, id_, next_sender_seq_++, room_, std::move(payload)};
}

const Edit& ClientSession::edit(EditOp op) {
  Edit e{std::move(op), role_, next_author_seq_};
  replica_ = edit_replica(replica_, e);
  ++next_author_seq_;
  return replica_.pending.back();
}

Envelope ClientSession::request_sync() {
  SyncRequest request{id_, role_, shared_.version, replica_.pending};
  Envelope env = envelope(payload::SyncReq{request});
  in_flight_.emplace(env.sender_seq, std::move(replica_.pending));
  replica_.pending.clear();
  return env;
}

void ClientSession::receive(const Envelope& envelope) {
  if (envelope.host_seq <= last_host_seq_) {
    errors_.push_back("host_seq " + std::to_string(envelope.host_seq) + " not after " + std::to_string(last_host_seq_));
    return;
  }
  last_host_seq_ = envelope.host_seq;
  if (const auto* commit = std::get_if<payload::SyncCommit>(&envelope.payload)) {
    if (envelope.sender != kHostId) {
      errors_.push_back("SyncCommit from non-host '" + envelope.sender + "'");
      return;
    }
    on_commit(*commit);
  } else if (const auto* avatar = std::get_if<payload::Avatar>(&envelope.payload)) {
    if (avatar->state.client == id_) {
      own_avatar_ = avatar->state;
    } else {
      peer_avatar_ = avatar->state;
    }
  }
}

void ClientSession::on_commit(const payload::SyncCommit& commit) {
  if (commit.commit_index != next_commit_index_) {
    errors_.push_back("commit gap: expected index " + std::to_string(next_commit_index_) + ", got " +
                      std::to_string(commit.commit_index));
  }
  next_commit_index_ = commit.commit_index + 1;
  try {
    shared_ = apply_batch(shared_, commit.accepted, commit.new_version);
  } catch (const ApplyError& e) {
    errors_.push_back(std::string("commit does not apply: ") + e.what());
    return;
  }
  ++commits_applied_;
  if (commit.origin == id_) {
    in_flight_.erase(commit.origin_seq);
    rejected_.insert(rejected_.end(), commit.rejected.begin(), commit.rejected.end());
  }
  rebase();
}

void ClientSession::rebase() {
  Replica combined = replica_;
  combined.pending.clear();
  for (const auto& [seq, edits] : in_flight_) combined.pending.insert(combined.pending.end(), edits.begin(), edits.end());
  combined.pending.insert(combined.pending.end(), replica_.pending.begin(), replica_.pending.end());

  auto result = rebase_replica(combined, shared_);
  std::set<std::uint64_t> dropped;
  for (const auto& e : result.dropped) dropped.insert(e.author_seq);
  auto is_dropped = [&](const Edit& e) { return dropped.contains(e.author_seq); };

  for (auto& [seq, edits] : in_flight_) std::erase_if(edits, is_dropped);
  std::vector<Edit> pending = replica_.pending;
  std::erase_if(pending, is_dropped);
  replica_ = std::move(result.replica);
  replica_.pending = std::move(pending);
}

}  // namespace replica_sync
