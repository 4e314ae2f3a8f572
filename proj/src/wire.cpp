#include "replica_sync/wire.hpp"

#include "replica_sync/errors.hpp"

namespace replica_sync {

namespace {

Json edits_json(const std::vector<Edit>& edits) {
  Json out = Json::array();
  for (const auto& e : edits) out.push_back(to_json(e));
  return out;
}

}  // namespace

Json to_json(const AvatarState& avatar) {
  return Json{{"client", avatar.client},
              {"role", to_string(avatar.role)},
              {"head_pose", to_json(avatar.head_pose)},
              {"gaze", to_json(avatar.gaze_direction)}};
}

AvatarState avatar_from_json(const Json& j) {
  return AvatarState{j.at("client").get<std::string>(), role_from_string(j.at("role").get<std::string>()),
                     pose_from_json(j.at("head_pose")), vec3_from_json(j.at("gaze"))};
}

Json to_json(const Payload& payload) {
  Json j{{"type", payload_name(payload)}};
  std::visit(
      [&j](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, payload::Join>) {
          j["role"] = to_string(p.role);
        } else if constexpr (std::is_same_v<T, payload::Avatar>) {
          j["avatar"] = to_json(p.state);
        } else if constexpr (std::is_same_v<T, payload::SyncReq>) {
          j["request"] = to_json(p.request);
        } else if constexpr (std::is_same_v<T, payload::SyncCommit>) {
          j["origin"] = p.origin;
          j["origin_seq"] = p.origin_seq;
          j["commit_index"] = p.commit_index;
          j["new_version"] = p.new_version;
          j["accepted"] = edits_json(p.accepted);
          Json rejected = Json::array();
          for (const auto& r : p.rejected) rejected.push_back(to_json(r));
          j["rejected"] = std::move(rejected);
        } else if constexpr (std::is_same_v<T, payload::Instruction>) {
          j["text"] = p.text;
          if (!p.meta.is_null()) j["meta"] = p.meta;
        } else if constexpr (std::is_same_v<T, payload::MediaSignal>) {
          j["bytes"] = to_hex(p.bytes);
        }
      },
      payload);
  return j;
}

Payload payload_from_json(const Json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "Join") return payload::Join{role_from_string(j.at("role").get<std::string>())};
  if (type == "Leave") return payload::Leave{};
  if (type == "Avatar") return payload::Avatar{avatar_from_json(j.at("avatar"))};
  if (type == "SyncReq") return payload::SyncReq{sync_request_from_json(j.at("request"))};
  if (type == "SyncCommit") {
    payload::SyncCommit c;
    c.origin = j.at("origin").get<std::string>();
    c.origin_seq = j.at("origin_seq").get<std::uint64_t>();
    c.commit_index = j.at("commit_index").get<std::uint64_t>();
    c.new_version = j.at("new_version").get<std::uint64_t>();
    for (const auto& e : j.at("accepted")) c.accepted.push_back(edit_from_json(e));
    for (const auto& r : j.at("rejected")) c.rejected.push_back(rejected_edit_from_json(r));
    return c;
  }
  if (type == "Instruction") return payload::Instruction{j.at("text").get<std::string>(), j.value("meta", Json())};
  if (type == "CallStart") return payload::CallStart{};
  if (type == "CallEnd") return payload::CallEnd{};
  if (type == "MediaSignal") return payload::MediaSignal{from_hex(j.at("bytes").get<std::string>())};
  throw ParseError("unknown payload type '" + type + "'");
}

Json to_json(const Envelope& envelope) {
  return Json{{"host_seq", envelope.host_seq},
              {"sender", envelope.sender},
              {"sender_seq", envelope.sender_seq},
              {"room", envelope.room},
              {"payload", to_json(envelope.payload)}};
}

Envelope envelope_from_json(const Json& j) {
  try {
    return Envelope{j.at("host_seq").get<std::uint64_t>(), j.at("sender").get<std::string>(),
                    j.at("sender_seq").get<std::uint64_t>(), j.at("room").get<std::string>(),
                    payload_from_json(j.at("payload"))};
  } catch (const Json::exception& e) {
    throw ParseError(std::string("malformed envelope: ") + e.what());
  }
}

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

std::vector<std::uint8_t> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw ParseError("hex payload has odd length");
  auto nibble = [](char c) -> std::uint8_t {
    if (c >= '0' && c <= '9') return static_cast<std::uint8_t>(c - '0');
    if (c >= 'a' && c <= 'f') return static_cast<std::uint8_t>(c - 'a' + 10);
    if (c >= 'A' && c <= 'F') return static_cast<std::uint8_t>(c - 'A' + 10);
    throw ParseError("invalid hex digit");
  };
  std::vector<std::uint8_t> out(hex.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(nibble(hex[2 * i]) << 4 | nibble(hex[2 * i + 1]));
  }
  return out;
}

std::string encode_frame(const Envelope& envelope) {
  const std::string body = to_json(envelope).dump();
  if (body.size() > kMaxFrameBytes) throw ProtocolError("envelope exceeds maximum frame size");
  const auto n = static_cast<std::uint32_t>(body.size());
  std::string out;
  out.reserve(4 + body.size());
  out.push_back(static_cast<char>(n >> 24));
  out.push_back(static_cast<char>(n >> 16));
  out.push_back(static_cast<char>(n >> 8));
  out.push_back(static_cast<char>(n));
  out += body;
  return out;
}

void FrameDecoder::feed(std::string_view bytes) { buffer_.append(bytes); }

std::optional<Envelope> FrameDecoder::next() {
  if (buffer_.size() < 4) return std::nullopt;
  const auto byte = [this](std::size_t i) { return static_cast<std::uint32_t>(static_cast<unsigned char>(buffer_[i])); };
  const std::uint32_t n = byte(0) << 24 | byte(1) << 16 | byte(2) << 8 | byte(3);
  if (n > kMaxFrameBytes) throw ParseError("frame length " + std::to_string(n) + " exceeds limit");
  if (buffer_.size() < 4 + static_cast<std::size_t>(n)) return std::nullopt;
  Json j;
  try {
    j = Json::parse(buffer_.begin() + 4, buffer_.begin() + 4 + n);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("corrupt frame: ") + e.what());
  }
  buffer_.erase(0, 4 + static_cast<std::size_t>(n));
  return envelope_from_json(j);
}

}  // namespace replica_sync
