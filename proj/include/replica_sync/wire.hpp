#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "replica_sync/session_protocol.hpp"

namespace replica_sync {

Json to_json(const AvatarState& avatar);
AvatarState avatar_from_json(const Json& j);

Json to_json(const Payload& payload);
Payload payload_from_json(const Json& j);

Json to_json(const Envelope& envelope);
/// Throws ParseError on schema violations.
Envelope envelope_from_json(const Json& j);

std::string to_hex(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> from_hex(std::string_view hex);

/// Frame = 4-byte big-endian length followed by the compact JSON text.
std::string encode_frame(const Envelope& envelope);

/// Incremental decoder for a byte stream of frames.
class FrameDecoder {
 public:
  void feed(std::string_view bytes);
  /// Next complete envelope, if buffered. Throws ParseError on a corrupt
  /// frame.
  std::optional<Envelope> next();
  std::size_t buffered() const { return buffer_.size(); }

 private:
  std::string buffer_;
};

inline constexpr std::uint32_t kMaxFrameBytes = 16u << 20;

}  // namespace replica_sync
