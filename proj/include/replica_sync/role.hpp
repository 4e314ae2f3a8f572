#pragma once

#include <string>
#include <string_view>

namespace replica_sync {

/// Collaboration role of a client. A room holds at most one of each.
enum class Role { Expert, Operator };

std::string_view to_string(Role role);
/// Accepts "Expert"/"Operator" (case-insensitive). Throws ParseError.
Role role_from_string(std::string_view text);

}  // namespace replica_sync
