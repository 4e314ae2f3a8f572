#pragma once

#include <json.hpp>

#include "replica_sync/scene_model.hpp"

namespace replica_sync {

using Json = nlohmann::json;

// JSON mappings shared by the descriptor loader, the wire format and logs.
// Every `*_from_json` throws ParseError on a schema violation.

Json to_json(const Vec3& v);
Vec3 vec3_from_json(const Json& j);

/// {"pos":[x,y,z],"quat":[w,x,y,z]}
Json to_json(const Pose& pose);
Pose pose_from_json(const Json& j);

Json to_json(const Rgb& c);
Rgb rgb_from_json(const Json& j);

Json to_json(const Annotation& a);
Annotation annotation_from_json(const Json& j);

Json to_json(const Edit& edit);
Edit edit_from_json(const Json& j);

Json to_json(const SceneModel& model);
SceneModel model_from_json(const Json& j);

std::string_view to_string(NodeKind kind);
std::string_view to_string(ValveState state);
std::string_view to_string(Handedness handedness);
std::string_view to_string(Field field);
NodeKind node_kind_from_string(std::string_view text);
ValveState valve_state_from_string(std::string_view text);
Handedness handedness_from_string(std::string_view text);
Field field_from_string(std::string_view text);

}  // namespace replica_sync
