#include "replica_sync/scene_json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "replica_sync/errors.hpp"

namespace replica_sync {

namespace {

std::string lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

const Json& require(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::string require_string(const Json& j, const char* key) {
  const Json& v = require(j, key);
  if (!v.is_string()) throw ParseError(std::string("field '") + key + "' must be a string");
  return v.get<std::string>();
}

std::vector<double> number_array(const Json& j, std::size_t size, const char* what) {
  if (!j.is_array() || j.size() != size) {
    throw ParseError(std::string(what) + " must be an array of " + std::to_string(size) + " numbers");
  }
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ParseError(std::string(what) + " must contain numbers");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ParseError(std::string(what) + " must be finite");
    out.push_back(d);
  }
  return out;
}

}  // namespace

std::string_view to_string(Role role) { return role == Role::Expert ? "Expert" : "Operator"; }

Role role_from_string(std::string_view text) {
  const auto t = lower(text);
  if (t == "expert") return Role::Expert;
  if (t == "operator") return Role::Operator;
  throw ParseError("unknown role '" + std::string(text) + "'");
}

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Valve: return "Valve";
    case NodeKind::ExchangerUnit: return "ExchangerUnit";
    case NodeKind::Pipe: return "Pipe";
    case NodeKind::Label: return "Label";
  }
  return "?";
}

NodeKind node_kind_from_string(std::string_view text) {
  const auto t = lower(text);
  if (t == "valve") return NodeKind::Valve;
  if (t == "exchangerunit") return NodeKind::ExchangerUnit;
  if (t == "pipe") return NodeKind::Pipe;
  if (t == "label") return NodeKind::Label;
  throw ParseError("unknown node kind '" + std::string(text) + "'");
}

std::string_view to_string(ValveState state) { return state == ValveState::Open ? "Open" : "Closed"; }

ValveState valve_state_from_string(std::string_view text) {
  const auto t = lower(text);
  if (t == "open") return ValveState::Open;
  if (t == "closed") return ValveState::Closed;
  throw ParseError("unknown valve state '" + std::string(text) + "'");
}

std::string_view to_string(Handedness h) { return h == Handedness::OneHanded ? "OneHanded" : "TwoHanded"; }

Handedness handedness_from_string(std::string_view text) {
  const auto t = lower(text);
  if (t == "onehanded") return Handedness::OneHanded;
  if (t == "twohanded") return Handedness::TwoHanded;
  throw ParseError("unknown handedness '" + std::string(text) + "'");
}

std::string_view to_string(Field field) {
  switch (field) {
    case Field::Pose: return "pose";
    case Field::ValveState: return "valve_state";
    case Field::Highlight: return "highlight";
    case Field::Indication: return "indication";
  }
  return "?";
}

Field field_from_string(std::string_view text) {
  if (text == "pose") return Field::Pose;
  if (text == "valve_state") return Field::ValveState;
  if (text == "highlight") return Field::Highlight;
  if (text == "indication") return Field::Indication;
  throw ParseError("unknown field '" + std::string(text) + "'");
}

Json to_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const Json& j) {
  const auto a = number_array(j, 3, "vector");
  return {a[0], a[1], a[2]};
}

Json to_json(const Pose& pose) {
  const auto& q = pose.orientation;
  return Json{{"pos", to_json(pose.position)}, {"quat", Json::array({q.w, q.x, q.y, q.z})}};
}

Pose pose_from_json(const Json& j) {
  const Vec3 pos = vec3_from_json(require(j, "pos"));
  const auto q = number_array(require(j, "quat"), 4, "quat");
  return Pose::make(pos, {q[0], q[1], q[2], q[3]});
}

Json to_json(const Rgb& c) { return Json::array({c.r, c.g, c.b}); }

Rgb rgb_from_json(const Json& j) {
  const auto a = number_array(j, 3, "color");
  for (double c : a) {
    if (c < 0.0 || c > 1.0) throw ParseError("color components must lie in [0,1]");
  }
  return {a[0], a[1], a[2]};
}

Json to_json(const Annotation& a) {
  return Json{{"id", a.id},
              {"author_role", to_string(a.author_role)},
              {"anchor", a.anchor},
              {"text", a.text},
              {"offset", to_json(a.offset)}};
}

Annotation annotation_from_json(const Json& j) {
  Annotation a;
  a.id = require_string(j, "id");
  a.author_role = role_from_string(require_string(j, "author_role"));
  a.anchor = require_string(j, "anchor");
  a.text = j.contains("text") ? j.at("text").get<std::string>() : std::string{};
  a.offset = j.contains("offset") ? vec3_from_json(j.at("offset")) : Vec3{};
  return a;
}

Json to_json(const Edit& edit) {
  Json j{{"author_role", to_string(edit.author_role)}, {"author_seq", edit.author_seq}};
  std::visit(
      [&j](const auto& op) {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, SetPose>) {
          j["type"] = "SetPose";
          j["node"] = op.node;
          j["pose"] = to_json(op.pose);
        } else if constexpr (std::is_same_v<T, SetValveState>) {
          j["type"] = "SetValveState";
          j["node"] = op.node;
          j["state"] = to_string(op.state);
        } else if constexpr (std::is_same_v<T, SetHighlight>) {
          j["type"] = "SetHighlight";
          j["node"] = op.node;
          j["color"] = op.color ? to_json(*op.color) : Json(nullptr);
        } else if constexpr (std::is_same_v<T, SetIndication>) {
          j["type"] = "SetIndication";
          j["node"] = op.node;
          j["on"] = op.on;
        } else if constexpr (std::is_same_v<T, AddAnnotation>) {
          j["type"] = "AddAnnotation";
          j["annotation"] = to_json(op.annotation);
        } else {
          j["type"] = "RemoveAnnotation";
          j["id"] = op.id;
        }
      },
      edit.op);
  return j;
}

Edit edit_from_json(const Json& j) {
  Edit edit;
  edit.author_role = role_from_string(require_string(j, "author_role"));
  const Json& seq = require(j, "author_seq");
  if (!seq.is_number_unsigned()) throw ParseError("author_seq must be a non-negative integer");
  edit.author_seq = seq.get<std::uint64_t>();
  const std::string type = require_string(j, "type");
  if (type == "SetPose") {
    edit.op = SetPose{require_string(j, "node"), pose_from_json(require(j, "pose"))};
  } else if (type == "SetValveState") {
    edit.op = SetValveState{require_string(j, "node"), valve_state_from_string(require_string(j, "state"))};
  } else if (type == "SetHighlight") {
    const Json& c = require(j, "color");
    edit.op = SetHighlight{require_string(j, "node"), c.is_null() ? std::nullopt : std::optional(rgb_from_json(c))};
  } else if (type == "SetIndication") {
    const Json& on = require(j, "on");
    if (!on.is_boolean()) throw ParseError("'on' must be a boolean");
    edit.op = SetIndication{require_string(j, "node"), on.get<bool>()};
  } else if (type == "AddAnnotation") {
    edit.op = AddAnnotation{annotation_from_json(require(j, "annotation"))};
  } else if (type == "RemoveAnnotation") {
    edit.op = RemoveAnnotation{require_string(j, "id")};
  } else {
    throw ParseError("unknown edit type '" + type + "'");
  }
  return edit;
}

Json to_json(const SceneModel& model) {
  Json nodes = Json::array();
  for (const auto& [id, n] : model.nodes) {
    Json jn{{"id", id}, {"kind", to_string(n.kind)}, {"pose", to_json(n.local_pose)}};
    jn["parent"] = n.parent ? Json(*n.parent) : Json(nullptr);
    if (n.valve_state) jn["valve_state"] = to_string(*n.valve_state);
    if (n.handedness) jn["handedness"] = to_string(*n.handedness);
    jn["highlight"] = n.visual.highlight_color ? to_json(*n.visual.highlight_color) : Json(nullptr);
    jn["indication"] = n.visual.indication_animation;
    nodes.push_back(std::move(jn));
  }
  Json annotations = Json::array();
  for (const auto& [id, a] : model.annotations) annotations.push_back(to_json(a));
  Json stamps = Json::array();
  for (const auto& [key, s] : model.stamps) {
    stamps.push_back(
        Json{{"node", key.first}, {"field", to_string(key.second)}, {"version", s.version}, {"author", to_string(s.author)}});
  }
  return Json{{"version", model.version},
              {"world_anchor", to_json(model.world_anchor)},
              {"marker_offset", to_json(model.marker_offset)},
              {"nodes", std::move(nodes)},
              {"annotations", std::move(annotations)},
              {"stamps", std::move(stamps)}};
}

SceneModel model_from_json(const Json& j) {
  SceneModel m;
  m.version = require(j, "version").get<std::uint64_t>();
  m.world_anchor = pose_from_json(require(j, "world_anchor"));
  m.marker_offset = pose_from_json(require(j, "marker_offset"));
  for (const auto& jn : require(j, "nodes")) {
    SceneNode n;
    n.id = require_string(jn, "id");
    n.kind = node_kind_from_string(require_string(jn, "kind"));
    n.local_pose = pose_from_json(require(jn, "pose"));
    if (jn.contains("parent") && !jn.at("parent").is_null()) n.parent = jn.at("parent").get<std::string>();
    if (jn.contains("valve_state")) n.valve_state = valve_state_from_string(jn.at("valve_state").get<std::string>());
    if (jn.contains("handedness")) n.handedness = handedness_from_string(jn.at("handedness").get<std::string>());
    if (jn.contains("highlight") && !jn.at("highlight").is_null()) n.visual.highlight_color = rgb_from_json(jn.at("highlight"));
    n.visual.indication_animation = jn.value("indication", false);
    m.nodes.emplace(n.id, std::move(n));
  }
  for (const auto& ja : require(j, "annotations")) {
    auto a = annotation_from_json(ja);
    m.annotations.emplace(a.id, std::move(a));
  }
  if (j.contains("stamps")) {
    for (const auto& js : j.at("stamps")) {
      m.stamps[{require_string(js, "node"), field_from_string(require_string(js, "field"))}] =
          FieldStamp{require(js, "version").get<std::uint64_t>(), role_from_string(require_string(js, "author"))};
    }
  }
  return m;
}

}  // namespace replica_sync
