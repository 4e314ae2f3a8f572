#include "replica_sync/scene_model.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "replica_sync/errors.hpp"
#include "replica_sync/scene_json.hpp"

namespace replica_sync {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

SceneNode& mutable_node(SceneModel& model, const NodeId& id, const Edit& edit) {
  auto it = model.nodes.find(id);
  if (it == model.nodes.end()) throw ApplyError("unknown node '" + id + "' in edit " + describe(edit));
  return it->second;
}

bool valid_color(const Rgb& c) {
  auto ok = [](double v) { return v >= 0.0 && v <= 1.0; };
  return ok(c.r) && ok(c.g) && ok(c.b);
}

void apply_in_place(SceneModel& model, const Edit& edit, std::uint64_t stamp_version) {
  auto stamp = [&](const NodeId& node, Field field) {
    model.stamps[{node, field}] = FieldStamp{stamp_version, edit.author_role};
  };
  std::visit(Overloaded{
                 [&](const SetPose& e) {
                   if (!e.pose.is_unit()) throw ApplyError("non-unit quaternion in edit " + describe(edit));
                   mutable_node(model, e.node, edit).local_pose = e.pose;
                   stamp(e.node, Field::Pose);
                 },
                 [&](const SetValveState& e) {
                   auto& n = mutable_node(model, e.node, edit);
                   if (n.kind != NodeKind::Valve) throw ApplyError("node '" + e.node + "' is not a valve in edit " + describe(edit));
                   n.valve_state = e.state;
                   stamp(e.node, Field::ValveState);
                 },
                 [&](const SetHighlight& e) {
                   if (e.color && !valid_color(*e.color)) throw ApplyError("color out of range in edit " + describe(edit));
                   mutable_node(model, e.node, edit).visual.highlight_color = e.color;
                   stamp(e.node, Field::Highlight);
                 },
                 [&](const SetIndication& e) {
                   mutable_node(model, e.node, edit).visual.indication_animation = e.on;
                   stamp(e.node, Field::Indication);
                 },
                 [&](const AddAnnotation& e) {
                   const auto& a = e.annotation;
                   if (a.id.empty()) throw ApplyError("empty annotation id in edit " + describe(edit));
                   if (model.annotations.contains(a.id)) throw ApplyError("duplicate annotation '" + a.id + "' in edit " + describe(edit));
                   if (!model.nodes.contains(a.anchor)) throw ApplyError("annotation anchor '" + a.anchor + "' does not resolve in edit " + describe(edit));
                   model.annotations.emplace(a.id, a);
                 },
                 [&](const RemoveAnnotation& e) {
                   if (model.annotations.erase(e.id) == 0) throw ApplyError("unknown annotation '" + e.id + "' in edit " + describe(edit));
                 },
             },
             edit.op);
}

void check_parent_chain(const std::map<NodeId, SceneNode>& nodes) {
  for (const auto& [id, node] : nodes) {
    std::set<NodeId> seen{id};
    auto parent = node.parent;
    while (parent) {
      auto it = nodes.find(*parent);
      if (it == nodes.end()) throw ParseError("node '" + id + "' has dangling parent '" + *parent + "'");
      if (!seen.insert(*parent).second) throw ParseError("parent cycle through node '" + id + "'");
      parent = it->second.parent;
    }
  }
}

}  // namespace

const SceneNode& SceneModel::node(const NodeId& id) const {
  auto it = nodes.find(id);
  if (it == nodes.end()) throw ApplyError("unknown node '" + id + "'");
  return it->second;
}

std::vector<NodeId> SceneModel::valve_ids() const {
  std::vector<NodeId> out;
  for (const auto& [id, n] : nodes) {
    if (n.kind == NodeKind::Valve) out.push_back(id);
  }
  return out;
}

std::optional<FieldStamp> SceneModel::stamp(const NodeId& id, Field field) const {
  auto it = stamps.find({id, field});
  if (it == stamps.end()) return std::nullopt;
  return it->second;
}

std::optional<FieldKey> field_of(const Edit& edit) {
  return std::visit(Overloaded{
                        [](const SetPose& e) -> std::optional<FieldKey> { return FieldKey{e.node, Field::Pose}; },
                        [](const SetValveState& e) -> std::optional<FieldKey> { return FieldKey{e.node, Field::ValveState}; },
                        [](const SetHighlight& e) -> std::optional<FieldKey> { return FieldKey{e.node, Field::Highlight}; },
                        [](const SetIndication& e) -> std::optional<FieldKey> { return FieldKey{e.node, Field::Indication}; },
                        [](const AddAnnotation&) -> std::optional<FieldKey> { return std::nullopt; },
                        [](const RemoveAnnotation&) -> std::optional<FieldKey> { return std::nullopt; },
                    },
                    edit.op);
}

std::string describe(const Edit& edit) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const SetPose& e) { out << "SetPose(" << e.node << ")"; },
                 [&](const SetValveState& e) { out << "SetValveState(" << e.node << "," << to_string(e.state) << ")"; },
                 [&](const SetHighlight& e) { out << "SetHighlight(" << e.node << "," << (e.color ? "color" : "none") << ")"; },
                 [&](const SetIndication& e) { out << "SetIndication(" << e.node << "," << (e.on ? "on" : "off") << ")"; },
                 [&](const AddAnnotation& e) { out << "AddAnnotation(" << e.annotation.id << ")"; },
                 [&](const RemoveAnnotation& e) { out << "RemoveAnnotation(" << e.id << ")"; },
             },
             edit.op);
  out << "[" << to_string(edit.author_role) << "#" << edit.author_seq << "]";
  return out.str();
}

SceneModel load_model(const std::string& descriptor_json) {
  Json doc;
  try {
    doc = Json::parse(descriptor_json);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("descriptor is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("descriptor must be a JSON object");
  if (!doc.contains("nodes") || !doc.at("nodes").is_array()) throw ParseError("descriptor needs a 'nodes' array");

  SceneModel model;
  try {
    if (doc.contains("marker_offset")) model.marker_offset = pose_from_json(doc.at("marker_offset"));
    for (const auto& jn : doc.at("nodes")) {
      SceneNode n;
      if (!jn.is_object() || !jn.contains("id") || !jn.at("id").is_string()) throw ParseError("node without string 'id'");
      n.id = jn.at("id").get<std::string>();
      if (n.id.empty()) throw ParseError("node id must be non-empty");
      if (!jn.contains("kind") || !jn.at("kind").is_string()) throw ParseError("node '" + n.id + "' has no 'kind'");
      n.kind = node_kind_from_string(jn.at("kind").get<std::string>());
      n.local_pose = jn.contains("pose") ? pose_from_json(jn.at("pose")) : Pose::identity();
      if (jn.contains("parent") && !jn.at("parent").is_null()) n.parent = jn.at("parent").get<std::string>();
      const bool has_state = jn.contains("valve_state");
      const bool has_hand = jn.contains("handedness");
      if (n.kind == NodeKind::Valve) {
        if (!has_hand) throw ParseError("valve '" + n.id + "' is missing handedness");
        if (!has_state) throw ParseError("valve '" + n.id + "' is missing valve_state");
        n.valve_state = valve_state_from_string(jn.at("valve_state").get<std::string>());
        n.handedness = handedness_from_string(jn.at("handedness").get<std::string>());
      } else if (has_state || has_hand) {
        throw ParseError("node '" + n.id + "' is not a valve but declares valve fields");
      }
      if (jn.contains("highlight") && !jn.at("highlight").is_null()) n.visual.highlight_color = rgb_from_json(jn.at("highlight"));
      if (jn.contains("indication")) n.visual.indication_animation = jn.at("indication").get<bool>();
      const NodeId id = n.id;
      if (!model.nodes.emplace(id, std::move(n)).second) throw ParseError("duplicate node id '" + id + "'");
    }
  } catch (const Json::exception& e) {
    throw ParseError(std::string("descriptor schema error: ") + e.what());
  }
  check_parent_chain(model.nodes);
  model.world_anchor = model.marker_offset;
  return model;
}

SceneModel load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open descriptor '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_model(buf.str());
}

SceneModel anchor_model(const SceneModel& model, const Pose& marker) {
  SceneModel out = model;
  out.world_anchor = marker.compose(model.marker_offset);
  return out;
}

SceneModel apply_edit(const SceneModel& model, const Edit& edit) {
  SceneModel out = model;
  out.version = model.version + 1;
  apply_in_place(out, edit, out.version);
  return out;
}

SceneModel apply_batch(const SceneModel& model, const std::vector<Edit>& edits, std::uint64_t new_version) {
  if (new_version < model.version) throw ApplyError("batch would decrease the model version");
  SceneModel out = model;
  out.version = new_version;
  for (const auto& e : edits) apply_in_place(out, e, new_version);
  return out;
}

bool can_apply(const SceneModel& model, const Edit& edit) {
  return std::visit(Overloaded{
                        [&](const SetPose& e) { return model.has_node(e.node) && e.pose.is_unit(); },
                        [&](const SetValveState& e) { return model.has_node(e.node) && model.node(e.node).kind == NodeKind::Valve; },
                        [&](const SetHighlight& e) { return model.has_node(e.node) && (!e.color || valid_color(*e.color)); },
                        [&](const SetIndication& e) { return model.has_node(e.node); },
                        [&](const AddAnnotation& e) {
                          return !e.annotation.id.empty() && !model.annotations.contains(e.annotation.id) &&
                                 model.has_node(e.annotation.anchor);
                        },
                        [&](const RemoveAnnotation& e) { return model.annotations.contains(e.id); },
                    },
                    edit.op);
}

std::vector<Edit> diff(const SceneModel& a, const SceneModel& b, Role author) {
  if (a.nodes.size() != b.nodes.size()) throw IncompatibleModelsError("models have different node counts");
  if (!(a.world_anchor == b.world_anchor) || !(a.marker_offset == b.marker_offset)) {
    throw IncompatibleModelsError("models are anchored differently");
  }
  std::vector<Edit> out;
  std::uint64_t seq = 0;
  auto emit = [&](EditOp op) { out.push_back(Edit{std::move(op), author, ++seq}); };

  for (const auto& [id, na] : a.nodes) {
    auto it = b.nodes.find(id);
    if (it == b.nodes.end()) throw IncompatibleModelsError("node '" + id + "' missing from second model");
    const SceneNode& nb = it->second;
    if (na.kind != nb.kind || na.parent != nb.parent || na.handedness != nb.handedness ||
        na.valve_state.has_value() != nb.valve_state.has_value()) {
      throw IncompatibleModelsError("node '" + id + "' differs structurally");
    }
    if (!(na.local_pose == nb.local_pose)) emit(SetPose{id, nb.local_pose});
    if (na.valve_state != nb.valve_state) emit(SetValveState{id, *nb.valve_state});
    if (na.visual.highlight_color != nb.visual.highlight_color) emit(SetHighlight{id, nb.visual.highlight_color});
    if (na.visual.indication_animation != nb.visual.indication_animation) emit(SetIndication{id, nb.visual.indication_animation});
  }
  for (const auto& [id, ann] : a.annotations) {
    auto it = b.annotations.find(id);
    if (it == b.annotations.end() || !(it->second == ann)) emit(RemoveAnnotation{id});
  }
  for (const auto& [id, ann] : b.annotations) {
    auto it = a.annotations.find(id);
    if (it == a.annotations.end() || !(it->second == ann)) emit(AddAnnotation{ann});
  }
  return out;
}

bool field_equal(const SceneModel& a, const SceneModel& b) {
  return a.nodes == b.nodes && a.annotations == b.annotations && a.world_anchor == b.world_anchor &&
         a.marker_offset == b.marker_offset;
}

std::string canonical_json(const SceneModel& model) { return to_json(model).dump(); }

}  // namespace replica_sync
