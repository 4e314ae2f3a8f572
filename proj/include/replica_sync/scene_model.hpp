#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "replica_sync/geometry.hpp"
#include "replica_sync/role.hpp"

namespace replica_sync {

using NodeId = std::string;

enum class NodeKind { Valve, ExchangerUnit, Pipe, Label };
enum class ValveState { Open, Closed };
enum class Handedness { OneHanded, TwoHanded };

struct Rgb {
  double r = 0.0;
  double g = 0.0;
  double b = 0.0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct VisualState {
  std::optional<Rgb> highlight_color;
  /// Valve-motion indication animation playing.
  bool indication_animation = false;

  friend bool operator==(const VisualState&, const VisualState&) = default;
};

struct SceneNode {
  NodeId id;
  NodeKind kind = NodeKind::Pipe;
  std::optional<NodeId> parent;
  Pose local_pose;
  std::optional<ValveState> valve_state;  // iff kind == Valve
  std::optional<Handedness> handedness;   // iff kind == Valve
  VisualState visual;

  friend bool operator==(const SceneNode&, const SceneNode&) = default;
};

struct Annotation {
  std::string id;
  Role author_role = Role::Operator;
  NodeId anchor;
  std::string text;
  Vec3 offset;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

/// Editable per-node fields; the unit of conflict detection.
enum class Field { Pose, ValveState, Highlight, Indication };

/// Who last wrote a field, and at which shared version.
struct FieldStamp {
  std::uint64_t version = 0;
  Role author = Role::Operator;

  friend bool operator==(const FieldStamp&, const FieldStamp&) = default;
};

using FieldKey = std::pair<NodeId, Field>;

/// Immutable-by-convention snapshot of the shared 3D representation.
/// Operations below return new values and never mutate their inputs.
struct SceneModel {
  std::map<NodeId, SceneNode> nodes;
  std::map<std::string, Annotation> annotations;  // keyed and ordered by id
  std::uint64_t version = 0;
  Pose world_anchor;
  /// Marker-to-model offset declared by the descriptor.
  Pose marker_offset;
  /// Last writer of every field edited since load. Absent = never edited.
  std::map<FieldKey, FieldStamp> stamps;

  const SceneNode& node(const NodeId& id) const;
  bool has_node(const NodeId& id) const { return nodes.contains(id); }
  std::vector<NodeId> valve_ids() const;
  std::optional<FieldStamp> stamp(const NodeId& id, Field field) const;
};

// Edit vocabulary: atomic single-field operations.
struct SetPose {
  NodeId node;
  Pose pose;
  friend bool operator==(const SetPose&, const SetPose&) = default;
};
struct SetValveState {
  NodeId node;
  ValveState state = ValveState::Closed;
  friend bool operator==(const SetValveState&, const SetValveState&) = default;
};
struct SetHighlight {
  NodeId node;
  std::optional<Rgb> color;
  friend bool operator==(const SetHighlight&, const SetHighlight&) = default;
};
struct SetIndication {
  NodeId node;
  bool on = false;
  friend bool operator==(const SetIndication&, const SetIndication&) = default;
};
struct AddAnnotation {
  Annotation annotation;
  friend bool operator==(const AddAnnotation&, const AddAnnotation&) = default;
};
struct RemoveAnnotation {
  std::string id;
  friend bool operator==(const RemoveAnnotation&, const RemoveAnnotation&) = default;
};

using EditOp = std::variant<SetPose, SetValveState, SetHighlight, SetIndication, AddAnnotation, RemoveAnnotation>;

struct Edit {
  EditOp op;
  Role author_role = Role::Operator;
  std::uint64_t author_seq = 0;

  friend bool operator==(const Edit&, const Edit&) = default;
};

/// The (node, field) an edit writes, or nullopt for annotation edits.
std::optional<FieldKey> field_of(const Edit& edit);
/// Short human-readable form, e.g. "SetValveState(2V4,Open)#3".
std::string describe(const Edit& edit);

/// Parses a model descriptor JSON document. Throws ParseError.
SceneModel load_model(const std::string& descriptor_json);
SceneModel load_model_file(const std::string& path);

/// Places the model relative to a detected marker.
SceneModel anchor_model(const SceneModel& model, const Pose& marker);

/// Applies one edit, bumping the version by one. Throws ApplyError.
SceneModel apply_edit(const SceneModel& model, const Edit& edit);

/// Applies a sequence of edits as a single committed batch: the version
/// becomes `new_version` and every written field is stamped with it.
SceneModel apply_batch(const SceneModel& model, const std::vector<Edit>& edits, std::uint64_t new_version);

/// Returns true if `edit` would apply cleanly to `model`.
bool can_apply(const SceneModel& model, const Edit& edit);

/// Edits turning `a` into `b` (field-equal, version ignored). Throws
/// IncompatibleModelsError when node universes differ.
std::vector<Edit> diff(const SceneModel& a, const SceneModel& b, Role author = Role::Operator);

/// Equality of the observable state: nodes, annotations, anchor. Ignores
/// version and write stamps.
bool field_equal(const SceneModel& a, const SceneModel& b);

/// Deterministic serialisation with sorted ids.
std::string canonical_json(const SceneModel& model);

}  // namespace replica_sync
