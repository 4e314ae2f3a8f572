#pragma once

#include <array>

namespace replica_sync {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& v);
double dot(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);
/// Throws ConfigError on a zero vector.
Vec3 normalized(const Vec3& v);

/// Unit quaternion, scalar first.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat identity() { return {}; }
  /// Rotation about +Y (yaw), radians.
  static Quat from_yaw(double radians);
  /// Rotation taking +Z onto `forward` about the vertical axis then pitch.
  static Quat look_along(const Vec3& forward);

  double norm() const;
  Quat conjugate() const { return {w, -x, -y, -z}; }
  Vec3 rotate(const Vec3& v) const;

  friend bool operator==(const Quat&, const Quat&) = default;
};

Quat operator*(const Quat& a, const Quat& b);

constexpr double kUnitTolerance = 1e-9;

/// Rigid transform: rotate then translate.
struct Pose {
  Vec3 position;
  Quat orientation;

  static Pose identity() { return {}; }

  /// Builds a pose, normalising the quaternion. Throws ParseError on a
  /// zero-norm quaternion.
  static Pose make(const Vec3& position, const Quat& orientation);

  /// this ∘ child: child expressed in this pose's frame, mapped to the parent.
  Pose compose(const Pose& child) const;
  Pose inverse() const;
  Vec3 apply(const Vec3& point) const;

  bool is_unit() const;

  friend bool operator==(const Pose&, const Pose&) = default;
};

/// Row-major homogeneous matrix of a pose.
using Mat4 = std::array<std::array<double, 4>, 4>;
Mat4 to_matrix(const Pose& pose);

}  // namespace replica_sync
